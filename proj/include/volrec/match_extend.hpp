#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "volrec/graph.hpp"
#include "volrec/model.hpp"

namespace volrec {

// Ordered list of volumes of neighboring ranges, recovered from one clique.
struct CandidateSolution {
    std::vector<Volume> segments;

    CandidateSolution() = default;
    explicit CandidateSolution(std::vector<Volume> s) : segments(std::move(s)) {}

    std::size_t size() const { return segments.size(); }
    Volume total() const { return std::accumulate(segments.begin(), segments.end(), Volume{0}); }

    friend bool operator==(const CandidateSolution& a, const CandidateSolution& b) {
        return a.segments == b.segments;
    }
};

// Longest approximately-equal contiguous run. Spans are half-open index
// ranges into base and cand.
struct MatchResult {
    std::vector<Volume> common;
    std::size_t base_start = 0, base_end = 0;
    std::size_t cand_start = 0, cand_end = 0;

    std::size_t length() const { return common.size(); }
};

// Classical longest-common-substring DP with approximate element equality.
// Ties go to the earliest base start, then the earliest cand start. The
// common run reports base's values.
inline MatchResult approx_lc_substring(const CandidateSolution& base, const CandidateSolution& cand,
                                       double noise_budget, double multiplier = 1.0) {
    if (base.size() == 0 || cand.size() == 0)
        throw std::invalid_argument("approx_lc_substring: empty solution");
    const std::size_t n = base.size(), m = cand.size();
    std::vector<std::size_t> prev(m + 1, 0), curr(m + 1, 0);
    std::size_t best_len = 0, best_i = 0, best_j = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            if (approx_equal(base.segments[i - 1], cand.segments[j - 1], noise_budget, multiplier)) {
                curr[j] = prev[j - 1] + 1;
                const std::size_t start_i = i - curr[j];
                const std::size_t start_j = j - curr[j];
                if (curr[j] > best_len ||
                    (curr[j] == best_len && best_len > 0 &&
                     (start_i < best_i || (start_i == best_i && start_j < best_j)))) {
                    best_len = curr[j];
                    best_i = start_i;
                    best_j = start_j;
                }
            } else {
                curr[j] = 0;
            }
        }
        std::swap(prev, curr);
    }
    MatchResult r;
    r.base_start = best_i;
    r.base_end = best_i + best_len;
    r.cand_start = best_j;
    r.cand_end = best_j + best_len;
    r.common.assign(base.segments.begin() + static_cast<std::ptrdiff_t>(r.base_start),
                    base.segments.begin() + static_cast<std::ptrdiff_t>(r.base_end));
    return r;
}

struct MergeOutcome {
    bool aborted = true;
    CandidateSolution merged;
    int missing_volumes = 0;
};

namespace detail {

// Owner bits for a boundary of the merged segment list.
inline constexpr std::uint8_t kOwnerBase = 1;
inline constexpr std::uint8_t kOwnerCand = 2;

struct MergeAssembly {
    std::vector<Volume> segments;
    std::vector<std::uint8_t> boundary_owner;  // segments.size() + 1 entries

    void init_common(const std::vector<Volume>& common) {
        segments = common;
        boundary_owner.assign(segments.size() + 1, kOwnerBase | kOwnerCand);
    }

    void append(Volume v, std::uint8_t trailing_owner) {
        segments.push_back(v);
        boundary_owner.push_back(trailing_owner);
    }

    void prepend(Volume v, std::uint8_t leading_owner) {
        segments.insert(segments.begin(), v);
        boundary_owner.insert(boundary_owner.begin(), leading_owner);
    }
};

// One extension side: try to grow the common block with the next element(s).
// `fine` / `coarse` are cursors into the two solutions' remaining elements.
// Returns the number of elements consumed on each side, or nothing.
struct ExtensionStep {
    std::size_t base_consumed = 0;
    std::size_t cand_consumed = 0;
    std::vector<Volume> emitted;       // finer-side values, in merged order
    std::uint8_t fine_owner = 0;       // side owning the internal boundaries
};

inline std::optional<ExtensionStep> try_extend(const std::vector<Volume>& base_rest,
                                               const std::vector<Volume>& cand_rest,
                                               double noise_budget, double multiplier) {
    if (base_rest.empty() || cand_rest.empty()) return std::nullopt;
    // Direct approximate match.
    if (approx_equal(base_rest[0], cand_rest[0], noise_budget, multiplier)) {
        ExtensionStep step;
        step.base_consumed = step.cand_consumed = 1;
        step.emitted = {base_rest[0]};
        step.fine_owner = kOwnerBase | kOwnerCand;
        return step;
    }
    // Base is coarse: base_rest[0] ~ sum of cand_rest[0..r].
    auto try_sum = [&](const std::vector<Volume>& coarse, const std::vector<Volume>& fine)
        -> std::optional<std::size_t> {
        const Volume a = coarse[0];
        Volume sum = 0;
        for (std::size_t r = 0; r < fine.size(); ++r) {
            sum += fine[r];
            if (r >= 1 && approx_equal(a, sum, noise_budget, multiplier)) return r;
            // Past the tolerance band, no further prefix can match.
            if (sum > a && !approx_equal(a, sum, noise_budget, multiplier)) return std::nullopt;
        }
        return std::nullopt;
    };
    if (auto r = try_sum(base_rest, cand_rest)) {
        ExtensionStep step;
        step.base_consumed = 1;
        step.cand_consumed = *r + 1;
        step.emitted.assign(cand_rest.begin(), cand_rest.begin() + static_cast<std::ptrdiff_t>(*r + 1));
        step.fine_owner = kOwnerCand;
        return step;
    }
    if (auto r = try_sum(cand_rest, base_rest)) {
        ExtensionStep step;
        step.base_consumed = *r + 1;
        step.cand_consumed = 1;
        step.emitted.assign(base_rest.begin(), base_rest.begin() + static_cast<std::ptrdiff_t>(*r + 1));
        step.fine_owner = kOwnerBase;
        return step;
    }
    return std::nullopt;
}

} // namespace detail

// Merge two candidate solutions around their approximate longest common
// substring. After the common block is maximally extended (a coarse element
// on one side may be replaced by the finer subdivision from the other), the
// leftover prefixes/suffixes are resolved:
//   (a)/(b) one side empty -> take the other side's remainder,
//   (c) both single volumes a < b with b-a approximately present in the
//       observations -> [b-a, a] before the block / [a, b-a] after it,
//   (d) otherwise the merge aborts.
// missing_volumes counts the boundary pairs asserted by only one side each
// whose implied volume is absent from the observations.
inline MergeOutcome merge(const CandidateSolution& base, const CandidateSolution& cand,
                          double noise_budget, const std::vector<Volume>& observed_sorted,
                          const WindowPolicy& policy, double multiplier = 1.0) {
    MergeOutcome outcome;
    if (base.size() == 0 || cand.size() == 0) return outcome;

    const MatchResult match = approx_lc_substring(base, cand, noise_budget, multiplier);
    if (match.length() == 0) return outcome;  // no anchor to merge around

    detail::MergeAssembly assembly;
    assembly.init_common(match.common);

    // Grow right.
    std::size_t b_hi = match.base_end, c_hi = match.cand_end;
    for (;;) {
        const std::vector<Volume> base_rest(base.segments.begin() + static_cast<std::ptrdiff_t>(b_hi),
                                            base.segments.end());
        const std::vector<Volume> cand_rest(cand.segments.begin() + static_cast<std::ptrdiff_t>(c_hi),
                                            cand.segments.end());
        const auto step = detail::try_extend(base_rest, cand_rest, noise_budget, multiplier);
        if (!step) break;
        for (std::size_t i = 0; i < step->emitted.size(); ++i) {
            const bool last = i + 1 == step->emitted.size();
            assembly.append(step->emitted[i],
                            last ? (detail::kOwnerBase | detail::kOwnerCand) : step->fine_owner);
        }
        b_hi += step->base_consumed;
        c_hi += step->cand_consumed;
    }

    // Grow left. Views are adjacent-first: element 0 neighbors the block.
    std::size_t b_lo = match.base_start, c_lo = match.cand_start;
    for (;;) {
        std::vector<Volume> base_adj(base.segments.rend() - static_cast<std::ptrdiff_t>(b_lo),
                                     base.segments.rend());
        std::vector<Volume> cand_adj(cand.segments.rend() - static_cast<std::ptrdiff_t>(c_lo),
                                     cand.segments.rend());
        const auto step = detail::try_extend(base_adj, cand_adj, noise_budget, multiplier);
        if (!step) break;
        for (std::size_t i = 0; i < step->emitted.size(); ++i) {
            const bool outermost = i + 1 == step->emitted.size();
            assembly.prepend(step->emitted[i],
                             outermost ? (detail::kOwnerBase | detail::kOwnerCand) : step->fine_owner);
        }
        b_lo -= step->base_consumed;
        c_lo -= step->cand_consumed;
    }

    // Remaining ends.
    const std::vector<Volume> pref_base(base.segments.begin(),
                                        base.segments.begin() + static_cast<std::ptrdiff_t>(b_lo));
    const std::vector<Volume> pref_cand(cand.segments.begin(),
                                        cand.segments.begin() + static_cast<std::ptrdiff_t>(c_lo));
    const std::vector<Volume> suff_base(base.segments.begin() + static_cast<std::ptrdiff_t>(b_hi),
                                        base.segments.end());
    const std::vector<Volume> suff_cand(cand.segments.begin() + static_cast<std::ptrdiff_t>(c_hi),
                                        cand.segments.end());

    auto resolve_end = [&](const std::vector<Volume>& rem_base, const std::vector<Volume>& rem_cand,
                           bool prefix_side) -> bool {
        if (rem_base.empty() && rem_cand.empty()) return true;
        const std::vector<Volume>* take = nullptr;
        std::uint8_t owner = 0;
        if (rem_base.empty()) {
            take = &rem_cand;
            owner = detail::kOwnerCand;
        } else if (rem_cand.empty()) {
            take = &rem_base;
            owner = detail::kOwnerBase;
        }
        if (take != nullptr) {
            if (prefix_side) {
                for (auto it = take->rbegin(); it != take->rend(); ++it) assembly.prepend(*it, owner);
            } else {
                for (Volume v : *take) assembly.append(v, owner);
            }
            return true;
        }
        if (rem_base.size() == 1 && rem_cand.size() == 1) {
            const Volume a = std::min(rem_base[0], rem_cand[0]);
            const Volume b = std::max(rem_base[0], rem_cand[0]);
            if (b > a && approximately_present(b - a, observed_sorted, policy)) {
                const std::uint8_t a_owner =
                    rem_base[0] <= rem_cand[0] ? detail::kOwnerBase : detail::kOwnerCand;
                const std::uint8_t b_owner = a_owner == detail::kOwnerBase ? detail::kOwnerCand
                                                                           : detail::kOwnerBase;
                if (prefix_side) {
                    // [b-a, a] || comm: boundary between b-a and a is a's start.
                    assembly.prepend(a, a_owner);
                    assembly.prepend(b - a, b_owner);
                } else {
                    // comm || [a, b-a]
                    assembly.append(a, a_owner);
                    assembly.append(b - a, b_owner);
                }
                return true;
            }
        }
        return false;  // case (d)
    };

    if (!resolve_end(pref_base, pref_cand, true)) return outcome;
    if (!resolve_end(suff_base, suff_cand, false)) return outcome;

    // Missing volumes: cross pairs of single-owner boundaries.
    std::vector<Volume> positions(assembly.boundary_owner.size(), 0);
    for (std::size_t i = 0; i < assembly.segments.size(); ++i)
        positions[i + 1] = positions[i] + assembly.segments[i];
    int missing = 0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (assembly.boundary_owner[i] != detail::kOwnerBase) continue;
        for (std::size_t j = 0; j < positions.size(); ++j) {
            if (assembly.boundary_owner[j] != detail::kOwnerCand) continue;
            const Volume diff = positions[i] > positions[j] ? positions[i] - positions[j]
                                                            : positions[j] - positions[i];
            if (diff == 0) continue;
            if (!approximately_present(diff, observed_sorted, policy)) ++missing;
        }
    }

    outcome.aborted = false;
    outcome.merged = CandidateSolution(std::move(assembly.segments));
    outcome.missing_volumes = missing;
    return outcome;
}

// Trial-merge base with every candidate; return the non-aborting merge with
// the fewest missing volumes (ties: larger merged length, then candidate
// order). Index is -1 when every merge aborts.
struct BestCandidate {
    int index = -1;
    MergeOutcome outcome;
};

inline BestCandidate find_best_candidate(const CandidateSolution& base,
                                         const std::vector<CandidateSolution>& candidates,
                                         double noise_budget,
                                         const std::vector<Volume>& observed_sorted,
                                         const WindowPolicy& policy, double multiplier = 1.0) {
    if (candidates.empty()) throw std::invalid_argument("find_best_candidate: no candidates");
    BestCandidate best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        MergeOutcome outcome = merge(base, candidates[i], noise_budget, observed_sorted, policy, multiplier);
        if (outcome.aborted) continue;
        const bool better =
            best.index < 0 || outcome.missing_volumes < best.outcome.missing_volumes ||
            (outcome.missing_volumes == best.outcome.missing_volumes &&
             outcome.merged.size() > best.outcome.merged.size());
        if (better) {
            best.index = static_cast<int>(i);
            best.outcome = std::move(outcome);
        }
    }
    return best;
}

struct MergeLogEntry {
    std::vector<Volume> candidate;
    std::string outcome;  // "merged" | "abort" | "no-growth" | "overshoot"
    int missing_volumes = 0;
    std::size_t merged_length = 0;
};

struct MatchExtendParams {
    double noise_budget = 0.002;
    int ell = 3;
    double approx_multiplier = 1.0;
    std::size_t max_cliques = 50000;
    std::size_t max_base_attempts = 96;
    std::optional<WindowPolicy> window_override;  // defaults to multiplicative(noise_budget)
};

struct MatchExtendResult {
    bool success = false;
    std::vector<Volume> counts;        // length N on success, best partial otherwise
    std::size_t recovered = 0;         // coordinates recovered
    int assumed_missing = 0;           // missing volumes accumulated by the winning merge chain
    std::size_t coverage = 0;          // observed volumes explained by the result
    bool cliques_truncated = false;
    std::vector<MergeLogEntry> log;
};

// Algorithm: build the volume graph, enumerate all cliques with sizes in
// [K - ell, K] (K = max clique size, capped at N), turn each into a candidate
// solution, and repeatedly merge the most compatible candidate into a base
// solution until it has N values. Bases are tried in deterministic order
// (size desc, observation coverage desc, lexicographic); among full-length
// results the one explaining the most observed volumes wins. Reflection
// ambiguity is inherent: the result may be the reversal of the source column.
inline MatchExtendResult match_and_extend(const std::vector<Volume>& observed_volumes, int n_values,
                                          const MatchExtendParams& params) {
    if (n_values < 1) throw std::invalid_argument("match_and_extend: N must be >= 1");
    if (params.noise_budget < 0.0) throw std::invalid_argument("match_and_extend: budget must be >= 0");
    if (params.ell < 0) throw std::invalid_argument("match_and_extend: ell must be >= 0");
    if (observed_volumes.empty()) throw std::invalid_argument("match_and_extend: no observed volumes");

    const WindowPolicy policy =
        params.window_override.value_or(WindowPolicy::multiplicative(params.noise_budget));
    const VolumeGraph graph = build_graph(observed_volumes, policy, params.noise_budget);
    const std::vector<Volume>& observed = graph.nodes();

    MatchExtendResult result;

    // K from maximal cliques; fall back to singletons when no edges exist.
    CliqueList maximal = find_maximal_cliques(graph, 2, params.max_cliques);
    std::size_t clique_max = maximal.cliques.empty() ? 1 : maximal.cliques.front().size();
    const std::size_t usable_max = std::min<std::size_t>(clique_max, static_cast<std::size_t>(n_values));
    const std::size_t size_lo =
        usable_max > static_cast<std::size_t>(params.ell) + 1
            ? usable_max - static_cast<std::size_t>(params.ell)
            : 1;
    CliqueList cliques = enumerate_cliques(graph, size_lo, usable_max, params.max_cliques);
    result.cliques_truncated = cliques.truncated || maximal.truncated;

    struct Ranked {
        CandidateSolution candidate;
        std::size_t coverage = 0;
    };
    std::vector<Ranked> pool;
    pool.reserve(cliques.cliques.size());
    for (const auto& clique : cliques.cliques) {
        Ranked r;
        r.candidate = CandidateSolution(clique_to_candidate(clique));
        r.coverage = observation_coverage(r.candidate.segments, observed, policy);
        pool.push_back(std::move(r));
    }
    // Base order: size desc, coverage desc, lexicographic asc.
    std::vector<std::size_t> base_order(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) base_order[i] = i;
    std::stable_sort(base_order.begin(), base_order.end(), [&](std::size_t a, std::size_t b) {
        if (pool[a].candidate.size() != pool[b].candidate.size())
            return pool[a].candidate.size() > pool[b].candidate.size();
        if (pool[a].coverage != pool[b].coverage) return pool[a].coverage > pool[b].coverage;
        return pool[a].candidate.segments < pool[b].candidate.segments;
    });

    struct Final {
        std::vector<Volume> counts;
        std::size_t coverage = 0;
        std::size_t anchors = 0;  // prefix sums exactly present in the observations
        int missing = 0;
        std::int64_t shortfall = 0;  // scaled distance of unexplained implied volumes
        bool valid = false;
    };
    Final best_full;
    Final best_partial;

    // Prefix sums that are themselves observed volumes; solutions assembled
    // from cliques keep these anchors, approximation drift loses them.
    auto anchor_count = [&](const std::vector<Volume>& counts) {
        std::size_t anchors = 0;
        Volume acc = 0;
        for (Volume c : counts) {
            acc += c;
            if (std::binary_search(observed.begin(), observed.end(), acc)) ++anchors;
        }
        return anchors;
    };
    // Volumes the candidate implies but no observation window covers, scored
    // by relative distance to the nearest observation. A near-miss (a far-off
    // measured peak) costs less than a fabricated volume.
    auto unexplained_shortfall = [&](const std::vector<Volume>& counts) {
        std::int64_t shortfall = 0;
        for (Volume m : implied_volumes(counts)) {
            if (approximately_present(m, observed, policy)) continue;
            auto it = std::lower_bound(observed.begin(), observed.end(), m);
            Volume nearest = std::numeric_limits<Volume>::max();
            if (it != observed.end()) nearest = *it - m;
            if (it != observed.begin()) nearest = std::min<Volume>(nearest, m - *(it - 1));
            shortfall += nearest * 1000000 / m;
        }
        return shortfall;
    };
    auto better_same_length = [](const Final& challenger, const Final& incumbent) {
        if (!incumbent.valid) return true;
        if (challenger.coverage != incumbent.coverage) return challenger.coverage > incumbent.coverage;
        if (challenger.anchors != incumbent.anchors) return challenger.anchors > incumbent.anchors;
        if (challenger.missing != incumbent.missing) return challenger.missing < incumbent.missing;
        if (challenger.shortfall != incumbent.shortfall)
            return challenger.shortfall < incumbent.shortfall;
        return challenger.counts < incumbent.counts;
    };
    auto consider = [&](std::vector<Volume> counts, std::size_t coverage, int missing) {
        Final challenger{std::move(counts), coverage, 0, missing, 0, true};
        challenger.anchors = anchor_count(challenger.counts);
        challenger.shortfall = unexplained_shortfall(challenger.counts);
        if (challenger.counts.size() == static_cast<std::size_t>(n_values)) {
            if (better_same_length(challenger, best_full)) best_full = std::move(challenger);
        } else if (!best_partial.valid || challenger.counts.size() > best_partial.counts.size() ||
                   (challenger.counts.size() == best_partial.counts.size() &&
                    better_same_length(challenger, best_partial))) {
            best_partial = std::move(challenger);
        }
    };

    constexpr std::size_t kLogCap = 20000;
    std::size_t attempts = 0;
    for (std::size_t order_index : base_order) {
        if (attempts >= params.max_base_attempts) break;
        ++attempts;
        CandidateSolution base = pool[order_index].candidate;
        int chain_missing = 0;
        std::vector<bool> consumed(pool.size(), false);
        consumed[order_index] = true;

        while (base.size() < static_cast<std::size_t>(n_values)) {
            // Best growing merge among unconsumed candidates, ranked by what
            // the merged solution is worth: observation coverage, then exact
            // anchors, then fewest missing volumes, then length, then
            // candidate order.
            int best_index = -1;
            MergeOutcome best_outcome;
            std::tuple<std::size_t, std::size_t, int, std::size_t> best_key{};
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (consumed[i]) continue;
                MergeOutcome outcome = merge(base, pool[i].candidate, params.noise_budget, observed,
                                             policy, params.approx_multiplier);
                MergeLogEntry entry;
                entry.candidate = pool[i].candidate.segments;
                if (outcome.aborted) {
                    entry.outcome = "abort";
                } else if (outcome.merged.size() > static_cast<std::size_t>(n_values)) {
                    entry.outcome = "overshoot";
                    entry.merged_length = outcome.merged.size();
                } else if (outcome.merged.size() <= base.size()) {
                    entry.outcome = "no-growth";
                    entry.missing_volumes = outcome.missing_volumes;
                    entry.merged_length = outcome.merged.size();
                } else {
                    entry.outcome = "merged";
                    entry.missing_volumes = outcome.missing_volumes;
                    entry.merged_length = outcome.merged.size();
                    const auto key = std::make_tuple(
                        observation_coverage(outcome.merged.segments, observed, policy),
                        anchor_count(outcome.merged.segments), -outcome.missing_volumes,
                        outcome.merged.size());
                    if (best_index < 0 || key > best_key) {
                        best_index = static_cast<int>(i);
                        best_outcome = outcome;
                        best_key = key;
                    }
                }
                if (result.log.size() < kLogCap) result.log.push_back(std::move(entry));
            }
            if (best_index < 0) break;  // stalled
            consumed[static_cast<std::size_t>(best_index)] = true;
            base = best_outcome.merged;
            chain_missing += best_outcome.missing_volumes;
        }

        const std::size_t coverage = observation_coverage(base.segments, observed, policy);
        consider(base.segments, coverage, chain_missing);
        // A full-length result explaining every observation cannot be beaten.
        if (best_full.valid && best_full.coverage == observed.size()) break;
    }

    if (best_full.valid) {
        result.success = true;
        result.counts = best_full.counts;
        result.recovered = best_full.counts.size();
        result.assumed_missing = best_full.missing;
        result.coverage = best_full.coverage;
    } else if (best_partial.valid) {
        result.counts = best_partial.counts;
        result.recovered = best_partial.counts.size();
        result.assumed_missing = best_partial.missing;
        result.coverage = best_partial.coverage;
    }
    return result;
}

// The plain noisy-clique reconstruction: best clique candidate, no merging.
// Cliques above size N are represented by their size-N subsets.
inline MatchExtendResult noisy_clique_reconstruct(const std::vector<Volume>& observed_volumes,
                                                  int n_values, double noise_budget,
                                                  std::size_t max_cliques = 50000) {
    if (observed_volumes.empty())
        throw std::invalid_argument("noisy_clique_reconstruct: no observed volumes");
    const WindowPolicy policy = WindowPolicy::multiplicative(noise_budget);
    const VolumeGraph graph = build_graph(observed_volumes, policy, noise_budget);
    const std::vector<Volume>& observed = graph.nodes();

    MatchExtendResult result;
    CliqueList maximal = find_maximal_cliques(graph, 2, max_cliques);
    result.cliques_truncated = maximal.truncated;
    std::size_t clique_max = maximal.cliques.empty() ? 1 : maximal.cliques.front().size();
    const std::size_t target = std::min<std::size_t>(clique_max, static_cast<std::size_t>(n_values));
    CliqueList cliques = enumerate_cliques(graph, target, target, max_cliques);
    result.cliques_truncated = result.cliques_truncated || cliques.truncated;

    std::vector<Volume> best_counts;
    std::size_t best_coverage = 0;
    for (const auto& clique : cliques.cliques) {
        const std::vector<Volume> counts = clique_to_candidate(clique);
        const std::size_t coverage = observation_coverage(counts, observed, policy);
        const bool better = best_counts.empty() || coverage > best_coverage ||
                            (coverage == best_coverage && counts < best_counts);
        if (better) {
            best_counts = counts;
            best_coverage = coverage;
        }
    }
    if (best_counts.empty() && !observed.empty()) {
        best_counts = {observed.front()};
        best_coverage = observation_coverage(best_counts, observed, policy);
    }
    result.counts = best_counts;
    result.recovered = best_counts.size();
    result.coverage = best_coverage;
    result.success = best_counts.size() == static_cast<std::size_t>(n_values);
    return result;
}

} // namespace volrec
