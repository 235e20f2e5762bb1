#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "volrec/model.hpp"

namespace volrec {

namespace detail {
inline constexpr std::int64_t kScale = 1000000;
inline std::int64_t scale_fraction(double f) { return std::llround(f * 1e6); }
} // namespace detail

// Acceptance window around an observed volume. The standard rule is the
// asymmetric multiplicative window [v(1 - 0.1b), v(1 + 0.9b)] with 90% of the
// width above v (measured volumes undercount). An additive [v - below,
// v + above] variant covers fixed-offset window experiments. Containment is
// decided in integer-scaled arithmetic, never in floats.
struct WindowPolicy {
    enum class Kind { Multiplicative, Additive };

    Kind kind = Kind::Multiplicative;
    double budget = 0.0;   // multiplicative
    Volume below = 0;      // additive
    Volume above = 0;      // additive

    static WindowPolicy multiplicative(double noise_budget) {
        if (noise_budget < 0.0) throw std::invalid_argument("WindowPolicy: budget must be >= 0");
        WindowPolicy p;
        p.kind = Kind::Multiplicative;
        p.budget = noise_budget;
        return p;
    }

    static WindowPolicy additive(Volume below, Volume above) {
        if (below < 0 || above < 0) throw std::invalid_argument("WindowPolicy: offsets must be >= 0");
        WindowPolicy p;
        p.kind = Kind::Additive;
        p.below = below;
        p.above = above;
        return p;
    }

    // [lo, hi] of the window around v, as reals.
    std::pair<double, double> bounds(Volume v) const {
        if (kind == Kind::Multiplicative)
            return {static_cast<double>(v) * (1.0 - 0.1 * budget),
                    static_cast<double>(v) * (1.0 + 0.9 * budget)};
        return {static_cast<double>(v - below), static_cast<double>(v + above)};
    }

    bool contains(Volume value, Volume window_center) const {
        if (kind == Kind::Additive)
            return value >= window_center - below && value <= window_center + above;
        const std::int64_t lo_frac = detail::scale_fraction(0.1 * budget);
        const std::int64_t hi_frac = detail::scale_fraction(0.9 * budget);
        const std::int64_t scaled = value * detail::kScale;
        return scaled >= window_center * (detail::kScale - lo_frac) &&
               scaled <= window_center * (detail::kScale + hi_frac);
    }

    // Centers whose window contains `value`: contains(value, c) for all c in
    // [first, second]. Used to binary-search the node list.
    std::pair<Volume, Volume> center_range(Volume value) const {
        if (kind == Kind::Additive) return {value - above, value + below};
        const std::int64_t lo_frac = detail::scale_fraction(0.1 * budget);
        const std::int64_t hi_frac = detail::scale_fraction(0.9 * budget);
        const std::int64_t scaled = value * detail::kScale;
        // c >= scaled / (kScale + hi_frac), c <= scaled / (kScale - lo_frac)
        const Volume lo = (scaled + detail::kScale + hi_frac - 1) / (detail::kScale + hi_frac);
        Volume hi;
        if (detail::kScale - lo_frac <= 0) {
            hi = std::numeric_limits<Volume>::max() / 2;
        } else {
            hi = scaled / (detail::kScale - lo_frac);
        }
        return {lo, hi};
    }

    // Integer values contained in the window of `center`: [first, second].
    std::pair<Volume, Volume> value_range(Volume center) const {
        if (kind == Kind::Additive) return {center - below, center + above};
        const std::int64_t lo_frac = detail::scale_fraction(0.1 * budget);
        const std::int64_t hi_frac = detail::scale_fraction(0.9 * budget);
        const Volume lo = (center * (detail::kScale - lo_frac) + detail::kScale - 1) / detail::kScale;
        const Volume hi = center * (detail::kScale + hi_frac) / detail::kScale;
        return {lo, hi};
    }
};

// |u - v| / min(u, v) <= multiplier * noise_budget, in scaled integers.
inline bool approx_equal(Volume u, Volume v, double noise_budget, double multiplier = 1.0) {
    if (u <= 0 || v <= 0) throw std::invalid_argument("approx_equal: volumes must be positive");
    const std::int64_t tol = detail::scale_fraction(noise_budget * multiplier);
    const Volume diff = u > v ? u - v : v - u;
    return diff * detail::kScale <= std::min(u, v) * tol;
}

// Nodes are the distinct observed volumes; an edge joins v_i, v_j when some
// observed volume's window contains |v_i - v_j|.
class VolumeGraph {
public:
    VolumeGraph(std::vector<Volume> nodes, WindowPolicy policy, double noise_budget)
        : nodes_(std::move(nodes)), policy_(policy), noise_budget_(noise_budget) {
        const std::size_t n = nodes_.size();
        adjacency_.assign(n, std::vector<bool>(n, false));
        for (std::size_t j = 1; j < n; ++j) {
            for (std::size_t i = 0; i < j; ++i) {
                const Volume diff = nodes_[j] - nodes_[i];
                const auto [lo, hi] = policy_.center_range(diff);
                const auto first = std::lower_bound(nodes_.begin(), nodes_.end(), lo);
                if (first != nodes_.end() && *first <= hi) {
                    adjacency_[i][j] = adjacency_[j][i] = true;
                }
            }
        }
    }

    const std::vector<Volume>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    bool has_edge(std::size_t i, std::size_t j) const { return adjacency_[i][j]; }
    const WindowPolicy& policy() const { return policy_; }
    double noise_budget() const { return noise_budget_; }

    std::size_t edge_count() const {
        std::size_t count = 0;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j)
                if (adjacency_[i][j]) ++count;
        return count;
    }

private:
    std::vector<Volume> nodes_;
    std::vector<std::vector<bool>> adjacency_;
    WindowPolicy policy_;
    double noise_budget_;
};

inline VolumeGraph build_graph(const std::vector<Volume>& volumes, const WindowPolicy& policy,
                               double noise_budget = 0.0) {
    if (volumes.empty()) throw std::invalid_argument("build_graph: empty volume list");
    for (Volume v : volumes)
        if (v <= 0) throw std::invalid_argument("build_graph: volumes must be positive");
    std::vector<Volume> nodes = volumes;
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return VolumeGraph(std::move(nodes), policy, noise_budget);
}

inline VolumeGraph build_graph(const std::vector<Volume>& volumes, double noise_budget) {
    return build_graph(volumes, WindowPolicy::multiplicative(noise_budget), noise_budget);
}

struct CliqueList {
    std::vector<std::vector<Volume>> cliques;  // each sorted ascending
    bool truncated = false;
};

namespace detail {

// Canonical clique order: size descending, then lexicographic on volumes.
inline void sort_cliques(std::vector<std::vector<Volume>>& cliques) {
    std::sort(cliques.begin(), cliques.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a < b;
    });
}

// Bron-Kerbosch with pivoting over node indices.
inline void bron_kerbosch(const VolumeGraph& g, std::vector<std::size_t>& current,
                          std::vector<std::size_t> candidates, std::vector<std::size_t> excluded,
                          std::size_t min_size, std::size_t max_count,
                          std::vector<std::vector<std::size_t>>& out, bool& truncated) {
    if (truncated && out.size() >= max_count) return;
    if (candidates.empty() && excluded.empty()) {
        if (current.size() >= min_size) {
            if (out.size() >= max_count) {
                truncated = true;
                return;
            }
            out.push_back(current);
        }
        return;
    }
    // Pivot: vertex of candidates+excluded with most candidate neighbors.
    std::size_t pivot = 0;
    std::size_t best = 0;
    bool have_pivot = false;
    for (const auto* pool : {&candidates, &excluded}) {
        for (std::size_t u : *pool) {
            std::size_t degree = 0;
            for (std::size_t v : candidates)
                if (g.has_edge(u, v)) ++degree;
            if (!have_pivot || degree > best) {
                pivot = u;
                best = degree;
                have_pivot = true;
            }
        }
    }
    std::vector<std::size_t> branch;
    for (std::size_t v : candidates)
        if (!g.has_edge(pivot, v)) branch.push_back(v);
    for (std::size_t v : branch) {
        std::vector<std::size_t> next_candidates, next_excluded;
        for (std::size_t u : candidates)
            if (g.has_edge(v, u)) next_candidates.push_back(u);
        for (std::size_t u : excluded)
            if (g.has_edge(v, u)) next_excluded.push_back(u);
        current.push_back(v);
        bron_kerbosch(g, current, std::move(next_candidates), std::move(next_excluded), min_size,
                      max_count, out, truncated);
        current.pop_back();
        candidates.erase(std::find(candidates.begin(), candidates.end(), v));
        excluded.push_back(v);
        if (truncated && out.size() >= max_count) return;
    }
}

} // namespace detail

inline CliqueList find_maximal_cliques(const VolumeGraph& g, std::size_t min_size = 2,
                                       std::size_t max_count = 50000) {
    if (min_size < 2) throw std::invalid_argument("find_maximal_cliques: min_size must be >= 2");
    std::vector<std::size_t> all(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) all[i] = i;
    std::vector<std::vector<std::size_t>> raw;
    std::vector<std::size_t> current;
    bool truncated = false;
    detail::bron_kerbosch(g, current, std::move(all), {}, min_size, max_count, raw, truncated);

    CliqueList result;
    result.truncated = truncated;
    result.cliques.reserve(raw.size());
    for (const auto& idx_clique : raw) {
        std::vector<Volume> volumes;
        volumes.reserve(idx_clique.size());
        for (std::size_t i : idx_clique) volumes.push_back(g.nodes()[i]);
        std::sort(volumes.begin(), volumes.end());
        result.cliques.push_back(std::move(volumes));
    }
    detail::sort_cliques(result.cliques);
    return result;
}

// All cliques (not only maximal) with size in [min_size, max_size], derived
// as subsets of the maximal cliques; deduplicated, canonical order.
inline CliqueList enumerate_cliques(const VolumeGraph& g, std::size_t min_size,
                                    std::size_t max_size, std::size_t max_count = 50000) {
    if (min_size < 1) min_size = 1;
    CliqueList maximal = find_maximal_cliques(g, std::max<std::size_t>(2, min_size), max_count);
    std::set<std::vector<Volume>> seen;
    bool truncated = maximal.truncated;

    // Emit every size-k subset of one maximal clique.
    auto emit_subsets = [&](const std::vector<Volume>& clique, std::size_t k) {
        std::vector<std::size_t> pick(k);
        for (std::size_t i = 0; i < k; ++i) pick[i] = i;
        for (;;) {
            std::vector<Volume> c(k);
            for (std::size_t i = 0; i < k; ++i) c[i] = clique[pick[i]];
            if (seen.size() >= max_count && seen.find(c) == seen.end()) {
                truncated = true;
                return;
            }
            seen.insert(std::move(c));
            // Advance to the next combination.
            std::size_t i = k;
            bool advanced = false;
            while (i > 0) {
                --i;
                if (pick[i] != i + clique.size() - k) {
                    ++pick[i];
                    for (std::size_t j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
                    advanced = true;
                    break;
                }
            }
            if (!advanced) return;
        }
    };

    for (const auto& clique : maximal.cliques) {
        const std::size_t hi = std::min(max_size, clique.size());
        for (std::size_t k = min_size; k <= hi; ++k) {
            emit_subsets(clique, k);
            if (truncated && seen.size() >= max_count) break;
        }
        if (truncated && seen.size() >= max_count) break;
    }
    // Singleton "cliques" are the nodes themselves.
    if (min_size <= 1) {
        for (Volume v : g.nodes()) {
            if (seen.size() >= max_count) {
                truncated = true;
                break;
            }
            seen.insert({v});
        }
    }

    CliqueList result;
    result.truncated = truncated;
    result.cliques.assign(seen.begin(), seen.end());
    detail::sort_cliques(result.cliques);
    return result;
}

// Sorted clique -> ordered segment list: [c1, c2-c1, ..., ck-c(k-1)].
inline std::vector<Volume> clique_to_candidate(const std::vector<Volume>& clique) {
    if (clique.empty()) throw std::invalid_argument("clique_to_candidate: empty clique");
    std::vector<Volume> segments;
    segments.reserve(clique.size());
    Volume prev = 0;
    for (Volume v : clique) {
        if (v <= prev) throw std::invalid_argument("clique_to_candidate: clique must be sorted ascending");
        segments.push_back(v - prev);
        prev = v;
    }
    return segments;
}

// Every contiguous-run sum of a segment list (the range volumes the candidate
// implies), ascending with duplicates removed.
inline std::vector<Volume> implied_volumes(const std::vector<Volume>& segments) {
    std::vector<Volume> out;
    out.reserve(segments.size() * (segments.size() + 1) / 2);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        Volume sum = 0;
        for (std::size_t j = i; j < segments.size(); ++j) {
            sum += segments[j];
            out.push_back(sum);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// How many observed volumes the candidate explains: observed v counts when
// some implied volume falls inside v's window.
inline std::size_t observation_coverage(const std::vector<Volume>& segments,
                                        const std::vector<Volume>& observed_sorted,
                                        const WindowPolicy& policy) {
    const std::vector<Volume> implied = implied_volumes(segments);
    std::size_t covered = 0;
    for (Volume v : observed_sorted) {
        const auto [lo, hi] = policy.value_range(v);
        const auto it = std::lower_bound(implied.begin(), implied.end(), lo);
        if (it != implied.end() && *it <= hi) ++covered;
    }
    return covered;
}

// Is `value` inside the window of any observed volume?
inline bool approximately_present(Volume value, const std::vector<Volume>& observed_sorted,
                                  const WindowPolicy& policy) {
    if (value <= 0) return false;
    const auto [lo, hi] = policy.center_range(value);
    const auto first = std::lower_bound(observed_sorted.begin(), observed_sorted.end(), lo);
    return first != observed_sorted.end() && *first <= hi;
}

// --- debug/tooling exports ---

inline std::string graph_to_text(const VolumeGraph& g) {
    std::ostringstream out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        out << g.nodes()[i] << ':';
        bool first = true;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (!g.has_edge(i, j)) continue;
            out << (first ? " " : ",") << g.nodes()[j];
            first = false;
        }
        out << '\n';
    }
    return out.str();
}

} // namespace volrec
