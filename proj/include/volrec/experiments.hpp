#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "volrec/cvp.hpp"
#include "volrec/match_extend.hpp"
#include "volrec/model.hpp"
#include "volrec/trace.hpp"

namespace volrec {

// 100 * |recovered - truth| / truth.
inline double error_percentage(Volume recovered, Volume truth) {
    if (truth <= 0) throw std::invalid_argument("error_percentage: truth must be positive");
    return 100.0 * static_cast<double>(std::llabs(recovered - truth)) / static_cast<double>(truth);
}

// Deterministic pairing of a (possibly partial) reconstruction against the
// truth. Volumes cannot distinguish a column from its reversal, so both
// orientations are scored; partial results are placed at the contiguous
// offset minimizing the average error. Ties prefer the forward orientation,
// then the smaller offset.
struct Alignment {
    bool reversed = false;
    std::size_t offset = 0;
    std::vector<double> per_coordinate_error_pct;
    double avg_error_pct = 0.0;
    double max_error_pct = 0.0;
};

inline Alignment align_for_scoring(const std::vector<Volume>& recovered, const Database& truth) {
    const std::vector<Volume>& fwd = truth.counts();
    std::vector<Volume> rev(fwd.rbegin(), fwd.rend());
    if (recovered.empty() || recovered.size() > fwd.size())
        throw std::invalid_argument("align_for_scoring: recovered length must be in [1, N]");

    Alignment best;
    bool have = false;
    for (int orientation = 0; orientation < 2; ++orientation) {
        const std::vector<Volume>& t = orientation == 0 ? fwd : rev;
        for (std::size_t offset = 0; offset + recovered.size() <= t.size(); ++offset) {
            Alignment a;
            a.reversed = orientation == 1;
            a.offset = offset;
            double sum = 0.0;
            for (std::size_t i = 0; i < recovered.size(); ++i) {
                const double e = error_percentage(recovered[i], t[offset + i]);
                a.per_coordinate_error_pct.push_back(e);
                sum += e;
                a.max_error_pct = std::max(a.max_error_pct, e);
            }
            a.avg_error_pct = sum / static_cast<double>(recovered.size());
            if (!have || a.avg_error_pct < best.avg_error_pct) {
                best = std::move(a);
                have = true;
            }
        }
    }
    return best;
}

// Student-t interval on the mean. Levels 0.90 and 0.99.
inline std::pair<double, double> confidence_interval(const std::vector<double>& samples,
                                                     double level) {
    if (samples.size() < 2)
        throw std::invalid_argument("confidence_interval: need at least 2 samples");
    if (level != 0.90 && level != 0.99)
        throw std::invalid_argument("confidence_interval: level must be 0.90 or 0.99");

    static constexpr double kT95[] = {6.3138, 2.9200, 2.3534, 2.1318, 2.0150, 1.9432, 1.8946,
                                      1.8595, 1.8331, 1.8125, 1.7959, 1.7823, 1.7709, 1.7613,
                                      1.7531, 1.7459, 1.7396, 1.7341, 1.7291, 1.7247, 1.7207,
                                      1.7171, 1.7139, 1.7109, 1.7081, 1.7056, 1.7033, 1.7011,
                                      1.6991, 1.6973};
    static constexpr double kT995[] = {63.657, 9.9248, 5.8409, 4.6041, 4.0321, 3.7074, 3.4995,
                                       3.3554, 3.2498, 3.1693, 3.1058, 3.0545, 3.0123, 2.9768,
                                       2.9467, 2.9208, 2.8982, 2.8784, 2.8609, 2.8453, 2.8314,
                                       2.8188, 2.8073, 2.7969, 2.7874, 2.7787, 2.7707, 2.7633,
                                       2.7564, 2.7500};

    const std::size_t df = samples.size() - 1;
    double critical;
    if (df <= 30) {
        critical = (level == 0.90 ? kT95 : kT995)[df - 1];
    } else {
        critical = level == 0.90 ? 1.6449 : 2.5758;
    }

    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(samples.size() - 1);
    const double half = critical * std::sqrt(var / static_cast<double>(samples.size()));
    return {mean - half, mean + half};
}

// --- scenario description ---

struct DroppedRanges {
    enum class Mode { None, Random, BlockAboveFraction, BlockFullRange };
    Mode mode = Mode::None;
    int count = 0;        // Random
    double fraction = 1.0;  // BlockAboveFraction
};

struct AlgorithmSpec {
    enum class Name { MatchExtend, NoisyClique };
    Name name = Name::MatchExtend;
    double noise_budget = 0.002;
    int ell = 3;
};

struct Scenario {
    std::string id;
    DbSpec db;
    QueryPattern query_pattern = QueryPattern::Uniform;
    double close_volume_pairing_budget = 0.002;
    TraceNoiseModel noise;
    std::int64_t traces = 10000;
    PeakParams peaks;
    DroppedRanges dropped;
    int drop_peaks = 0;  // post-aggregation peak removal (alternative missing-volume model)
    AlgorithmSpec algorithm;
    bool use_cvp = false;
    int repetitions = 10;

    void validate() const {
        if (repetitions < 1) throw std::invalid_argument("Scenario: repetitions must be >= 1");
        if (dropped.mode == DroppedRanges::Mode::BlockAboveFraction &&
            (dropped.fraction <= 0.0 || dropped.fraction > 1.0))
            throw std::invalid_argument("Scenario: blocked fraction must be in (0, 1]");
        noise.validate();
    }
};

struct StageTimings {
    double simulate_seconds = 0.0;
    double reconstruct_seconds = 0.0;
    double refine_seconds = 0.0;
    double total_seconds = 0.0;
};

struct RepetitionResult {
    int index = 0;
    std::uint64_t seed = 0;
    std::size_t recovered = 0;
    bool full_length = false;
    double success_rate = 0.0;
    double avg_error_pct = 0.0;
    double max_error_pct = 0.0;
    // Populated when use_cvp: the raw (pre-refinement) scores and residuals.
    std::optional<double> avg_error_pct_raw;
    std::optional<double> max_error_pct_raw;
    std::optional<double> residual_before;
    std::optional<double> residual_after;
    std::size_t peak_count = 0;
    StageTimings timings;
    std::vector<double> per_coordinate_error_pct;
};

struct EvaluationReport {
    std::string scenario_id;
    std::uint64_t seed = 0;
    double success_rate = 0.0;
    double avg_error_pct = 0.0;
    double max_error_pct = 0.0;
    std::pair<double, double> ci90{0.0, 0.0};
    StageTimings runtime;
    std::vector<RepetitionResult> repetitions;
    std::vector<double> per_coordinate_error_pct;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace detail

// One repetition of a scenario: generate -> observe -> reconstruct -> score.
inline RepetitionResult run_repetition(const Scenario& scenario, std::uint64_t rep_seed, int index) {
    RepetitionResult rep;
    rep.index = index;
    rep.seed = rep_seed;
    const auto t_total = std::chrono::steady_clock::now();

    const Database db = generate_database(scenario.db, derive_seed(rep_seed, 1));
    QueryDistribution qdist = make_query_distribution(
        scenario.query_pattern, scenario.db.n_values,
        scenario.query_pattern == QueryPattern::CloseVolume2x ? &db : nullptr,
        scenario.close_volume_pairing_budget);

    // Never-issued ranges.
    const ExactVolumeTable table(db);
    switch (scenario.dropped.mode) {
        case DroppedRanges::Mode::None:
            break;
        case DroppedRanges::Mode::Random: {
            std::vector<RangeId> all = canonical_ranges(scenario.db.n_values);
            Rng rng(derive_seed(rep_seed, 2));
            std::vector<RangeId> chosen;
            for (int k = 0; k < scenario.dropped.count && !all.empty(); ++k) {
                const std::size_t pick = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(all.size()) - 1));
                chosen.push_back(all[pick]);
                all.erase(all.begin() + static_cast<std::ptrdiff_t>(pick));
            }
            qdist.exclude(chosen);
            break;
        }
        case DroppedRanges::Mode::BlockAboveFraction: {
            const double cap = scenario.dropped.fraction * static_cast<double>(db.record_count());
            std::vector<RangeId> blocked;
            for (const RangeId& r : canonical_ranges(scenario.db.n_values))
                if (static_cast<double>(table.volume(r)) > cap) blocked.push_back(r);
            qdist.exclude(blocked);
            break;
        }
        case DroppedRanges::Mode::BlockFullRange:
            qdist.exclude({RangeId{1, scenario.db.n_values}});
            break;
    }

    const auto t_sim = std::chrono::steady_clock::now();
    VolumeObservations obs = collect_observations(db, qdist, scenario.traces, scenario.noise,
                                                  scenario.peaks, derive_seed(rep_seed, 3));
    rep.timings.simulate_seconds = detail::seconds_since(t_sim);

    if (scenario.drop_peaks > 0 && !obs.peaks.empty()) {
        Rng rng(derive_seed(rep_seed, 4));
        for (int k = 0; k < scenario.drop_peaks && obs.peaks.size() > 1; ++k) {
            const std::size_t pick = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(obs.peaks.size()) - 1));
            obs.peaks.erase(obs.peaks.begin() + static_cast<std::ptrdiff_t>(pick));
        }
    }
    rep.peak_count = obs.peaks.size();

    const auto t_rec = std::chrono::steady_clock::now();
    MatchExtendResult rec;
    if (scenario.algorithm.name == AlgorithmSpec::Name::MatchExtend) {
        MatchExtendParams params;
        params.noise_budget = scenario.algorithm.noise_budget;
        params.ell = scenario.algorithm.ell;
        rec = match_and_extend(obs.peaks, scenario.db.n_values, params);
    } else {
        rec = noisy_clique_reconstruct(obs.peaks, scenario.db.n_values,
                                       scenario.algorithm.noise_budget);
    }
    rep.timings.reconstruct_seconds = detail::seconds_since(t_rec);

    rep.recovered = rec.recovered;
    rep.full_length = rec.counts.size() == static_cast<std::size_t>(scenario.db.n_values);
    rep.success_rate =
        static_cast<double>(rec.recovered) / static_cast<double>(scenario.db.n_values);

    if (rec.recovered == 0) {
        rep.timings.total_seconds = detail::seconds_since(t_total);
        return rep;
    }

    Alignment raw_alignment = align_for_scoring(rec.counts, db);
    std::vector<Volume> final_counts = rec.counts;

    if (scenario.use_cvp && rep.full_length) {
        const auto t_ref = std::chrono::steady_clock::now();
        const Database guess{rec.counts};
        const RefinedSolution refined = refine(guess, obs.peaks);
        rep.timings.refine_seconds = detail::seconds_since(t_ref);

        // Residual of the unrefined guess against the same snapped targets.
        const std::vector<Volume> snapped =
            snap_candidate_volumes(ExactVolumeTable(guess).elementary_volumes(), obs.peaks);
        const CvpInstance inst = build_cvp_instance(scenario.db.n_values, snapped);
        rep.residual_before = std::sqrt(static_cast<double>(detail::exact_cost(inst, guess.counts())));
        rep.residual_after = refined.residual_l2;
        rep.avg_error_pct_raw = raw_alignment.avg_error_pct;
        rep.max_error_pct_raw = raw_alignment.max_error_pct;
        final_counts = refined.x;
    }

    const Alignment final_alignment = align_for_scoring(final_counts, db);
    rep.avg_error_pct = final_alignment.avg_error_pct;
    rep.max_error_pct = final_alignment.max_error_pct;
    rep.per_coordinate_error_pct = final_alignment.per_coordinate_error_pct;
    if (!scenario.use_cvp || !rep.full_length) {
        rep.avg_error_pct = raw_alignment.avg_error_pct;
        rep.max_error_pct = raw_alignment.max_error_pct;
        rep.per_coordinate_error_pct = raw_alignment.per_coordinate_error_pct;
    }
    rep.timings.total_seconds = detail::seconds_since(t_total);
    return rep;
}

// Repetition r uses derive_seed(seed, r); repetitions run in parallel and are
// aggregated in index order.
inline EvaluationReport run_scenario(const Scenario& scenario, std::uint64_t seed,
                                     int threads = 0) {
    scenario.validate();
    EvaluationReport report;
    report.scenario_id = scenario.id;
    report.seed = seed;

    const auto t_total = std::chrono::steady_clock::now();
    report.repetitions.resize(static_cast<std::size_t>(scenario.repetitions));

    int worker_count = threads > 0 ? threads : 1;
    if (worker_count <= 1 || scenario.repetitions == 1) {
        for (int r = 0; r < scenario.repetitions; ++r)
            report.repetitions[static_cast<std::size_t>(r)] =
                run_repetition(scenario, derive_seed(seed, static_cast<std::uint64_t>(r)), r);
    } else {
        std::vector<std::future<RepetitionResult>> futures;
        futures.reserve(static_cast<std::size_t>(scenario.repetitions));
        for (int r = 0; r < scenario.repetitions; ++r)
            futures.push_back(std::async(std::launch::async, run_repetition, scenario,
                                         derive_seed(seed, static_cast<std::uint64_t>(r)), r));
        for (int r = 0; r < scenario.repetitions; ++r)
            report.repetitions[static_cast<std::size_t>(r)] = futures[static_cast<std::size_t>(r)].get();
    }

    double recovered = 0.0;
    double err_sum = 0.0;
    std::size_t err_count = 0;
    std::vector<double> rep_avgs;
    for (const RepetitionResult& rep : report.repetitions) {
        recovered += static_cast<double>(rep.recovered);
        for (double e : rep.per_coordinate_error_pct) {
            report.per_coordinate_error_pct.push_back(e);
            err_sum += e;
            ++err_count;
            report.max_error_pct = std::max(report.max_error_pct, e);
        }
        if (!rep.per_coordinate_error_pct.empty()) rep_avgs.push_back(rep.avg_error_pct);
        report.runtime.simulate_seconds += rep.timings.simulate_seconds;
        report.runtime.reconstruct_seconds += rep.timings.reconstruct_seconds;
        report.runtime.refine_seconds += rep.timings.refine_seconds;
    }
    report.success_rate = recovered / (static_cast<double>(scenario.db.n_values) *
                                       static_cast<double>(scenario.repetitions));
    report.avg_error_pct = err_count > 0 ? err_sum / static_cast<double>(err_count) : 0.0;
    report.ci90 = rep_avgs.size() >= 2 ? confidence_interval(rep_avgs, 0.90)
                                       : std::pair<double, double>{report.avg_error_pct,
                                                                   report.avg_error_pct};
    report.runtime.total_seconds = detail::seconds_since(t_total);
    return report;
}

} // namespace volrec
