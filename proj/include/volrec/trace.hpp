#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

#include "volrec/model.hpp"
#include "volrec/rng.hpp"

namespace volrec {

// Measurement noise knobs. Two code lines are monitored per query; a hit is
// lost for good only when both lines drop it (probability fn_prob^2 per hit)
// or when it falls before the measurement latches: the tracer starts on the
// first detected activity, so the leading trigger_loss_hits row events are
// captured by neither line. The trigger loss makes measured volumes sit a
// fixed few counts below the truth, which is what the asymmetric acceptance
// window downstream expects.
struct TraceNoiseModel {
    double fn_prob = 0.02;         // per-line, per-hit miss probability
    double fp_rate = 1.0;          // expected spurious speculative hits per 1000 slots
    int hit_period_slots = 10;     // nominal slots between true hits
    int fp_proximity_slots = 5;    // hits closer than this are one activity
    double interrupt_prob = 0.01;  // probability a trace contains an interrupt gap
    int trigger_loss_hits = 4;     // leading hits lost before the tracer latches
    double load_factor = 1.0;      // scales fn_prob and fp_rate

    void validate() const {
        if (fn_prob < 0.0 || fn_prob > 1.0 || interrupt_prob < 0.0 || interrupt_prob > 1.0)
            throw std::invalid_argument("TraceNoiseModel: probabilities must be in [0,1]");
        if (fp_rate < 0.0) throw std::invalid_argument("TraceNoiseModel: fp_rate must be >= 0");
        if (hit_period_slots < 2)
            throw std::invalid_argument("TraceNoiseModel: hit_period_slots must be >= 2");
        if (fp_proximity_slots < 1 || fp_proximity_slots > hit_period_slots)
            throw std::invalid_argument("TraceNoiseModel: fp_proximity_slots out of range");
        if (trigger_loss_hits < 0)
            throw std::invalid_argument("TraceNoiseModel: trigger_loss_hits must be >= 0");
        if (load_factor < 1.0) throw std::invalid_argument("TraceNoiseModel: load_factor must be >= 1");
    }

    static TraceNoiseModel zero_noise() {
        TraceNoiseModel m;
        m.fn_prob = 0.0;
        m.fp_rate = 0.0;
        m.interrupt_prob = 0.0;
        m.trigger_loss_hits = 0;
        return m;
    }

    double effective_fn() const { return std::min(1.0, fn_prob * load_factor); }
    double effective_fp_rate() const { return fp_rate * load_factor; }
};

// One measurement: reload-hit slot indices for the two monitored lines.
// true_volume is kept for oracle tests only; reconstruction never reads it.
struct Trace {
    RangeId query;
    Volume true_volume = 0;
    std::vector<std::int64_t> line_a;
    std::vector<std::int64_t> line_b;
};

namespace detail {

inline void sort_dedupe(std::vector<std::int64_t>& slots) {
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
}

// One pass over the merged timeline: accepted-hit count under the proximity
// filter plus the largest raw gap (for interrupt detection).
struct ProcessedTrace {
    std::int64_t accepted = 0;
    std::int64_t max_gap = 0;
};

inline ProcessedTrace walk_trace(const std::vector<std::int64_t>& line_a,
                                 const std::vector<std::int64_t>& line_b,
                                 std::int64_t proximity) {
    ProcessedTrace out;
    std::size_t ia = 0, ib = 0;
    std::int64_t last_accepted = -proximity - 1;
    std::int64_t prev = -1;
    while (ia < line_a.size() || ib < line_b.size()) {
        std::int64_t slot;
        if (ib >= line_b.size() || (ia < line_a.size() && line_a[ia] <= line_b[ib])) {
            slot = line_a[ia++];
        } else {
            slot = line_b[ib++];
        }
        if (prev >= 0) out.max_gap = std::max(out.max_gap, slot - prev);
        prev = slot;
        if (slot - last_accepted >= proximity) {
            ++out.accepted;
            last_accepted = slot;
        }
    }
    return out;
}

} // namespace detail

inline Trace simulate_trace(const Database& db, RangeId query, const TraceNoiseModel& model,
                            std::uint64_t seed) {
    model.validate();
    const Volume volume = ExactVolumeTable(db).volume(query);
    Rng rng(seed);

    Trace trace;
    trace.query = query;
    trace.true_volume = volume;

    const std::int64_t period = model.hit_period_slots;
    const double fn = model.effective_fn();

    // The tracer latches on the first detected activity; everything earlier
    // is invisible to both lines.
    const Volume first_captured =
        std::min<Volume>(model.trigger_loss_hits, volume > 0 ? volume - 1 : 0);

    // True hits; line B is probed one slot after line A in the same pass.
    trace.line_a.reserve(static_cast<std::size_t>(volume));
    trace.line_b.reserve(static_cast<std::size_t>(volume));
    for (Volume k = first_captured; k < volume; ++k) {
        const std::int64_t slot = k * period;
        if (!rng.bernoulli(fn)) trace.line_a.push_back(slot);
        if (!rng.bernoulli(fn)) trace.line_b.push_back(slot + 1);
    }

    // Interrupt: one long gap, detectable (and dropped) during aggregation.
    if (rng.bernoulli(model.interrupt_prob) && volume > 1) {
        const std::int64_t cut = rng.uniform_int(1, volume - 1) * period;
        const std::int64_t gap = 20 * period;
        for (auto* line : {&trace.line_a, &trace.line_b})
            for (std::int64_t& slot : *line)
                if (slot >= cut) slot += gap;
    }

    // Speculative false positives: spurious hits placed within
    // fp_proximity_slots of a true hit position. The true hits are already
    // sorted; only the few spurious slots need sorting before the merge.
    const double expected_fp =
        model.effective_fp_rate() * static_cast<double>(volume) * static_cast<double>(period) / 1000.0;
    std::int64_t fp_count = static_cast<std::int64_t>(expected_fp);
    if (rng.bernoulli(expected_fp - static_cast<double>(fp_count))) ++fp_count;
    if (fp_count > 0 && model.fp_proximity_slots >= 2) {
        std::vector<std::int64_t> extra_a, extra_b;
        extra_a.reserve(static_cast<std::size_t>(fp_count));
        extra_b.reserve(static_cast<std::size_t>(fp_count));
        for (std::int64_t i = 0; i < fp_count; ++i) {
            const bool on_a = rng.bernoulli(0.5);
            const auto& line = on_a ? trace.line_a : trace.line_b;
            if (line.empty()) continue;
            const std::int64_t anchor =
                line[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(line.size()) - 1))];
            const std::int64_t offset = rng.uniform_int(1, model.fp_proximity_slots - 1);
            const std::int64_t slot = rng.bernoulli(0.5) ? anchor + offset
                                                         : std::max<std::int64_t>(0, anchor - offset);
            (on_a ? extra_a : extra_b).push_back(slot);
        }
        const auto merge_in = [](std::vector<std::int64_t>& line, std::vector<std::int64_t>& extra) {
            if (extra.empty()) return;
            std::sort(extra.begin(), extra.end());
            std::vector<std::int64_t> merged;
            merged.reserve(line.size() + extra.size());
            std::merge(line.begin(), line.end(), extra.begin(), extra.end(),
                       std::back_inserter(merged));
            merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
            line = std::move(merged);
        };
        merge_in(trace.line_a, extra_a);
        merge_in(trace.line_b, extra_b);
    }
    return trace;
}

// Merge the two lines and count distinct activities: hits within
// fp_proximity_slots of the previously accepted hit are treated as the same
// activity (or as speculative) and skipped.
inline Volume process_trace(const Trace& trace, const TraceNoiseModel& model) {
    return detail::walk_trace(trace.line_a, trace.line_b, model.fp_proximity_slots).accepted;
}

// Interrupt detection: any silence longer than 10 periods on the merged
// timeline marks the trace for dropping.
inline bool has_interrupt_gap(const Trace& trace, const TraceNoiseModel& model) {
    return detail::walk_trace(trace.line_a, trace.line_b, model.fp_proximity_slots).max_gap >
           10 * static_cast<std::int64_t>(model.hit_period_slots);
}

struct PeakParams {
    int min_count = 30;
    double neighborhood_width_ratio = 0.001;
};

struct VolumeObservations {
    std::map<Volume, std::int64_t> histogram;
    std::vector<Volume> peaks;  // sorted ascending, distinct
    std::int64_t traces_used = 0;
};

// A volume is a peak when its count reaches min_count and no volume in the
// multiplicative neighborhood [v(1-r), v(1+r)] beats it.
inline std::vector<Volume> detect_peaks(const std::map<Volume, std::int64_t>& histogram,
                                        const PeakParams& params) {
    const std::int64_t ratio_scaled =
        static_cast<std::int64_t>(std::llround(params.neighborhood_width_ratio * 1e6));
    std::vector<Volume> peaks;
    for (auto it = histogram.begin(); it != histogram.end(); ++it) {
        const Volume v = it->first;
        const std::int64_t count = it->second;
        if (count < params.min_count) continue;
        // Neighborhood bounds in exact integer arithmetic.
        const Volume lo = (v * (1000000 - ratio_scaled) + 999999) / 1000000;
        const Volume hi = (v * (1000000 + ratio_scaled)) / 1000000;
        bool is_max = true;
        for (auto jt = histogram.lower_bound(lo); jt != histogram.end() && jt->first <= hi; ++jt) {
            if (jt->second > count) {
                is_max = false;
                break;
            }
        }
        if (is_max) peaks.push_back(v);
    }
    return peaks;
}

// Sample num_traces queries i.i.d. from qdist, simulate and process each
// trace, aggregate estimates into a histogram, then detect peaks. Trace i
// uses derive_seed(seed, i), so chunked parallel production merges into the
// same result as a sequential run.
inline VolumeObservations collect_observations(const Database& db, const QueryDistribution& qdist,
                                               std::int64_t num_traces, const TraceNoiseModel& model,
                                               const PeakParams& peak_params, std::uint64_t seed,
                                               int threads = 0) {
    if (num_traces < 1) throw std::invalid_argument("collect_observations: num_traces must be >= 1");
    model.validate();

    // Pre-draw the query sequence so worker chunks stay aligned. The query
    // stream lives in its own seed domain, away from the per-trace streams.
    std::vector<RangeId> queries;
    queries.reserve(static_cast<std::size_t>(num_traces));
    {
        Rng rng(derive_seed(derive_seed(seed, 0xFFFFFFFFULL), 1));
        for (std::int64_t i = 0; i < num_traces; ++i) queries.push_back(qdist.sample(rng));
    }

    struct ChunkResult {
        std::map<Volume, std::int64_t> histogram;
        std::int64_t used = 0;
    };
    const std::int64_t gap_threshold = 10 * static_cast<std::int64_t>(model.hit_period_slots);
    auto run_chunk = [&](std::int64_t begin, std::int64_t end) {
        ChunkResult result;
        for (std::int64_t i = begin; i < end; ++i) {
            const Trace trace =
                simulate_trace(db, queries[static_cast<std::size_t>(i)], model, derive_seed(seed, static_cast<std::uint64_t>(i) + 1));
            const detail::ProcessedTrace processed =
                detail::walk_trace(trace.line_a, trace.line_b, model.fp_proximity_slots);
            if (processed.max_gap > gap_threshold) continue;
            ++result.histogram[processed.accepted];
            ++result.used;
        }
        return result;
    };

    int worker_count = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (worker_count < 1) worker_count = 1;
    worker_count = static_cast<int>(std::min<std::int64_t>(worker_count, num_traces));

    VolumeObservations obs;
    if (worker_count == 1) {
        ChunkResult r = run_chunk(0, num_traces);
        obs.histogram = std::move(r.histogram);
        obs.traces_used = r.used;
    } else {
        std::vector<std::future<ChunkResult>> futures;
        const std::int64_t chunk = (num_traces + worker_count - 1) / worker_count;
        for (int w = 0; w < worker_count; ++w) {
            const std::int64_t begin = w * chunk;
            const std::int64_t end = std::min<std::int64_t>(begin + chunk, num_traces);
            if (begin >= end) break;
            futures.push_back(std::async(std::launch::async, run_chunk, begin, end));
        }
        for (auto& f : futures) {
            ChunkResult r = f.get();
            for (const auto& [volume, count] : r.histogram) obs.histogram[volume] += count;
            obs.traces_used += r.used;
        }
    }
    obs.peaks = detect_peaks(obs.histogram, peak_params);
    return obs;
}

} // namespace volrec
