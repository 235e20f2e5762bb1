#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "volrec/cvp.hpp"
#include "volrec/experiments.hpp"
#include "volrec/match_extend.hpp"
#include "volrec/trace.hpp"

namespace volrec {

using nlohmann::json;

// --- observations: {histogram, peaks, traces_used}; histogram keys are
// decimal-string volumes ---

inline json observations_to_json(const VolumeObservations& obs) {
    json histogram = json::object();
    for (const auto& [volume, count] : obs.histogram)
        histogram[std::to_string(volume)] = count;
    return json{{"histogram", std::move(histogram)},
                {"peaks", obs.peaks},
                {"traces_used", obs.traces_used}};
}

inline VolumeObservations observations_from_json(const json& j) {
    VolumeObservations obs;
    if (!j.contains("histogram") || !j.contains("peaks") || !j.contains("traces_used"))
        throw std::runtime_error("observations: missing histogram/peaks/traces_used");
    for (const auto& [key, value] : j.at("histogram").items())
        obs.histogram[std::stoll(key)] = value.get<std::int64_t>();
    obs.peaks = j.at("peaks").get<std::vector<Volume>>();
    obs.traces_used = j.at("traces_used").get<std::int64_t>();
    for (std::size_t i = 0; i < obs.peaks.size(); ++i) {
        if (obs.histogram.find(obs.peaks[i]) == obs.histogram.end())
            throw std::runtime_error("observations: peak not present in histogram");
        if (i > 0 && obs.peaks[i] <= obs.peaks[i - 1])
            throw std::runtime_error("observations: peaks must be sorted and distinct");
    }
    return obs;
}

// --- cvp instance: {N, target, T} (A is canonical from N) ---

inline json cvp_instance_to_json(const CvpInstance& inst) {
    return json{{"N", inst.n_values}, {"target", inst.target}, {"T", inst.t_constant}};
}

inline CvpInstance cvp_instance_from_json(const json& j) {
    return build_cvp_instance(j.at("N").get<int>(), j.at("target").get<std::vector<Volume>>(),
                              j.at("T").get<Volume>());
}

// --- merge run log: one JSON object per line ---

inline std::string run_log_to_jsonl(const std::vector<MergeLogEntry>& log) {
    std::ostringstream out;
    for (const MergeLogEntry& entry : log) {
        out << json{{"candidate", entry.candidate},
                    {"outcome", entry.outcome},
                    {"missing_volumes", entry.missing_volumes},
                    {"merged_length", entry.merged_length}}
                   .dump()
            << '\n';
    }
    return out.str();
}

// --- scenario ---

inline TraceNoiseModel noise_model_from_json(const json& j) {
    TraceNoiseModel m;
    if (j.contains("fn_prob")) m.fn_prob = j.at("fn_prob").get<double>();
    if (j.contains("fp_rate")) m.fp_rate = j.at("fp_rate").get<double>();
    if (j.contains("hit_period_slots")) m.hit_period_slots = j.at("hit_period_slots").get<int>();
    if (j.contains("fp_proximity_slots"))
        m.fp_proximity_slots = j.at("fp_proximity_slots").get<int>();
    else if (j.contains("hit_period_slots"))
        m.fp_proximity_slots = std::max(1, m.hit_period_slots / 2);
    if (j.contains("interrupt_prob")) m.interrupt_prob = j.at("interrupt_prob").get<double>();
    if (j.contains("trigger_loss_hits")) m.trigger_loss_hits = j.at("trigger_loss_hits").get<int>();
    if (j.contains("load_factor")) m.load_factor = j.at("load_factor").get<double>();
    m.validate();
    return m;
}

inline json noise_model_to_json(const TraceNoiseModel& m) {
    return json{{"fn_prob", m.fn_prob},
                {"fp_rate", m.fp_rate},
                {"hit_period_slots", m.hit_period_slots},
                {"fp_proximity_slots", m.fp_proximity_slots},
                {"interrupt_prob", m.interrupt_prob},
                {"trigger_loss_hits", m.trigger_loss_hits},
                {"load_factor", m.load_factor}};
}

inline Scenario scenario_from_json(const json& j) {
    Scenario s;
    s.id = j.at("id").get<std::string>();

    const json& db = j.at("db");
    const std::string kind = db.at("kind").get<std::string>();
    if (kind == "uniform-like") {
        s.db.kind = DbKind::UniformLike;
    } else if (kind == "gaussian") {
        s.db.kind = DbKind::Gaussian;
        s.db.mean = db.at("mean").get<double>();
        s.db.stddev = db.at("stddev").get<double>();
    } else {
        throw std::runtime_error("scenario: unknown db kind '" + kind + "'");
    }
    s.db.records = db.at("n").get<Volume>();
    s.db.n_values = db.at("N").get<int>();

    if (j.contains("queries")) {
        const json& q = j.at("queries");
        const std::string pattern = q.at("pattern").get<std::string>();
        if (pattern == "uniform") s.query_pattern = QueryPattern::Uniform;
        else if (pattern == "adjacent-2x") s.query_pattern = QueryPattern::Adjacent2x;
        else if (pattern == "adjacent-and-skip-2x") s.query_pattern = QueryPattern::AdjacentAndSkip2x;
        else if (pattern == "close-volume-2x") s.query_pattern = QueryPattern::CloseVolume2x;
        else throw std::runtime_error("scenario: unknown query pattern '" + pattern + "'");
        if (q.contains("budget")) s.close_volume_pairing_budget = q.at("budget").get<double>();
    }

    if (j.contains("noise")) s.noise = noise_model_from_json(j.at("noise"));
    if (j.contains("traces")) s.traces = j.at("traces").get<std::int64_t>();
    if (j.contains("peaks")) {
        const json& p = j.at("peaks");
        if (p.contains("min_count")) s.peaks.min_count = p.at("min_count").get<int>();
        if (p.contains("neighborhood_width_ratio"))
            s.peaks.neighborhood_width_ratio = p.at("neighborhood_width_ratio").get<double>();
    }

    if (j.contains("dropped_ranges")) {
        const json& d = j.at("dropped_ranges");
        const std::string mode = d.at("mode").get<std::string>();
        if (mode == "none") s.dropped.mode = DroppedRanges::Mode::None;
        else if (mode == "random") {
            s.dropped.mode = DroppedRanges::Mode::Random;
            s.dropped.count = d.at("k").get<int>();
        } else if (mode == "block_above_fraction") {
            s.dropped.mode = DroppedRanges::Mode::BlockAboveFraction;
            s.dropped.fraction = d.at("fraction").get<double>();
        } else if (mode == "block_full_range") {
            s.dropped.mode = DroppedRanges::Mode::BlockFullRange;
        } else {
            throw std::runtime_error("scenario: unknown dropped_ranges mode '" + mode + "'");
        }
    }
    if (j.contains("drop_peaks")) s.drop_peaks = j.at("drop_peaks").get<int>();

    if (j.contains("algorithm")) {
        const json& a = j.at("algorithm");
        const std::string name = a.at("name").get<std::string>();
        if (name == "match-extend") s.algorithm.name = AlgorithmSpec::Name::MatchExtend;
        else if (name == "noisy-clique") s.algorithm.name = AlgorithmSpec::Name::NoisyClique;
        else throw std::runtime_error("scenario: unknown algorithm '" + name + "'");
        if (a.contains("budget")) s.algorithm.noise_budget = a.at("budget").get<double>();
        if (a.contains("ell")) s.algorithm.ell = a.at("ell").get<int>();
    }

    if (j.contains("use_cvp")) s.use_cvp = j.at("use_cvp").get<bool>();
    if (j.contains("repetitions")) s.repetitions = j.at("repetitions").get<int>();
    s.validate();
    return s;
}

// --- evaluation report ---

inline json timings_to_json(const StageTimings& t) {
    return json{{"simulate", t.simulate_seconds},
                {"reconstruct", t.reconstruct_seconds},
                {"refine", t.refine_seconds},
                {"total", t.total_seconds}};
}

inline json report_to_json(const EvaluationReport& report) {
    json reps = json::array();
    for (const RepetitionResult& rep : report.repetitions) {
        json r{{"index", rep.index},
               {"seed", rep.seed},
               {"recovered", rep.recovered},
               {"full_length", rep.full_length},
               {"success_rate", rep.success_rate},
               {"avg_error_pct", rep.avg_error_pct},
               {"max_error_pct", rep.max_error_pct},
               {"peak_count", rep.peak_count},
               {"runtime_seconds", timings_to_json(rep.timings)}};
        if (rep.avg_error_pct_raw) r["avg_error_pct_raw"] = *rep.avg_error_pct_raw;
        if (rep.max_error_pct_raw) r["max_error_pct_raw"] = *rep.max_error_pct_raw;
        if (rep.residual_before) r["residual_before"] = *rep.residual_before;
        if (rep.residual_after) r["residual_after"] = *rep.residual_after;
        reps.push_back(std::move(r));
    }
    return json{{"scenario", report.scenario_id},
                {"seed", report.seed},
                {"success_rate", report.success_rate},
                {"avg_error_pct", report.avg_error_pct},
                {"max_error_pct", report.max_error_pct},
                {"ci90", {report.ci90.first, report.ci90.second}},
                {"runtime_seconds", timings_to_json(report.runtime)},
                {"repetitions", std::move(reps)}};
}

// One row per repetition plus a summary row.
inline std::string report_to_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "row,index,seed,recovered,success_rate,avg_error_pct,max_error_pct,"
           "residual_before,residual_after,simulate_s,reconstruct_s,refine_s,total_s\n";
    auto opt = [](const std::optional<double>& v) {
        return v ? std::to_string(*v) : std::string();
    };
    for (const RepetitionResult& rep : report.repetitions) {
        out << "repetition," << rep.index << ',' << rep.seed << ',' << rep.recovered << ','
            << rep.success_rate << ',' << rep.avg_error_pct << ',' << rep.max_error_pct << ','
            << opt(rep.residual_before) << ',' << opt(rep.residual_after) << ','
            << rep.timings.simulate_seconds << ',' << rep.timings.reconstruct_seconds << ','
            << rep.timings.refine_seconds << ',' << rep.timings.total_seconds << '\n';
    }
    out << "summary,,," << "" << ',' << report.success_rate << ',' << report.avg_error_pct << ','
        << report.max_error_pct << ",,," << report.runtime.simulate_seconds << ','
        << report.runtime.reconstruct_seconds << ',' << report.runtime.refine_seconds << ','
        << report.runtime.total_seconds << '\n';
    return out.str();
}

// --- atomic file write (temp + rename) ---

inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace volrec
