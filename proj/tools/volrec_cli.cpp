// volrec: reconstruct a dense database column from noisy range-query volumes.
//
// Subcommands:
//   simulate     measure a database column through the simulated side channel
//   reconstruct  recover a column from an observations file
//   evaluate     score a recovered column against the true one
//   experiment   run a full scenario file and emit a report

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "volrec/json_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

volrec::Database load_database_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open database file: " + path);
    return volrec::database_from_csv(in);
}

volrec::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    volrec::json j;
    in >> j;
    return j;
}

volrec::QueryPattern parse_pattern(const std::string& name) {
    if (name == "uniform") return volrec::QueryPattern::Uniform;
    if (name == "adjacent-2x") return volrec::QueryPattern::Adjacent2x;
    if (name == "adjacent-and-skip-2x") return volrec::QueryPattern::AdjacentAndSkip2x;
    if (name == "close-volume-2x") return volrec::QueryPattern::CloseVolume2x;
    throw std::runtime_error("unknown query pattern: " + name);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"database reconstruction from noisy range-query volumes"};
    app.require_subcommand(1);

    // --- simulate ---
    auto* simulate = app.add_subcommand("simulate", "collect noisy volume observations");
    std::string sim_db_path, sim_out = "observations.json", sim_pattern = "uniform";
    std::string sim_raw_path;
    std::int64_t sim_traces = 10000;
    std::uint64_t sim_seed = 0;
    int sim_threads = 0;
    volrec::TraceNoiseModel sim_noise;
    volrec::PeakParams sim_peaks;
    bool sim_zero_noise = false;
    simulate->add_option("--db", sim_db_path, "database CSV (value,count)");
    simulate->add_option("--raw", sim_raw_path, "raw single-column CSV of record values");
    simulate->add_option("--out", sim_out, "observations JSON output path");
    simulate->add_option("--traces", sim_traces, "number of traces to gather")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim_seed, "root seed")->required();
    simulate->add_option("--pattern", sim_pattern,
                         "query pattern: uniform|adjacent-2x|adjacent-and-skip-2x|close-volume-2x");
    simulate->add_option("--fn-prob", sim_noise.fn_prob, "per-line false-negative probability");
    simulate->add_option("--fp-rate", sim_noise.fp_rate, "spurious hits per 1000 slots");
    simulate->add_option("--hit-period", sim_noise.hit_period_slots, "slots between true hits");
    simulate->add_option("--fp-proximity", sim_noise.fp_proximity_slots,
                         "speculative-hit proximity threshold in slots");
    simulate->add_option("--interrupt-prob", sim_noise.interrupt_prob, "interrupt probability");
    simulate->add_option("--trigger-loss", sim_noise.trigger_loss_hits,
                         "leading hits lost before the tracer latches");
    simulate->add_option("--load-factor", sim_noise.load_factor, "extra-load multiplier (>= 1)");
    simulate->add_flag("--zero-noise", sim_zero_noise, "disable all noise sources");
    simulate->add_option("--peak-min-count", sim_peaks.min_count, "peak threshold");
    simulate->add_option("--peak-ratio", sim_peaks.neighborhood_width_ratio,
                         "peak neighborhood width ratio");
    simulate->add_option("--threads", sim_threads, "worker threads (0 = hardware)");

    // --- reconstruct ---
    auto* reconstruct = app.add_subcommand("reconstruct", "recover a column from observations");
    std::string rec_obs_path, rec_out = "recovered.csv", rec_log_path, rec_graph_path,
                rec_graph_json_path;
    int rec_n = 0;
    double rec_budget = 0.002;
    int rec_ell = 3;
    bool rec_cvp = false;
    std::vector<std::int64_t> rec_window_offsets;
    reconstruct->add_option("--obs", rec_obs_path, "observations JSON")->required();
    reconstruct->add_option("--n", rec_n, "range size N")->required()->check(CLI::PositiveNumber);
    reconstruct->add_option("--noise-budget", rec_budget, "relative noise budget");
    reconstruct->add_option("--ell", rec_ell, "clique-size slack");
    reconstruct
        ->add_option("--window-offsets", rec_window_offsets,
                     "fixed additive window: BELOW ABOVE (replaces the multiplicative rule)")
        ->expected(2);
    reconstruct->add_flag("--cvp", rec_cvp, "apply the error-reduction step");
    reconstruct->add_option("--out", rec_out, "recovered database CSV path");
    reconstruct->add_option("--log", rec_log_path, "merge run log path (JSON lines)");
    reconstruct->add_option("--dump-graph", rec_graph_path, "write adjacency-list text dump");
    reconstruct->add_option("--dump-graph-json", rec_graph_json_path, "write adjacency JSON dump");

    // --- evaluate ---
    auto* evaluate = app.add_subcommand("evaluate", "score a recovered column against the truth");
    std::string eval_recovered, eval_truth, eval_out, eval_format = "json";
    evaluate->add_option("--recovered", eval_recovered, "recovered CSV")->required();
    evaluate->add_option("--truth", eval_truth, "true database CSV")->required();
    evaluate->add_option("--out", eval_out, "report output path (stdout if omitted)");
    evaluate->add_option("--format", eval_format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));

    // --- experiment ---
    auto* experiment = app.add_subcommand("experiment", "run a scenario file");
    std::string exp_scenario, exp_out = "report", exp_format = "json";
    std::uint64_t exp_seed = 0;
    int exp_threads = 0;
    experiment->add_option("--scenario", exp_scenario, "scenario JSON")->required();
    experiment->add_option("--seed", exp_seed, "root seed")->required();
    experiment->add_option("--out", exp_out, "output prefix (<prefix>.json, <prefix>.csv)");
    experiment->add_option("--format", exp_format, "primary format echoed to stdout: json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    experiment->add_option("--threads", exp_threads, "parallel repetitions (0 = sequential)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (simulate->parsed()) {
            if (sim_db_path.empty() == sim_raw_path.empty())
                throw std::runtime_error("simulate: pass exactly one of --db or --raw");
            volrec::Database db = [&] {
                if (!sim_db_path.empty()) return load_database_csv(sim_db_path);
                std::ifstream in(sim_raw_path);
                if (!in) throw std::runtime_error("cannot open raw column file: " + sim_raw_path);
                return volrec::ingest_raw_column(in);
            }();
            if (sim_zero_noise) sim_noise = volrec::TraceNoiseModel::zero_noise();
            const volrec::QueryPattern pattern = parse_pattern(sim_pattern);
            const volrec::QueryDistribution qdist = volrec::make_query_distribution(
                pattern, db.value_range_size(),
                pattern == volrec::QueryPattern::CloseVolume2x ? &db : nullptr);
            const volrec::VolumeObservations obs = volrec::collect_observations(
                db, qdist, sim_traces, sim_noise, sim_peaks, sim_seed, sim_threads);
            volrec::atomic_write_file(sim_out, volrec::observations_to_json(obs).dump(2) + "\n");
            std::cout << "peaks: " << obs.peaks.size() << "\ntraces_used: " << obs.traces_used
                      << "\nwrote " << sim_out << '\n';
            return kExitOk;
        }

        if (reconstruct->parsed()) {
            volrec::VolumeObservations obs;
            try {
                obs = volrec::observations_from_json(load_json(rec_obs_path));
            } catch (const std::exception& e) {
                std::cerr << "error: malformed observations: " << e.what() << '\n';
                return kExitError;
            }
            if (obs.peaks.empty()) {
                std::cerr << "error: observations contain no peaks\n";
                return kExitError;
            }

            std::optional<volrec::WindowPolicy> window_override;
            if (!rec_window_offsets.empty())
                window_override =
                    volrec::WindowPolicy::additive(rec_window_offsets[0], rec_window_offsets[1]);

            if (!rec_graph_path.empty() || !rec_graph_json_path.empty()) {
                const volrec::VolumeGraph graph =
                    window_override
                        ? volrec::build_graph(obs.peaks, *window_override, rec_budget)
                        : volrec::build_graph(obs.peaks, rec_budget);
                if (!rec_graph_path.empty())
                    volrec::atomic_write_file(rec_graph_path, volrec::graph_to_text(graph));
                if (!rec_graph_json_path.empty()) {
                    volrec::json adjacency = volrec::json::object();
                    for (std::size_t i = 0; i < graph.size(); ++i) {
                        std::vector<volrec::Volume> neighbors;
                        for (std::size_t j = 0; j < graph.size(); ++j)
                            if (graph.has_edge(i, j)) neighbors.push_back(graph.nodes()[j]);
                        adjacency[std::to_string(graph.nodes()[i])] = neighbors;
                    }
                    volrec::atomic_write_file(rec_graph_json_path, adjacency.dump(2) + "\n");
                }
            }

            volrec::MatchExtendParams params;
            params.noise_budget = rec_budget;
            params.ell = rec_ell;
            params.window_override = window_override;
            const volrec::MatchExtendResult result =
                volrec::match_and_extend(obs.peaks, rec_n, params);

            std::vector<volrec::Volume> counts = result.counts;
            if (result.success && rec_cvp) {
                const volrec::RefinedSolution refined =
                    volrec::refine(volrec::Database{counts}, obs.peaks);
                counts = refined.x;
            }

            std::ostringstream csv;
            csv << "value,count\n";
            for (std::size_t i = 0; i < counts.size(); ++i)
                csv << (i + 1) << ',' << counts[i] << '\n';
            volrec::atomic_write_file(rec_out, csv.str());

            const std::string log_path =
                rec_log_path.empty() ? rec_out + ".runlog.jsonl" : rec_log_path;
            volrec::atomic_write_file(log_path, volrec::run_log_to_jsonl(result.log));

            std::cout << "recovered " << result.recovered << " of " << rec_n
                      << " coordinates; wrote " << rec_out << '\n';
            return result.success ? kExitOk : kExitPartial;
        }

        if (evaluate->parsed()) {
            const volrec::Database truth = load_database_csv(eval_truth);
            std::ifstream in(eval_recovered);
            if (!in) throw std::runtime_error("cannot open recovered file: " + eval_recovered);
            // A partial CSV is not a dense database; read counts directly.
            std::string line;
            if (!std::getline(in, line) || (line != "value,count" && line != "value,count\r"))
                throw std::runtime_error("recovered csv: expected header 'value,count'");
            std::vector<volrec::Volume> counts;
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                counts.push_back(std::stoll(line.substr(line.find(',') + 1)));
            }
            const volrec::Alignment alignment = volrec::align_for_scoring(counts, truth);
            const double success = static_cast<double>(counts.size()) /
                                   static_cast<double>(truth.value_range_size());
            std::string rendered;
            if (eval_format == "json") {
                volrec::json j{{"success_rate", success},
                               {"avg_error_pct", alignment.avg_error_pct},
                               {"max_error_pct", alignment.max_error_pct},
                               {"reversed", alignment.reversed},
                               {"offset", alignment.offset},
                               {"per_coordinate_error_pct", alignment.per_coordinate_error_pct}};
                rendered = j.dump(2) + "\n";
            } else {
                std::ostringstream csv;
                csv << "success_rate,avg_error_pct,max_error_pct,reversed,offset\n"
                    << success << ',' << alignment.avg_error_pct << ',' << alignment.max_error_pct
                    << ',' << (alignment.reversed ? 1 : 0) << ',' << alignment.offset << '\n';
                rendered = csv.str();
            }
            if (eval_out.empty()) {
                std::cout << rendered;
            } else {
                volrec::atomic_write_file(eval_out, rendered);
                std::cout << "wrote " << eval_out << '\n';
            }
            return kExitOk;
        }

        if (experiment->parsed()) {
            volrec::Scenario scenario;
            try {
                scenario = volrec::scenario_from_json(load_json(exp_scenario));
            } catch (const std::exception& e) {
                std::cerr << "error: invalid scenario: " << e.what() << '\n';
                return kExitError;
            }
            const volrec::EvaluationReport report =
                volrec::run_scenario(scenario, exp_seed, exp_threads);
            const std::string json_text = volrec::report_to_json(report).dump(2) + "\n";
            const std::string csv_text = volrec::report_to_csv(report);
            volrec::atomic_write_file(exp_out + ".json", json_text);
            volrec::atomic_write_file(exp_out + ".csv", csv_text);
            std::cout << (exp_format == "json" ? json_text : csv_text);
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
