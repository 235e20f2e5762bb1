#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "volrec/model.hpp"

#ifndef VOLREC_CLI_PATH
#error "VOLREC_CLI_PATH must point at the volrec binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kScratch = fs::path("cli_scratch");

struct CliResult {
    int exit_code = -1;
};

CliResult run_cli(const std::string& args) {
    const std::string command = std::string(VOLREC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    CliResult result;
    if (status >= 0) result.exit_code = WEXITSTATUS(status);
    return result;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out << content;
}

struct ScratchDir {
    ScratchDir() {
        fs::remove_all(kScratch);
        fs::create_directories(kScratch);
    }
};

std::string worked_example_db_csv() {
    return volrec::database_to_csv(volrec::Database({30, 100, 80, 30, 60}));
}

} // namespace

TEST_CASE("cli: simulate writes observations and is byte-deterministic") {
    ScratchDir scratch;
    const fs::path db_path = kScratch / "db.csv";
    write_file(db_path, worked_example_db_csv());

    const fs::path obs1 = kScratch / "obs1.json";
    const fs::path obs2 = kScratch / "obs2.json";
    const std::string base_args = "simulate --db " + db_path.string() +
                                  " --traces 1800 --seed 42 --zero-noise --peak-min-count 20";
    CHECK(run_cli(base_args + " --out " + obs1.string()).exit_code == 0);
    CHECK(run_cli(base_args + " --out " + obs2.string()).exit_code == 0);
    CHECK(slurp(obs1) == slurp(obs2));

    const json obs = json::parse(slurp(obs1));
    CHECK(obs.at("peaks").size() == 13);  // the 13 exact volumes
    CHECK(obs.at("traces_used").get<int>() == 1800);
}

TEST_CASE("cli: simulate on a single-value column yields a single peak") {
    ScratchDir scratch;
    const fs::path db_path = kScratch / "one.csv";
    write_file(db_path, "value,count\n1,500\n");
    const fs::path obs_path = kScratch / "one.json";
    CHECK(run_cli("simulate --db " + db_path.string() + " --traces 60 --seed 7 --zero-noise" +
                  " --peak-min-count 10 --out " + obs_path.string())
              .exit_code == 0);
    const json obs = json::parse(slurp(obs_path));
    CHECK(obs.at("peaks") == json::array({500}));
}

TEST_CASE("cli: reconstruct the worked example") {
    ScratchDir scratch;
    // Observations file with the noisy volume set; histogram counts are
    // arbitrary since reconstruction reads the peaks.
    json histogram = json::object();
    const std::vector<int> peaks = {29, 58, 79, 89, 98, 108, 128, 160, 178, 209, 239, 268, 299};
    for (int v : peaks) histogram[std::to_string(v)] = 120;
    const json obs = {{"histogram", histogram}, {"peaks", peaks}, {"traces_used", 1560}};
    const fs::path obs_path = kScratch / "noisy.json";
    write_file(obs_path, obs.dump());

    const fs::path out_path = kScratch / "recovered.csv";
    const CliResult result =
        run_cli("reconstruct --obs " + obs_path.string() + " --n 5 --noise-budget 0.05" +
                " --window-offsets 1 3 --out " + out_path.string());
    CHECK(result.exit_code == 0);

    std::ifstream in(out_path);
    const volrec::Database recovered = volrec::database_from_csv(in);
    CHECK(recovered.counts() == std::vector<volrec::Volume>{29, 99, 81, 30, 60});
    CHECK(fs::exists(out_path.string() + ".runlog.jsonl"));
}

TEST_CASE("cli: reconstruct exact volumes at zero budget") {
    ScratchDir scratch;
    const volrec::Database truth({12, 30, 7, 19});
    json histogram = json::object();
    json peaks = json::array();
    for (volrec::Volume v : volrec::exact_volumes(truth).distinct_volumes()) {
        histogram[std::to_string(v)] = 120;
        peaks.push_back(v);
    }
    const fs::path obs_path = kScratch / "exact.json";
    write_file(obs_path, json{{"histogram", histogram}, {"peaks", peaks}, {"traces_used", 100}}.dump());

    const fs::path out_path = kScratch / "exact_rec.csv";
    CHECK(run_cli("reconstruct --obs " + obs_path.string() + " --n 4 --noise-budget 0 --out " +
                  out_path.string())
              .exit_code == 0);
    std::ifstream in(out_path);
    const volrec::Database recovered = volrec::database_from_csv(in);
    const bool forward = recovered.counts() == truth.counts();
    const bool mirrored = recovered.counts() == volrec::reverse(truth).counts();
    CHECK((forward || mirrored));
}

TEST_CASE("cli: insufficient volumes exit with the partial code") {
    ScratchDir scratch;
    const fs::path obs_path = kScratch / "thin.json";
    write_file(obs_path,
               json{{"histogram", {{"100", 50}}}, {"peaks", {100}}, {"traces_used", 50}}.dump());
    const fs::path out_path = kScratch / "thin.csv";
    const CliResult result = run_cli("reconstruct --obs " + obs_path.string() +
                                     " --n 4 --noise-budget 0 --out " + out_path.string());
    CHECK(result.exit_code == 2);
    CHECK(slurp(out_path) == "value,count\n1,100\n");  // partial column
}

TEST_CASE("cli: malformed observations exit with the error code") {
    ScratchDir scratch;
    const fs::path obs_path = kScratch / "broken.json";
    write_file(obs_path, "{\"peaks\": [1, 2]}");
    CHECK(run_cli("reconstruct --obs " + obs_path.string() + " --n 3 --out x.csv").exit_code == 1);
    write_file(obs_path, "not json at all");
    CHECK(run_cli("reconstruct --obs " + obs_path.string() + " --n 3 --out x.csv").exit_code == 1);
}

TEST_CASE("cli: evaluate scores reversals as exact") {
    ScratchDir scratch;
    const fs::path truth_path = kScratch / "truth.csv";
    const fs::path rec_path = kScratch / "rec.csv";
    write_file(truth_path, worked_example_db_csv());
    write_file(rec_path, volrec::database_to_csv(volrec::Database({60, 30, 80, 100, 30})));
    const fs::path report_path = kScratch / "eval.json";
    CHECK(run_cli("evaluate --recovered " + rec_path.string() + " --truth " + truth_path.string() +
                  " --out " + report_path.string())
              .exit_code == 0);
    const json report = json::parse(slurp(report_path));
    CHECK(report.at("success_rate").get<double>() == 1.0);
    CHECK(report.at("avg_error_pct").get<double>() == 0.0);
    CHECK(report.at("reversed").get<bool>());
}

TEST_CASE("cli: experiment runs a scenario file deterministically") {
    ScratchDir scratch;
    const json scenario = {
        {"id", "cli-smoke"},
        {"db", {{"kind", "uniform-like"}, {"n", 600}, {"N", 4}}},
        {"queries", {{"pattern", "uniform"}}},
        {"noise",
         {{"fn_prob", 0.0},
          {"fp_rate", 0.0},
          {"interrupt_prob", 0.0},
          {"trigger_loss_hits", 0},
          {"hit_period_slots", 10}}},
        {"traces", 1200},
        {"peaks", {{"min_count", 20}, {"neighborhood_width_ratio", 0.001}}},
        {"algorithm", {{"name", "match-extend"}, {"budget", 0.0}, {"ell", 3}}},
        {"repetitions", 2},
    };
    const fs::path scenario_path = kScratch / "scenario.json";
    write_file(scenario_path, scenario.dump(2));

    const std::string out_prefix = (kScratch / "report").string();
    CHECK(run_cli("experiment --scenario " + scenario_path.string() + " --seed 9 --out " +
                  out_prefix)
              .exit_code == 0);
    const json report = json::parse(slurp(out_prefix + ".json"));
    CHECK(report.at("success_rate").get<double>() == 1.0);
    CHECK(report.at("avg_error_pct").get<double>() == 0.0);
    CHECK(report.at("repetitions").size() == 2);
    CHECK(fs::exists(out_prefix + ".csv"));

    // Same scenario and seed: identical results (wall-clock timings aside).
    auto strip_timings = [](json j) {
        j.erase("runtime_seconds");
        for (json& rep : j.at("repetitions")) rep.erase("runtime_seconds");
        return j;
    };
    const json first = strip_timings(json::parse(slurp(out_prefix + ".json")));
    CHECK(run_cli("experiment --scenario " + scenario_path.string() + " --seed 9 --out " +
                  out_prefix)
              .exit_code == 0);
    CHECK(strip_timings(json::parse(slurp(out_prefix + ".json"))) == first);

    // Invalid scenario files are a usage error.
    write_file(scenario_path, "{\"id\": \"broken\"}");
    CHECK(run_cli("experiment --scenario " + scenario_path.string() + " --seed 9 --out " +
                  out_prefix)
              .exit_code == 1);
}
