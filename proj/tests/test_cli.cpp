#include "doctest.h"

#include "spikelds/csvio.hpp"
#include "spikelds/kalman.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(SPIKELDS_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& leaf)
{
    const fs::path p = fs::temp_directory_path() / "spikelds_cli_tests" / leaf;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

nlohmann::json parse_file(const fs::path& p)
{
    return nlohmann::json::parse(slurp(p));
}

} // namespace

TEST_CASE("help and argument errors")
{
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("validate-cov --help") == 0);
    CHECK(run_cli("") != 0);               // a subcommand is required
    CHECK(run_cli("frobnicate") != 0);
    CHECK(run_cli("sweep --axis sideways") != 0);
    CHECK(run_cli("validate-cov --p 99") != 0);
}

TEST_CASE("covariance validation writes a complete, reproducible artifact set")
{
    const fs::path d1 = fresh_dir("vc1");
    const fs::path d2 = fresh_dir("vc2");
    const std::string base =
        "validate-cov --m 2 --n 2 --frames 120 --p 5 --ell 15 --seed 3 --out ";
    REQUIRE(run_cli(base + d1.string()) == 0);
    REQUIRE(run_cli(base + d2.string()) == 0);

    for (const char* f :
         {"inputs.csv", "states.csv", "cov_sample.csv", "cov_theory.csv", "cov_compare.csv",
          "summary.json"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(d1 / f));
        CHECK(slurp(d1 / f) == slurp(d2 / f)); // byte-identical reruns
    }

    const auto j = parse_file(d1 / "summary.json");
    CHECK(j["command"] == "validate-cov");
    CHECK(j["config"]["m"] == 2);
    CHECK(j["config"]["seed"] == 3);
    CHECK(j["config"]["cancellation"] == true);
    CHECK(j["results"]["mse_theory"].get<double>() > 0.0);
    CHECK(j["results"]["rho"].get<double>() < 1.0);

    std::ifstream is(d1 / "inputs.csv");
    const auto rows = spikelds::csv::read(is);
    REQUIRE(rows.size() == 121u);
    CHECK(rows[0] == std::vector<std::string>{"frame", "u0", "u1"});

    std::ifstream ss(d1 / "states.csv");
    const auto srows = spikelds::csv::read(ss);
    REQUIRE(srows.size() == 121u);
    CHECK(srows[0][1] == "x0_spiking");
    CHECK(srows[0][3] == "x0_reference");

    // a different seed must change the data
    const fs::path d3 = fresh_dir("vc3");
    REQUIRE(run_cli("validate-cov --m 2 --n 2 --frames 120 --p 5 --ell 15 --seed 4 --out " +
                    d3.string()) == 0);
    CHECK(slurp(d1 / "states.csv") != slurp(d3 / "states.csv"));
}

TEST_CASE("thread cap does not change results")
{
    const fs::path d1 = fresh_dir("thr1");
    const fs::path d4 = fresh_dir("thr4");
    const std::string base =
        " validate-cov --m 2 --n 2 --frames 100 --p 5 --ell 15 --seed 8 --out ";
    const std::string bin(SPIKELDS_CLI);
    REQUIRE(WEXITSTATUS(std::system(
                ("SPIKELDS_THREADS=1 " + bin + base + d1.string() + " >/dev/null").c_str())) ==
            0);
    REQUIRE(WEXITSTATUS(std::system(
                ("SPIKELDS_THREADS=4 " + bin + base + d4.string() + " >/dev/null").c_str())) ==
            0);
    CHECK(slurp(d1 / "states.csv") == slurp(d4 / "states.csv"));
    CHECK(slurp(d1 / "summary.json") == slurp(d4 / "summary.json"));
}

TEST_CASE("sweep emits one row per grid point")
{
    const fs::path d = fresh_dir("sweep");
    REQUIRE(run_cli("sweep --m 2 --n 2 --frames 80 --p 5 --ell 15 --seed 21 "
                    "--axis input-dim --grid 2,3 --out " +
                    d.string()) == 0);

    std::ifstream is(d / "sweep.csv");
    const auto rows = spikelds::csv::read(is);
    REQUIRE(rows.size() == 3u);
    CHECK(rows[0][0] == "axis");
    CHECK(rows[1][0] == "input-dim");
    CHECK(rows[1][1] == "2");
    CHECK(rows[2][1] == "3");

    const auto j = parse_file(d / "summary.json");
    CHECK(j["command"] == "sweep");
    CHECK(j["config"]["axis"] == "input-dim");
    CHECK(j["points"].size() == 2u);
    CHECK(j["worst_mse_rel"].get<double>() >= 0.0);
}

TEST_CASE("kalman demo writes correlations and a reconstruction")
{
    const fs::path d = fresh_dir("kalman");
    REQUIRE(run_cli("kalman --p 5 --ell 15 --trials 2 --trial-frames 60 --seed 6 --out " +
                    d.string()) == 0);

    std::ifstream is(d / "correlations.csv");
    const auto rows = spikelds::csv::read(is);
    REQUIRE(rows.size() == 5u); // header + 2 trials x 2 dims
    CHECK(rows[0] == std::vector<std::string>{"trial", "dim", "kf", "sskf", "spiking"});

    std::ifstream rs(d / "recon.csv");
    const auto rrows = spikelds::csv::read(rs);
    REQUIRE(rrows.size() == 61u);
    CHECK(rrows[0][0] == "frame");

    const auto j = parse_file(d / "summary.json");
    CHECK(j["results"]["mean_spiking_corr"].get<double>() > 0.5);
    CHECK(j["config"]["trials"] == 2);
}

TEST_CASE("kalman ingests trajectory CSV datasets")
{
    using namespace spikelds;
    const fs::path d = fresh_dir("kalman_data");
    const fs::path csv_path = d / "trial.csv";

    const KfModel truth = make_kinematic_model({}, 44);
    const TrialSet set = simulate_trials(truth, 1, 120, 9);
    {
        std::ofstream os(csv_path, std::ios::binary);
        std::vector<std::string> header = {"time"};
        for (int i = 0; i < 3; ++i)
            header.push_back("s" + std::to_string(i));
        for (int i = 0; i < 6; ++i)
            header.push_back("y" + std::to_string(i));
        csv::write_row(os, header);
        for (Eigen::Index t = 0; t < 120; ++t) {
            std::vector<std::string> row = {std::to_string(t)};
            for (Eigen::Index i = 0; i < 3; ++i)
                row.push_back(csv::format_double(set.states[0](i, t)));
            for (Eigen::Index i = 0; i < 6; ++i)
                row.push_back(csv::format_double(set.meas[0](i, t)));
            csv::write_row(os, row);
        }
    }

    REQUIRE(run_cli("kalman --p 5 --ell 15 --data " + csv_path.string() + " --out " +
                    d.string()) == 0);
    std::ifstream is(d / "correlations.csv");
    const auto rows = spikelds::csv::read(is);
    REQUIRE(rows.size() == 3u); // one trial, two dims

    // schema violations are rejected
    const fs::path bad = d / "bad.csv";
    {
        std::ofstream os(bad, std::ios::binary);
        csv::write_row(os, {"time", "wat"});
        csv::write_row(os, {"0", "1"});
    }
    CHECK(run_cli("kalman --data " + bad.string() + " --out " + d.string()) == 1);
    CHECK(run_cli("kalman --data /nonexistent.csv --out " + d.string()) == 1);
}

TEST_CASE("compile emits parseable hardware artifacts")
{
    const fs::path d = fresh_dir("compile_relay");
    REQUIRE(run_cli("compile --system relay --out " + d.string()) == 0);
    const auto cores = parse_file(d / "cores.json");
    CHECK(cores["format"] == "tn-core-config/1");
    CHECK(cores["n_cores"] == 1);
    const auto placement = parse_file(d / "placement.json");
    CHECK(placement["cores_used"] == 1);
    const auto summary = parse_file(d / "summary.json");
    CHECK(summary["results"]["fragments"] == 1);
}

TEST_CASE("config files merge with explicit flags taking precedence")
{
    const fs::path d = fresh_dir("config");
    const fs::path cfg = d / "cfg.json";
    {
        std::ofstream os(cfg);
        os << R"({"system": "matvec", "w": [[0.5, 0.25], [0.0, 0.75]], "p": 4, "ell": 16})";
    }
    REQUIRE(run_cli("compile --config " + cfg.string() + " --out " + d.string()) == 0);
    const auto summary = parse_file(d / "summary.json");
    CHECK(summary["config"]["system"] == "matvec");
    CHECK(summary["config"]["p"] == 4);

    // flag on the command line overrides the file
    REQUIRE(run_cli("compile --config " + cfg.string() + " --p 6 --out " + d.string()) == 0);
    CHECK(parse_file(d / "summary.json")["config"]["p"] == 6);

    // unknown keys and malformed payloads are schema errors
    const fs::path bad1 = d / "bad1.json";
    {
        std::ofstream os(bad1);
        os << R"({"sistem": "relay"})";
    }
    CHECK(run_cli("compile --config " + bad1.string() + " --out " + d.string()) == 1);

    const fs::path bad2 = d / "bad2.json";
    {
        std::ofstream os(bad2);
        os << R"({"system": "matvec", "w": "not a matrix"})";
    }
    CHECK(run_cli("compile --config " + bad2.string() + " --out " + d.string()) == 1);

    const fs::path bad3 = d / "bad3.json";
    {
        std::ofstream os(bad3);
        os << "{ this is not json";
    }
    CHECK(run_cli("compile --config " + bad3.string() + " --out " + d.string()) == 1);
}
