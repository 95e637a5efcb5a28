#include "debm/cli.hpp"
#include "debm/io.hpp"
#include "debm/parallel.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace debm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "debm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    set_num_threads(0);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("debm_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const char* small_config = R"({"n_biomarkers": 4, "n_subjects": 240, "sigma_xi": 0.5, "sigma_beta": 0.5, "seed": 5})";

} // namespace

TEST_CASE("simulate, fit, stage and evaluate end to end")
{
    TempDir d;
    spit(d / "sim.json", small_config);
    REQUIRE(cli({"simulate", "--config", d / "sim.json", "--out-data", d / "data.csv", "--out-truth", d / "truth.json"}).code == 0);
    CHECK(slurp(d / "data.csv").rfind("id,dx,b1,b2,b3,b4\n", 0) == 0);

    for (const std::string method : {"debm", "febm"}) {
        const Run f = cli({"fit", "--data", d / "data.csv", "--method", method, "--out", d / (method + ".json")});
        REQUIRE(f.code == 0);
        CHECK(f.out.find("fitted " + method + " model with 4 events") != std::string::npos);
        const json m = json::parse(slurp(d / (method + ".json")));
        CHECK(m["method"] == method);
        CHECK(m["format"] == "debm-model");

        REQUIRE(cli({"stage", "--model", d / (method + ".json"), "--data", d / "data.csv", "--out", d / "stages.csv"}).code == 0);
        std::istringstream st(slurp(d / "stages.csv"));
        std::string line;
        std::getline(st, line);
        CHECK(line == "id,dx,stage,k1,w1,k2,w2,k3,w3");
        int rows = 0;
        while (std::getline(st, line)) ++rows;
        CHECK(rows == 240);

        const Run e = cli({"evaluate", "--model", d / (method + ".json"), "--truth", d / "truth.json"});
        REQUIRE(e.code == 0);
        const json r = json::parse(e.out);
        CHECK(r["ordering_error"].get<double>() >= 0.0);
        CHECK(r["ordering_error"].get<double>() <= 1.0);
        CHECK(r.contains("event_center_error"));
        CHECK(r.contains("pearson"));
    }

    const Run bs = cli({"--seed", "2", "evaluate", "--data", d / "data.csv", "--resamples", "3", "--folds", "3", "--svg",
                        d / "pv.svg", "--out", d / "metrics.json"});
    REQUIRE(bs.code == 0);
    const json r = json::parse(slurp(d / "metrics.json"));
    CHECK(r["bootstrap"]["positional_variance"].size() == 4);
    CHECK(r["cv"]["auc"].get<double>() > 0.5);
    CHECK(slurp(d / "pv.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("outputs do not depend on the thread count")
{
    TempDir d;
    spit(d / "sim.json", small_config);
    REQUIRE(cli({"simulate", "--config", d / "sim.json", "--out-data", d / "data.csv"}).code == 0);
    for (const std::string method : {"debm", "febm"}) {
        REQUIRE(cli({"--threads", "1", "fit", "--data", d / "data.csv", "--method", method, "--out", d / "m1.json"}).code == 0);
        REQUIRE(cli({"--threads", "3", "fit", "--data", d / "data.csv", "--method", method, "--out", d / "m3.json"}).code == 0);
        CHECK(slurp(d / "m1.json") == slurp(d / "m3.json"));
        REQUIRE(cli({"--threads", "1", "stage", "--model", d / "m1.json", "--data", d / "data.csv", "--out", d / "s1.csv"}).code == 0);
        REQUIRE(cli({"--threads", "3", "stage", "--model", d / "m1.json", "--data", d / "data.csv", "--out", d / "s3.csv"}).code == 0);
        CHECK(slurp(d / "s1.csv") == slurp(d / "s3.csv"));
    }
    REQUIRE(cli({"--threads", "1", "evaluate", "--data", d / "data.csv", "--resamples", "4", "--folds", "3", "--out", d / "e1.json"}).code == 0);
    REQUIRE(cli({"--threads", "2", "evaluate", "--data", d / "data.csv", "--resamples", "4", "--folds", "3", "--out", d / "e2.json"}).code == 0);
    CHECK(slurp(d / "e1.json") == slurp(d / "e2.json"));
}

TEST_CASE("experiment grid with DEBM_CONFIG fallback and --reps override")
{
    TempDir d;
    spit(d / "grid.json", R"({"base": {"n_biomarkers": 3, "n_subjects": 150}, "sweep": {"parameter": "sigma_xi", "values": [0, 1]},
                             "repetitions": 5, "methods": ["debm"]})");
    ::setenv("DEBM_CONFIG", (d / "grid.json").c_str(), 1);
    const Run r = cli({"experiment", "--reps", "2", "--out", d / "grid.csv"});
    ::unsetenv("DEBM_CONFIG");
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(d / "grid.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 4);
    const json s = json::parse(slurp(d / "grid.csv.summary.json"));
    CHECK(s["summary"].size() == 2);
    CHECK(s["summary"][1]["label"] == "sigma_xi=1");
    CHECK(r.out.find("sigma_xi=0 debm: ordering error") != std::string::npos);

    CHECK(cli({"experiment", "--out", d / "x.csv"}).code == 2);
}

TEST_CASE("simulate honours DEBM_CONFIG and --seed")
{
    TempDir d;
    spit(d / "sim.json", small_config);
    ::setenv("DEBM_CONFIG", (d / "sim.json").c_str(), 1);
    REQUIRE(cli({"simulate", "--out-data", d / "a.csv"}).code == 0);
    REQUIRE(cli({"--seed", "5", "simulate", "--out-data", d / "b.csv"}).code == 0);
    REQUIRE(cli({"--seed", "6", "simulate", "--out-data", d / "c.csv"}).code == 0);
    ::unsetenv("DEBM_CONFIG");
    CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
    CHECK(slurp(d / "a.csv") != slurp(d / "c.csv"));
    CHECK(slurp(d / "a.csv").rfind("id,dx,b1,b2,b3,b4\n", 0) == 0);
}

TEST_CASE("exit codes")
{
    TempDir d;
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"fit", "--data", d / "missing.csv", "--out", d / "m.json"}).code == 2);
    spit(d / "bad.csv", "id,dx,v\n1,CN,1\n2,XX,2\n");
    const Run bad = cli({"fit", "--data", d / "bad.csv", "--out", d / "m.json"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("unknown diagnosis label 'XX'") != std::string::npos);
    spit(d / "sim.json", R"({"n_biomarkers": 2, "rho": -1})");
    CHECK(cli({"simulate", "--config", d / "sim.json", "--out-data", d / "x.csv"}).code == 2);
    CHECK(cli({"fit", "--data", d / "bad.csv", "--method", "ebm", "--out", d / "m.json"}).code == 2);

    // every value identical: the mixture cannot be fit
    std::string flat = "id,dx,v,w\n";
    for (int i = 0; i < 30; ++i) flat += std::to_string(i) + (i % 2 ? ",AD," : ",CN,") + "1,1\n";
    spit(d / "flat.csv", flat);
    CHECK(cli({"fit", "--data", d / "flat.csv", "--out", d / "m.json"}).code == 3);

    // the installed binary uses the same codes
    if (const char* exe = std::getenv("DEBM_CLI")) {
        const std::string cmd = std::string(exe) + " fit --data " + (d / "bad.csv") + " --out " + (d / "m.json") + " 2>/dev/null";
        const int status = std::system(cmd.c_str());
        CHECK(WIFEXITED(status));
        CHECK(WEXITSTATUS(status) == 2);
        CHECK(WEXITSTATUS(std::system((std::string(exe) + " --help >/dev/null").c_str())) == 0);
    }
}

TEST_CASE("schema naming an absent diagnosis column is an input error")
{
    TempDir d;
    spit(d / "data.csv", "id,v,w\n1,1,2\n2,3,4\n");
    spit(d / "schema.json", R"({"columns": {"id": "id", "dx": "diagnosis"}, "default_role": "biomarker"})");
    const Run r = cli({"fit", "--data", d / "data.csv", "--schema", d / "schema.json", "--out", d / "m.json"});
    CHECK(r.code == 2);
    CHECK(r.err.find("'dx' not in header") != std::string::npos);
}

TEST_CASE("--staging-k0 off never assigns stage zero weight")
{
    TempDir d;
    spit(d / "sim.json", small_config);
    REQUIRE(cli({"simulate", "--config", d / "sim.json", "--out-data", d / "data.csv"}).code == 0);
    REQUIRE(cli({"fit", "--data", d / "data.csv", "--out", d / "m.json"}).code == 0);
    REQUIRE(cli({"stage", "--model", d / "m.json", "--data", d / "data.csv", "--staging-k0", "off", "--out", d / "s.csv"}).code == 0);
    std::istringstream st(slurp(d / "s.csv"));
    std::string line;
    std::getline(st, line);
    int rows = 0;
    while (std::getline(st, line)) {
        const double stage = std::stod(line.substr(line.find(',', line.find(',') + 1) + 1));
        CHECK(stage > 0.0);
        ++rows;
    }
    CHECK(rows == 240);
    CHECK(cli({"stage", "--model", d / "m.json", "--data", d / "data.csv", "--staging-k0", "maybe", "--out", d / "s.csv"}).code == 2);
}
