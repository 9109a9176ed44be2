#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fairrisk/cli.hpp"
#include "json.hpp"

using namespace fairrisk;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> lines;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("fairrisk_test_" + name);
}

const std::vector<std::string> kQuickTrain{"train", "--data", "synth", "--synth-m", "300", "--epochs", "40"};

std::vector<std::string> with(std::vector<std::string> base, std::initializer_list<std::string> extra) {
    base.insert(base.end(), extra);
    return base;
}

}  // namespace

TEST_CASE("train emits a json artifact") {
    const auto r = run_cli(with(kQuickTrain, {"--aggregator", "cvar", "--alpha", "0.9", "--loss", "squared_hinge",
                                              "--seed", "1"}));
    REQUIRE(r.code == cli::kExitOk);
    const auto j = json::parse(r.out);
    CHECK(j["tool"] == "fairrisk");
    CHECK(j["seed"] == 1);
    CHECK(j["config"]["aggregator_spec"] == "cvar(alpha=0.9)");
    CHECK(j["train_report"]["final_subgroup_risks"].size() == 2);
    CHECK(j["train_report"]["objective_trace"].size() == 40);
    CHECK(j["train_report"]["rho"].is_number());
    CHECK(j["evaluation"]["train"].contains("dp_violation"));
    CHECK(j["evaluation"]["test"].contains("pairwise_disagreement"));
    CHECK(j["data"]["train_rows"].get<int>() + j["data"]["test_rows"].get<int>() == 300);
    CHECK(j.contains("timings"));
}

TEST_CASE("train is deterministic apart from timings") {
    const auto args = with(kQuickTrain, {"--aggregator", "max", "--seed", "4"});
    auto a = json::parse(run_cli(args).out);
    auto b = json::parse(run_cli(args).out);
    a.erase("timings");
    b.erase("timings");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("every aggregator trains") {
    for (const auto& agg : {"erm", "cvar", "sd", "topk", "max"}) {
        const auto r = run_cli(with(kQuickTrain, {"--aggregator", agg, "--k", "20"}));
        INFO(agg, r.err);
        CHECK(r.code == cli::kExitOk);
    }
    const auto sd = json::parse(run_cli(with(kQuickTrain, {"--aggregator", "sd"})).out);
    CHECK(sd["train_report"]["baseline"] == true);
    const auto topk = json::parse(run_cli(with(kQuickTrain, {"--aggregator", "topk", "--k", "20"})).out);
    CHECK(topk["config"]["partition_mode"] == "per_instance");
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli(with(kQuickTrain, {"--alpha", "1.5"})).code == cli::kExitUsage);
    CHECK(run_cli(with(kQuickTrain, {"--aggregator", "median"})).code == cli::kExitUsage);
    CHECK(run_cli(with(kQuickTrain, {"--loss", "zero_one"})).code == cli::kExitUsage);
    CHECK(run_cli(with(kQuickTrain, {"--bogus"})).code == cli::kExitUsage);
    CHECK(run_cli({}).code == cli::kExitUsage);
    CHECK(run_cli({"axioms", "--measure", "huber:1"}).code == cli::kExitUsage);
    CHECK(run_cli({"axioms", "--measure", "cvar"}).code == cli::kExitUsage);
    CHECK(run_cli({"axioms", "--measure", "cvar:0.5", "--suite", "other"}).code == cli::kExitUsage);
    CHECK(run_cli({"sweep", "--data", "synth"}).code == cli::kExitUsage);
    CHECK(run_cli({"sweep", "--alphas", "0.5,1.2"}).code == cli::kExitUsage);
    const auto r = run_cli(with(kQuickTrain, {"--alpha", "1.5"}));
    CHECK_FALSE(r.err.empty());
    CHECK(r.out.empty());
}

TEST_CASE("ingestion errors exit with 3") {
    CHECK(run_cli({"train", "--data", "/nonexistent/input.csv", "--label-col", "y", "--sensitive-col", "g",
                   "--positive-token", "1"})
              .code == cli::kExitIngestion);

    const auto path = temp_path("bad.csv");
    {
        std::ofstream f(path);
        f << "x,g,y\n1,a,1\n,b,0\n";
    }
    const auto r = run_cli({"train", "--data", path.string(), "--label-col", "y", "--sensitive-col", "g",
                            "--positive-token", "1"});
    CHECK(r.code == cli::kExitIngestion);
    CHECK(r.err.find("row 2") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("training from a csv file") {
    const auto path = temp_path("ok.csv");
    {
        std::ofstream f(path);
        f << "age,hours,sex,income\n";
        for (int i = 0; i < 60; ++i)
            f << 20 + i % 40 << ',' << 30 + (i * 7) % 25 << ',' << (i % 3 == 0 ? "f" : "m") << ','
              << ((i * 5) % 11 > 5 ? ">50K" : "<=50K") << '\n';
    }
    const auto r = run_cli({"train", "--data", path.string(), "--label-col", "income", "--sensitive-col", "sex",
                            "--positive-token", ">50K", "--epochs", "20"});
    REQUIRE(r.code == cli::kExitOk);
    const auto j = json::parse(r.out);
    CHECK(j["data"]["rows"] == 60);
    CHECK(j["data"]["features"] == 4);
    std::filesystem::remove(path);
}

TEST_CASE("numerical failure exits with 4") {
    const auto r = run_cli(with(kQuickTrain, {"--aggregator", "erm", "--lr", "1e200", "--step-decay", "constant"}));
    CHECK(r.code == cli::kExitNumerical);
    const auto s = run_cli({"sweep", "--synth-m", "200", "--epochs", "20", "--alphas", "0.5", "--lr", "1e200",
                            "--step-decay", "constant"});
    CHECK(s.code == cli::kExitNumerical);
    CHECK(split_lines(s.out) == std::vector<std::string>{std::string(cli::kSweepHeader)});
}

TEST_CASE("sweep writes one csv row per alpha") {
    const auto r = run_cli({"sweep", "--data", "synth", "--synth-m", "300", "--epochs", "40", "--alphas",
                            "0.9,0.1,0.5"});
    REQUIRE(r.code == cli::kExitOk);
    const auto lines = split_lines(r.out);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "alpha,risk,subgroup_gap,dp_violation,mean_difference,pairwise_disagreement");
    CHECK(lines[1].rfind("0.1,", 0) == 0);
    CHECK(lines[2].rfind("0.5,", 0) == 0);
    CHECK(lines[3].rfind("0.9,", 0) == 0);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::size_t fields = 1;
        for (char c : lines[i]) fields += c == ',' ? 1 : 0;
        CHECK(fields == 6);
    }
    const auto again = run_cli({"sweep", "--data", "synth", "--synth-m", "300", "--epochs", "40", "--alphas",
                                "0.9,0.1,0.5"});
    CHECK(again.out == r.out);
}

TEST_CASE("axiom suites match their expectation tables") {
    const auto cvar = run_cli({"axioms", "--measure", "cvar:0.7", "--suite", "fairness", "--trials", "300"});
    REQUIRE(cvar.code == cli::kExitOk);
    const auto cj = json::parse(cvar.out);
    CHECK(cj["all_as_expected"] == true);
    for (const auto& r : cj["results"]) CHECK(r["passed"] == true);

    const auto sd = run_cli({"axioms", "--measure", "sd:1.0", "--suite", "fairness", "--trials", "1000"});
    REQUIRE(sd.code == cli::kExitOk);
    for (const auto& r : json::parse(sd.out)["results"]) {
        if (r["axiom"] == "F3") {
            CHECK(r["passed"] == false);
            CHECK(r["counterexample"].is_object());
        } else {
            CHECK(r["passed"] == true);
        }
    }

    const auto e = run_cli({"axioms", "--measure", "expectation", "--trials", "300"});
    REQUIRE(e.code == cli::kExitOk);
    for (const auto& r : json::parse(e.out)["results"]) {
        const bool should_fail = r["axiom"] == "F6" || r["axiom"] == "F9";
        CHECK(r["passed"] == !should_fail);
    }

    for (const auto& m : {"cvar:0.5", "sd:1", "expectation"}) {
        const auto i = run_cli({"axioms", "--measure", m, "--suite", "inequality", "--trials", "300"});
        INFO(m);
        CHECK(i.code == cli::kExitOk);
    }
}

TEST_CASE("unexpected axiom outcomes exit with 5") {
    // Too few trials to find the known monotonicity violation for some seed.
    bool saw_mismatch = false;
    for (int seed = 0; seed < 20 && !saw_mismatch; ++seed) {
        const auto r = run_cli({"axioms", "--measure", "sd:2", "--trials", "1", "--seed", std::to_string(seed)});
        if (r.code == cli::kExitAxiomMismatch) {
            saw_mismatch = true;
            CHECK(json::parse(r.out)["all_as_expected"] == false);
        } else {
            CHECK(r.code == cli::kExitOk);
        }
    }
    CHECK(saw_mismatch);
}

TEST_CASE("output file option") {
    const auto path = temp_path("artifact.json");
    const auto r = run_cli(with(kQuickTrain, {"--output", path.string()}));
    REQUIRE(r.code == cli::kExitOk);
    CHECK(r.out.empty());
    std::ifstream f(path);
    const auto j = json::parse(f);
    CHECK(j["tool"] == "fairrisk");
    std::filesystem::remove(path);
}

TEST_CASE("help and version") {
    const auto h = run_cli({"--help"});
    CHECK(h.code == cli::kExitOk);
    CHECK(h.out.find("train") != std::string::npos);
    const auto v = run_cli({"--version"});
    CHECK(v.code == cli::kExitOk);
    CHECK(v.out == std::string(cli::kVersion) + "\n");
}

TEST_CASE("installed binary reports exit codes") {
    const std::string bin = FAIRRISK_CLI_PATH;
    const auto out = temp_path("bin_out.json");
    const std::string ok = bin + " train --data synth --synth-m 200 --epochs 10 --output " + out.string();
    CHECK(WEXITSTATUS(std::system(ok.c_str())) == 0);
    CHECK(std::filesystem::file_size(out) > 0);
    std::filesystem::remove(out);
    const std::string bad = bin + " train --alpha 1.5 2>/dev/null";
    CHECK(WEXITSTATUS(std::system(bad.c_str())) == 2);
}
