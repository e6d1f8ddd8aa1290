// Drives the installed binary end to end through a temp directory.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string bin_path() {
    const char* env = std::getenv("NSSAFE_BIN");
    return env ? env : "";
}

int run(const std::string& args) {
    std::string cmd = bin_path() + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("nssafe_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli pipeline: gen-data, train, eval, report" * doctest::skip(bin_path().empty())) {
    TempDir tmp;
    fs::path cfg_path = tmp.path / "run.json";
    nlohmann::json cfg;
    cfg["benchmark"] = "thermostat";
    cfg["mode"] = "dse";
    cfg["seed"] = 5;
    cfg["out_dir"] = (tmp.path / "run").string();
    cfg["benchmark_config"] = {{"net_hidden", {4}}};
    cfg["data"] = {{"pairs", 40}};
    cfg["test_data"] = {{"pairs", 40}};
    cfg["train"] = {{"max_epochs", 6},      {"inner_epochs", 3}, {"trajectories", 4},
                    {"compute_gap", false}, {"gap_epochs", 1},   {"early_stop_window", 1000}};
    cfg["verify"] = {{"grid", {40}}, {"concrete_samples", 20}};
    {
        std::ofstream out(cfg_path);
        out << cfg.dump(2);
    }
    std::string c = " --config " + cfg_path.string();

    CHECK(run("gen-data" + c) == 0);
    CHECK(fs::exists(tmp.path / "run/dataset.jsonl"));
    // 40 pairs / 20 records per input -> 2 inputs -> 40 records + header
    std::string data = slurp(tmp.path / "run/dataset.jsonl");
    int lines = 0;
    for (char ch : data)
        if (ch == '\n') ++lines;
    CHECK(lines == 41);

    CHECK(run("train" + c) == 0);
    CHECK(fs::exists(tmp.path / "run/checkpoint.json"));
    CHECK(fs::exists(tmp.path / "run/curves.csv"));
    nlohmann::json summary = nlohmann::json::parse(slurp(tmp.path / "run/summary.json"));
    CHECK(summary.contains("Q_train"));
    CHECK(summary.contains("C_sharp_train"));
    CHECK(summary.contains("stop_reason"));

    CHECK(run("eval" + c) == 0);
    nlohmann::json metrics = nlohmann::json::parse(slurp(tmp.path / "run/metrics.json"));
    CHECK(metrics.contains("provably_safe_portion"));
    CHECK(metrics.contains("concrete_safe_fraction"));
    CHECK(metrics.contains("test_data_loss"));
    CHECK(!metrics["test_data_loss"].is_null());

    CHECK(run("report " + (tmp.path / "run").string() + " --out " +
              (tmp.path / "report").string()) == 0);
    std::string md = slurp(tmp.path / "report.md");
    CHECK(md.find("| Data Size | Approach | Q | C# | Test Data Loss | Provably Safe Portion |") !=
          std::string::npos);

    // determinism: regenerate into a second directory, byte-identical outputs
    nlohmann::json cfg2 = cfg;
    cfg2["out_dir"] = (tmp.path / "run2").string();
    fs::path cfg2_path = tmp.path / "run2.json";
    {
        std::ofstream out(cfg2_path);
        out << cfg2.dump(2);
    }
    std::string c2 = " --config " + cfg2_path.string();
    CHECK(run("gen-data" + c2) == 0);
    CHECK(run("train" + c2) == 0);
    CHECK(run("eval" + c2) == 0);
    CHECK(slurp(tmp.path / "run2/dataset.jsonl") == slurp(tmp.path / "run/dataset.jsonl"));
    CHECK(slurp(tmp.path / "run2/curves.csv") == slurp(tmp.path / "run/curves.csv"));
    CHECK(slurp(tmp.path / "run2/checkpoint.json") == slurp(tmp.path / "run/checkpoint.json"));
    CHECK(slurp(tmp.path / "run2/metrics.json") == slurp(tmp.path / "run/metrics.json"));
}

TEST_CASE("cli error contract" * doctest::skip(bin_path().empty())) {
    TempDir tmp;
    // unknown benchmark -> exit 2
    fs::path bad = tmp.path / "bad.json";
    {
        std::ofstream out(bad);
        out << R"({"benchmark": "nope"})";
    }
    CHECK(run("gen-data --config " + bad.string()) == 2);

    // missing checkpoint -> exit 2
    fs::path cfg_path = tmp.path / "v.json";
    {
        std::ofstream out(cfg_path);
        out << R"({"benchmark": "pattern1", "out_dir": ")" + (tmp.path / "v").string() + R"("})";
    }
    CHECK(run("verify --config " + cfg_path.string()) == 2);

    // missing dataset -> exit 3
    fs::path t_path = tmp.path / "t.json";
    {
        std::ofstream out(t_path);
        out << R"({"benchmark": "thermostat", "out_dir": ")" + (tmp.path / "t").string() +
                   R"("})";
    }
    CHECK(run("train --config " + t_path.string() + " --mode ablation") == 3);

    // bad mode -> exit 2
    CHECK(run("train --config " + t_path.string() + " --mode bogus") == 2);
}

TEST_CASE("cli resume reproduces the continuation" * doctest::skip(bin_path().empty())) {
    TempDir tmp;
    auto write_cfg = [&](const std::string& name, const std::string& out_dir, int max_epochs) {
        nlohmann::json cfg;
        cfg["benchmark"] = "pattern1";
        cfg["mode"] = "dse";
        cfg["seed"] = 3;
        cfg["out_dir"] = (tmp.path / out_dir).string();
        cfg["benchmark_config"] = {{"pattern_hidden", {4}}};
        cfg["train"] = {{"max_epochs", max_epochs}, {"inner_epochs", 2},
                        {"trajectories", 4},        {"compute_gap", false},
                        {"gap_epochs", 1},          {"early_stop_window", 1000}};
        fs::path p = tmp.path / name;
        std::ofstream out(p);
        out << cfg.dump(2);
        return p.string();
    };

    // full run: 6 epochs in one go
    std::string full = write_cfg("full.json", "full", 6);
    CHECK(run("train --config " + full) == 0);

    // split run: 4 epochs, then resume to 6
    std::string part = write_cfg("part.json", "part", 4);
    CHECK(run("train --config " + part) == 0);
    std::string cont = write_cfg("cont.json", "part", 6);
    CHECK(run("train --config " + cont + " --resume") == 0);

    CHECK(slurp(tmp.path / "part/checkpoint.json") == slurp(tmp.path / "full/checkpoint.json"));
}
