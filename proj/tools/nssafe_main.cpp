// Command-line front end: data generation, training, verification,
// evaluation, and result tables, all driven by one JSON config.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nssafe/benchmarks.hpp"
#include "nssafe/datagen.hpp"
#include "nssafe/errors.hpp"
#include "nssafe/parallel.hpp"
#include "nssafe/trainer.hpp"
#include "nssafe/verifier.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nssafe;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct RunConfig {
    std::string benchmark;
    std::string mode = "dse";
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    BenchmarkConfig bench;
    // data generation
    int data_pairs = 200;
    bool data_noise = true;
    std::string dataset_path;       // defaults to <out>/dataset.jsonl
    // test data
    int test_pairs = 10000;
    std::string test_dataset_path;  // generated fresh when absent
    // training
    TrainConfig train;
    std::string checkpoint_path;    // defaults to <out>/checkpoint.json
    // verification
    VerifyConfig verify;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig parse_config(const std::string& path) {
    json j = read_json_file(path);
    RunConfig cfg;
    if (!j.contains("benchmark")) throw ConfigError("config missing 'benchmark'");
    cfg.benchmark = j.at("benchmark").get<std::string>();
    bool known = false;
    for (const std::string& n : benchmark_names()) known |= (n == cfg.benchmark);
    if (!known) throw ConfigError("unknown benchmark: " + cfg.benchmark);
    if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
    if (cfg.mode != "dse" && cfg.mode != "diffai_plus" && cfg.mode != "ablation")
        throw ConfigError("unknown mode: " + cfg.mode);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("benchmark_config"))
        cfg.bench = BenchmarkConfig::from_json_text(j.at("benchmark_config").dump());
    if (j.contains("data")) {
        const json& d = j.at("data");
        if (d.contains("pairs")) cfg.data_pairs = d.at("pairs").get<int>();
        if (d.contains("noise")) cfg.data_noise = d.at("noise").get<bool>();
        if (d.contains("path")) cfg.dataset_path = d.at("path").get<std::string>();
    }
    if (j.contains("test_data")) {
        const json& d = j.at("test_data");
        if (d.contains("pairs")) cfg.test_pairs = d.at("pairs").get<int>();
        if (d.contains("path")) cfg.test_dataset_path = d.at("path").get<std::string>();
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        TrainConfig& tc = cfg.train;
        if (t.contains("nu")) tc.nu = t.at("nu").get<double>();
        if (t.contains("lambda_upper")) tc.lambda_upper = t.at("lambda_upper").get<double>();
        if (t.contains("lambda_eta")) tc.lambda_eta = t.at("lambda_eta").get<double>();
        if (t.contains("inner_epochs")) tc.inner_epochs = t.at("inner_epochs").get<int>();
        if (t.contains("gap_epochs")) tc.gap_epochs = t.at("gap_epochs").get<int>();
        if (t.contains("compute_gap")) tc.compute_gap = t.at("compute_gap").get<bool>();
        if (t.contains("max_epochs")) tc.max_epochs = t.at("max_epochs").get<int>();
        if (t.contains("early_stop_window"))
            tc.early_stop_window = t.at("early_stop_window").get<int>();
        if (t.contains("early_stop_ratio"))
            tc.early_stop_ratio = t.at("early_stop_ratio").get<double>();
        if (t.contains("warm_start_epochs"))
            tc.warm_start_epochs = t.at("warm_start_epochs").get<int>();
        if (t.contains("checkpoint_every"))
            tc.checkpoint_every = t.at("checkpoint_every").get<int>();
        if (t.contains("lr")) tc.adam.lr = t.at("lr").get<double>();
        if (t.contains("weight_decay")) tc.adam.weight_decay = t.at("weight_decay").get<double>();
        if (t.contains("trajectories"))
            tc.sample.trajectories = t.at("trajectories").get<int>();
        if (t.contains("sound_splits")) tc.sound.splits = t.at("sound_splits").get<int>();
    } else {
        // per-benchmark default budgets
        if (cfg.benchmark == "thermostat") cfg.train.max_epochs = 1500;
        else if (cfg.benchmark == "ac") cfg.train.max_epochs = 1200;
        else if (cfg.benchmark == "racetrack") cfg.train.max_epochs = 6000;
        else if (cfg.benchmark == "cartpole") cfg.train.max_epochs = 2000;
    }
    if (j.contains("verify")) {
        const json& v = j.at("verify");
        if (v.contains("grid")) cfg.verify.grid = v.at("grid").get<std::vector<int>>();
        if (v.contains("concrete_samples"))
            cfg.verify.concrete_samples = v.at("concrete_samples").get<int>();
    }
    if (j.contains("checkpoint")) cfg.checkpoint_path = j.at("checkpoint").get<std::string>();
    return cfg;
}

std::string config_hash(const RunConfig& cfg) {
    std::string s = cfg.benchmark + "|" + cfg.bench.to_canonical_json() + "|" +
                    std::to_string(cfg.data_pairs) + "|" + (cfg.data_noise ? "1" : "0");
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

std::string dataset_path(const RunConfig& cfg) {
    return cfg.dataset_path.empty() ? cfg.out_dir + "/dataset.jsonl" : cfg.dataset_path;
}

std::string checkpoint_path(const RunConfig& cfg) {
    return cfg.checkpoint_path.empty() ? cfg.out_dir + "/checkpoint.json" : cfg.checkpoint_path;
}

Dataset generate(const RunConfig& cfg, int pairs, std::uint64_t seed, DatasetMeta* meta_out) {
    BenchmarkBundle bundle = build_benchmark(cfg.benchmark, cfg.bench);
    if (!bundle.ground_truth)
        throw ConfigError("benchmark " + cfg.benchmark + " has no ground-truth program");
    int per_input = records_per_input(*bundle.ground_truth);
    GenConfig gen;
    gen.inputs = std::max(1, (pairs + per_input - 1) / per_input);
    gen.seed = seed;
    gen.noise = cfg.data_noise;
    Dataset d = gen_dataset(*bundle.ground_truth, gen);
    if (meta_out) {
        meta_out->benchmark = cfg.benchmark;
        meta_out->seed = seed;
        meta_out->config_hash = config_hash(cfg);
        meta_out->inputs = gen.inputs;
        meta_out->noise = gen.noise;
    }
    return d;
}

int cmd_gen_data(const RunConfig& cfg) {
    DatasetMeta meta;
    Dataset d = generate(cfg, cfg.data_pairs, cfg.seed, &meta);
    std::string path = dataset_path(cfg);
    write_file(path, dataset_to_jsonl(d, meta));
    json side;
    side["benchmark"] = meta.benchmark;
    side["seed"] = meta.seed;
    side["config_hash"] = meta.config_hash;
    side["inputs"] = meta.inputs;
    side["noise"] = meta.noise;
    side["records"] = d.records.size();
    write_file(path + ".meta.json", side.dump(2) + "\n");
    std::cout << "wrote " << d.records.size() << " records to " << path << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg_in, bool resume, bool timing, bool dump_traj) {
    RunConfig cfg = cfg_in;
    cfg.train.mode = cfg.mode;
    cfg.train.seed = cfg.seed;
    // Warm start from a data-trained program by default on thermostat.
    if (cfg.benchmark == "thermostat" && cfg.train.warm_start_epochs == 0 &&
        cfg.mode != "ablation")
        cfg.train.warm_start_epochs = 200;

    BenchmarkBundle bundle = build_benchmark(cfg.benchmark, cfg.bench);
    Program normalized = normalize_guards(bundle.program);
    auto diags = well_formed(normalized);
    if (!diags.empty()) throw ConfigError("program ill-formed: " + diags.front().reason);

    Dataset train_data;
    bool patterns = cfg.benchmark.rfind("pattern", 0) == 0;
    if (!patterns) {
        std::string path = dataset_path(cfg);
        if (!fs::exists(path)) throw IoError("dataset not found: " + path + " (run gen-data)");
        train_data = dataset_from_jsonl(read_file(path)).first;
    }

    ParameterStore theta0 = init_params(normalized, hash_combine(cfg.seed, 0x1417u));

    std::string state_path = cfg.out_dir + "/trainer_state.json";
    GameState resume_state;
    GameHooks hooks;
    if (resume) {
        if (!fs::exists(state_path)) throw IoError("no trainer state to resume at " + state_path);
        resume_state = GameState::from_json(read_file(state_path));
        hooks.resume = &resume_state;
    }
    hooks.on_round = [&](const GameState& st) { write_file(state_path, st.to_json()); };

    ProgramGame game(normalized, train_data, cfg.train);
    if (!resume && cfg.train.warm_start_epochs > 0 && !train_data.empty()) {
        TrainConfig warm = cfg.train;
        warm.mode = "ablation";
        ProgramGame warm_game(normalized, train_data, warm);
        theta0 = warm_game.best_theta(0.0, std::move(theta0), cfg.train.warm_start_epochs, 0,
                                      nullptr);
    }
    TrainResult res = run_game(game, std::move(theta0), cfg.train, &hooks);

    write_file(checkpoint_path(cfg), res.theta.to_json());
    write_file(cfg.out_dir + "/curves.csv",
               curves_to_csv(res.curves, cfg.mode != "ablation", timing));
    json summary;
    summary["Q_train"] = res.final_q;
    if (cfg.mode == "ablation") summary["C_sharp_train"] = nullptr;
    else summary["C_sharp_train"] = res.final_c;
    summary["epochs"] = res.epochs_run;
    summary["stop_reason"] = res.stop_reason;
    summary["benchmark"] = cfg.benchmark;
    summary["mode"] = cfg.mode;
    summary["seed"] = cfg.seed;
    summary["data_pairs"] = patterns ? 0 : cfg.data_pairs;
    write_file(cfg.out_dir + "/summary.json", summary.dump(2) + "\n");

    if (dump_traj) {
        WeightMap<double> weights = weights_primal(normalized, res.theta);
        std::vector<Interval> ranges;
        for (VarId v : normalized.input_vars())
            ranges.push_back(*normalized.input_spec[static_cast<std::size_t>(v)]);
        std::ostringstream out;
        for (int i = 0; i < cfg.train.sample.trajectories; ++i) {
            Rng rng(hash_combine(cfg.seed, 0xD1B0u, static_cast<std::uint64_t>(i)));
            Box<double> start =
                make_start_box<double>(normalized, ranges, [](double v) { return v; });
            SymbolicOptions<double> opts;
            opts.mode = BranchMode::sample;
            opts.rng = &rng;
            SymRecord<double> rec = exec_symbolic(normalized, weights, std::move(start), opts);
            rec.weight = 1.0 / cfg.train.sample.trajectories;
            out << trajectory_to_jsonl(rec) << "\n";
        }
        write_file(cfg.out_dir + "/trajectories.jsonl", out.str());
    }
    std::cout << "trained " << res.epochs_run << " epochs (" << res.stop_reason << "), Q="
              << res.final_q << "\n";
    return 0;
}

int cmd_verify_eval(const RunConfig& cfg, bool with_eval) {
    BenchmarkBundle bundle = build_benchmark(cfg.benchmark, cfg.bench);
    Program normalized = normalize_guards(bundle.program);
    std::string ckpt = checkpoint_path(cfg);
    if (!fs::exists(ckpt)) throw ConfigError("missing checkpoint: " + ckpt);
    ParameterStore theta = ParameterStore::from_json(read_file(ckpt));

    VerifyConfig vc = cfg.verify;
    vc.seed = cfg.seed;
    VerifyResult vres = verify(normalized, theta, vc);
    write_file(cfg.out_dir + "/verdicts.csv", verdicts_to_csv(vres));

    double concrete = eval_concrete_safety(normalized, theta, vc.concrete_samples,
                                           hash_combine(cfg.seed, 0xEA11u));

    json metrics;
    metrics["provably_safe_portion"] = vres.portion;
    metrics["concrete_safe_fraction"] = concrete;
    metrics["test_data_loss"] = nullptr;
    if (with_eval) {
        bool patterns = cfg.benchmark.rfind("pattern", 0) == 0;
        if (!patterns) {
            Dataset test;
            if (!cfg.test_dataset_path.empty()) {
                test = dataset_from_jsonl(read_file(cfg.test_dataset_path)).first;
            } else {
                test = generate(cfg, cfg.test_pairs, hash_combine(cfg.seed, 0x7E57u), nullptr);
            }
            metrics["test_data_loss"] = test_data_loss(normalized, theta, test);
        }
    }
    write_file(cfg.out_dir + "/metrics.json", metrics.dump(2) + "\n");
    std::cout << "provably_safe_portion=" << vres.portion << " concrete=" << concrete << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_base) {
    struct Row {
        std::string benchmark, mode;
        int data_size = 0;
        double q = 0, c = 0, test_loss = 0, portion = 0;
        bool has_c = true;
    };
    std::vector<Row> rows;
    for (const std::string& dir : run_dirs) {
        try {
            json summary = read_json_file(dir + "/summary.json");
            json metrics = read_json_file(dir + "/metrics.json");
            Row r;
            r.benchmark = summary.at("benchmark").get<std::string>();
            r.mode = summary.at("mode").get<std::string>();
            r.data_size = summary.at("data_pairs").get<int>();
            r.q = summary.at("Q_train").get<double>();
            if (summary.at("C_sharp_train").is_null()) r.has_c = false;
            else r.c = summary.at("C_sharp_train").get<double>();
            r.test_loss = metrics.at("test_data_loss").is_null()
                              ? std::nan("")
                              : metrics.at("test_data_loss").get<double>();
            r.portion = metrics.at("provably_safe_portion").get<double>();
            rows.push_back(r);
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping incomplete run " << dir << ": " << e.what() << "\n";
        }
    }
    if (rows.empty()) throw ConfigError("no completed runs to report");

    std::ostringstream md, csv;
    md << "| Data Size | Approach | Q | C# | Test Data Loss | Provably Safe Portion |\n";
    md << "|---|---|---|---|---|---|\n";
    csv << "data_size,approach,Q,C_sharp,test_data_loss,provably_safe_portion\n";
    for (const Row& r : rows) {
        md << "| " << r.data_size << " | " << r.mode << " | " << r.q << " | ";
        if (r.has_c) md << r.c;
        else md << "-";
        md << " | " << r.test_loss << " | " << r.portion << " |\n";
        csv << r.data_size << "," << r.mode << "," << r.q << ",";
        if (r.has_c) csv << r.c;
        csv << "," << r.test_loss << "," << r.portion << "\n";
    }
    write_file(out_base + ".md", md.str());
    write_file(out_base + ".csv", csv.str());
    std::cout << md.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Worst-case-safe parameter learning for neurosymbolic programs"};
    app.require_subcommand(1);

    std::string config_path, out_override, mode_override;
    std::int64_t seed_override = -1;
    bool resume = false, timing = false, dump_traj = false;
    std::vector<std::string> report_dirs;
    std::string report_out = "report";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run config")->required();
        cmd->add_option("--seed", seed_override, "seed override");
        cmd->add_option("--out", out_override, "output directory override");
        cmd->add_option("--mode", mode_override, "mode override (dse|diffai_plus|ablation)");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate an imitation dataset");
    add_common(gen);
    CLI::App* tr = app.add_subcommand("train", "train parameters");
    add_common(tr);
    tr->add_flag("--resume", resume, "resume from trainer_state.json");
    tr->add_flag("--timing", timing, "record wallclock in curves.csv");
    tr->add_flag("--dump-trajectories", dump_traj, "dump sampled trajectories");
    CLI::App* ver = app.add_subcommand("verify", "provably-safe portion of a checkpoint");
    add_common(ver);
    CLI::App* ev = app.add_subcommand("eval", "verify plus concrete safety and test loss");
    add_common(ev);
    CLI::App* rep = app.add_subcommand("report", "tabulate completed runs");
    rep->add_option("dirs", report_dirs, "run directories")->required();
    rep->add_option("--out", report_out, "output base name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (rep->parsed()) return cmd_report(report_dirs, report_out);
        RunConfig cfg = parse_config(config_path);
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (!mode_override.empty()) {
            if (mode_override != "dse" && mode_override != "diffai_plus" &&
                mode_override != "ablation")
                throw ConfigError("unknown mode: " + mode_override);
            cfg.mode = mode_override;
        }
        if (gen->parsed()) return cmd_gen_data(cfg);
        if (tr->parsed()) return cmd_train(cfg, resume, timing, dump_traj);
        if (ver->parsed()) return cmd_verify_eval(cfg, false);
        if (ev->parsed()) return cmd_verify_eval(cfg, true);
        throw ConfigError("no subcommand");
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const UnknownBenchmark& e) {
        std::cerr << "error: unknown benchmark: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
