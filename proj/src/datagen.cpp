#include "nssafe/datagen.hpp"

#include <sstream>

#include "json.hpp"
#include "nssafe/errors.hpp"
#include "nssafe/parallel.hpp"

namespace nssafe {

std::map<std::string, std::vector<std::size_t>> Dataset::by_module() const {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < records.size(); ++i) out[records[i].module].push_back(i);
    return out;
}

Dataset gen_dataset(const GroundTruthProgram& gt, const GenConfig& cfg, bool serial) {
    if (cfg.inputs < 1) throw ConfigError("gen_dataset needs at least one input");
    const Program& p = gt.program;
    std::vector<VarId> input_vars = p.input_vars();
    ParameterStore empty_params;

    std::vector<std::vector<IoRecord>> per_input(static_cast<std::size_t>(cfg.inputs));
    parallel_for(
        per_input.size(),
        [&](std::size_t j) {
            Rng draw(hash_combine(cfg.seed, j, 0xD11));
            std::vector<double> input;
            input.reserve(input_vars.size());
            for (VarId v : input_vars) {
                const Interval& iv = *p.input_spec[static_cast<std::size_t>(v)];
                input.push_back(draw.next_uniform(iv.lo, iv.hi));
            }
            Rng run(hash_combine(cfg.seed, j, 0xE4EC));
            ConcreteOptions opts;
            opts.record_io = true;
            opts.noise = cfg.noise;
            opts.noise_spec = &gt.noise;
            opts.oracles = &gt.oracles;
            ConcreteResult res = exec_concrete(p, empty_params, input, run, opts);
            for (IoRecord& r : res.io_records) r.traj_id = static_cast<int>(j);
            per_input[j] = std::move(res.io_records);
        },
        serial);

    Dataset d;
    for (auto& recs : per_input)
        d.records.insert(d.records.end(), recs.begin(), recs.end());
    return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
        throw ConfigError("train fraction must be within [0,1]");
    int max_id = -1;
    for (const IoRecord& r : d.records) max_id = std::max(max_id, r.traj_id);
    int n = max_id + 1;
    int train_inputs = static_cast<int>(std::llround(train_fraction * n));
    Dataset train, test;
    for (const IoRecord& r : d.records) {
        (r.traj_id < train_inputs ? train : test).records.push_back(r);
    }
    return {std::move(train), std::move(test)};
}

std::string dataset_to_jsonl(const Dataset& d, const DatasetMeta& meta) {
    std::ostringstream out;
    nlohmann::json header;
    header["benchmark"] = meta.benchmark;
    header["seed"] = meta.seed;
    header["config_hash"] = meta.config_hash;
    header["inputs"] = meta.inputs;
    header["noise"] = meta.noise;
    out << header.dump() << "\n";
    for (const IoRecord& r : d.records) {
        nlohmann::json j;
        j["module"] = r.module;
        j["step"] = r.step;
        j["input"] = r.input;
        j["output"] = r.output;
        j["traj_id"] = r.traj_id;
        out << j.dump() << "\n";
    }
    return out.str();
}

std::pair<Dataset, DatasetMeta> dataset_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty dataset file");
    nlohmann::json header = nlohmann::json::parse(line);
    DatasetMeta meta;
    meta.benchmark = header.at("benchmark").get<std::string>();
    meta.seed = header.at("seed").get<std::uint64_t>();
    meta.config_hash = header.at("config_hash").get<std::string>();
    meta.inputs = header.at("inputs").get<int>();
    meta.noise = header.at("noise").get<bool>();
    Dataset d;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        IoRecord r;
        r.module = j.at("module").get<std::string>();
        r.step = j.at("step").get<int>();
        r.input = j.at("input").get<std::vector<double>>();
        r.output = j.at("output").get<std::vector<double>>();
        r.traj_id = j.at("traj_id").get<int>();
        d.records.push_back(std::move(r));
    }
    return {std::move(d), std::move(meta)};
}

int records_per_input(const GroundTruthProgram& gt) {
    GenConfig cfg;
    cfg.inputs = 1;
    cfg.seed = 7;
    cfg.noise = false;
    Dataset d = gen_dataset(gt, cfg, true);
    return static_cast<int>(d.records.size());
}

}  // namespace nssafe
