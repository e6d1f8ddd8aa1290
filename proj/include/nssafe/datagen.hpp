#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nssafe/exec.hpp"
#include "nssafe/ir.hpp"

namespace nssafe {

struct GenConfig {
    int inputs = 1;          // number of starting inputs
    std::uint64_t seed = 0;
    bool noise = true;
};

// Imitation dataset: per-module (input -> output) pairs harvested from
// ground-truth runs, keyed back to the starting input via traj_id.
struct Dataset {
    std::vector<IoRecord> records;

    bool empty() const { return records.empty(); }
    std::map<std::string, std::vector<std::size_t>> by_module() const;
};

struct DatasetMeta {
    std::string benchmark;
    std::uint64_t seed = 0;
    std::string config_hash;
    int inputs = 0;
    bool noise = true;
};

// Runs the ground-truth program on cfg.inputs uniform starting points and
// collects probe/oracle records in input order.
Dataset gen_dataset(const GroundTruthProgram& gt, const GenConfig& cfg, bool serial = false);

// Partition by starting input; no input contributes to both sides.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction);

std::string dataset_to_jsonl(const Dataset& d, const DatasetMeta& meta);
std::pair<Dataset, DatasetMeta> dataset_from_jsonl(const std::string& text);

// Records-per-input for a benchmark comes out of its loop structure; used
// to translate "total pairs" into a starting-input count.
int records_per_input(const GroundTruthProgram& gt);

}  // namespace nssafe
