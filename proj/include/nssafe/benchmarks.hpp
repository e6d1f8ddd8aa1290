#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nssafe/ir.hpp"

namespace nssafe {

// Knobs every benchmark builder understands. Defaults reproduce the
// standard setups; the loop/branch/input variants are plain config.
struct BenchmarkConfig {
    std::vector<int> net_hidden = {64, 64, 64};
    std::vector<int> pattern_hidden = {32, 32};
    int loop_len = 0;                         // 0 = benchmark default
    std::optional<Interval> input_override;   // e.g. refined thermostat input
    int thermostat_branches = 2;              // 2 or 3
    std::string cartpole_constraint = "position";  // or "angle"
    int ac_left_ticks = 3;
    int ac_straight_ticks = 5;
    int ac_right_ticks = 3;

    std::string to_canonical_json() const;
    static BenchmarkConfig from_json_text(const std::string& text);
};

struct BenchmarkBundle {
    Program program;  // trainable; run normalize_guards before symbolic use
    std::optional<GroundTruthProgram> ground_truth;
};

// name in {pattern1..pattern5, thermostat, ac, racetrack, cartpole}
BenchmarkBundle build_benchmark(const std::string& name, const BenchmarkConfig& cfg = {});

std::vector<std::string> benchmark_names();

}  // namespace nssafe
