#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nssafe/datagen.hpp"
#include "nssafe/ir.hpp"
#include "nssafe/params.hpp"

namespace nssafe {

struct VerifyConfig {
    // Per-input-dimension cell counts; empty selects the default grid
    // (10000 cells for one input dimension, 20 per dimension otherwise).
    std::vector<int> grid;
    int concrete_samples = 100;
    std::uint64_t seed = 0;
    double zero_tol = 1e-9;  // absorbs floating-point boundary dust
};

struct CellVerdict {
    long index = 0;
    std::vector<Interval> cell;
    bool safe = false;
    double worst_unsafe = 0.0;
};

struct VerifyResult {
    double portion = 0.0;
    long safe_cells = 0;
    long total_cells = 0;
    std::vector<CellVerdict> verdicts;
};

// Grid-splits the input set and propagates each cell with the sound
// (join-at-branches) executor, primal-only. A cell is provably safe iff
// every assert's unsafety evaluates to zero (within zero_tol).
VerifyResult verify(const Program& normalized, const ParameterStore& params,
                    const VerifyConfig& cfg, bool serial = false);

// Fraction of uniformly sampled concrete trajectories with every pointwise
// unsafety exactly zero.
double eval_concrete_safety(const Program& normalized, const ParameterStore& params,
                            int samples, std::uint64_t seed, bool serial = false);

// Held-out data loss, primal evaluation only.
double test_data_loss(const Program& p, const ParameterStore& params, const Dataset& test);

std::string verdicts_to_csv(const VerifyResult& res);

std::vector<int> default_grid(const Program& p);

}  // namespace nssafe
