#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nssafe/box.hpp"
#include "nssafe/ir.hpp"
#include "nssafe/params.hpp"
#include "nssafe/rng.hpp"
#include "nssafe/safety.hpp"

namespace nssafe {

struct SoundConfig {
    int splits = 100;
};

struct SampleConfig {
    int trajectories = 50;
    std::uint64_t seed = 0;
};

// --- concrete execution -------------------------------------------------

struct IoRecord {
    std::string module;
    std::vector<double> input;
    std::vector<double> output;
    int step = 0;
    int traj_id = 0;
};

struct ConcreteResult {
    std::vector<double> env;
    std::vector<double> assert_values;  // unsafe_point per assert evaluation
    std::vector<IoRecord> io_records;
};

struct ConcreteOptions {
    bool record_io = false;
    bool noise = false;  // probe noise (ground-truth programs)
    const std::map<std::string, ProbeNoise>* noise_spec = nullptr;
    const std::map<int, OracleFn>* oracles = nullptr;
};

ConcreteResult exec_concrete(const Program& p, const ParameterStore& params,
                             const std::vector<double>& input, Rng& rng,
                             const ConcreteOptions& opts = {});

// --- symbolic execution --------------------------------------------------

// One sampled (or joined) symbolic trajectory. Boxes are snapshotted at
// assert points; logprob terms exist only for genuinely stochastic splits.
template <class S>
struct SymRecord {
    struct AssertState {
        std::vector<int> location;
        Box<S> box;
    };
    std::vector<AssertState> states;
    std::vector<S> logprob_terms;
    std::vector<S> unsafety_terms;
    std::vector<int> branch_choices;  // sampling mode: 1 = then, 0 = else
    double weight = 1.0;
};

// Per-layer weights materialized in the scalar domain the interpreter runs
// in, so the same code serves tape-backed training and primal-only checks.
template <class S>
struct ModuleWeights {
    std::vector<std::vector<S>> w;  // row-major (out, in)
    std::vector<std::vector<S>> b;
};

template <class S>
using WeightMap = std::map<std::string, ModuleWeights<S>>;

WeightMap<double> weights_primal(const Program& p, const ParameterStore& params);
WeightMap<TapeVal> weights_lifted(const Program& p, Tape& tape, const LiftedParams& lifted);

// Abstract MLP forward: affine transformer per layer, then the activation's
// endpoint transformer on every axis.
template <class S>
Box<S> mlp_abstract(const MlpSpec& spec, const ModuleWeights<S>& weights, const Box<S>& input);

enum class BranchMode { join, sample };

template <class S>
struct SymbolicOptions {
    BranchMode mode = BranchMode::join;
    Rng* rng = nullptr;  // required in sample mode
};

// Runs the program body over `start` (a box over all program variables).
template <class S>
SymRecord<S> exec_symbolic(const Program& p, const WeightMap<S>& weights, Box<S> start,
                           const SymbolicOptions<S>& opts);

// Builds the start box for a sub-range of the input space; non-input
// variables begin as point boxes at 0.
template <class S, class MakeConst>
Box<S> make_start_box(const Program& p, const std::vector<Interval>& input_ranges,
                      MakeConst&& cns) {
    Box<S> box;
    box.center.resize(p.var_count(), cns(0.0));
    box.dev.resize(p.var_count(), cns(0.0));
    std::vector<VarId> inputs = p.input_vars();
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        box.center[static_cast<std::size_t>(inputs[k])] = cns(input_ranges[k].mid());
        box.dev[static_cast<std::size_t>(inputs[k])] = cns(0.5 * input_ranges[k].length());
    }
    return box;
}

// Even split of the input hyper-rectangle into ~`pieces` cells (exact for
// one input dimension). Returns per-cell input ranges, row-major.
std::vector<std::vector<Interval>> split_input_space(const Program& p, int pieces);
std::vector<std::vector<Interval>> split_input_grid(const Program& p,
                                                    const std::vector<int>& per_dim);

// --- spec-level entry points ----------------------------------------------

// DiffAI+ style: splits the input space, propagates each piece with joins at
// branches. Returns one (trajectory, loss node) per piece, all on `tape`.
std::vector<std::pair<SymRecord<TapeVal>, TapeVal>> exec_sound(const Program& p,
                                                               const ParameterStore& params,
                                                               const SoundConfig& cfg,
                                                               Tape& tape);

// Single sampled path from `start`.
SymRecord<TapeVal> sample_trajectory(const Program& p, const WeightMap<TapeVal>& weights,
                                     const Box<TapeVal>& start, Rng& rng);

// Monte-Carlo safety estimate over cfg.trajectories paths from one start box
// covering the whole input space. Returns (C# estimate, surrogate) nodes;
// grad(surrogate) is the score-function + pathwise estimate of d C#/d theta.
// The parameter leaves used are exposed through lifted_out when given.
std::pair<TapeVal, TapeVal> dse_safety_estimate(const Program& p, const ParameterStore& params,
                                                const SampleConfig& cfg, Tape& tape,
                                                LiftedParams* lifted_out = nullptr);

// --- parallel gradient drivers (training hot path) -------------------------

// Value and gradient of the mean DSE surrogate over K trajectories, each on
// its own tape with stream seed hash(seed, i). The reduction is done in
// trajectory order, so results are independent of thread count.
struct LossGrad {
    double value = 0.0;              // C# estimate (mean path loss)
    std::vector<double> grad;        // d surrogate / d theta, flat order
};

LossGrad dse_loss_grad(const Program& p, const ParameterStore& params, const SampleConfig& cfg,
                       bool serial = false);
LossGrad sound_loss_grad(const Program& p, const ParameterStore& params, const SoundConfig& cfg,
                         bool serial = false);

// Primal-only variants (no gradients), for fixed-seed loss evaluation.
double dse_loss_value(const Program& p, const ParameterStore& params, const SampleConfig& cfg,
                      bool serial = false);
double sound_loss_value(const Program& p, const ParameterStore& params, const SoundConfig& cfg,
                        bool serial = false);

// Debug dump: one JSONL line per trajectory.
std::string trajectory_to_jsonl(const SymRecord<double>& rec);
SymRecord<double> to_primal_record(const SymRecord<TapeVal>& rec);

}  // namespace nssafe
