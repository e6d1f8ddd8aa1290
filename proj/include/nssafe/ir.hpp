#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nssafe/box.hpp"
#include "nssafe/params.hpp"

namespace nssafe {

using VarId = int;

// Right-hand sides are affine combinations plus at most one whitelisted
// elementwise nonlinearity, so every assignment maps to exactly one sparse
// affine transformer followed by at most one axis map on the box.
struct Expr {
    enum class Nonlin { none, relu, sigmoid, abs, min_const, max_const, square };

    std::vector<std::pair<VarId, double>> terms;
    double constant = 0.0;
    Nonlin nonlin = Nonlin::none;
    double nonlin_arg = 0.0;

    static Expr of_const(double c);
    static Expr of_var(VarId v);
    static Expr affine(std::vector<std::pair<VarId, double>> terms, double c);
    Expr with(Nonlin kind, double arg = 0.0) const;

    double eval(const std::vector<double>& env) const;
};

// Non-empty union of pairwise-disjoint boxes over the asserted variables.
struct SafeBox {
    std::vector<Interval> ranges;
};

struct SafeSet {
    std::vector<SafeBox> boxes;

    std::size_t dim() const { return boxes.empty() ? 0 : boxes.front().ranges.size(); }
    bool contains(const std::vector<double>& point) const;
    // Max pairwise geometric overlap volume; disjointness requires <= 1e-12.
    double max_pairwise_overlap() const;

    static SafeSet single(std::vector<Interval> ranges);
};

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Stmt {
    struct Seq {
        std::vector<StmtPtr> items;
    };
    struct Assign {
        VarId target;
        Expr value;
    };
    struct NeuralCall {
        std::string module;
        std::vector<VarId> inputs;
        std::vector<VarId> outputs;
    };
    // Ground-truth-only controller with an opaque concrete implementation
    // (registered by id). Not executable symbolically.
    struct OracleCall {
        std::string module;
        std::vector<VarId> inputs;
        std::vector<VarId> outputs;
        int oracle_id = 0;
    };
    // Marks a module boundary in a ground-truth program: during dataset
    // generation the (inputs -> outputs) pair is recorded here, optionally
    // with clamped uniform noise injected into the outputs. No-op otherwise.
    struct Probe {
        std::string module;
        std::vector<VarId> inputs;
        std::vector<VarId> outputs;
    };
    struct IfLeq {
        VarId guard;
        double threshold;
        StmtPtr then_branch;
        StmtPtr else_branch;
    };
    struct Repeat {
        int count;
        StmtPtr body;
    };
    struct Assert {
        std::vector<VarId> vars;
        SafeSet safe;
    };

    std::variant<Seq, Assign, NeuralCall, OracleCall, Probe, IfLeq, Repeat, Assert> node;
};

StmtPtr make_seq(std::vector<StmtPtr> items);
StmtPtr make_assign(VarId target, Expr value);
StmtPtr make_neural(std::string module, std::vector<VarId> in, std::vector<VarId> out);
StmtPtr make_oracle(std::string module, std::vector<VarId> in, std::vector<VarId> out, int id);
StmtPtr make_probe(std::string module, std::vector<VarId> in, std::vector<VarId> out);
StmtPtr make_ifleq(VarId guard, double threshold, StmtPtr then_b, StmtPtr else_b);
StmtPtr make_repeat(int count, StmtPtr body);
StmtPtr make_assert(std::vector<VarId> vars, SafeSet safe);

struct Program {
    std::vector<std::string> var_names;
    std::map<std::string, MlpSpec> modules;
    std::vector<std::optional<Interval>> input_spec;  // indexed by VarId
    StmtPtr body;
    bool guards_normalized = false;

    VarId add_var(const std::string& name);
    VarId var(const std::string& name) const;  // throws if unknown
    std::size_t var_count() const { return var_names.size(); }
    std::vector<VarId> input_vars() const;

    std::string to_json() const;
    static Program from_json(const std::string& text);
};

// Noise applied at a Probe site during dataset generation: uniform in
// ±half_width per output, then clamped to [lo, hi] so the perturbed run
// stays inside the controller's safety-preserving envelope.
struct ProbeNoise {
    std::vector<double> half_width;
    std::vector<double> clamp_lo;
    std::vector<double> clamp_hi;
};

using OracleFn = std::vector<double> (*)(const std::vector<double>& inputs, Rng& rng,
                                         bool noise);

struct GroundTruthProgram {
    Program program;
    std::map<std::string, ProbeNoise> noise;   // keyed by probe module name
    std::map<int, OracleFn> oracles;            // keyed by oracle_id
    bool sound_executable = true;               // false when OracleCalls present
};

// Nested comparison tree over fresh pairwise-difference guards.  The
// champion walks the candidate list; a challenger wins only strictly
// (guard d := p_challenger - p_champion, d <= 0 keeps the champion), so
// exact ties resolve to the lowest index.  Each leaf assigns the winning
// index to `out` and runs that candidate's body.
StmtPtr lower_argmax(Program& p, VarId out, const std::vector<VarId>& candidates,
                     const std::vector<StmtPtr>& bodies);

// Rewrites every branch into `g := guard_expr; if g <= M` with a fresh
// single-use guard variable, leaving already-fresh guards alone.  Sampling
// then only ever truncates the fresh axis.
Program normalize_guards(const Program& p);

struct Diagnostic {
    std::string path;
    std::string reason;
};

std::vector<Diagnostic> well_formed(const Program& p);

}  // namespace nssafe
