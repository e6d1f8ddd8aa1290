#include "nssafe/exec.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "nssafe/parallel.hpp"

namespace nssafe {

// --- concrete interpreter -------------------------------------------------

namespace {

struct ConcreteInterp {
    const Program& p;
    const ParameterStore& params;
    Rng& rng;
    const ConcreteOptions& opts;
    ConcreteResult& result;
    int call_step = 0;

    double read(const std::vector<double>& env, VarId v) const {
        return env[static_cast<std::size_t>(v)];
    }

    void write(std::vector<double>& env, VarId v, double x) const {
        if (!std::isfinite(x)) throw NumericError("non-finite value for " +
                                                  p.var_names[static_cast<std::size_t>(v)]);
        env[static_cast<std::size_t>(v)] = x;
    }

    void record(const std::string& module, const std::vector<double>& in,
                const std::vector<double>& out) {
        if (opts.record_io) result.io_records.push_back(IoRecord{module, in, out, call_step, 0});
        ++call_step;
    }

    void exec(const StmtPtr& s, std::vector<double>& env) {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Stmt::Seq>) {
                    for (const auto& item : n.items) exec(item, env);
                } else if constexpr (std::is_same_v<T, Stmt::Assign>) {
                    write(env, n.target, n.value.eval(env));
                } else if constexpr (std::is_same_v<T, Stmt::NeuralCall>) {
                    std::vector<double> in;
                    in.reserve(n.inputs.size());
                    for (VarId v : n.inputs) in.push_back(read(env, v));
                    std::vector<double> out =
                        mlp_forward(p.modules.at(n.module), params, n.module, in);
                    for (std::size_t k = 0; k < n.outputs.size(); ++k)
                        write(env, n.outputs[k], out[k]);
                    record(n.module, in, out);
                } else if constexpr (std::is_same_v<T, Stmt::OracleCall>) {
                    if (!opts.oracles || !opts.oracles->count(n.oracle_id))
                        throw DomainError("oracle " + std::to_string(n.oracle_id) +
                                          " not registered");
                    std::vector<double> in;
                    in.reserve(n.inputs.size());
                    for (VarId v : n.inputs) in.push_back(read(env, v));
                    std::vector<double> out = opts.oracles->at(n.oracle_id)(in, rng, opts.noise);
                    if (out.size() != n.outputs.size())
                        throw ArityError("oracle output arity mismatch for " + n.module);
                    for (std::size_t k = 0; k < n.outputs.size(); ++k)
                        write(env, n.outputs[k], out[k]);
                    record(n.module, in, out);
                } else if constexpr (std::is_same_v<T, Stmt::Probe>) {
                    std::vector<double> in;
                    in.reserve(n.inputs.size());
                    for (VarId v : n.inputs) in.push_back(read(env, v));
                    std::vector<double> out;
                    out.reserve(n.outputs.size());
                    for (VarId v : n.outputs) out.push_back(read(env, v));
                    if (opts.noise && opts.noise_spec && opts.noise_spec->count(n.module)) {
                        const ProbeNoise& spec = opts.noise_spec->at(n.module);
                        for (std::size_t k = 0; k < out.size(); ++k) {
                            double hw = spec.half_width[k];
                            double noisy = out[k] + rng.next_uniform(-hw, hw);
                            noisy = std::min(std::max(noisy, spec.clamp_lo[k]), spec.clamp_hi[k]);
                            out[k] = noisy;
                            write(env, n.outputs[k], noisy);
                        }
                    }
                    record(n.module, in, out);
                } else if constexpr (std::is_same_v<T, Stmt::IfLeq>) {
                    if (read(env, n.guard) <= n.threshold) exec(n.then_branch, env);
                    else exec(n.else_branch, env);
                } else if constexpr (std::is_same_v<T, Stmt::Repeat>) {
                    for (int i = 0; i < n.count; ++i) exec(n.body, env);
                } else if constexpr (std::is_same_v<T, Stmt::Assert>) {
                    std::vector<double> point;
                    point.reserve(n.vars.size());
                    for (VarId v : n.vars) point.push_back(read(env, v));
                    result.assert_values.push_back(unsafe_point(point, n.safe));
                }
            },
            s->node);
    }
};

}  // namespace

ConcreteResult exec_concrete(const Program& p, const ParameterStore& params,
                             const std::vector<double>& input, Rng& rng,
                             const ConcreteOptions& opts) {
    std::vector<VarId> inputs = p.input_vars();
    if (input.size() != inputs.size()) throw ShapeError("exec_concrete input arity mismatch");
    ConcreteResult result;
    result.env.assign(p.var_count(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < inputs.size(); ++k)
        result.env[static_cast<std::size_t>(inputs[k])] = input[k];
    ConcreteInterp interp{p, params, rng, opts, result, 0};
    interp.exec(p.body, result.env);
    return result;
}

// --- weight materialization -------------------------------------------------

WeightMap<double> weights_primal(const Program& p, const ParameterStore& params) {
    WeightMap<double> out;
    for (const auto& [name, spec] : p.modules) {
        if (!params.has(name, "W0")) continue;  // declared but never called
        ModuleWeights<double> mw;
        for (int l = 0; l < spec.layer_count(); ++l) {
            mw.w.push_back(params.at(name, "W" + std::to_string(l)).data);
            mw.b.push_back(params.at(name, "b" + std::to_string(l)).data);
        }
        out[name] = std::move(mw);
    }
    return out;
}

WeightMap<TapeVal> weights_lifted(const Program& p, Tape& tape, const LiftedParams& lifted) {
    WeightMap<TapeVal> out;
    for (const auto& [name, spec] : p.modules) {
        if (!lifted.nodes.count(name)) continue;
        ModuleWeights<TapeVal> mw;
        for (int l = 0; l < spec.layer_count(); ++l) {
            std::vector<TapeVal> w, b;
            for (NodeHandle h : lifted.tensor(name, "W" + std::to_string(l)))
                w.push_back(TapeVal{&tape, h});
            for (NodeHandle h : lifted.tensor(name, "b" + std::to_string(l)))
                b.push_back(TapeVal{&tape, h});
            mw.w.push_back(std::move(w));
            mw.b.push_back(std::move(b));
        }
        out[name] = std::move(mw);
    }
    return out;
}

template <class S>
Box<S> mlp_abstract(const MlpSpec& spec, const ModuleWeights<S>& weights, const Box<S>& input) {
    Box<S> cur = input;
    for (int l = 0; l < spec.layer_count(); ++l) {
        cur = abstract_affine<S, S>(cur, weights.w[static_cast<std::size_t>(l)],
                                    static_cast<std::size_t>(spec.widths[l + 1]),
                                    weights.b[static_cast<std::size_t>(l)]);
        switch (spec.activations[static_cast<std::size_t>(l)]) {
            case Activation::relu: cur = abstract_relu(cur); break;
            case Activation::sigmoid: cur = abstract_sigmoid(cur); break;
            case Activation::none: break;
        }
    }
    return cur;
}

template Box<double> mlp_abstract(const MlpSpec&, const ModuleWeights<double>&,
                                  const Box<double>&);
template Box<TapeVal> mlp_abstract(const MlpSpec&, const ModuleWeights<TapeVal>&,
                                   const Box<TapeVal>&);

// --- symbolic interpreter ---------------------------------------------------

namespace {

template <class S>
struct SymbolicInterp {
    const Program& p;
    const WeightMap<S>& weights;
    const SymbolicOptions<S>& opts;
    SymRecord<S>& rec;
    std::vector<int> path;

    S cns(const Box<S>& box, double v) const { return s_const_like(box.center[0], v); }

    void assign(Box<S>& box, VarId target, const Expr& e) {
        S c = cns(box, e.constant);
        S d = cns(box, 0.0);
        for (auto [v, coef] : e.terms) {
            std::size_t i = static_cast<std::size_t>(v);
            S k = cns(box, coef);
            c = s_add(c, s_mul(k, box.center[i]));
            S ka = cns(box, coef < 0 ? -coef : coef);
            d = s_add(d, s_mul(ka, box.dev[i]));
        }
        std::size_t t = static_cast<std::size_t>(target);
        box.center[t] = c;
        box.dev[t] = d;
        switch (e.nonlin) {
            case Expr::Nonlin::none: break;
            case Expr::Nonlin::relu: apply_axis_map(box, t, AxisMap::relu); break;
            case Expr::Nonlin::sigmoid: apply_axis_map(box, t, AxisMap::sigmoid); break;
            case Expr::Nonlin::abs: apply_axis_map(box, t, AxisMap::abs); break;
            case Expr::Nonlin::min_const:
                apply_axis_map(box, t, AxisMap::min_const, e.nonlin_arg);
                break;
            case Expr::Nonlin::max_const:
                apply_axis_map(box, t, AxisMap::max_const, e.nonlin_arg);
                break;
            case Expr::Nonlin::square: apply_axis_map(box, t, AxisMap::square); break;
        }
    }

    void neural(Box<S>& box, const Stmt::NeuralCall& n) {
        const MlpSpec& spec = p.modules.at(n.module);
        Box<S> io;
        io.center.reserve(n.inputs.size());
        io.dev.reserve(n.inputs.size());
        for (VarId v : n.inputs) {
            io.center.push_back(box.center[static_cast<std::size_t>(v)]);
            io.dev.push_back(box.dev[static_cast<std::size_t>(v)]);
        }
        Box<S> out = mlp_abstract(spec, weights.at(n.module), io);
        for (std::size_t k = 0; k < n.outputs.size(); ++k) {
            box.center[static_cast<std::size_t>(n.outputs[k])] = out.center[k];
            box.dev[static_cast<std::size_t>(n.outputs[k])] = out.dev[k];
        }
    }

    void branch(Box<S>& box, const Stmt::IfLeq& n) {
        std::size_t axis = static_cast<std::size_t>(n.guard);
        GuardSplit<S> split = guard_split(box, axis, n.threshold);
        double pt = s_primal(split.prob_true);
        if (opts.mode == BranchMode::join) {
            if (pt >= 1.0) {
                box = std::move(*split.box_true);
                exec(n.then_branch, box, 0);
                return;
            }
            if (pt <= 0.0) {
                box = std::move(*split.box_false);
                exec(n.else_branch, box, 1);
                return;
            }
            Box<S> tb = std::move(*split.box_true);
            Box<S> fb = std::move(*split.box_false);
            exec(n.then_branch, tb, 0);
            exec(n.else_branch, fb, 1);
            box = box_join(tb, fb);
            return;
        }
        // sample mode
        if (pt >= 1.0) {
            box = std::move(*split.box_true);
            exec(n.then_branch, box, 0);
            return;
        }
        if (pt <= 0.0) {
            box = std::move(*split.box_false);
            exec(n.else_branch, box, 1);
            return;
        }
        double u = opts.rng->next_unit();
        if (u < pt) {
            rec.logprob_terms.push_back(s_log(split.prob_true));
            rec.branch_choices.push_back(1);
            box = std::move(*split.box_true);
            exec(n.then_branch, box, 0);
        } else {
            S q = s_sub(cns(box, 1.0), split.prob_true);
            rec.logprob_terms.push_back(s_log(q));
            rec.branch_choices.push_back(0);
            box = std::move(*split.box_false);
            exec(n.else_branch, box, 1);
        }
    }

    void do_assert(Box<S>& box, const Stmt::Assert& n) {
        Box<S> sub;
        sub.center.reserve(n.vars.size());
        sub.dev.reserve(n.vars.size());
        for (VarId v : n.vars) {
            sub.center.push_back(box.center[static_cast<std::size_t>(v)]);
            sub.dev.push_back(box.dev[static_cast<std::size_t>(v)]);
        }
        rec.unsafety_terms.push_back(unsafe_box(sub, n.safe));
        rec.states.push_back(typename SymRecord<S>::AssertState{path, box});
    }

    void exec(const StmtPtr& s, Box<S>& box, int step) {
        path.push_back(step);
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Stmt::Seq>) {
                    int i = 0;
                    for (const auto& item : n.items) exec(item, box, i++);
                } else if constexpr (std::is_same_v<T, Stmt::Assign>) {
                    assign(box, n.target, n.value);
                } else if constexpr (std::is_same_v<T, Stmt::NeuralCall>) {
                    neural(box, n);
                } else if constexpr (std::is_same_v<T, Stmt::OracleCall>) {
                    throw DomainError("oracle calls have no symbolic semantics");
                } else if constexpr (std::is_same_v<T, Stmt::Probe>) {
                    // module boundary marker only
                } else if constexpr (std::is_same_v<T, Stmt::IfLeq>) {
                    branch(box, n);
                } else if constexpr (std::is_same_v<T, Stmt::Repeat>) {
                    for (int i = 0; i < n.count; ++i) exec(n.body, box, i);
                } else if constexpr (std::is_same_v<T, Stmt::Assert>) {
                    do_assert(box, n);
                }
            },
            s->node);
        path.pop_back();
    }
};

}  // namespace

template <class S>
SymRecord<S> exec_symbolic(const Program& p, const WeightMap<S>& weights, Box<S> start,
                           const SymbolicOptions<S>& opts) {
    if (!p.guards_normalized)
        throw DomainError("symbolic execution requires a guard-normalized program");
    if (opts.mode == BranchMode::sample && !opts.rng)
        throw DomainError("sample mode requires an rng");
    SymRecord<S> rec;
    SymbolicInterp<S> interp{p, weights, opts, rec, {}};
    interp.exec(p.body, start, 0);
    return rec;
}

template SymRecord<double> exec_symbolic(const Program&, const WeightMap<double>&, Box<double>,
                                         const SymbolicOptions<double>&);
template SymRecord<TapeVal> exec_symbolic(const Program&, const WeightMap<TapeVal>&,
                                          Box<TapeVal>, const SymbolicOptions<TapeVal>&);

// --- input splitting ---------------------------------------------------------

std::vector<std::vector<Interval>> split_input_grid(const Program& p,
                                                    const std::vector<int>& per_dim) {
    std::vector<VarId> inputs = p.input_vars();
    if (per_dim.size() != inputs.size())
        throw ShapeError("split grid dimension mismatch");
    std::vector<std::vector<Interval>> axes(inputs.size());
    for (std::size_t d = 0; d < inputs.size(); ++d) {
        const Interval& span = *p.input_spec[static_cast<std::size_t>(inputs[d])];
        int k = per_dim[d];
        if (k < 1) throw ConfigError("grid split count must be positive");
        for (int i = 0; i < k; ++i) {
            double lo = span.lo + span.length() * i / k;
            double hi = span.lo + span.length() * (i + 1) / k;
            axes[d].push_back(Interval{lo, hi});
        }
    }
    std::vector<std::vector<Interval>> cells;
    std::vector<std::size_t> idx(inputs.size(), 0);
    while (true) {
        std::vector<Interval> cell;
        cell.reserve(inputs.size());
        for (std::size_t d = 0; d < inputs.size(); ++d) cell.push_back(axes[d][idx[d]]);
        cells.push_back(std::move(cell));
        std::size_t d = inputs.size();
        while (d-- > 0) {
            if (++idx[d] < axes[d].size()) break;
            idx[d] = 0;
            if (d == 0) return cells;
        }
        if (inputs.empty()) return cells;
    }
}

std::vector<std::vector<Interval>> split_input_space(const Program& p, int pieces) {
    std::vector<VarId> inputs = p.input_vars();
    std::size_t dims = inputs.size();
    if (dims == 0) throw ConfigError("program has no input variables");
    std::vector<int> per_dim(dims, 1);
    if (dims == 1) {
        per_dim[0] = pieces;
    } else {
        int k = static_cast<int>(std::floor(std::pow(static_cast<double>(pieces),
                                                     1.0 / static_cast<double>(dims))));
        if (k < 1) k = 1;
        for (auto& c : per_dim) c = k;
        // Grow leading dimensions while the product stays within budget.
        for (std::size_t d = 0; d < dims; ++d) {
            long long prod = 1;
            for (std::size_t e = 0; e < dims; ++e)
                prod *= (e == d) ? (per_dim[e] + 1) : per_dim[e];
            if (prod <= pieces) per_dim[d] += 1;
        }
    }
    return split_input_grid(p, per_dim);
}

// --- spec-level entry points ---------------------------------------------------

std::vector<std::pair<SymRecord<TapeVal>, TapeVal>> exec_sound(const Program& p,
                                                               const ParameterStore& params,
                                                               const SoundConfig& cfg,
                                                               Tape& tape) {
    LiftedParams lifted = lift(params, tape);
    WeightMap<TapeVal> weights = weights_lifted(p, tape, lifted);
    std::vector<std::vector<Interval>> cells = split_input_space(p, cfg.splits);
    std::vector<std::pair<SymRecord<TapeVal>, TapeVal>> out;
    out.reserve(cells.size());
    auto cns = [&](double v) { return make_val(tape, v); };
    for (const auto& cell : cells) {
        Box<TapeVal> start = make_start_box<TapeVal>(p, cell, cns);
        SymbolicOptions<TapeVal> opts;
        opts.mode = BranchMode::join;
        SymRecord<TapeVal> rec = exec_symbolic(p, weights, std::move(start), opts);
        rec.weight = 1.0 / static_cast<double>(cells.size());
        TapeVal loss = sum_terms(rec.unsafety_terms, make_val(tape, 0.0));
        out.emplace_back(std::move(rec), loss);
    }
    return out;
}

SymRecord<TapeVal> sample_trajectory(const Program& p, const WeightMap<TapeVal>& weights,
                                     const Box<TapeVal>& start, Rng& rng) {
    SymbolicOptions<TapeVal> opts;
    opts.mode = BranchMode::sample;
    opts.rng = &rng;
    return exec_symbolic(p, weights, start, opts);
}

namespace {

// surrogate(tau) = C(tau) + detach(C(tau)) * sum of logprob terms
template <class S>
S trajectory_surrogate(const SymRecord<S>& rec, S zero) {
    S loss = sum_terms(rec.unsafety_terms, zero);
    if (rec.logprob_terms.empty()) return loss;
    S lp = sum_terms(rec.logprob_terms, zero);
    return s_add(loss, s_mul(s_detach(loss), lp));
}

std::vector<Interval> full_input_ranges(const Program& p) {
    std::vector<Interval> ranges;
    for (VarId v : p.input_vars()) ranges.push_back(*p.input_spec[static_cast<std::size_t>(v)]);
    return ranges;
}

}  // namespace

std::pair<TapeVal, TapeVal> dse_safety_estimate(const Program& p, const ParameterStore& params,
                                                const SampleConfig& cfg, Tape& tape,
                                                LiftedParams* lifted_out) {
    LiftedParams lifted = lift(params, tape);
    WeightMap<TapeVal> weights = weights_lifted(p, tape, lifted);
    if (lifted_out) *lifted_out = lifted;
    auto cns = [&](double v) { return make_val(tape, v); };
    std::vector<Interval> ranges = full_input_ranges(p);

    TapeVal zero = make_val(tape, 0.0);
    TapeVal est = zero;
    TapeVal sur = zero;
    for (int i = 0; i < cfg.trajectories; ++i) {
        Rng rng(hash_combine(cfg.seed, static_cast<std::uint64_t>(i)));
        Box<TapeVal> start = make_start_box<TapeVal>(p, ranges, cns);
        SymRecord<TapeVal> rec = sample_trajectory(p, weights, start, rng);
        est = est + sum_terms(rec.unsafety_terms, zero);
        sur = sur + trajectory_surrogate(rec, zero);
    }
    TapeVal scale = make_val(tape, 1.0 / static_cast<double>(cfg.trajectories));
    return {est * scale, sur * scale};
}

// --- parallel gradient drivers ---------------------------------------------

namespace {

struct TrajResult {
    double loss = 0.0;
    std::vector<double> grad;
};

LossGrad reduce_results(std::vector<TrajResult>& parts, std::size_t n_params) {
    LossGrad out;
    out.grad.assign(n_params, 0.0);
    double k = static_cast<double>(parts.size());
    for (const TrajResult& r : parts) {
        out.value += r.loss / k;
        for (std::size_t j = 0; j < n_params; ++j) out.grad[j] += r.grad[j] / k;
    }
    return out;
}

}  // namespace

LossGrad dse_loss_grad(const Program& p, const ParameterStore& params, const SampleConfig& cfg,
                       bool serial) {
    std::size_t n_params = params.total_count();
    std::vector<TrajResult> parts(static_cast<std::size_t>(cfg.trajectories));
    std::vector<Interval> ranges = full_input_ranges(p);
    parallel_for(
        parts.size(),
        [&](std::size_t i) {
            Tape tape;
            LiftedParams lifted = lift(params, tape);
            WeightMap<TapeVal> weights = weights_lifted(p, tape, lifted);
            Rng rng(hash_combine(cfg.seed, static_cast<std::uint64_t>(i)));
            auto cns = [&](double v) { return make_val(tape, v); };
            Box<TapeVal> start = make_start_box<TapeVal>(p, ranges, cns);
            SymRecord<TapeVal> rec = sample_trajectory(p, weights, start, rng);
            TapeVal zero = make_val(tape, 0.0);
            TapeVal loss = sum_terms(rec.unsafety_terms, zero);
            TapeVal sur = trajectory_surrogate(rec, zero);
            parts[i].loss = loss.primal();
            parts[i].grad = grad(tape, sur.h, lifted.leaves);
        },
        serial);
    return reduce_results(parts, n_params);
}

LossGrad sound_loss_grad(const Program& p, const ParameterStore& params, const SoundConfig& cfg,
                         bool serial) {
    std::size_t n_params = params.total_count();
    std::vector<std::vector<Interval>> cells = split_input_space(p, cfg.splits);
    std::vector<TrajResult> parts(cells.size());
    parallel_for(
        cells.size(),
        [&](std::size_t i) {
            Tape tape;
            LiftedParams lifted = lift(params, tape);
            WeightMap<TapeVal> weights = weights_lifted(p, tape, lifted);
            auto cns = [&](double v) { return make_val(tape, v); };
            Box<TapeVal> start = make_start_box<TapeVal>(p, cells[i], cns);
            SymbolicOptions<TapeVal> opts;
            opts.mode = BranchMode::join;
            SymRecord<TapeVal> rec = exec_symbolic(p, weights, std::move(start), opts);
            TapeVal loss = sum_terms(rec.unsafety_terms, make_val(tape, 0.0));
            parts[i].loss = loss.primal();
            parts[i].grad = grad(tape, loss.h, lifted.leaves);
        },
        serial);
    return reduce_results(parts, n_params);
}

double dse_loss_value(const Program& p, const ParameterStore& params, const SampleConfig& cfg,
                      bool serial) {
    WeightMap<double> weights = weights_primal(p, params);
    std::vector<Interval> ranges = full_input_ranges(p);
    std::vector<double> losses(static_cast<std::size_t>(cfg.trajectories), 0.0);
    parallel_for(
        losses.size(),
        [&](std::size_t i) {
            Rng rng(hash_combine(cfg.seed, static_cast<std::uint64_t>(i)));
            Box<double> start =
                make_start_box<double>(p, ranges, [](double v) { return v; });
            SymbolicOptions<double> opts;
            opts.mode = BranchMode::sample;
            opts.rng = &rng;
            SymRecord<double> rec = exec_symbolic(p, weights, std::move(start), opts);
            losses[i] = sum_terms(rec.unsafety_terms, 0.0);
        },
        serial);
    double acc = 0.0;
    for (double l : losses) acc += l / static_cast<double>(losses.size());
    return acc;
}

double sound_loss_value(const Program& p, const ParameterStore& params, const SoundConfig& cfg,
                        bool serial) {
    WeightMap<double> weights = weights_primal(p, params);
    std::vector<std::vector<Interval>> cells = split_input_space(p, cfg.splits);
    std::vector<double> losses(cells.size(), 0.0);
    parallel_for(
        cells.size(),
        [&](std::size_t i) {
            Box<double> start =
                make_start_box<double>(p, cells[i], [](double v) { return v; });
            SymbolicOptions<double> opts;
            opts.mode = BranchMode::join;
            SymRecord<double> rec = exec_symbolic(p, weights, std::move(start), opts);
            losses[i] = sum_terms(rec.unsafety_terms, 0.0);
        },
        serial);
    double acc = 0.0;
    for (double l : losses) acc += l / static_cast<double>(losses.size());
    return acc;
}

// --- debug dump -----------------------------------------------------------

SymRecord<double> to_primal_record(const SymRecord<TapeVal>& rec) {
    SymRecord<double> out;
    out.weight = rec.weight;
    out.branch_choices = rec.branch_choices;
    for (const auto& t : rec.logprob_terms) out.logprob_terms.push_back(t.primal());
    for (const auto& t : rec.unsafety_terms) out.unsafety_terms.push_back(t.primal());
    for (const auto& st : rec.states) {
        Box<double> b;
        for (const auto& c : st.box.center) b.center.push_back(c.primal());
        for (const auto& d : st.box.dev) b.dev.push_back(d.primal());
        out.states.push_back(SymRecord<double>::AssertState{st.location, std::move(b)});
    }
    return out;
}

std::string trajectory_to_jsonl(const SymRecord<double>& rec) {
    nlohmann::json j;
    j["weight"] = rec.weight;
    j["branch_choices"] = rec.branch_choices;
    j["assert_losses"] = rec.unsafety_terms;
    j["boxes"] = nlohmann::json::array();
    for (const auto& st : rec.states)
        j["boxes"].push_back({{"center", st.box.center}, {"dev", st.box.dev}});
    return j.dump();
}

}  // namespace nssafe
