#include "nssafe/ir.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "nssafe/errors.hpp"

namespace nssafe {

Expr Expr::of_const(double c) {
    Expr e;
    e.constant = c;
    return e;
}

Expr Expr::of_var(VarId v) {
    Expr e;
    e.terms.emplace_back(v, 1.0);
    return e;
}

Expr Expr::affine(std::vector<std::pair<VarId, double>> terms, double c) {
    Expr e;
    e.terms = std::move(terms);
    e.constant = c;
    return e;
}

Expr Expr::with(Nonlin kind, double arg) const {
    Expr e = *this;
    e.nonlin = kind;
    e.nonlin_arg = arg;
    return e;
}

double Expr::eval(const std::vector<double>& env) const {
    double acc = constant;
    for (auto [v, coef] : terms) acc += coef * env[static_cast<std::size_t>(v)];
    switch (nonlin) {
        case Nonlin::none: return acc;
        case Nonlin::relu: return s_relu(acc);
        case Nonlin::sigmoid: return s_sigmoid(acc);
        case Nonlin::abs: return s_abs(acc);
        case Nonlin::min_const: return s_min(acc, nonlin_arg);
        case Nonlin::max_const: return s_max(acc, nonlin_arg);
        case Nonlin::square: return acc * acc;
    }
    return acc;
}

bool SafeSet::contains(const std::vector<double>& point) const {
    for (const SafeBox& b : boxes) {
        bool inside = true;
        for (std::size_t i = 0; i < b.ranges.size(); ++i) {
            if (!b.ranges[i].contains(point[i])) {
                inside = false;
                break;
            }
        }
        if (inside) return true;
    }
    return false;
}

double SafeSet::max_pairwise_overlap() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            double vol = 1.0;
            for (std::size_t k = 0; k < boxes[i].ranges.size(); ++k) {
                const Interval& a = boxes[i].ranges[k];
                const Interval& b = boxes[j].ranges[k];
                double lo = std::max(a.lo, b.lo);
                double hi = std::min(a.hi, b.hi);
                vol *= std::max(0.0, hi - lo);
            }
            worst = std::max(worst, vol);
        }
    }
    return worst;
}

SafeSet SafeSet::single(std::vector<Interval> ranges) {
    SafeSet s;
    s.boxes.push_back(SafeBox{std::move(ranges)});
    return s;
}

StmtPtr make_seq(std::vector<StmtPtr> items) {
    return std::make_shared<const Stmt>(Stmt{Stmt::Seq{std::move(items)}});
}
StmtPtr make_assign(VarId target, Expr value) {
    return std::make_shared<const Stmt>(Stmt{Stmt::Assign{target, std::move(value)}});
}
StmtPtr make_neural(std::string module, std::vector<VarId> in, std::vector<VarId> out) {
    return std::make_shared<const Stmt>(
        Stmt{Stmt::NeuralCall{std::move(module), std::move(in), std::move(out)}});
}
StmtPtr make_oracle(std::string module, std::vector<VarId> in, std::vector<VarId> out, int id) {
    return std::make_shared<const Stmt>(
        Stmt{Stmt::OracleCall{std::move(module), std::move(in), std::move(out), id}});
}
StmtPtr make_probe(std::string module, std::vector<VarId> in, std::vector<VarId> out) {
    return std::make_shared<const Stmt>(
        Stmt{Stmt::Probe{std::move(module), std::move(in), std::move(out)}});
}
StmtPtr make_ifleq(VarId guard, double threshold, StmtPtr then_b, StmtPtr else_b) {
    return std::make_shared<const Stmt>(
        Stmt{Stmt::IfLeq{guard, threshold, std::move(then_b), std::move(else_b)}});
}
StmtPtr make_repeat(int count, StmtPtr body) {
    return std::make_shared<const Stmt>(Stmt{Stmt::Repeat{count, std::move(body)}});
}
StmtPtr make_assert(std::vector<VarId> vars, SafeSet safe) {
    return std::make_shared<const Stmt>(Stmt{Stmt::Assert{std::move(vars), std::move(safe)}});
}

VarId Program::add_var(const std::string& name) {
    for (std::size_t i = 0; i < var_names.size(); ++i)
        if (var_names[i] == name) throw ShapeError("duplicate variable " + name);
    var_names.push_back(name);
    input_spec.push_back(std::nullopt);
    return static_cast<VarId>(var_names.size() - 1);
}

VarId Program::var(const std::string& name) const {
    for (std::size_t i = 0; i < var_names.size(); ++i)
        if (var_names[i] == name) return static_cast<VarId>(i);
    throw ShapeError("unknown variable " + name);
}

std::vector<VarId> Program::input_vars() const {
    std::vector<VarId> out;
    for (std::size_t i = 0; i < input_spec.size(); ++i)
        if (input_spec[i]) out.push_back(static_cast<VarId>(i));
    return out;
}

StmtPtr lower_argmax(Program& p, VarId out, const std::vector<VarId>& candidates,
                     const std::vector<StmtPtr>& bodies) {
    if (candidates.size() < 2) throw ArityError("lower_argmax needs at least 2 candidates");
    if (bodies.size() != candidates.size())
        throw ArityError("lower_argmax needs one body per candidate");

    static int counter = 0;  // names only need to be unique within a program
    // Recursive champion/challenger tree over candidates [next..n).
    std::function<StmtPtr(std::size_t, std::size_t)> build =
        [&](std::size_t champ, std::size_t next) -> StmtPtr {
        if (next == candidates.size()) {
            return make_seq({make_assign(out, Expr::of_const(static_cast<double>(champ))),
                             bodies[champ]});
        }
        VarId d = p.add_var("__d" + std::to_string(counter++));
        StmtPtr keep = build(champ, next + 1);
        StmtPtr swap = build(next, next + 1);
        return make_seq({make_assign(d, Expr::affine({{candidates[next], 1.0},
                                                      {candidates[champ], -1.0}},
                                                     0.0)),
                         make_ifleq(d, 0.0, keep, swap)});
    };
    return build(0, 1);
}

namespace {

struct UseCounts {
    std::vector<int> reads;    // Expr terms, call/probe inputs, assert vars
    std::vector<int> guards;   // IfLeq guard uses
    std::vector<int> assigns;  // Assign targets + call/probe outputs
};

void count_uses(const StmtPtr& s, UseCounts& c) {
    if (!s) return;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Stmt::Seq>) {
                for (const auto& item : n.items) count_uses(item, c);
            } else if constexpr (std::is_same_v<T, Stmt::Assign>) {
                for (auto [v, coef] : n.value.terms) c.reads[v]++;
                c.assigns[n.target]++;
            } else if constexpr (std::is_same_v<T, Stmt::NeuralCall> ||
                                 std::is_same_v<T, Stmt::OracleCall> ||
                                 std::is_same_v<T, Stmt::Probe>) {
                for (VarId v : n.inputs) c.reads[v]++;
                for (VarId v : n.outputs) c.assigns[v]++;
            } else if constexpr (std::is_same_v<T, Stmt::IfLeq>) {
                c.guards[n.guard]++;
                count_uses(n.then_branch, c);
                count_uses(n.else_branch, c);
            } else if constexpr (std::is_same_v<T, Stmt::Repeat>) {
                count_uses(n.body, c);
            } else if constexpr (std::is_same_v<T, Stmt::Assert>) {
                for (VarId v : n.vars) c.reads[v]++;
            }
        },
        s->node);
}

// A guard is fresh when its variable is written exactly once by the Assign
// immediately before the branch, read nowhere else, and guards one branch.
bool guard_is_fresh(const UseCounts& c, const StmtPtr& prev, VarId guard, bool in_repeat) {
    if (!prev) return false;
    const auto* assign = std::get_if<Stmt::Assign>(&prev->node);
    if (!assign || assign->target != guard) return false;
    // Inside a loop body the same slot is re-assigned every iteration,
    // which is still a single static assignment site.
    (void)in_repeat;
    return c.reads[guard] == 0 && c.guards[guard] == 1 && c.assigns[guard] == 1;
}

struct Normalizer {
    Program& out;
    const UseCounts& counts;
    int fresh = 0;

    StmtPtr rewrite(const StmtPtr& s, const StmtPtr& prev) {
        if (!s) return s;
        return std::visit(
            [&](const auto& n) -> StmtPtr {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Stmt::Seq>) {
                    std::vector<StmtPtr> items;
                    items.reserve(n.items.size());
                    StmtPtr before = prev;
                    for (const auto& item : n.items) {
                        if (const auto* branch = std::get_if<Stmt::IfLeq>(&item->node);
                            branch && guard_is_fresh(counts, before, branch->guard, false)) {
                            items.push_back(make_ifleq(branch->guard, branch->threshold,
                                                       rewrite(branch->then_branch, nullptr),
                                                       rewrite(branch->else_branch, nullptr)));
                        } else {
                            items.push_back(rewrite(item, before));
                        }
                        before = items.back();
                    }
                    return make_seq(std::move(items));
                } else if constexpr (std::is_same_v<T, Stmt::IfLeq>) {
                    if (guard_is_fresh(counts, prev, n.guard, false)) {
                        return make_ifleq(n.guard, n.threshold,
                                          rewrite(n.then_branch, nullptr),
                                          rewrite(n.else_branch, nullptr));
                    }
                    VarId g = out.add_var("__g" + std::to_string(fresh++));
                    return make_seq({make_assign(g, Expr::of_var(n.guard)),
                                     make_ifleq(g, n.threshold,
                                                rewrite(n.then_branch, nullptr),
                                                rewrite(n.else_branch, nullptr))});
                } else if constexpr (std::is_same_v<T, Stmt::Repeat>) {
                    return make_repeat(n.count, rewrite(n.body, nullptr));
                } else {
                    return s;
                }
            },
            s->node);
    }
};

}  // namespace

Program normalize_guards(const Program& p) {
    Program out = p;
    UseCounts counts{std::vector<int>(p.var_count(), 0), std::vector<int>(p.var_count(), 0),
                     std::vector<int>(p.var_count(), 0)};
    count_uses(p.body, counts);
    Normalizer norm{out, counts, 0};
    out.body = norm.rewrite(p.body, nullptr);
    out.guards_normalized = true;
    return out;
}

namespace {

struct WfCheck {
    const Program& p;
    std::vector<Diagnostic> diags;

    void fail(const std::string& path, const std::string& reason) {
        diags.push_back(Diagnostic{path, reason});
    }

    void check_read(VarId v, const std::vector<bool>& assigned, const std::string& path) {
        if (v < 0 || static_cast<std::size_t>(v) >= p.var_count()) {
            fail(path, "variable id out of range");
        } else if (!assigned[static_cast<std::size_t>(v)]) {
            fail(path, "use before assign: " + p.var_names[static_cast<std::size_t>(v)]);
        }
    }

    // `assigned` tracks definite assignment along the current path.
    void walk(const StmtPtr& s, std::vector<bool>& assigned, const std::string& path) {
        if (!s) return;
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Stmt::Seq>) {
                    int i = 0;
                    for (const auto& item : n.items)
                        walk(item, assigned, path + "/" + std::to_string(i++));
                } else if constexpr (std::is_same_v<T, Stmt::Assign>) {
                    for (auto [v, coef] : n.value.terms) check_read(v, assigned, path);
                    assigned[static_cast<std::size_t>(n.target)] = true;
                } else if constexpr (std::is_same_v<T, Stmt::NeuralCall>) {
                    auto it = p.modules.find(n.module);
                    if (it == p.modules.end()) {
                        fail(path, "neural call to undeclared module " + n.module);
                    } else {
                        if (static_cast<int>(n.inputs.size()) != it->second.input_width())
                            fail(path, "neural call input arity mismatch for " + n.module);
                        if (static_cast<int>(n.outputs.size()) != it->second.output_width())
                            fail(path, "neural call output arity mismatch for " + n.module);
                    }
                    for (VarId v : n.inputs) check_read(v, assigned, path);
                    for (VarId v : n.outputs) assigned[static_cast<std::size_t>(v)] = true;
                } else if constexpr (std::is_same_v<T, Stmt::OracleCall> ||
                                     std::is_same_v<T, Stmt::Probe>) {
                    for (VarId v : n.inputs) check_read(v, assigned, path);
                    for (VarId v : n.outputs) assigned[static_cast<std::size_t>(v)] = true;
                } else if constexpr (std::is_same_v<T, Stmt::IfLeq>) {
                    check_read(n.guard, assigned, path);
                    std::vector<bool> a1 = assigned;
                    std::vector<bool> a2 = assigned;
                    walk(n.then_branch, a1, path + "/then");
                    walk(n.else_branch, a2, path + "/else");
                    for (std::size_t i = 0; i < assigned.size(); ++i)
                        assigned[i] = a1[i] && a2[i];
                } else if constexpr (std::is_same_v<T, Stmt::Repeat>) {
                    if (n.count < 1) fail(path, "repeat count must be positive");
                    // The first iteration is the binding constraint; later
                    // ones see a superset of assignments.
                    walk(n.body, assigned, path + "/body");
                } else if constexpr (std::is_same_v<T, Stmt::Assert>) {
                    for (VarId v : n.vars) check_read(v, assigned, path);
                    if (n.safe.boxes.empty()) {
                        fail(path, "assert safe set is empty");
                        return;
                    }
                    for (const SafeBox& b : n.safe.boxes) {
                        if (b.ranges.size() != n.vars.size())
                            fail(path, "assert safe box dimension mismatch");
                        for (const Interval& iv : b.ranges)
                            if (!(iv.lo <= iv.hi)) fail(path, "assert safe interval inverted");
                    }
                    if (n.safe.max_pairwise_overlap() > 1e-12)
                        fail(path, "assert safe boxes overlap");
                }
            },
            s->node);
    }
};

void check_guard_freshness(const Program& p, std::vector<Diagnostic>& diags) {
    UseCounts counts{std::vector<int>(p.var_count(), 0), std::vector<int>(p.var_count(), 0),
                     std::vector<int>(p.var_count(), 0)};
    count_uses(p.body, counts);
    std::function<void(const StmtPtr&, const StmtPtr&, std::string)> walk =
        [&](const StmtPtr& s, const StmtPtr& prev, std::string path) {
            if (!s) return;
            std::visit(
                [&](const auto& n) {
                    using T = std::decay_t<decltype(n)>;
                    if constexpr (std::is_same_v<T, Stmt::Seq>) {
                        StmtPtr before = prev;
                        int i = 0;
                        for (const auto& item : n.items) {
                            walk(item, before, path + "/" + std::to_string(i++));
                            before = item;
                        }
                    } else if constexpr (std::is_same_v<T, Stmt::IfLeq>) {
                        if (!guard_is_fresh(counts, prev, n.guard, false))
                            diags.push_back({path, "guard is not a fresh variable"});
                        walk(n.then_branch, nullptr, path + "/then");
                        walk(n.else_branch, nullptr, path + "/else");
                    } else if constexpr (std::is_same_v<T, Stmt::Repeat>) {
                        walk(n.body, nullptr, path + "/body");
                    }
                },
                s->node);
        };
    walk(p.body, nullptr, "");
}

}  // namespace

std::vector<Diagnostic> well_formed(const Program& p) {
    WfCheck check{p, {}};
    std::vector<bool> assigned(p.var_count(), false);
    for (VarId v : p.input_vars()) assigned[static_cast<std::size_t>(v)] = true;
    for (VarId v : p.input_vars()) {
        const auto& iv = *p.input_spec[static_cast<std::size_t>(v)];
        if (!(iv.lo <= iv.hi))
            check.fail("", "input interval inverted for " + p.var_names[v]);
    }
    check.walk(p.body, assigned, "");
    if (p.guards_normalized) check_guard_freshness(p, check.diags);
    return check.diags;
}

// --- JSON serialization -------------------------------------------------

namespace {

nlohmann::json expr_to_json(const Expr& e) {
    nlohmann::json j;
    j["terms"] = nlohmann::json::array();
    for (auto [v, c] : e.terms) j["terms"].push_back({{"var", v}, {"coef", c}});
    j["const"] = e.constant;
    static const char* names[] = {"none", "relu", "sigmoid", "abs", "min_const",
                                  "max_const", "square"};
    j["nonlin"] = names[static_cast<int>(e.nonlin)];
    j["nonlin_arg"] = e.nonlin_arg;
    return j;
}

Expr expr_from_json(const nlohmann::json& j) {
    Expr e;
    for (const auto& t : j.at("terms"))
        e.terms.emplace_back(t.at("var").get<int>(), t.at("coef").get<double>());
    e.constant = j.at("const").get<double>();
    std::string k = j.at("nonlin").get<std::string>();
    static const std::map<std::string, Expr::Nonlin> kinds = {
        {"none", Expr::Nonlin::none},         {"relu", Expr::Nonlin::relu},
        {"sigmoid", Expr::Nonlin::sigmoid},   {"abs", Expr::Nonlin::abs},
        {"min_const", Expr::Nonlin::min_const}, {"max_const", Expr::Nonlin::max_const},
        {"square", Expr::Nonlin::square}};
    e.nonlin = kinds.at(k);
    e.nonlin_arg = j.at("nonlin_arg").get<double>();
    return e;
}

nlohmann::json safeset_to_json(const SafeSet& s) {
    nlohmann::json j = nlohmann::json::array();
    for (const SafeBox& b : s.boxes) {
        nlohmann::json ranges = nlohmann::json::array();
        for (const Interval& iv : b.ranges) ranges.push_back({{"lo", iv.lo}, {"hi", iv.hi}});
        j.push_back(ranges);
    }
    return j;
}

SafeSet safeset_from_json(const nlohmann::json& j) {
    SafeSet s;
    for (const auto& bj : j) {
        SafeBox b;
        for (const auto& rj : bj)
            b.ranges.push_back(Interval{rj.at("lo").get<double>(), rj.at("hi").get<double>()});
        s.boxes.push_back(std::move(b));
    }
    return s;
}

nlohmann::json stmt_to_json(const StmtPtr& s) {
    nlohmann::json j;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Stmt::Seq>) {
                j["stmt"] = "seq";
                j["items"] = nlohmann::json::array();
                for (const auto& item : n.items) j["items"].push_back(stmt_to_json(item));
            } else if constexpr (std::is_same_v<T, Stmt::Assign>) {
                j["stmt"] = "assign";
                j["target"] = n.target;
                j["value"] = expr_to_json(n.value);
            } else if constexpr (std::is_same_v<T, Stmt::NeuralCall>) {
                j["stmt"] = "neural";
                j["module"] = n.module;
                j["inputs"] = n.inputs;
                j["outputs"] = n.outputs;
            } else if constexpr (std::is_same_v<T, Stmt::OracleCall>) {
                j["stmt"] = "oracle";
                j["module"] = n.module;
                j["inputs"] = n.inputs;
                j["outputs"] = n.outputs;
                j["oracle_id"] = n.oracle_id;
            } else if constexpr (std::is_same_v<T, Stmt::Probe>) {
                j["stmt"] = "probe";
                j["module"] = n.module;
                j["inputs"] = n.inputs;
                j["outputs"] = n.outputs;
            } else if constexpr (std::is_same_v<T, Stmt::IfLeq>) {
                j["stmt"] = "ifleq";
                j["guard"] = n.guard;
                j["threshold"] = n.threshold;
                j["then"] = stmt_to_json(n.then_branch);
                j["else"] = stmt_to_json(n.else_branch);
            } else if constexpr (std::is_same_v<T, Stmt::Repeat>) {
                j["stmt"] = "repeat";
                j["count"] = n.count;
                j["body"] = stmt_to_json(n.body);
            } else if constexpr (std::is_same_v<T, Stmt::Assert>) {
                j["stmt"] = "assert";
                j["vars"] = n.vars;
                j["safe"] = safeset_to_json(n.safe);
            }
        },
        s->node);
    return j;
}

StmtPtr stmt_from_json(const nlohmann::json& j) {
    std::string kind = j.at("stmt").get<std::string>();
    if (kind == "seq") {
        std::vector<StmtPtr> items;
        for (const auto& item : j.at("items")) items.push_back(stmt_from_json(item));
        return make_seq(std::move(items));
    }
    if (kind == "assign")
        return make_assign(j.at("target").get<int>(), expr_from_json(j.at("value")));
    if (kind == "neural")
        return make_neural(j.at("module").get<std::string>(),
                           j.at("inputs").get<std::vector<int>>(),
                           j.at("outputs").get<std::vector<int>>());
    if (kind == "oracle")
        return make_oracle(j.at("module").get<std::string>(),
                           j.at("inputs").get<std::vector<int>>(),
                           j.at("outputs").get<std::vector<int>>(),
                           j.at("oracle_id").get<int>());
    if (kind == "probe")
        return make_probe(j.at("module").get<std::string>(),
                          j.at("inputs").get<std::vector<int>>(),
                          j.at("outputs").get<std::vector<int>>());
    if (kind == "ifleq")
        return make_ifleq(j.at("guard").get<int>(), j.at("threshold").get<double>(),
                          stmt_from_json(j.at("then")), stmt_from_json(j.at("else")));
    if (kind == "repeat")
        return make_repeat(j.at("count").get<int>(), stmt_from_json(j.at("body")));
    if (kind == "assert")
        return make_assert(j.at("vars").get<std::vector<int>>(),
                           safeset_from_json(j.at("safe")));
    throw ConfigError("unknown statement tag " + kind);
}

}  // namespace

std::string Program::to_json() const {
    nlohmann::json j;
    j["vars"] = var_names;
    j["modules"] = nlohmann::json::object();
    for (const auto& [name, spec] : modules) {
        nlohmann::json acts = nlohmann::json::array();
        for (Activation a : spec.activations) {
            acts.push_back(a == Activation::relu ? "relu"
                                                 : (a == Activation::sigmoid ? "sigmoid" : "none"));
        }
        j["modules"][name] = {{"widths", spec.widths}, {"activations", acts}};
    }
    j["input_spec"] = nlohmann::json::object();
    for (std::size_t i = 0; i < input_spec.size(); ++i) {
        if (input_spec[i])
            j["input_spec"][var_names[i]] = {{"lo", input_spec[i]->lo},
                                             {"hi", input_spec[i]->hi}};
    }
    j["normalized"] = guards_normalized;
    j["body"] = stmt_to_json(body);
    return j.dump(2) + "\n";
}

Program Program::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Program p;
    for (const auto& name : j.at("vars")) p.add_var(name.get<std::string>());
    for (auto& [name, mj] : j.at("modules").items()) {
        MlpSpec spec;
        spec.widths = mj.at("widths").get<std::vector<int>>();
        for (const auto& a : mj.at("activations")) {
            std::string s = a.get<std::string>();
            spec.activations.push_back(s == "relu" ? Activation::relu
                                                   : (s == "sigmoid" ? Activation::sigmoid
                                                                     : Activation::none));
        }
        spec.validate();
        p.modules[name] = std::move(spec);
    }
    for (auto& [name, iv] : j.at("input_spec").items()) {
        p.input_spec[static_cast<std::size_t>(p.var(name))] =
            Interval{iv.at("lo").get<double>(), iv.at("hi").get<double>()};
    }
    p.guards_normalized = j.at("normalized").get<bool>();
    p.body = stmt_from_json(j.at("body"));
    return p;
}

}  // namespace nssafe
