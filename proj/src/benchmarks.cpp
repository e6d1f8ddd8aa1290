#include "nssafe/benchmarks.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "nssafe/errors.hpp"

namespace nssafe {

namespace {

constexpr double kWorld = 1e4;  // stand-in for unbounded safe-box sides

// --- patterns -------------------------------------------------------------

BenchmarkBundle build_pattern(int which, const BenchmarkConfig& cfg) {
    Program p;
    VarId x = p.add_var("x");
    VarId y = p.add_var("y");
    VarId z = p.add_var("z");
    double lo = which == 5 ? -1.0 : -5.0;
    double hi = which == 5 ? 1.0 : 5.0;
    p.input_spec[static_cast<std::size_t>(x)] =
        cfg.input_override.value_or(Interval{lo, hi});
    p.modules["pi"] = MlpSpec::dense(1, cfg.pattern_hidden, 1, Activation::none);

    StmtPtr call = make_neural("pi", {x}, {y});
    StmtPtr body;
    switch (which) {
        case 1:
            body = make_seq({call,
                             make_ifleq(y, 1.0, make_assign(z, Expr::of_const(10.0)),
                                        make_assign(z, Expr::of_const(1.0))),
                             make_assert({z}, SafeSet::single({Interval{-kWorld, 1.0}}))});
            break;
        case 2:
            body = make_seq({call,
                             make_ifleq(y, 1.0, make_assign(z, Expr::affine({{x, 1.0}}, 10.0)),
                                        make_assign(z, Expr::affine({{x, 1.0}}, -5.0))),
                             make_assert({z}, SafeSet::single({Interval{-kWorld, 0.0}}))});
            break;
        case 3:
            body = make_seq({call,
                             make_ifleq(y, 1.0, make_assign(z, Expr::affine({{y, -1.0}}, 10.0)),
                                        make_assign(z, Expr::of_const(1.0))),
                             make_assert({z}, SafeSet::single({Interval{-kWorld, 1.0}}))});
            break;
        case 4:
            body = make_seq(
                {call,
                 make_ifleq(y, -1.0, make_assign(z, Expr::of_const(1.0)),
                            make_seq({make_assign(z, Expr::of_var(y).with(Expr::Nonlin::square)),
                                      make_assign(z, Expr::affine({{z, 1.0}}, 2.0))})),
                 make_assert({z}, SafeSet::single({Interval{-kWorld, 1.0}}))});
            break;
        case 5:
            body = make_seq({call,
                             make_ifleq(y, 1.0, make_assign(z, Expr::of_var(y)),
                                        make_assign(z, Expr::of_const(-10.0))),
                             make_assert({z}, SafeSet::single({Interval{-5.0, 0.0}}))});
            break;
        default:
            throw UnknownBenchmark("pattern" + std::to_string(which));
    }
    p.body = body;
    return BenchmarkBundle{std::move(p), std::nullopt};
}

// --- thermostat -------------------------------------------------------------

// COOLING(x) = x - 0.1 (x - 60), WARMING(x, h) = x + 5 h - 0.1 (x - 75).
Expr cooling_expr(VarId x) { return Expr::affine({{x, 0.9}}, 6.0); }
Expr warming_expr(VarId x, VarId heat, double gain) {
    return Expr::affine({{x, 0.9}, {heat, gain}}, 7.5);
}

StmtPtr thermostat_assert(VarId x) {
    return make_assert({x}, SafeSet::single({Interval{55.0, 83.0}}));
}

BenchmarkBundle build_thermostat(const BenchmarkConfig& cfg) {
    int n = cfg.loop_len > 0 ? cfg.loop_len : 20;
    bool three = cfg.thermostat_branches == 3;
    Interval input = cfg.input_override.value_or(Interval{60.0, 64.0});

    auto make_vars = [&](Program& p, VarId& x, VarId& is_on, VarId& heat) {
        x = p.add_var("x");
        is_on = p.add_var("isOn");
        heat = p.add_var("heat");
        p.input_spec[static_cast<std::size_t>(x)] = input;
    };

    BenchmarkBundle bundle{Program{}, GroundTruthProgram{}};
    // trainable program
    {
        Program p;
        VarId x, is_on, heat;
        make_vars(p, x, is_on, heat);
        std::vector<StmtPtr> iter;
        if (!three) {
            p.modules["cool"] = MlpSpec::dense(1, cfg.net_hidden, 1, Activation::sigmoid);
            p.modules["heat"] = MlpSpec::dense(1, cfg.net_hidden, 2, Activation::sigmoid);
            StmtPtr cool_arm = make_seq({make_neural("cool", {x}, {is_on}),
                                         make_assign(x, cooling_expr(x))});
            StmtPtr heat_arm = make_seq({make_neural("heat", {x}, {is_on, heat}),
                                         make_assign(x, warming_expr(x, heat, 5.0))});
            iter = {make_ifleq(is_on, 0.5, cool_arm, heat_arm), thermostat_assert(x)};
        } else {
            // isOn encodes {cool, lowHeat, highHeat} as {0, 0.5, 1}.
            p.modules["cool"] = MlpSpec::dense(1, cfg.net_hidden, 1, Activation::sigmoid);
            p.modules["lowHeat"] = MlpSpec::dense(1, cfg.net_hidden, 2, Activation::sigmoid);
            p.modules["highHeat"] = MlpSpec::dense(1, cfg.net_hidden, 2, Activation::sigmoid);
            StmtPtr cool_arm = make_seq({make_neural("cool", {x}, {is_on}),
                                         make_assign(x, cooling_expr(x))});
            StmtPtr low_arm = make_seq({make_neural("lowHeat", {x}, {is_on, heat}),
                                        make_assign(x, warming_expr(x, heat, 2.5))});
            StmtPtr high_arm = make_seq({make_neural("highHeat", {x}, {is_on, heat}),
                                         make_assign(x, warming_expr(x, heat, 5.0))});
            iter = {make_ifleq(is_on, 0.25, cool_arm,
                               make_ifleq(is_on, 0.75, low_arm, high_arm)),
                    thermostat_assert(x)};
        }
        p.body = make_seq({make_assign(is_on, Expr::of_const(0.0)),
                           make_repeat(n, make_seq(std::move(iter)))});
        bundle.program = std::move(p);
    }
    // Ground truth: heat on below 62, off above 78, with the drive level
    // ramping down near 81 so the controller regulates just under the
    // ceiling. Both branch dynamics map [55,83] into itself for any heat in
    // [0, 0.16], so every join sequence stays provably safe while imitation
    // error has real room to overshoot.
    {
        Program p;
        VarId x, is_on, heat;
        make_vars(p, x, is_on, heat);
        auto heat_ramp = [&](double scale) {
            return make_seq({make_assign(heat, Expr::affine({{x, -0.2}}, 16.2)
                                                   .with(Expr::Nonlin::max_const, 0.0)),
                             make_assign(heat, Expr::of_var(heat).with(Expr::Nonlin::min_const, 1.0)),
                             make_assign(heat, Expr::affine({{heat, scale}}, 0.0))});
        };
        std::vector<StmtPtr> iter;
        if (!three) {
            StmtPtr cool_arm = make_seq(
                {make_ifleq(x, 62.0, make_assign(is_on, Expr::of_const(1.0)),
                            make_assign(is_on, Expr::of_const(0.0))),
                 make_probe("cool", {x}, {is_on}), make_assign(x, cooling_expr(x))});
            StmtPtr heat_arm = make_seq(
                {make_ifleq(x, 78.0, make_assign(is_on, Expr::of_const(1.0)),
                            make_assign(is_on, Expr::of_const(0.0))),
                 heat_ramp(0.14), make_probe("heat", {x}, {is_on, heat}),
                 make_assign(x, warming_expr(x, heat, 5.0))});
            iter = {make_ifleq(is_on, 0.5, cool_arm, heat_arm), thermostat_assert(x)};
        } else {
            StmtPtr cool_arm = make_seq(
                {make_ifleq(x, 62.0, make_assign(is_on, Expr::of_const(1.0)),
                            make_assign(is_on, Expr::of_const(0.0))),
                 make_probe("cool", {x}, {is_on}), make_assign(x, cooling_expr(x))});
            // low heat keeps pushing gently until 70, high heat below 65
            StmtPtr low_arm = make_seq(
                {make_ifleq(x, 65.0, make_assign(is_on, Expr::of_const(1.0)),
                            make_ifleq(x, 70.0, make_assign(is_on, Expr::of_const(0.5)),
                                       make_assign(is_on, Expr::of_const(0.0)))),
                 heat_ramp(0.14), make_probe("lowHeat", {x}, {is_on, heat}),
                 make_assign(x, warming_expr(x, heat, 2.5))});
            StmtPtr high_arm = make_seq(
                {make_ifleq(x, 65.0, make_assign(is_on, Expr::of_const(1.0)),
                            make_ifleq(x, 70.0, make_assign(is_on, Expr::of_const(0.5)),
                                       make_assign(is_on, Expr::of_const(0.0)))),
                 heat_ramp(0.14), make_probe("highHeat", {x}, {is_on, heat}),
                 make_assign(x, warming_expr(x, heat, 5.0))});
            iter = {make_ifleq(is_on, 0.25, cool_arm,
                               make_ifleq(is_on, 0.75, low_arm, high_arm)),
                    thermostat_assert(x)};
        }
        p.body = make_seq({make_assign(is_on, Expr::of_const(0.0)),
                           make_repeat(n, make_seq(std::move(iter)))});
        GroundTruthProgram gt;
        gt.program = std::move(p);
        ProbeNoise on_noise{{0.05}, {0.0}, {1.0}};
        gt.noise["cool"] = on_noise;
        gt.noise["heat"] = ProbeNoise{{0.05, 0.05}, {0.0, 0.0}, {1.0, 0.16}};
        if (three) {
            gt.noise["lowHeat"] = ProbeNoise{{0.05, 0.05}, {0.0, 0.0}, {1.0, 0.16}};
            gt.noise["highHeat"] = ProbeNoise{{0.05, 0.05}, {0.0, 0.0}, {1.0, 0.16}};
        }
        bundle.ground_truth = std::move(gt);
    }
    return bundle;
}

// --- aircraft collision -------------------------------------------------------

// Chebyshev separation: safe iff |dx| >= 40 or |dy| >= 40, as a disjoint
// four-box cover of the complement of the central square.
SafeSet ac_safe_set() {
    SafeSet s;
    s.boxes.push_back(SafeBox{{Interval{-kWorld, kWorld}, Interval{-kWorld, -40.0}}});
    s.boxes.push_back(SafeBox{{Interval{-kWorld, kWorld}, Interval{40.0, kWorld}}});
    s.boxes.push_back(SafeBox{{Interval{-kWorld, -40.0}, Interval{-40.0, 40.0}}});
    s.boxes.push_back(SafeBox{{Interval{40.0, kWorld}, Interval{-40.0, 40.0}}});
    return s;
}

constexpr double kAcSpeed = 5.0;
constexpr double kAcLateral = 30.0;

BenchmarkBundle build_ac(const BenchmarkConfig& cfg) {
    int n = cfg.loop_len > 0 ? cfg.loop_len : 15;

    auto build_skeleton = [&](Program& p, bool ground_truth) {
        VarId x1 = p.add_var("x1");
        p.input_spec[static_cast<std::size_t>(x1)] =
            cfg.input_override.value_or(Interval{12.0, 16.0});
        VarId y1 = p.add_var("y1");
        VarId x2 = p.add_var("x2");
        VarId y2 = p.add_var("y2");
        VarId stage = p.add_var("stage");
        VarId step = p.add_var("step");
        VarId i = p.add_var("i");
        VarId p0 = p.add_var("p0");
        VarId p1v = p.add_var("p1");
        VarId p2v = p.add_var("p2");
        VarId p3v = p.add_var("p3");
        VarId dx = p.add_var("dx");
        VarId dy = p.add_var("dy");

        p.modules["pi"] = MlpSpec::dense(6, cfg.net_hidden, 5, Activation::sigmoid);

        StmtPtr controller;
        if (!ground_truth) {
            controller = make_neural("pi", {x1, y1, x2, y2, step, stage},
                                     {p0, p1v, p2v, p3v, step});
        } else {
            // Timed stage machine: LEFT for left_ticks, STRAIGHT, RIGHT, then
            // CRUISE. step reports progress through the current stage in [0,1].
            VarId step_in = p.add_var("step_in");
            double l = cfg.ac_left_ticks, s = cfg.ac_straight_ticks, r = cfg.ac_right_ticks;
            auto onehot = [&](int k, Expr step_val) {
                return make_seq({make_assign(p0, Expr::of_const(k == 0 ? 1.0 : 0.0)),
                                 make_assign(p1v, Expr::of_const(k == 1 ? 1.0 : 0.0)),
                                 make_assign(p2v, Expr::of_const(k == 2 ? 1.0 : 0.0)),
                                 make_assign(p3v, Expr::of_const(k == 3 ? 1.0 : 0.0)),
                                 make_assign(step, step_val)});
            };
            // stages: 0 = CRUISE, 1 = LEFT, 2 = STRAIGHT, 3 = RIGHT
            StmtPtr choose = make_ifleq(
                i, l - 0.5, onehot(1, Expr::affine({{i, 1.0 / l}}, 1.0 / l)),
                make_ifleq(i, l + s - 0.5, onehot(2, Expr::affine({{i, 1.0 / s}}, (1.0 - l) / s)),
                           make_ifleq(i, l + s + r - 0.5,
                                      onehot(3, Expr::affine({{i, 1.0 / r}}, (1.0 - l - s) / r)),
                                      onehot(0, Expr::of_const(0.0)))));
            controller = make_seq({make_assign(step_in, Expr::of_var(step)), choose,
                                   make_probe("pi", {x1, y1, x2, y2, step_in, stage},
                                              {p0, p1v, p2v, p3v, step})});
        }

        auto move1 = [&](double lateral) {
            std::vector<StmtPtr> ms;
            if (lateral != 0.0)
                ms.push_back(make_assign(x1, Expr::affine({{x1, 1.0}}, lateral)));
            ms.push_back(make_assign(y1, Expr::affine({{y1, 1.0}}, -kAcSpeed)));
            return make_seq(std::move(ms));
        };
        StmtPtr select = lower_argmax(p, stage, {p0, p1v, p2v, p3v},
                                      {move1(0.0), move1(kAcLateral), move1(0.0),
                                       move1(-kAcLateral)});

        StmtPtr iter = make_seq({controller, select,
                                 make_assign(y2, Expr::affine({{y2, 1.0}}, kAcSpeed)),
                                 make_assign(i, Expr::affine({{i, 1.0}}, 1.0)),
                                 make_assign(dx, Expr::affine({{x1, 1.0}, {x2, -1.0}}, 0.0)),
                                 make_assign(dy, Expr::affine({{y1, 1.0}, {y2, -1.0}}, 0.0)),
                                 make_assert({dx, dy}, ac_safe_set())});

        p.body = make_seq({make_assign(y1, Expr::of_const(-15.0)),
                           make_assign(x2, Expr::of_const(0.0)),
                           make_assign(y2, Expr::of_const(0.0)),
                           make_assign(stage, Expr::of_const(0.0)),
                           make_assign(step, Expr::of_const(0.0)),
                           make_assign(i, Expr::of_const(0.0)),
                           make_assign(p0, Expr::of_const(0.0)),
                           make_assign(p1v, Expr::of_const(0.0)),
                           make_assign(p2v, Expr::of_const(0.0)),
                           make_assign(p3v, Expr::of_const(0.0)),
                           make_repeat(n, iter)});
    };

    BenchmarkBundle bundle{Program{}, GroundTruthProgram{}};
    build_skeleton(bundle.program, false);
    GroundTruthProgram gt;
    build_skeleton(gt.program, true);
    bundle.ground_truth = std::move(gt);
    return bundle;
}

// --- racetrack ------------------------------------------------------------

// Corridor map: columns 0..7 allow rows [3,6], 8..12 widen to [1,8], then a
// taper column so unit steps can always return to the narrow section.
// y counts completed steps.
struct TrackMap {
    static Interval allowed(int col) {
        if (col >= 8 && col <= 12) return Interval{1.0, 8.0};
        if (col == 13) return Interval{2.0, 7.0};
        return Interval{3.0, 6.0};
    }
};

SafeSet racetrack_wall_safe(int n) {
    SafeSet s;
    int col = 1;
    while (col <= n) {
        int end = col;
        Interval a = TrackMap::allowed(col);
        while (end + 1 <= n && TrackMap::allowed(end + 1).lo == a.lo &&
               TrackMap::allowed(end + 1).hi == a.hi)
            ++end;
        s.boxes.push_back(SafeBox{{a, Interval{col - 0.5, end + 0.5}}});
        col = end + 1;
    }
    return s;
}

std::vector<double> racetrack_planner(const std::vector<double>& in, Rng& rng, bool noise) {
    double x = in[0];
    double y = in[1];
    int next_col = static_cast<int>(std::lround(y)) + 1;
    Interval allowed = TrackMap::allowed(next_col);
    // actions: 0 = up (+1), 1 = straight, 2 = down (-1)
    std::vector<int> ok;
    const double deltas[3] = {1.0, 0.0, -1.0};
    for (int a = 0; a < 3; ++a) {
        double nx = x + deltas[a];
        if (allowed.lo <= nx && nx <= allowed.hi) ok.push_back(a);
    }
    int pick;
    if (ok.empty()) {
        pick = 1;  // should not happen on this map; keep going straight
    } else if (noise) {
        pick = ok[static_cast<std::size_t>(rng.next_below(ok.size()))];
    } else {
        // deterministic preference: straight, then up, then down
        pick = ok[0];
        for (int a : {1, 0, 2}) {
            if (std::find(ok.begin(), ok.end(), a) != ok.end()) {
                pick = a;
                break;
            }
        }
    }
    std::vector<double> out(3, 0.0);
    out[static_cast<std::size_t>(pick)] = 1.0;
    return out;
}

constexpr int kRacetrackPlannerOracle = 1;

BenchmarkBundle build_racetrack(const BenchmarkConfig& cfg) {
    int n = cfg.loop_len > 0 ? cfg.loop_len : 20;

    auto build_skeleton = [&](Program& p, bool ground_truth) {
        VarId x = p.add_var("x");
        p.input_spec[static_cast<std::size_t>(x)] =
            cfg.input_override.value_or(Interval{5.0, 6.0});
        VarId x1 = p.add_var("x1");
        VarId y1 = p.add_var("y1");
        VarId x2 = p.add_var("x2");
        VarId y2 = p.add_var("y2");
        VarId a1 = p.add_var("a1");
        VarId a2 = p.add_var("a2");
        VarId dx = p.add_var("dx");
        std::vector<VarId> q1 = {p.add_var("q10"), p.add_var("q11"), p.add_var("q12")};
        std::vector<VarId> q2 = {p.add_var("q20"), p.add_var("q21"), p.add_var("q22")};

        p.modules["agent1"] = MlpSpec::dense(2, cfg.net_hidden, 3, Activation::relu);
        p.modules["agent2"] = MlpSpec::dense(2, cfg.net_hidden, 3, Activation::relu);

        StmtPtr c1, c2;
        if (!ground_truth) {
            c1 = make_neural("agent1", {x1, y1}, q1);
            c2 = make_neural("agent2", {x2, y2}, q2);
        } else {
            // oracle calls record their own I/O; no separate probe needed
            c1 = make_oracle("agent1", {x1, y1}, q1, kRacetrackPlannerOracle);
            c2 = make_oracle("agent2", {x2, y2}, q2, kRacetrackPlannerOracle);
        }

        auto mover = [&](VarId xv) {
            return std::vector<StmtPtr>{make_assign(xv, Expr::affine({{xv, 1.0}}, 1.0)),
                                        make_seq({}),
                                        make_assign(xv, Expr::affine({{xv, 1.0}}, -1.0))};
        };
        StmtPtr sel1 = lower_argmax(p, a1, q1, mover(x1));
        StmtPtr sel2 = lower_argmax(p, a2, q2, mover(x2));

        SafeSet walls = racetrack_wall_safe(n);
        SafeSet apart;
        apart.boxes.push_back(SafeBox{{Interval{-kWorld, -1.0}}});
        apart.boxes.push_back(SafeBox{{Interval{1.0, kWorld}}});

        StmtPtr iter = make_seq({c1, c2, sel1, sel2,
                                 make_assign(y1, Expr::affine({{y1, 1.0}}, 1.0)),
                                 make_assign(y2, Expr::affine({{y2, 1.0}}, 1.0)),
                                 make_assert({x1, y1}, walls),
                                 make_assert({x2, y2}, walls),
                                 make_assign(dx, Expr::affine({{x1, 1.0}, {x2, -1.0}}, 0.0)),
                                 make_assert({dx}, apart)});

        p.body = make_seq({make_assign(x1, Expr::of_var(x)),
                           make_assign(y1, Expr::of_const(0.0)),
                           make_assign(x2, Expr::of_var(x)),
                           make_assign(y2, Expr::of_const(0.0)),
                           make_repeat(n, iter)});
    };

    BenchmarkBundle bundle{Program{}, GroundTruthProgram{}};
    build_skeleton(bundle.program, false);
    GroundTruthProgram gt;
    build_skeleton(gt.program, true);
    gt.oracles[kRacetrackPlannerOracle] = &racetrack_planner;
    gt.sound_executable = false;  // stochastic planner, per-agent data only
    bundle.ground_truth = std::move(gt);
    return bundle;
}

// --- cartpole ----------------------------------------------------------------

// Linearization about the upright equilibrium (cart mass 1.0, pole mass 0.1,
// half-length 0.5, g 9.8, dt 0.02), Euler-discretized:
//   th_acc = 15.7756 th - 1.4634 u,  x_acc = 0.9756 u - 0.7171 th
constexpr double kThAccTh = 15.7756097560975626;
constexpr double kThAccU = 1.4634146341463414;
constexpr double kXAccU = 0.9756097560975610;
constexpr double kXAccTh = 0.7170731707317074;
constexpr double kDt = 0.02;

// Discrete LQR gain for the dynamics above (Q = diag(100,10,10,1), R = 1):
// u = g . s, saturated to [-1, 1].
constexpr double kGain[4] = {8.779826198557128, 9.852285297983155, 59.68551505056677,
                             15.386672281159056};

BenchmarkBundle build_cartpole(const BenchmarkConfig& cfg) {
    int n = cfg.loop_len > 0 ? cfg.loop_len : 10;
    bool angle = cfg.cartpole_constraint == "angle";

    auto build_skeleton = [&](Program& p, bool ground_truth) {
        VarId cx = p.add_var("cx");
        VarId cv = p.add_var("cv");
        VarId th = p.add_var("th");
        VarId om = p.add_var("om");
        Interval s0 = cfg.input_override.value_or(Interval{-0.05, 0.05});
        for (VarId v : {cx, cv, th, om}) p.input_spec[static_cast<std::size_t>(v)] = s0;
        VarId a0 = p.add_var("a0");
        VarId a1 = p.add_var("a1");
        VarId u = p.add_var("u");
        VarId nth = p.add_var("nth");

        p.modules["ctrl"] = MlpSpec::dense(4, cfg.net_hidden, 2, Activation::sigmoid);

        StmtPtr controller;
        if (!ground_truth) {
            controller = make_neural("ctrl", {cx, cv, th, om}, {a0, a1});
        } else {
            controller = make_seq(
                {make_assign(u, Expr::affine({{cx, kGain[0]}, {cv, kGain[1]},
                                              {th, kGain[2]}, {om, kGain[3]}},
                                             0.0)),
                 make_assign(u, Expr::of_var(u).with(Expr::Nonlin::max_const, -1.0)),
                 make_assign(u, Expr::of_var(u).with(Expr::Nonlin::min_const, 1.0)),
                 make_assign(a0, Expr::affine({{u, -0.5}}, 0.5)),
                 make_assign(a1, Expr::affine({{u, 0.5}}, 0.5)),
                 make_probe("ctrl", {cx, cv, th, om}, {a0, a1})});
        }

        SafeSet safe = angle ? SafeSet::single({Interval{-0.2094, 0.2094}})
                             : SafeSet::single({Interval{-0.1, 0.1}});
        VarId asserted = angle ? th : cx;

        StmtPtr iter = make_seq(
            {controller,
             make_assign(u, Expr::affine({{a1, 1.0}, {a0, -1.0}}, 0.0)),
             make_assign(cx, Expr::affine({{cx, 1.0}, {cv, kDt}}, 0.0)),
             make_assign(cv, Expr::affine({{cv, 1.0}, {u, kDt * kXAccU}, {th, -kDt * kXAccTh}},
                                          0.0)),
             make_assign(nth, Expr::affine({{th, 1.0}, {om, kDt}}, 0.0)),
             make_assign(om, Expr::affine({{om, 1.0}, {th, kDt * kThAccTh}, {u, -kDt * kThAccU}},
                                          0.0)),
             make_assign(th, Expr::of_var(nth)),
             make_assert({asserted}, safe)});

        p.body = make_repeat(n, iter);
    };

    BenchmarkBundle bundle{Program{}, GroundTruthProgram{}};
    build_skeleton(bundle.program, false);
    GroundTruthProgram gt;
    build_skeleton(gt.program, true);
    bundle.ground_truth = std::move(gt);
    return bundle;
}

}  // namespace

BenchmarkBundle build_benchmark(const std::string& name, const BenchmarkConfig& cfg) {
    if (name == "pattern1") return build_pattern(1, cfg);
    if (name == "pattern2") return build_pattern(2, cfg);
    if (name == "pattern3") return build_pattern(3, cfg);
    if (name == "pattern4") return build_pattern(4, cfg);
    if (name == "pattern5") return build_pattern(5, cfg);
    if (name == "thermostat") return build_thermostat(cfg);
    if (name == "ac") return build_ac(cfg);
    if (name == "racetrack") return build_racetrack(cfg);
    if (name == "cartpole") return build_cartpole(cfg);
    throw UnknownBenchmark("unknown benchmark: " + name);
}

std::vector<std::string> benchmark_names() {
    return {"pattern1", "pattern2", "pattern3", "pattern4", "pattern5",
            "thermostat", "ac", "racetrack", "cartpole"};
}

std::string BenchmarkConfig::to_canonical_json() const {
    nlohmann::json j;
    j["net_hidden"] = net_hidden;
    j["pattern_hidden"] = pattern_hidden;
    j["loop_len"] = loop_len;
    if (input_override)
        j["input_override"] = {{"lo", input_override->lo}, {"hi", input_override->hi}};
    j["thermostat_branches"] = thermostat_branches;
    j["cartpole_constraint"] = cartpole_constraint;
    j["ac_ticks"] = {ac_left_ticks, ac_straight_ticks, ac_right_ticks};
    return j.dump();
}

BenchmarkConfig BenchmarkConfig::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    BenchmarkConfig cfg;
    if (j.contains("net_hidden")) cfg.net_hidden = j["net_hidden"].get<std::vector<int>>();
    if (j.contains("pattern_hidden"))
        cfg.pattern_hidden = j["pattern_hidden"].get<std::vector<int>>();
    if (j.contains("loop_len")) cfg.loop_len = j["loop_len"].get<int>();
    if (j.contains("input_override"))
        cfg.input_override = Interval{j["input_override"]["lo"].get<double>(),
                                      j["input_override"]["hi"].get<double>()};
    if (j.contains("thermostat_branches"))
        cfg.thermostat_branches = j["thermostat_branches"].get<int>();
    if (j.contains("cartpole_constraint"))
        cfg.cartpole_constraint = j["cartpole_constraint"].get<std::string>();
    if (j.contains("ac_ticks")) {
        auto t = j["ac_ticks"].get<std::vector<int>>();
        cfg.ac_left_ticks = t[0];
        cfg.ac_straight_ticks = t[1];
        cfg.ac_right_ticks = t[2];
    }
    return cfg;
}

}  // namespace nssafe
