#include "doctest.h"
#include "nssafe/benchmarks.hpp"
#include "nssafe/exec.hpp"
#include "nssafe/ir.hpp"
#include "oracles.hpp"

using namespace nssafe;

namespace {

// Tiny program: y := 2x + 1; if y <= 1 { z := 10 } else { z := x - 5 }; assert z <= 0
Program tiny_program() {
    Program p;
    VarId x = p.add_var("x");
    VarId y = p.add_var("y");
    VarId z = p.add_var("z");
    p.input_spec[0] = Interval{-1.0, 1.0};
    p.body = make_seq({make_assign(y, Expr::affine({{x, 2.0}}, 1.0)),
                       make_ifleq(y, 1.0, make_assign(z, Expr::of_const(10.0)),
                                  make_assign(z, Expr::affine({{x, 1.0}}, -5.0))),
                       make_assert({z}, SafeSet::single({Interval{-100.0, 0.0}}))});
    return p;
}

}  // namespace

TEST_CASE("well_formed catches use before assign and arity mismatches") {
    Program p;
    VarId x = p.add_var("x");
    VarId y = p.add_var("y");
    p.input_spec[0] = Interval{0, 1};
    p.body = make_seq({make_assign(x, Expr::of_var(y))});  // y never assigned
    auto diags = well_formed(p);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].reason.find("use before assign") != std::string::npos);
    CHECK(diags[0].reason.find("y") != std::string::npos);

    Program q;
    VarId a = q.add_var("a");
    q.input_spec[0] = Interval{0, 1};
    q.modules["net"] = MlpSpec::dense(2, {4}, 1, Activation::none);
    q.body = make_seq({make_neural("net", {a}, {a})});  // arity 1 vs 2
    auto diags2 = well_formed(q);
    CHECK(!diags2.empty());
}

TEST_CASE("normalize_guards aliases guards and is semantics-preserving") {
    Program p = tiny_program();
    Program n = normalize_guards(p);
    CHECK(n.guards_normalized);
    // y is assigned immediately before its branch and read nowhere else, so
    // it already is a fresh guard; no alias is needed
    CHECK(n.var_count() == p.var_count());
    CHECK(well_formed(n).empty());

    ParameterStore empty;
    for (int i = 0; i < 100; ++i) {
        Rng rng(4000 + i);
        double x = rng.next_uniform(-1, 1);
        Rng r1(1), r2(1);
        ConcreteResult before = exec_concrete(p, empty, {x}, r1);
        ConcreteResult after = exec_concrete(n, empty, {x}, r2);
        CHECK(before.env[2] == after.env[2]);  // z identical
        CHECK(before.assert_values == after.assert_values);
    }
}

TEST_CASE("normalize_guards leaves already-fresh guards alone") {
    Program p = tiny_program();
    Program once = normalize_guards(p);
    Program twice = normalize_guards(once);
    CHECK(twice.var_count() == once.var_count());
}

TEST_CASE("normalize_guards introduces an alias for reused guard variables") {
    // y guards the branch AND feeds the else assignment: needs a fresh copy
    Program p;
    VarId x = p.add_var("x");
    VarId y = p.add_var("y");
    VarId z = p.add_var("z");
    p.input_spec[0] = Interval{-1.0, 1.0};
    p.body = make_seq({make_assign(y, Expr::affine({{x, 2.0}}, 1.0)),
                       make_ifleq(y, 1.0, make_assign(z, Expr::of_const(10.0)),
                                  make_assign(z, Expr::affine({{y, 1.0}}, -5.0))),
                       make_assert({z}, SafeSet::single({Interval{-100.0, 100.0}}))});
    Program n = normalize_guards(p);
    CHECK(n.var_count() == p.var_count() + 1);
    CHECK(well_formed(n).empty());

    ParameterStore empty;
    for (int i = 0; i < 100; ++i) {
        Rng rng(8700 + i);
        double xv = rng.next_uniform(-1, 1);
        Rng r1(1), r2(1);
        CHECK(exec_concrete(p, empty, {xv}, r1).env[2] ==
              exec_concrete(n, empty, {xv}, r2).env[2]);
    }
}

TEST_CASE("lower_argmax matches a direct argmax oracle") {
    for (int n_cand : {2, 3, 4}) {
        Program p;
        std::vector<VarId> cands;
        for (int i = 0; i < n_cand; ++i) cands.push_back(p.add_var("p" + std::to_string(i)));
        for (int i = 0; i < n_cand; ++i)
            p.input_spec[static_cast<std::size_t>(cands[i])] = Interval{-1, 1};
        VarId out = p.add_var("which");
        p.body = make_seq({lower_argmax(p, out, cands, std::vector<StmtPtr>(
                                                           n_cand, make_seq({})))});
        ParameterStore empty;
        Rng rng(555);
        for (int rep = 0; rep < 3400; ++rep) {
            std::vector<double> xs;
            for (int i = 0; i < n_cand; ++i) xs.push_back(rng.next_uniform(-1, 1));
            Rng r(1);
            ConcreteResult res = exec_concrete(p, empty, xs, r);
            CHECK(res.env[static_cast<std::size_t>(out)] ==
                  static_cast<double>(oracles::argmax_lowest(xs)));
        }
        // exact ties resolve to the lowest index
        Rng r(1);
        std::vector<double> equal(n_cand, 0.25);
        ConcreteResult res = exec_concrete(p, empty, equal, r);
        CHECK(res.env[static_cast<std::size_t>(out)] == 0.0);
    }
}

TEST_CASE("program json round-trip") {
    Program p = tiny_program();
    Program back = Program::from_json(p.to_json());
    CHECK(back.var_names == p.var_names);
    CHECK(back.to_json() == p.to_json());

    ParameterStore empty;
    Rng r1(1), r2(1);
    CHECK(exec_concrete(p, empty, {0.4}, r1).assert_values ==
          exec_concrete(back, empty, {0.4}, r2).assert_values);
}

TEST_CASE("safe set disjointness check") {
    SafeSet overlapping;
    overlapping.boxes.push_back(SafeBox{{Interval{0, 2}}});
    overlapping.boxes.push_back(SafeBox{{Interval{1, 3}}});
    CHECK(overlapping.max_pairwise_overlap() == doctest::Approx(1.0));

    SafeSet touching;
    touching.boxes.push_back(SafeBox{{Interval{0, 1}}});
    touching.boxes.push_back(SafeBox{{Interval{1, 2}}});
    CHECK(touching.max_pairwise_overlap() == 0.0);
}

TEST_CASE("all shipped benchmarks are well-formed after normalization") {
    for (const std::string& name : benchmark_names()) {
        BenchmarkConfig cfg;
        cfg.net_hidden = {8, 8};
        cfg.pattern_hidden = {8, 8};
        BenchmarkBundle b = build_benchmark(name, cfg);
        Program n = normalize_guards(b.program);
        auto diags = well_formed(n);
        for (const auto& d : diags) MESSAGE(name, " ", d.path, ": ", d.reason);
        CHECK(diags.empty());
        if (b.ground_truth) {
            Program g = normalize_guards(b.ground_truth->program);
            auto gd = well_formed(g);
            for (const auto& d : gd) MESSAGE(name, " gt ", d.path, ": ", d.reason);
            CHECK(gd.empty());
        }
    }
    CHECK_THROWS_AS(build_benchmark("nope", {}), UnknownBenchmark);
}
