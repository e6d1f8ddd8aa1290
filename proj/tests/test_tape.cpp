#include <cmath>

#include "doctest.h"
#include "nssafe/tape.hpp"
#include "oracles.hpp"

using namespace nssafe;

TEST_CASE("primitive primals") {
    Tape t;
    CHECK(t.value(t.unary(OpKind::relu, t.constant(-3.0))) == 0.0);
    CHECK(t.value(t.unary(OpKind::sigmoid, t.constant(0.0))) == doctest::Approx(0.5));
    CHECK(t.value(t.unary(OpKind::clamp01, t.constant(1.7))) == 1.0);
    CHECK(t.value(t.unary(OpKind::abs, t.constant(-2.5))) == 2.5);
    CHECK(t.value(t.binary(OpKind::min, t.constant(2.0), t.constant(-1.0))) == -1.0);
    CHECK(t.value(t.binary(OpKind::max, t.constant(2.0), t.constant(-1.0))) == 2.0);
}

TEST_CASE("domain errors") {
    Tape t;
    NodeHandle z = t.constant(0.0);
    NodeHandle one = t.constant(1.0);
    CHECK_THROWS_AS(t.binary(OpKind::div, one, z), DomainError);
    CHECK_THROWS_AS(t.unary(OpKind::log, z), DomainError);
    CHECK_THROWS_AS(t.unary(OpKind::sqrt, t.constant(-1.0)), DomainError);
}

TEST_CASE("simple gradients") {
    Tape t;
    NodeHandle x = t.constant(2.0);
    NodeHandle y = t.unary(OpKind::relu, x);
    auto g = grad(t, y, std::vector<NodeHandle>{x});
    CHECK(g[0] == 1.0);

    Tape t2;
    NodeHandle x2 = t2.constant(0.0);
    NodeHandle s = t2.unary(OpKind::sigmoid, x2);
    auto g2 = grad(t2, s, std::vector<NodeHandle>{x2});
    CHECK(g2[0] == doctest::Approx(0.25).epsilon(1e-12));  // sigma'(0) = sigma(0)(1-sigma(0))
}

TEST_CASE("clamp01 saturation has zero gradient") {
    Tape t;
    NodeHandle x = t.constant(1.7);
    NodeHandle c = t.unary(OpKind::clamp01, x);
    CHECK(t.value(c) == 1.0);
    auto g = grad(t, c, std::vector<NodeHandle>{x});
    CHECK(g[0] == 0.0);
}

TEST_CASE("detach blocks gradient, keeps primal") {
    Tape t;
    NodeHandle x = t.constant(3.0);
    NodeHandle d = t.unary(OpKind::detach, x);
    CHECK(t.value(d) == 3.0);
    NodeHandle y = t.binary(OpKind::mul, d, x);  // y = detach(x) * x
    auto g = grad(t, y, std::vector<NodeHandle>{x});
    CHECK(g[0] == 3.0);  // only the pathwise factor survives
}

TEST_CASE("relu subgradient at the kink is zero") {
    Tape t;
    NodeHandle x = t.constant(0.0);
    NodeHandle y = t.unary(OpKind::relu, x);
    auto g = grad(t, y, std::vector<NodeHandle>{x});
    CHECK(g[0] == 0.0);
}

namespace {

// Random composite of in-scope primitives over `n` leaves.
double build_composite(Tape& t, const std::vector<NodeHandle>& leaves, nssafe::Rng& rng,
                       NodeHandle& out) {
    std::vector<NodeHandle> pool = leaves;
    for (int step = 0; step < 40; ++step) {
        std::uint64_t pick = rng.next_below(9);
        NodeHandle a = pool[rng.next_below(pool.size())];
        NodeHandle b = pool[rng.next_below(pool.size())];
        NodeHandle r;
        switch (pick) {
            case 0: r = t.binary(OpKind::add, a, b); break;
            case 1: r = t.binary(OpKind::sub, a, b); break;
            case 2: r = t.binary(OpKind::mul, a, b); break;
            case 3: r = t.unary(OpKind::sigmoid, a); break;
            case 4: r = t.unary(OpKind::relu, a); break;
            case 5: r = t.binary(OpKind::min, a, b); break;
            case 6: r = t.binary(OpKind::max, a, b); break;
            case 7: r = t.unary(OpKind::neg, a); break;
            default: r = t.unary(OpKind::abs, a); break;
        }
        pool.push_back(r);
    }
    // squash into a smooth scalar so kinks from min/max stay rare at the
    // sampled points
    NodeHandle acc = pool.back();
    acc = t.unary(OpKind::sigmoid, acc);
    out = acc;
    return t.value(acc);
}

}  // namespace

TEST_CASE("composite gradients match central finite differences") {
    nssafe::Rng rng(1234);
    int checked = 0;
    for (int rep = 0; rep < 120; ++rep) {
        std::vector<double> x(20);
        for (double& v : x) v = rng.next_uniform(-2.0, 2.0);
        nssafe::Rng shape(777 + rep);

        auto eval = [&](const std::vector<double>& point) {
            Tape t;
            std::vector<NodeHandle> leaves;
            for (double v : point) leaves.push_back(t.constant(v));
            NodeHandle out;
            nssafe::Rng shape_copy(777 + rep);
            build_composite(t, leaves, shape_copy, out);
            return t.value(out);
        };

        Tape t;
        std::vector<NodeHandle> leaves;
        for (double v : x) leaves.push_back(t.constant(v));
        NodeHandle out;
        build_composite(t, leaves, shape, out);
        auto g = grad(t, out, leaves);
        auto fd = oracles::finite_diff(eval, x);
        bool all_ok = true;
        for (std::size_t i = 0; i < x.size(); ++i)
            all_ok = all_ok && oracles::close_rel(g[i], fd[i], 1e-4, 1e-6);
        if (all_ok) ++checked;
    }
    // min/max/relu kinks can land exactly on a sampled point; nearly all
    // draws must agree with the numeric derivative
    CHECK(checked >= 114);
}

TEST_CASE("tape determinism") {
    auto run = [] {
        Tape t;
        NodeHandle a = t.constant(1.25);
        NodeHandle b = t.constant(-0.75);
        NodeHandle c = t.binary(OpKind::mul, t.binary(OpKind::add, a, b),
                                t.unary(OpKind::sigmoid, a));
        auto g = grad(t, c, std::vector<NodeHandle>{a, b});
        return std::pair(t.value(c), g);
    };
    auto [v1, g1] = run();
    auto [v2, g2] = run();
    CHECK(v1 == v2);
    CHECK(g1 == g2);
}

TEST_CASE("apply dispatch and arity checks") {
    Tape t;
    NodeHandle a = apply(t, OpKind::constant, {}, 4.0);
    CHECK(t.value(a) == 4.0);
    std::vector<NodeHandle> one{a};
    CHECK(t.value(apply(t, OpKind::sqrt, one)) == 2.0);
    CHECK_THROWS_AS(apply(t, OpKind::add, one), ArityError);
}
