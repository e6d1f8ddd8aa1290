#include <cmath>

#include "doctest.h"
#include "nssafe/safety.hpp"
#include "oracles.hpp"

using namespace nssafe;

namespace {

SafeSet set1d(double lo, double hi) { return SafeSet::single({Interval{lo, hi}}); }

Box<double> vbox(double lo, double hi) {
    return Box<double>{{(lo + hi) / 2}, {(hi - lo) / 2}};
}

}  // namespace

TEST_CASE("unsafe_point distances") {
    CHECK(unsafe_point({85.0}, set1d(55, 83)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(unsafe_point({60.0}, set1d(55, 83)) == 0.0);

    SafeSet two;
    two.boxes.push_back(SafeBox{{Interval{0, 1}}});
    two.boxes.push_back(SafeBox{{Interval{3, 4}}});
    CHECK(unsafe_point({2.0}, two) == doctest::Approx(1.0).epsilon(1e-12));

    // euclidean over two axes
    SafeSet sq = SafeSet::single({Interval{0, 1}, Interval{0, 1}});
    CHECK(unsafe_point({4.0, 5.0}, sq) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("unsafe_box overlap and disjoint branches") {
    CHECK(unsafe_box(vbox(80, 90), set1d(55, 83)) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(unsafe_box(vbox(90, 100), set1d(55, 83)) == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(unsafe_box(vbox(60, 70), set1d(55, 83)) == 0.0);
}

TEST_CASE("unsafe_box across a disjoint union") {
    SafeSet two;
    two.boxes.push_back(SafeBox{{Interval{0, 1}}});
    two.boxes.push_back(SafeBox{{Interval{3, 4}}});
    // box [1.5, 2] sits between: distance 0.5 to the left box -> 1.5
    CHECK(unsafe_box(vbox(1.5, 2.0), two) == doctest::Approx(1.5).epsilon(1e-12));
    // box spanning both boxes: overlap 1 + 1 of width 5
    CHECK(unsafe_box(vbox(0, 5), two) == doctest::Approx(1.0 - 2.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("degenerate boxes fall back to counting measure") {
    CHECK(unsafe_box(vbox(60, 60), set1d(55, 83)) == 0.0);   // point inside
    CHECK(unsafe_box(vbox(90, 90), set1d(55, 83)) == doctest::Approx(8.0));  // point outside
    // 2-d: one degenerate axis inside, one interval axis overlapping half
    Box<double> b{{0.5, 0.0}, {0.5, 0.0}};
    SafeSet s = SafeSet::single({Interval{0, 0.5}, Interval{-1, 1}});
    CHECK(unsafe_box(b, s) == doctest::Approx(0.5));
}

TEST_CASE("trajectory loss is the sum of per-assert terms") {
    std::vector<double> terms = {0.7, 8.0};
    CHECK(sum_terms(terms, 0.0) == doctest::Approx(8.7).epsilon(1e-12));
    CHECK(sum_terms(std::vector<double>{}, 0.0) == 0.0);
    std::vector<double> one = {0.42};
    CHECK(sum_terms(one, 0.0) == 0.42);
}

TEST_CASE("zero iff contained, dominance, and the regime seam") {
    Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
        double lo = rng.next_uniform(-5, 5);
        double hi = lo + rng.next_uniform(0, 3);
        double alo = rng.next_uniform(-5, 5);
        double ahi = alo + rng.next_uniform(0.1, 3);
        Box<double> v = vbox(lo, hi);
        SafeSet a = set1d(alo, ahi);
        double u = unsafe_box(v, a);
        bool contained = alo <= lo && hi <= ahi;
        if (contained) {
            CHECK(u <= 1e-9);
            // dominance: every concrete point in a zero-loss box is safe
            for (int k = 0; k < 5; ++k) {
                double x = rng.next_uniform(lo, hi);
                CHECK(unsafe_point({x}, a) == 0.0);
            }
        } else {
            CHECK(u > 1e-9);
        }
    }

    // seam: vanishing overlap tends to 1; contact distance gives 0 + 1
    CHECK(unsafe_box(vbox(83, 93), set1d(55, 83)) == doctest::Approx(1.0));
    double eps = 1e-9;
    CHECK(unsafe_box(vbox(83 + eps, 93), set1d(55, 83)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("unsafe_box gradient flows through the overlap fraction") {
    // V = [80, 90] vs A = [55, 83]: unsafe = 1 - 3/10; moving the center
    // right loses overlap at rate 1/10
    Tape t;
    Box<TapeVal> v{{make_val(t, 85.0)}, {make_val(t, 5.0)}};
    TapeVal u = unsafe_box(v, set1d(55, 83));
    CHECK(u.primal() == doctest::Approx(0.7).epsilon(1e-12));
    auto g = grad(t, u.h, std::vector<NodeHandle>{v.center[0].h, v.dev[0].h});
    auto eval = [&](const std::vector<double>& ce) {
        Box<double> b{{ce[0]}, {ce[1]}};
        return unsafe_box(b, set1d(55, 83));
    };
    auto fd = oracles::finite_diff(eval, {85.0, 5.0});
    CHECK(oracles::close_rel(g[0], fd[0], 1e-6, 1e-9));
    CHECK(oracles::close_rel(g[1], fd[1], 1e-6, 1e-9));
    CHECK(g[0] != 0.0);

    // disjoint branch is differentiable too
    Tape t2;
    Box<TapeVal> v2{{make_val(t2, 95.0)}, {make_val(t2, 5.0)}};
    TapeVal u2 = unsafe_box(v2, set1d(55, 83));
    CHECK(u2.primal() == doctest::Approx(8.0).epsilon(1e-12));
    auto g2 = grad(t2, u2.h, std::vector<NodeHandle>{v2.center[0].h});
    CHECK(g2[0] == doctest::Approx(1.0).epsilon(1e-9));
}
