#include <cmath>

#include "doctest.h"
#include "nssafe/benchmarks.hpp"
#include "nssafe/trainer.hpp"
#include "nssafe/verifier.hpp"

using namespace nssafe;

namespace {

ParameterStore pattern1_linear(double w, double b) {
    ParameterStore s;
    s.add("pi", "W0", Tensor{{1, 1}, {w}});
    s.add("pi", "b0", Tensor{{1}, {b}});
    return s;
}

Program pattern1_program() {
    BenchmarkConfig cfg;
    cfg.pattern_hidden = {};
    return normalize_guards(build_benchmark("pattern1", cfg).program);
}

}  // namespace

TEST_CASE("verify extremes on pattern1") {
    Program p = pattern1_program();
    VerifyConfig cfg;
    cfg.grid = {100};

    // y = 5 everywhere: every cell takes the else branch, z = 1, safe
    VerifyResult all_safe = verify(p, pattern1_linear(0.0, 5.0), cfg);
    CHECK(all_safe.portion == 1.0);

    // y = 0 everywhere: every cell forced into the then branch, z = 10
    VerifyResult none_safe = verify(p, pattern1_linear(0.0, 0.0), cfg);
    CHECK(none_safe.portion == 0.0);
    CHECK(none_safe.total_cells == 100);
    CHECK(none_safe.verdicts.size() == 100);
}

TEST_CASE("verify default grids") {
    Program p1 = pattern1_program();
    CHECK(default_grid(p1) == std::vector<int>{10000});
    BenchmarkConfig cfg;
    cfg.net_hidden = {4};
    Program cp = normalize_guards(build_benchmark("cartpole", cfg).program);
    CHECK(default_grid(cp) == std::vector<int>(4, 20));
}

TEST_CASE("monotone refinement on patterns") {
    Program p = pattern1_program();
    // w = 0.37, b = 0.93: constants chosen off every grid boundary so the
    // comparison is free of border cells
    ParameterStore theta = pattern1_linear(0.37, 0.93);
    double prev = -1.0;
    for (int cells : {10, 20, 40, 80}) {
        VerifyConfig cfg;
        cfg.grid = {cells};
        double portion = verify(p, theta, cfg).portion;
        CHECK(portion >= prev - 1e-12);
        prev = portion;
    }
}

TEST_CASE("concrete safety dominates the provable portion") {
    // the sampled fraction estimates a probability that dominates the
    // portion, so allow three binomial sigmas of slack
    Program p = pattern1_program();
    Rng rng(3);
    const int samples = 2000;
    const double slack = 3.0 * std::sqrt(0.25 / samples);
    for (int i = 0; i < 100; ++i) {
        ParameterStore theta = pattern1_linear(rng.next_uniform(-1, 1), rng.next_uniform(-2, 3));
        VerifyConfig cfg;
        cfg.grid = {50};
        double portion = verify(p, theta, cfg).portion;
        double concrete = eval_concrete_safety(p, theta, samples, 1000 + i);
        CHECK(concrete >= portion - slack);
    }
}

TEST_CASE("ground truths verify fully safe") {
    BenchmarkConfig cfg;
    cfg.net_hidden = {4};
    for (const char* name : {"thermostat", "ac"}) {
        BenchmarkBundle b = build_benchmark(name, cfg);
        REQUIRE(b.ground_truth);
        Program gt = normalize_guards(b.ground_truth->program);
        ParameterStore empty;
        VerifyConfig vc;
        vc.grid = {500};  // fast slice of the default grid
        VerifyResult res = verify(gt, empty, vc);
        CHECK(res.portion == 1.0);
    }
    BenchmarkBundle cp = build_benchmark("cartpole", cfg);
    Program gt = normalize_guards(cp.ground_truth->program);
    ParameterStore empty;
    VerifyConfig vc;
    vc.grid = {6, 6, 6, 6};
    VerifyResult res = verify(gt, empty, vc);
    CHECK(res.portion == 1.0);
}

TEST_CASE("verdicts csv shape") {
    Program p = pattern1_program();
    VerifyConfig cfg;
    cfg.grid = {4};
    VerifyResult res = verify(p, pattern1_linear(0.0, 5.0), cfg);
    std::string csv = verdicts_to_csv(res);
    CHECK(csv.find("cell_index,lo0,hi0,safe,worst_unsafe_value") == 0);
    // 4 rows + header
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 5);
}

TEST_CASE("test_data_loss equals training loss on the training set") {
    Program p;
    p.modules["m"] = MlpSpec::dense(1, {}, 1, Activation::none);
    p.guards_normalized = true;
    p.body = make_seq({});
    ParameterStore theta;
    theta.add("m", "W0", Tensor{{1, 1}, {1.5}});
    theta.add("m", "b0", Tensor{{1}, {0.25}});
    Dataset d;
    d.records.push_back(IoRecord{"m", {2.0}, {3.0}, 0, 0});
    CHECK(test_data_loss(p, theta, d) == doctest::Approx(data_loss_value(p, theta, d)));
}
