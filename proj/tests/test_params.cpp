#include <cmath>

#include "doctest.h"
#include "nssafe/params.hpp"
#include "oracles.hpp"

using namespace nssafe;

TEST_CASE("lift preserves values and order") {
    ParameterStore store;
    store.add("m", "W0", Tensor{{2, 2}, {1.0, 2.0, 3.0, 4.0}});
    Tape t;
    LiftedParams lifted = lift(store, t);
    REQUIRE(lifted.leaves.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(t.value(lifted.leaves[i]) == store.at("m", "W0").data[i]);  // row-major

    ParameterStore empty;
    Tape t2;
    CHECK(lift(empty, t2).leaves.empty());
}

TEST_CASE("checkpoint json round-trip") {
    ParameterStore store;
    store.add("cool", "W0", Tensor{{2, 1}, {0.125, -3.5}});
    store.add("cool", "b0", Tensor{{2}, {1e-9, 7.25}});
    ParameterStore back = ParameterStore::from_json(store.to_json());
    CHECK(back.at("cool", "W0").data == store.at("cool", "W0").data);
    CHECK(back.at("cool", "b0").shape == std::vector<int>{2});
    CHECK(back.to_json() == store.to_json());
}

TEST_CASE("mlp_forward identity and relu") {
    MlpSpec spec;
    spec.widths = {2, 2};
    spec.activations = {Activation::none};
    ParameterStore store;
    store.add("id", "W0", Tensor{{2, 2}, {1, 0, 0, 1}});
    store.add("id", "b0", Tensor{{2}, {0, 0}});
    auto out = mlp_forward(spec, store, "id", {1.0, 2.0});
    CHECK(out == std::vector<double>{1.0, 2.0});

    MlpSpec r;
    r.widths = {2, 1};
    r.activations = {Activation::relu};
    ParameterStore s2;
    s2.add("m", "W0", Tensor{{1, 2}, {1, 1}});
    s2.add("m", "b0", Tensor{{1}, {0}});
    auto out2 = mlp_forward(r, s2, "m", {-1.0, -2.0});
    CHECK(out2[0] == 0.0);  // relu(-3)

    // zero weights, sigmoid last layer -> 0.5 everywhere
    MlpSpec z;
    z.widths = {1, 3};
    z.activations = {Activation::sigmoid};
    ParameterStore s3;
    s3.add("m", "W0", Tensor{{3, 1}, {0, 0, 0}});
    s3.add("m", "b0", Tensor{{3}, {0, 0, 0}});
    for (double v : mlp_forward(z, s3, "m", {4.2})) CHECK(v == 0.5);

    CHECK_THROWS_AS(mlp_forward(z, s3, "m", {1.0, 2.0}), ShapeError);
}

TEST_CASE("mlp tape forward matches primal and finite differences") {
    MlpSpec spec = MlpSpec::dense(2, {5}, 1, Activation::sigmoid);
    ParameterStore store;
    Rng rng(99);
    ParameterStore::init_mlp(store, "m", spec, rng);

    std::vector<double> input = {0.3, -1.1};
    auto primal = mlp_forward(spec, store, "m", input);

    Tape t;
    LiftedParams lifted = lift(store, t);
    std::vector<TapeVal> in;
    for (double v : input) in.push_back(make_val(t, v));
    auto out = mlp_forward(t, spec, lifted, "m", in);
    REQUIRE(out.size() == 1);
    CHECK(out[0].primal() == doctest::Approx(primal[0]).epsilon(1e-15));

    auto g = grad(t, out[0].h, lifted.leaves);
    auto flat = store.flatten();
    auto eval = [&](const std::vector<double>& theta) {
        ParameterStore s = store;
        s.unflatten(theta);
        return mlp_forward(spec, s, "m", input)[0];
    };
    auto fd = oracles::finite_diff(eval, flat);
    for (std::size_t i = 0; i < flat.size(); ++i)
        CHECK(oracles::close_rel(g[i], fd[i], 1e-4, 1e-7));
}

TEST_CASE("adam first step and reference agreement") {
    // theta = 0, g = 1: bias-corrected mhat = vhat = 1 so the first step
    // moves by -lr/(1 + eps)
    std::vector<double> theta = {0.0};
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    AdamState st = AdamState::init(1, cfg);
    adam_step(theta, {1.0}, st);
    CHECK(theta[0] == doctest::Approx(-1e-3).epsilon(1e-7));
    CHECK(st.step == 1);

    // zero gradient, zero decay: parameters unchanged
    std::vector<double> frozen = {0.7, -0.2};
    AdamState st2 = AdamState::init(2, cfg);
    adam_step(frozen, {0.0, 0.0}, st2);
    CHECK(frozen == std::vector<double>{0.7, -0.2});

    // two constant-gradient steps match the scalar reference to 1e-12
    AdamConfig c3;
    c3.weight_decay = 1e-6;
    std::vector<double> ours = {0.5};
    AdamState st3 = AdamState::init(1, c3);
    oracles::RefAdam ref(1, c3.lr, c3.beta1, c3.beta2, c3.eps, c3.weight_decay);
    std::vector<double> theirs = {0.5};
    for (int i = 0; i < 2; ++i) {
        adam_step(ours, {0.3}, st3);
        ref.step(theirs, {0.3});
    }
    CHECK(std::fabs(ours[0] - theirs[0]) < 1e-12);
}

TEST_CASE("adam rejects non-finite gradients") {
    std::vector<double> theta = {0.0};
    AdamState st = AdamState::init(1, AdamConfig{});
    CHECK_THROWS_AS(adam_step(theta, {std::nan("")}, st), NumericError);
}
