/*
 * Copyright 2026 The Lesionkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lesion/nn.hpp"
#include "model_fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace lesion;

namespace {

ClassWeights uniform_weights() { return custom_weights({1, 1, 1, 1, 1, 1, 1, 1}); }

Tensor one_row(std::array<double, kNumClasses> v) { return Tensor({1, kNumClasses}, std::vector<double>(v.begin(), v.end())); }

// Plain cross-entropy, no weights, no floor: the reduction-case oracle.
double plain_ce(const Tensor& probs, std::span<const ClassLabel> labels)
{
    double sum = 0.0;
    for (std::size_t b = 0; b < labels.size(); ++b) sum -= std::log(probs[b * kNumClasses + static_cast<std::size_t>(labels[b])]);
    return sum / static_cast<double>(labels.size());
}

} // namespace

TEST_CASE("model spec")
{
    const ModelSpec spec = ModelSpec::small_cnn(32);
    const auto shapes = spec.shapes();
    CHECK(shapes.back().channels == 8);
    CHECK(shapes.back().flat);
    CHECK(spec.layers_string() == "conv:8:3:1:1,relu,maxpool:2:2,conv:16:3:1:1,relu,maxpool:2:2,flatten,dense:8");
    CHECK(ModelSpec::parse_layers(spec.layers_string()) == spec.layers);
    CHECK(spec.num_params() == (8 * 27 + 8) + (16 * 72 + 16) + (16 * 8 * 8 * 8 + 8));

    ModelSpec bad = spec;
    bad.layers.back() = LayerSpec::dense(5);
    CHECK_THROWS_AS(bad.shapes(), Error);
    CHECK_THROWS_AS(ModelSpec::parse_layers("conv:8,bogus"), Error);
}

TEST_CASE("forward")
{
    const ModelSpec spec = ModelSpec::small_cnn(8);
    Tensor batch({2, 3, 8, 8}, 0.7);
    const Tensor logits = forward(spec, zero_params(spec), batch);
    CHECK(logits.shape == std::vector<std::size_t>{2, 8});
    for (double v : logits.data) CHECK(v == 0.0);

    SUBCASE("dense identity")
    {
        ModelSpec d;
        d.in_channels = 8;
        d.in_height = 1;
        d.in_width = 1;
        d.layers = {LayerSpec::flatten(), LayerSpec::dense(8)};
        Params p = zero_params(d);
        for (std::size_t i = 0; i < 8; ++i) p.layers[1].weight[i * 8 + i] = 1.0;
        Tensor x({1, 8, 1, 1});
        x[3] = 1.0;
        const Tensor y = forward(d, p, x);
        for (std::size_t i = 0; i < 8; ++i) CHECK(y[i] == (i == 3 ? 1.0 : 0.0));
    }

    SUBCASE("1x1 conv")
    {
        ModelSpec c;
        c.in_channels = 1;
        c.in_height = 2;
        c.in_width = 2;
        c.layers = {LayerSpec::conv2d(1, 1), LayerSpec::flatten(), LayerSpec::dense(8)};
        Params p = zero_params(c);
        p.layers[0].weight[0] = 2.0;
        p.layers[0].bias[0] = 1.0;
        // Read the feature map back through a dense layer that copies it.
        for (std::size_t i = 0; i < 4; ++i) p.layers[2].weight[i * 4 + i] = 1.0;
        const Tensor y = forward(c, p, Tensor({1, 1, 2, 2}, 3.0));
        for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == 7.0);
    }

    CHECK_THROWS_AS(forward(spec, zero_params(spec), Tensor({1, 3, 9, 8})), Error);
}

TEST_CASE("softmax")
{
    const Tensor u = softmax(one_row({3, 3, 3, 3, 3, 3, 3, 3}));
    for (double v : u.data) CHECK(v == doctest::Approx(0.125).epsilon(1e-15));

    const Tensor p = softmax(one_row({1, 0, 0, 0, 0, 0, 0, 0}));
    const double e = std::exp(1.0);
    CHECK(p[0] == doctest::Approx(e / (e + 7)).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(1.0 / (e + 7)).epsilon(1e-14));

    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        std::array<double, kNumClasses> z{};
        for (auto& v : z) v = rng.uniform(-30, 30);
        const double k = rng.uniform(-500, 500);
        auto zk = z;
        for (auto& v : zk) v += k;
        const Tensor a = softmax(one_row(z)), b = softmax(one_row(zk));
        double sum = 0.0;
        for (std::size_t i = 0; i < kNumClasses; ++i) {
            REQUIRE(std::abs(a[i] - b[i]) < 1e-12);
            REQUIRE(a[i] > 0.0);
            sum += a[i];
        }
        REQUIRE(std::abs(sum - 1.0) < 1e-9);
    }
    CHECK_THROWS_AS(softmax(one_row({NAN, 0, 0, 0, 0, 0, 0, 0})), Error);
}

TEST_CASE("weighted cross-entropy")
{
    const std::vector<ClassLabel> y = {ClassLabel::BCC};
    auto w = custom_weights({1, 1, 0.7, 1, 1, 1, 1, 1});
    const Tensor uni = one_row({0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125});
    CHECK(weighted_ce_loss(uni, y, w) == doctest::Approx(0.7 * std::log(8.0)).epsilon(1e-14));
    CHECK(weighted_ce_loss(uni, y, uniform_weights()) == doctest::Approx(2.079442).epsilon(1e-6));

    const Tensor perfect = one_row({0, 0, 1, 0, 0, 0, 0, 0});
    CHECK(weighted_ce_loss(perfect, y, w) == 0.0);
    // The floor keeps a zero probability finite.
    const Tensor miss = one_row({1, 0, 0, 0, 0, 0, 0, 0});
    CHECK(weighted_ce_loss(miss, y, uniform_weights()) == doctest::Approx(-std::log(kProbabilityFloor)));

    const auto mc = testing::random_model_case(3);
    const Tensor probs = softmax(forward(mc.spec, mc.params, mc.batch));
    CHECK(std::abs(weighted_ce_loss(probs, mc.labels, uniform_weights()) - plain_ce(probs, mc.labels)) < 1e-12);
}

TEST_CASE("logit gradient")
{
    const std::vector<ClassLabel> y0 = {ClassLabel::MEL};
    const Tensor uni = one_row({0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125});
    const Tensor g = logit_gradient(uni, y0, uniform_weights());
    CHECK(g[0] == -0.875);
    for (std::size_t i = 1; i < 8; ++i) CHECK(g[i] == 0.125);

    const Tensor onehot = one_row({1, 0, 0, 0, 0, 0, 0, 0});
    for (double v : logit_gradient(onehot, y0, uniform_weights()).data) CHECK(v == 0.0);
}

TEST_CASE("backward against finite differences")
{
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto mc = testing::random_model_case(s);
        const auto r = grad_check(mc.spec, mc.params, mc.batch, mc.labels, mc.weights, 1e-6);
        CHECK(r.checked > 0);
        CHECK(r.max_relative_error < 1e-5);
    }

    SUBCASE("a doubled gradient is caught")
    {
        const auto mc = testing::random_model_case(4);
        Params g = backward(mc.spec, mc.params, mc.batch, mc.labels, mc.weights);
        for (auto& v : g.layers[0].weight.data) v *= 2.0;
        const auto r = compare_gradients(mc.spec, mc.params, mc.batch, mc.labels, mc.weights, g, 1e-6, 64, 0);
        CHECK(r.max_relative_error > 0.1);
    }

    SUBCASE("loss and gradients are linear in the class weights")
    {
        const auto mc = testing::random_model_case(6);
        auto scaled = mc.weights;
        for (auto& v : scaled.weights) v *= 3.0;
        const auto a = loss_and_gradient(mc.spec, mc.params, mc.batch, mc.labels, mc.weights);
        const auto b = loss_and_gradient(mc.spec, mc.params, mc.batch, mc.labels, scaled);
        CHECK(b.loss == doctest::Approx(3.0 * a.loss).epsilon(1e-12));
        const auto fa = a.grads.flatten(), fb = b.grads.flatten();
        for (std::size_t i = 0; i < fa.size(); ++i) REQUIRE(std::abs(fb[i] - 3.0 * fa[i]) <= 1e-12 * (1 + std::abs(fb[i])));

        const auto zero = custom_weights({});
        const auto z = loss_and_gradient(mc.spec, mc.params, mc.batch, mc.labels, zero);
        CHECK(z.loss == 0.0);
        for (double v : z.grads.flatten()) REQUIRE(v == 0.0);
    }
}

TEST_CASE("adam")
{
    const auto mc = testing::random_model_case(1);
    Params p = mc.params;
    AdamState st = AdamState::zeros_like(p);
    const Params zero = zero_params(mc.spec);
    for (int i = 0; i < 5; ++i) adam_step(p, zero, st, 1e-3);
    CHECK(p == mc.params);
    CHECK(st.t == 5);

    // First step moves every coordinate by about lr * sign(g).
    Params q = mc.params;
    AdamState s1 = AdamState::zeros_like(q);
    const Params g = backward(mc.spec, mc.params, mc.batch, mc.labels, mc.weights);
    adam_step(q, g, s1, 1e-4);
    const auto before = mc.params.flatten(), after = q.flatten(), gf = g.flatten();
    for (std::size_t i = 0; i < gf.size(); ++i) {
        const double expect = gf[i] == 0.0 ? 0.0 : -1e-4 * std::abs(gf[i]) / (std::abs(gf[i]) + 1e-8) * (gf[i] > 0 ? 1 : -1);
        REQUIRE(after[i] - before[i] == doctest::Approx(expect).epsilon(1e-9));
    }

    Params r = mc.params;
    AdamState s2 = AdamState::zeros_like(r);
    adam_step(r, g, s2, 1e-4);
    CHECK(r == q);
}

TEST_CASE("plateau scheduler")
{
    const std::vector<double> up = {0.70, 0.72, 0.75};
    CHECK(plateau_schedule(up, 1e-4, 0.5, 2) == 1e-4);
    const std::vector<double> down3 = {0.75, 0.74, 0.73};
    CHECK(plateau_schedule(down3, 1e-4, 0.5, 2) == 5e-5);
    const std::vector<double> down5 = {0.75, 0.74, 0.73, 0.72, 0.71};
    CHECK(plateau_schedule(down5, 1e-4, 0.5, 2) == 2.5e-5);

    PlateauScheduler s(1e-4, 0.5, 2);
    for (int i = 0; i < 40; ++i) s.step(0.1);
    CHECK(s.lr() == 1e-4 * std::pow(0.5, s.reductions()));
}
