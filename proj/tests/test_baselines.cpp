/*
 * Copyright (c) 2026, The resadapt Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cmath>

#include "resadapt/baselines.hpp"
#include "resadapt/errors.hpp"
#include "support.hpp"

using namespace resadapt;

namespace {

TrainConfig fixture_config() {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.epochs = 50;
    c.ratio_mode = FixedRatio{0.6, 0.2};
    return c;
}

AdapterModel zero_model(std::size_t dim, Variant v, double alpha) {
    auto p = init_params(dim, 4, v, 0);
    for (auto* m : {&p.w1_visual, &p.w2_visual, &p.w1_text, &p.w2_text}) {
        if (*m) {
            for (auto& x : (*m)->values()) x = 0.0;
        }
    }
    return AdapterModel{v, FixedRatio{alpha, alpha}, p};
}

// Two Gaussian-free clusters on either side of the line x = y.
void separable_set(Matrix& x, std::vector<std::size_t>& y) {
    const double pts[][2] = {{2, 0}, {3, 1}, {2.5, -1}, {4, 2}, {0, 2}, {1, 3}, {-1, 2.5}, {2, 4}};
    x = Matrix(8, 2);
    y.clear();
    for (std::size_t i = 0; i < 8; ++i) {
        x(i, 0) = pts[i][0];
        x(i, 1) = pts[i][1];
        y.push_back(i < 4 ? 0 : 1);
    }
}

}  // namespace

TEST_CASE("zero-shot") {
    SyntheticSpec spec;
    spec.text_noise = 0.0;
    spec.feature_noise = 0.1;
    const auto clean = make_synthetic_cache(spec);
    CHECK(eval_zero_shot(clean, LogitScale{}, SplitTag::Test).overall_accuracy == 1.0);
    // At the default feature noise a few images land nearer another prototype.
    spec.feature_noise = 0.2;
    const double noisy = eval_zero_shot(make_synthetic_cache(spec), LogitScale{}, SplitTag::Test).overall_accuracy;
    CHECK(noisy >= 0.99);
    CHECK_THROWS_AS(eval_zero_shot(clean, LogitScale{}, SplitTag::Val), ArgumentError);
}

TEST_CASE("zero adapters match zero-shot") {
    const auto cache = resadapt::testing::fixture_cache();
    const auto zs = eval_zero_shot(cache, LogitScale{}, SplitTag::Test);
    for (auto v : {Variant::VisualOnly, Variant::TextOnly, Variant::Both}) {
        for (double alpha : {0.0, 0.2, 0.8}) {
            const auto r = eval_adapter(cache, zero_model(cache.dim, v, alpha), LogitScale{}, true, SplitTag::Test);
            CHECK(r.predictions == zs.predictions);
            CHECK(r.overall_accuracy == zs.overall_accuracy);
        }
    }
}

TEST_CASE("trained adapter on the fixture") {
    const auto cache = resadapt::testing::fixture_cache();
    const auto config = fixture_config();
    const auto result = train(cache, sample_episode(cache, 16, 0), config);
    const AdapterModel model{config.variant, result.ratio_mode, result.params};
    const auto ad = eval_adapter(cache, model, LogitScale{}, true, SplitTag::Test);
    const auto zs = eval_zero_shot(cache, LogitScale{}, SplitTag::Test);
    CHECK(ad.overall_accuracy >= zs.overall_accuracy);

    double weighted = 0.0;
    std::size_t total = 0;
    for (std::size_t k = 0; k < ad.per_class_accuracy.size(); ++k) {
        CHECK(ad.per_class_accuracy[k] >= 0.0);
        CHECK(ad.per_class_accuracy[k] <= 1.0);
        weighted += ad.per_class_accuracy[k] * static_cast<double>(ad.per_class_count[k]);
        total += ad.per_class_count[k];
    }
    CHECK(total == ad.num_test);
    CHECK(std::abs(weighted / static_cast<double>(total) - ad.overall_accuracy) < 1e-12);
}

TEST_CASE("label-shuffled cache scores at chance") {
    auto cache = make_synthetic_cache(SyntheticSpec{20, 100, 32, 0.3, 0.2, 4});
    Rng rng(99);
    rng.shuffle(cache.labels);
    const auto r = eval_zero_shot(cache, LogitScale{}, SplitTag::Test);
    const double p = 1.0 / 20.0;
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(r.num_test));
    CHECK(std::abs(r.overall_accuracy - p) <= 3 * sigma);
}

TEST_CASE("linear probe") {
    SUBCASE("separable set is fit exactly") {
        Matrix x;
        std::vector<std::size_t> y;
        separable_set(x, y);
        LinearProbeConfig cfg;
        cfg.l2 = 1e-3;
        const auto probe = train_linear_probe(x, y, 2, cfg);
        CHECK(probe.converged);
        CHECK(probe_predict(probe, x) == y);
    }
    SUBCASE("objective gradient matches central differences") {
        Rng rng(3);
        Matrix x(7, 4);
        for (auto& v : x.values()) v = rng.normal();
        const std::vector<std::size_t> y = {0, 1, 2, 0, 1, 2, 1};
        Matrix w(3, 4);
        for (auto& v : w.values()) v = rng.normal(0.0, 0.5);
        std::vector<double> b = {0.1, -0.2, 0.3};
        const double l2 = 0.7;
        const auto obj = probe_objective(x, y, w, b, l2);
        const double h = 1e-5;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double keep = w.values()[i];
            w.values()[i] = keep + h;
            const double up = probe_objective(x, y, w, b, l2).value;
            w.values()[i] = keep - h;
            const double down = probe_objective(x, y, w, b, l2).value;
            w.values()[i] = keep;
            const double numeric = (up - down) / (2 * h);
            CHECK(relative_error(obj.grad_weights.values()[i], numeric) < 1e-4);
        }
        for (std::size_t k = 0; k < b.size(); ++k) {
            const double keep = b[k];
            b[k] = keep + h;
            const double up = probe_objective(x, y, w, b, l2).value;
            b[k] = keep - h;
            const double down = probe_objective(x, y, w, b, l2).value;
            b[k] = keep;
            CHECK(relative_error(obj.grad_bias[k], (up - down) / (2 * h)) < 1e-4);
        }
    }
    SUBCASE("fixture probe converges") {
        const auto cache = resadapt::testing::fixture_cache();
        const auto probe = train_linear_probe(cache, sample_episode(cache, 16, 0), LinearProbeConfig{});
        CHECK(probe.converged);
        CHECK(probe.gradient_norm < 1e-6);
        const auto r = eval_linear_probe(cache, probe, SplitTag::Test);
        CHECK(r.overall_accuracy > 0.1);
        CHECK(r.overall_accuracy <= 1.0);
    }
    SUBCASE("huge penalty shrinks weights to zero") {
        // Imbalanced labels so the bias alone has a clear winner.
        Rng rng(8);
        Matrix x(12, 5);
        for (auto& v : x.values()) v = rng.normal();
        const std::vector<std::size_t> y = {2, 2, 2, 2, 2, 2, 2, 0, 0, 1, 1, 0};
        LinearProbeConfig cfg;
        cfg.l2 = 1e9;
        const auto probe = train_linear_probe(x, y, 3, cfg);
        double biggest = 0.0;
        for (double v : probe.weights.values()) biggest = std::max(biggest, std::abs(v));
        CHECK(biggest < 1e-6);
        CHECK(argmax(probe.bias) == 2);
        for (auto p : probe_predict(probe, x)) CHECK(p == 2);
    }
}

TEST_CASE("alpha sweep") {
    const auto cache = resadapt::testing::fixture_cache();
    const auto episode = sample_episode(cache, 16, 0);
    auto base = fixture_config();
    base.epochs = 10;
    const auto zs = eval_zero_shot(cache, LogitScale{}, SplitTag::Test).overall_accuracy;

    const auto single = sweep_alpha(cache, episode, base, {0.0});
    REQUIRE(single.accuracies.size() == 1);
    CHECK(*single.accuracies[0] == zs);
    CHECK(*single.best_value == 0.0);

    const std::vector<double> grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    const auto a = sweep_alpha(cache, episode, base, grid, 1);
    const auto b = sweep_alpha(cache, episode, base, grid, 4);
    CHECK(a.accuracies == b.accuracies);
    CHECK(a.best_value == b.best_value);
    CHECK(*a.accuracies[0] == zs);

    // A cell equals an independent train + eval.
    auto direct = base;
    direct.ratio_mode = FixedRatio{0.6, 0.2};
    const auto r = train(cache, episode, direct);
    const auto acc = eval_adapter(cache, AdapterModel{direct.variant, r.ratio_mode, r.params}, LogitScale{}, true,
                                  SplitTag::Test)
                         .overall_accuracy;
    CHECK(*a.accuracies[3] == acc);

    CHECK_THROWS_AS(sweep_alpha(cache, episode, base, {}), ArgumentError);
    CHECK_THROWS_AS(sweep_alpha(cache, episode, base, {1.5}), ArgumentError);
}

TEST_CASE("bottleneck sweep") {
    const auto cache = resadapt::testing::fixture_cache();
    const auto episode = sample_episode(cache, 16, 0);
    auto base = fixture_config();
    base.epochs = 10;

    const auto one = sweep_bottleneck(cache, episode, base, {4});
    const auto r = train(cache, episode, base);
    const auto acc =
        eval_adapter(cache, AdapterModel{base.variant, r.ratio_mode, r.params}, LogitScale{}, true, SplitTag::Test)
            .overall_accuracy;
    CHECK(*one.accuracies[0] == acc);

    const auto mixed = sweep_bottleneck(cache, episode, base, {2, 128, 8}, 3);
    CHECK(mixed.accuracies[0].has_value());
    CHECK_FALSE(mixed.accuracies[1].has_value());
    CHECK(mixed.errors[1].rfind("ArgumentError", 0) == 0);
    CHECK(mixed.accuracies[2].has_value());
    CHECK(mixed.best_value.has_value());
    CHECK(*mixed.best_value != 128.0);
}

TEST_CASE("feature export") {
    const auto cache = resadapt::testing::fixture_cache();
    const auto table = export_adapted_features(cache, zero_model(cache.dim, Variant::VisualOnly, 0.4), SplitTag::Test);
    const auto test = split_indices(cache, SplitTag::Test);
    CHECK(table.features.rows() == test.size());
    CHECK(table.labels == gather_labels(cache, test));
    for (std::size_t r = 0; r < test.size(); ++r) {
        const auto row = table.features.row(r);
        const auto original = cache.feature(test[r]);
        for (std::size_t d = 0; d < cache.dim; ++d) CHECK(std::abs(row[d] - original[d]) < 1e-6);
    }
    const auto all = export_adapted_features(cache, zero_model(cache.dim, Variant::VisualOnly, 0.4), std::nullopt);
    CHECK(all.features.rows() == cache.num_images());
}
