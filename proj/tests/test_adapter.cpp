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

#include "resadapt/adapter.hpp"
#include "resadapt/baselines.hpp"
#include "resadapt/errors.hpp"
#include "resadapt/trainer.hpp"
#include "support.hpp"

using namespace resadapt;

namespace {

Matrix from_rows(std::vector<std::vector<double>> rows) {
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

Matrix random_unit_rows(Rng& rng, std::size_t rows, std::size_t dim) {
    Matrix m(rows, dim);
    for (std::size_t r = 0; r < rows; ++r) {
        for (auto& v : m.row(r)) v = rng.normal();
        normalize_in_place(m.row(r));
    }
    return m;
}

// Adapter weights large enough to move features far from their inputs.
AdapterParams strong_params(std::size_t dim, Variant variant, std::uint64_t seed) {
    auto p = init_params(dim, 2, variant, seed);
    for (auto* m : {&p.w1_visual, &p.w2_visual, &p.w1_text, &p.w2_text}) {
        if (*m) {
            for (auto& v : (*m)->values()) v *= 8.0;
        }
    }
    return p;
}

AdapterParams zero_params(std::size_t dim, Variant variant) {
    auto p = init_params(dim, 2, variant, 0);
    for (auto* m : {&p.w1_visual, &p.w2_visual, &p.w1_text, &p.w2_text}) {
        if (*m) {
            for (auto& v : (*m)->values()) v = 0.0;
        }
    }
    return p;
}

const std::vector<Variant> kVariants = {Variant::VisualOnly, Variant::TextOnly, Variant::Both};

}  // namespace

TEST_CASE("adapter_forward hand-computed cases") {
    const auto w1 = from_rows({{1}, {-1}});
    const auto w2 = from_rows({{1, 0}});
    const std::vector<double> a = {0.6, 0.8};
    const std::vector<double> b = {0.8, 0.6};
    const auto ya = adapter_forward(a, w1, w2);
    CHECK(ya[0] == 0.0);
    CHECK(ya[1] == 0.0);
    const auto yb = adapter_forward(b, w1, w2);
    CHECK(yb[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(yb[1] == 0.0);

    const Matrix zero(2, 1);
    const auto yz = adapter_forward(b, zero, w2);
    CHECK(yz == std::vector<double>{0.0, 0.0});

    CHECK_THROWS_AS(adapter_forward(std::vector<double>{1, 2, 3}, w1, w2), ShapeError);
}

TEST_CASE("blend") {
    const std::vector<double> original = {0.8, 0.6};
    const std::vector<double> adapted = {0.2, 0.0};
    CHECK(blend(original, adapted, 0.0, false) == original);
    CHECK(blend(original, adapted, 1.0, false) == adapted);
    const auto mixed = blend(original, adapted, 0.5, true);
    CHECK(mixed[0] == doctest::Approx(0.8575).epsilon(1e-4));
    CHECK(mixed[1] == doctest::Approx(0.5145).epsilon(1e-4));
    CHECK(l2_norm(mixed) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(blend(original, adapted, 1.5, true), ArgumentError);
    CHECK_THROWS_AS(blend(original, adapted, -0.1, true), ArgumentError);
    CHECK_THROWS_AS(blend(std::vector<double>{0, 0}, std::vector<double>{0, 0}, 0.5, true), DegenerateFeatureError);
}

TEST_CASE("softmax of a confident two-class row") {
    const auto features = from_rows({{1, 0}});
    const auto classifier = from_rows({{1, 0}, {0, 1}});
    const auto tape = forward_batch(features, classifier, zero_params(2, Variant::VisualOnly), FixedRatio{0.0, 0.0},
                                    ForwardOptions{Variant::VisualOnly, LogitScale{100.0}, true});
    CHECK(tape.probs(0, 0) == 1.0);
    // e^-100 / (1 + e^-100)
    CHECK(tape.probs(0, 1) == doctest::Approx(3.720075976020836e-44).epsilon(1e-12));
}

TEST_CASE("tiny logit scale gives uniform probabilities") {
    Rng rng(5);
    const auto f = random_unit_rows(rng, 4, 6);
    const auto w = random_unit_rows(rng, 5, 6);
    const auto tape = forward_batch(f, w, strong_params(6, Variant::Both, 1), FixedRatio{0.3, 0.4},
                                    ForwardOptions{Variant::Both, LogitScale{1e-9}, true});
    for (std::size_t b = 0; b < 4; ++b) {
        for (std::size_t k = 0; k < 5; ++k) CHECK(tape.probs(b, k) == doctest::Approx(0.2).epsilon(1e-8));
    }
    CHECK_THROWS_AS(validate_logit_scale(LogitScale{0.0}), ArgumentError);
}

TEST_CASE("effective ratios") {
    const std::vector<double> f = {0.3, -0.2, 0.9};
    const auto l = effective_ratios(LearnableRatio{0.0, 0.0}, f);
    CHECK(l.alpha == 0.5);
    CHECK(l.beta == 0.5);
    const auto fixed = effective_ratios(FixedRatio{0.2, 0.6}, f);
    CHECK(fixed.alpha == 0.2);
    CHECK(fixed.beta == 0.6);
    const auto h = effective_ratios(HypernetRatio{{0, 0, 0}, {0, 0, 0}, 0.0, 0.0}, f);
    CHECK(h.alpha == 0.5);
    CHECK(h.beta == 0.5);
    const auto started = make_ratio_mode("learnable", 0.6, 0.2, 3);
    CHECK(effective_ratios(started, f).alpha == doctest::Approx(0.6).epsilon(1e-12));
    CHECK_THROWS_AS(make_ratio_mode("fixed", 1.2, 0.2, 3), ArgumentError);
    CHECK_THROWS_AS(make_ratio_mode("learnable", 1.0, 0.2, 3), ArgumentError);
    CHECK_THROWS_AS(make_ratio_mode("softmax", 0.5, 0.5, 3), ArgumentError);
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(800.0) <= 1.0);
}

TEST_CASE("zero adapters reproduce zero-shot probabilities") {
    Rng rng(17);
    const auto f = random_unit_rows(rng, 6, 8);
    const auto w = random_unit_rows(rng, 4, 8);
    const auto reference = softmax_rows([&] {
        auto z = matmul_transposed(f, w);
        for (auto& v : z.values()) v *= 100.0;
        return z;
    }());
    for (auto v : kVariants) {
        for (double ratio : {0.0, 0.3, 0.9}) {
            const auto tape = forward_batch(f, w, zero_params(8, v), FixedRatio{ratio, ratio},
                                            ForwardOptions{v, LogitScale{100.0}, true});
            for (std::size_t b = 0; b < 6; ++b) {
                CHECK(argmax(tape.probs.row(b)) == argmax(reference.row(b)));
                for (std::size_t k = 0; k < 4; ++k) {
                    CHECK(tape.probs(b, k) == doctest::Approx(reference(b, k)).epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("forward invariants") {
    Rng rng(23);
    const std::size_t dim = 10;
    const auto f = random_unit_rows(rng, 9, dim);
    const auto w = random_unit_rows(rng, 5, dim);

    SUBCASE("softmax rows sum to one") {
        for (auto v : kVariants) {
            for (const char* mode : {"fixed", "learnable", "hypernet"}) {
                const auto tape = forward_batch(f, w, strong_params(dim, v, 3), make_ratio_mode(mode, 0.4, 0.7, dim),
                                                ForwardOptions{v, LogitScale{100.0}, true});
                for (std::size_t b = 0; b < f.rows(); ++b) {
                    double s = 0.0;
                    for (double p : tape.probs.row(b)) {
                        CHECK(p >= 0.0);
                        CHECK(p <= 1.0);
                        s += p;
                    }
                    CHECK(std::abs(s - 1.0) < 1e-9);
                }
            }
        }
    }
    SUBCASE("alpha = 0 keeps zero-shot predictions for any adapter") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto params = strong_params(dim, Variant::VisualOnly, seed);
            const auto tape = forward_batch(f, w, params, FixedRatio{0.0, 0.5},
                                            ForwardOptions{Variant::VisualOnly, LogitScale{100.0}, true});
            const auto zs = matmul_transposed(f, [&] {
                Matrix n = w;
                for (std::size_t k = 0; k < n.rows(); ++k) normalize_in_place(n.row(k));
                return n;
            }());
            for (std::size_t b = 0; b < f.rows(); ++b) CHECK(argmax(tape.logits.row(b)) == argmax(zs.row(b)));
        }
    }
    SUBCASE("larger scale never lowers the top probability") {
        const auto params = strong_params(dim, Variant::Both, 9);
        std::vector<double> previous(f.rows(), 0.0);
        for (double scale : {0.5, 1.0, 5.0, 20.0, 100.0, 400.0}) {
            const auto tape = forward_batch(f, w, params, FixedRatio{0.5, 0.5},
                                            ForwardOptions{Variant::Both, LogitScale{scale}, true});
            for (std::size_t b = 0; b < f.rows(); ++b) {
                const double top = *std::max_element(tape.probs.row(b).begin(), tape.probs.row(b).end());
                CHECK(top >= previous[b]);
                previous[b] = top;
            }
        }
    }
    SUBCASE("inactive branch weights do not matter") {
        auto a = init_params(dim, 2, Variant::Both, 1);
        auto b = a;
        for (auto& v : b.w1_text->values()) v += 1.0;
        const auto visual_a = forward_batch(f, w, a, FixedRatio{0.5, 0.5}, ForwardOptions{Variant::VisualOnly});
        const auto visual_b = forward_batch(f, w, b, FixedRatio{0.5, 0.5}, ForwardOptions{Variant::VisualOnly});
        CHECK(visual_a.probs == visual_b.probs);
        auto c = a;
        for (auto& v : c.w2_visual->values()) v -= 1.0;
        const auto text_a = forward_batch(f, w, a, FixedRatio{0.5, 0.5}, ForwardOptions{Variant::TextOnly});
        const auto text_c = forward_batch(f, w, c, FixedRatio{0.5, 0.5}, ForwardOptions{Variant::TextOnly});
        CHECK(text_a.probs == text_c.probs);
    }
    SUBCASE("rows do not depend on batch partitioning") {
        for (auto v : kVariants) {
            for (const char* mode : {"fixed", "learnable", "hypernet"}) {
                auto ratio = make_ratio_mode(mode, 0.3, 0.6, dim);
                if (auto* q = std::get_if<HypernetRatio>(&ratio)) {
                    for (auto& x : q->alpha_weights) x = rng.normal();
                    for (auto& x : q->beta_weights) x = rng.normal();
                }
                const auto params = strong_params(dim, v, 4);
                const ForwardOptions opts{v, LogitScale{100.0}, true};
                const auto whole = forward_batch(f, w, params, ratio, opts);
                for (std::size_t b = 0; b < f.rows(); ++b) {
                    Matrix one(1, dim);
                    std::copy(f.row(b).begin(), f.row(b).end(), one.row(0).begin());
                    const auto single = forward_batch(one, w, params, ratio, opts);
                    for (std::size_t k = 0; k < w.rows(); ++k) CHECK(single.logits(0, k) == whole.logits(b, k));
                }
            }
        }
    }
}

TEST_CASE("argmax ties go to the smallest index") {
    CHECK(argmax(std::vector<double>{1, 3, 3, 2}) == 1);
    CHECK(argmax(std::vector<double>{5, 5}) == 0);
}

TEST_CASE("ADPT round trip") {
    for (auto v : kVariants) {
        for (const char* mode : {"fixed", "learnable", "hypernet"}) {
            AdapterModel m{v, make_ratio_mode(mode, 0.35, 0.65, 12), init_params(12, 3, v, 8)};
            if (auto* q = std::get_if<HypernetRatio>(&m.ratio_mode)) q->alpha_weights[2] = -0.125;
            const auto bytes = serialize_adapter(m);
            CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "ADPT");
            const auto back = deserialize_adapter(bytes);
            CHECK(back == m);
            CHECK(serialize_adapter(back) == bytes);

            auto cut = bytes;
            cut.pop_back();
            CHECK_THROWS_AS(deserialize_adapter(cut), FormatError);
            auto extra = bytes;
            extra.push_back(0);
            CHECK_THROWS_AS(deserialize_adapter(extra), FormatError);
            auto bad_variant = bytes;
            bad_variant[8] = 7;
            CHECK_THROWS_AS(deserialize_adapter(bad_variant), FormatError);
        }
    }
}

TEST_CASE("parameter validation") {
    auto p = init_params(8, 2, Variant::VisualOnly, 0);
    CHECK_NOTHROW(validate_params(p, Variant::VisualOnly));
    CHECK_THROWS(validate_params(p, Variant::Both));
    p.w1_visual->values()[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate_params(p, Variant::VisualOnly), ArgumentError);
    CHECK(parse_variant("both") == Variant::Both);
    CHECK_THROWS_AS(parse_variant("image"), ArgumentError);
}
