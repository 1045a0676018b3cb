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

#include "resadapt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "resadapt/errors.hpp"
#include "resadapt/random.hpp"

namespace resadapt {

const char* to_string(Schedule s) { return s == Schedule::Constant ? "constant" : "cosine"; }

Schedule parse_schedule(const std::string& name) {
    if (name == "constant") return Schedule::Constant;
    if (name == "cosine") return Schedule::Cosine;
    throw ArgumentError("unknown schedule '" + name + "' (expected constant or cosine)");
}

void validate_config(const TrainConfig& config) {
    if (config.shots == 0) throw ArgumentError("shots must be positive");
    if (config.epochs == 0) throw ArgumentError("epochs must be >= 1");
    if (config.batch_size == 0) throw ArgumentError("batch_size must be positive");
    if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
        throw ArgumentError("learning_rate must be finite and non-negative");
    }
    if (!(config.momentum >= 0.0 && config.momentum < 1.0)) throw ArgumentError("momentum must lie in [0,1)");
    if (!(config.weight_decay >= 0.0) || !std::isfinite(config.weight_decay)) {
        throw ArgumentError("weight_decay must be finite and non-negative");
    }
    if (config.bottleneck_ratio == 0) throw ArgumentError("bottleneck_ratio must be positive");
    validate_logit_scale(LogitScale{config.logit_scale});
}

ForwardOptions forward_options(const TrainConfig& config) {
    return ForwardOptions{config.variant, LogitScale{config.logit_scale}, config.renormalize};
}

namespace {

void check_labels(std::size_t rows, std::size_t classes, std::span<const std::size_t> labels) {
    if (labels.size() != rows) throw ArgumentError("labels length does not match the batch");
    for (auto y : labels) {
        if (y >= classes) throw ArgumentError("label " + std::to_string(y) + " is out of range");
    }
}

}  // namespace

double cross_entropy(const Matrix& probs, std::span<const std::size_t> labels) {
    check_labels(probs.rows(), probs.cols(), labels);
    if (probs.rows() == 0) throw ArgumentError("cross_entropy of an empty batch");
    double total = 0.0;
    for (std::size_t b = 0; b < probs.rows(); ++b) {
        total -= std::log(std::max(probs(b, labels[b]), kProbabilityFloor));
    }
    return total / static_cast<double>(probs.rows());
}

double cross_entropy_from_logits(const Matrix& logits, std::span<const std::size_t> labels) {
    check_labels(logits.rows(), logits.cols(), labels);
    if (logits.rows() == 0) throw ArgumentError("cross_entropy of an empty batch");
    double total = 0.0;
    for (std::size_t b = 0; b < logits.rows(); ++b) {
        const auto z = logits.row(b);
        const double peak = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - peak);
        total += peak + std::log(sum) - z[labels[b]];
    }
    return total / static_cast<double>(logits.rows());
}

Matrix logit_gradient(const Matrix& probs, std::span<const std::size_t> labels) {
    check_labels(probs.rows(), probs.cols(), labels);
    Matrix grad = probs;
    const double inv = 1.0 / static_cast<double>(probs.rows());
    for (std::size_t b = 0; b < grad.rows(); ++b) {
        grad(b, labels[b]) -= 1.0;
        for (double& v : grad.row(b)) v *= inv;
    }
    return grad;
}

namespace {

struct BranchGradients {
    Matrix w1;
    Matrix w2;
    std::vector<double> ratio;  // dL/d(ratio) per row
};

BranchGradients backprop_branch(const BranchTape& tape, const Matrix& d_output, bool renormalize) {
    const std::size_t rows = tape.input.rows();
    const std::size_t dim = tape.input.cols();
    const std::size_t hidden = tape.hidden.cols();

    // Through x / |x|: (I - u u^T) g / |x|.
    Matrix d_blended = d_output;
    if (renormalize) {
        for (std::size_t r = 0; r < rows; ++r) {
            const auto u = tape.output.row(r);
            auto g = d_blended.row(r);
            const double proj = dot(u, g);
            for (std::size_t d = 0; d < dim; ++d) g[d] = (g[d] - proj * u[d]) / tape.norms[r];
        }
    }

    BranchGradients out{Matrix(dim, hidden), Matrix(hidden, dim), std::vector<double>(rows, 0.0)};
    Matrix d_adapter(rows, dim);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto g = d_blended.row(r);
        const auto a = tape.adapter_out.row(r);
        const auto x = tape.input.row(r);
        double d_ratio = 0.0;
        for (std::size_t d = 0; d < dim; ++d) d_ratio += g[d] * (a[d] - x[d]);
        out.ratio[r] = d_ratio;
        auto da = d_adapter.row(r);
        for (std::size_t d = 0; d < dim; ++d) da[d] = tape.ratio[r] * g[d];
    }

    for (std::size_t r = 0; r < rows; ++r) {
        const auto da = d_adapter.row(r);
        const auto h = tape.hidden.row(r);
        const auto h_pre = tape.hidden_pre.row(r);
        const auto x = tape.input.row(r);
        for (std::size_t j = 0; j < hidden; ++j) {
            auto dw2 = out.w2.row(j);
            for (std::size_t d = 0; d < dim; ++d) dw2[d] += h[j] * da[d];
        }
        for (std::size_t j = 0; j < hidden; ++j) {
            if (!(h_pre[j] > 0.0)) continue;
            const double d_hidden = dot(tape.w2.row(j), da);
            for (std::size_t d = 0; d < dim; ++d) out.w1(d, j) += x[d] * d_hidden;
        }
    }
    return out;
}

void ratio_gradients(const RatioMode& mode, const BranchTape& tape, const std::vector<double>& d_ratio,
                     std::optional<double>& theta, std::optional<std::vector<double>>& q_weights,
                     std::optional<double>& q_bias) {
    if (std::holds_alternative<FixedRatio>(mode)) return;
    if (std::holds_alternative<LearnableRatio>(mode)) {
        double total = 0.0;
        for (std::size_t r = 0; r < d_ratio.size(); ++r) {
            total += d_ratio[r] * tape.ratio[r] * (1.0 - tape.ratio[r]);
        }
        theta = total;
        return;
    }
    std::vector<double> weights(tape.input.cols(), 0.0);
    double bias = 0.0;
    for (std::size_t r = 0; r < d_ratio.size(); ++r) {
        const double d_pre = d_ratio[r] * tape.ratio[r] * (1.0 - tape.ratio[r]);
        const auto x = tape.input.row(r);
        for (std::size_t d = 0; d < weights.size(); ++d) weights[d] += d_pre * x[d];
        bias += d_pre;
    }
    q_weights = std::move(weights);
    q_bias = bias;
}

}  // namespace

Gradients backward(const ForwardTape& tape, std::span<const std::size_t> labels) {
    const std::size_t batch = tape.probs.rows();
    const std::size_t classes = tape.probs.cols();
    check_labels(batch, classes, labels);
    if (tape.visual.output.rows() != batch || tape.text.output.rows() != classes) {
        throw ArgumentError("tape is internally inconsistent");
    }
    const std::size_t dim = tape.visual.output.cols();
    const double scale = tape.options.scale.value;

    Matrix d_cos = logit_gradient(tape.probs, labels);
    for (double& v : d_cos.values()) v *= scale;

    Gradients grads;
    if (tape.visual.adapted) {
        Matrix d_out(batch, dim);
        for (std::size_t b = 0; b < batch; ++b) {
            auto dst = d_out.row(b);
            for (std::size_t k = 0; k < classes; ++k) {
                const double g = d_cos(b, k);
                const auto w = tape.text.output.row(k);
                for (std::size_t d = 0; d < dim; ++d) dst[d] += g * w[d];
            }
        }
        auto branch = backprop_branch(tape.visual, d_out, tape.options.renormalize);
        grads.w1_visual = std::move(branch.w1);
        grads.w2_visual = std::move(branch.w2);
        ratio_gradients(tape.ratio_mode, tape.visual, branch.ratio, grads.theta_alpha,
                        grads.q_alpha_weights, grads.q_alpha_bias);
    }
    if (tape.text.adapted) {
        Matrix d_out(classes, dim);
        for (std::size_t b = 0; b < batch; ++b) {
            const auto f = tape.visual.output.row(b);
            for (std::size_t k = 0; k < classes; ++k) {
                const double g = d_cos(b, k);
                auto dst = d_out.row(k);
                for (std::size_t d = 0; d < dim; ++d) dst[d] += g * f[d];
            }
        }
        auto branch = backprop_branch(tape.text, d_out, tape.options.renormalize);
        grads.w1_text = std::move(branch.w1);
        grads.w2_text = std::move(branch.w2);
        ratio_gradients(tape.ratio_mode, tape.text, branch.ratio, grads.theta_beta,
                        grads.q_beta_weights, grads.q_beta_bias);
    }
    return grads;
}

std::vector<ParamGroup> parameter_groups(AdapterParams& params, RatioMode& ratio, Variant variant) {
    std::vector<ParamGroup> groups;
    const bool visual = adapts_visual(variant);
    const bool text = adapts_text(variant);
    if (visual) {
        groups.push_back({"w1_visual", params.w1_visual.value().values()});
        groups.push_back({"w2_visual", params.w2_visual.value().values()});
    }
    if (text) {
        groups.push_back({"w1_text", params.w1_text.value().values()});
        groups.push_back({"w2_text", params.w2_text.value().values()});
    }
    if (auto* l = std::get_if<LearnableRatio>(&ratio)) {
        if (visual) groups.push_back({"theta_alpha", {&l->theta_alpha, 1}});
        if (text) groups.push_back({"theta_beta", {&l->theta_beta, 1}});
    } else if (auto* q = std::get_if<HypernetRatio>(&ratio)) {
        if (visual) {
            groups.push_back({"q_alpha_weights", q->alpha_weights});
            groups.push_back({"q_alpha_bias", {&q->alpha_bias, 1}});
        }
        if (text) {
            groups.push_back({"q_beta_weights", q->beta_weights});
            groups.push_back({"q_beta_bias", {&q->beta_bias, 1}});
        }
    }
    return groups;
}

std::vector<GradGroup> gradient_groups(const Gradients& g) {
    std::vector<GradGroup> groups;
    auto matrix = [&](const char* name, const std::optional<Matrix>& m) {
        if (m) groups.push_back({name, m->values()});
    };
    auto scalar = [&](const char* name, const std::optional<double>& v) {
        if (v) groups.push_back({name, {&*v, 1}});
    };
    auto vector = [&](const char* name, const std::optional<std::vector<double>>& v) {
        if (v) groups.push_back({name, *v});
    };
    matrix("w1_visual", g.w1_visual);
    matrix("w2_visual", g.w2_visual);
    matrix("w1_text", g.w1_text);
    matrix("w2_text", g.w2_text);
    scalar("theta_alpha", g.theta_alpha);
    scalar("theta_beta", g.theta_beta);
    vector("q_alpha_weights", g.q_alpha_weights);
    scalar("q_alpha_bias", g.q_alpha_bias);
    vector("q_beta_weights", g.q_beta_weights);
    scalar("q_beta_bias", g.q_beta_bias);
    return groups;
}

std::size_t trainable_parameter_count(const AdapterParams& params, const RatioMode& ratio,
                                      Variant variant) {
    const std::size_t branches = (adapts_visual(variant) ? 1 : 0) + (adapts_text(variant) ? 1 : 0);
    std::size_t count = branches * 2 * params.dim * params.hidden;
    if (std::holds_alternative<LearnableRatio>(ratio)) count += branches;
    if (std::holds_alternative<HypernetRatio>(ratio)) count += branches * (params.dim + 1);
    return count;
}

AdapterParams init_params(std::size_t dim, std::size_t bottleneck_ratio, Variant variant,
                          std::uint64_t seed) {
    if (dim == 0) throw ArgumentError("dim must be positive");
    if (bottleneck_ratio == 0) throw ArgumentError("bottleneck_ratio must be positive");
    const std::size_t hidden = dim / bottleneck_ratio;
    if (hidden == 0) {
        throw ArgumentError("bottleneck ratio " + std::to_string(bottleneck_ratio) +
                            " leaves no hidden units for dim " + std::to_string(dim));
    }
    AdapterParams params;
    params.dim = dim;
    params.hidden = hidden;
    params.bottleneck_ratio = bottleneck_ratio;
    auto uniform = [&](std::size_t rows, std::size_t cols, const char* tag) {
        Rng rng(derive_seed(seed, tag));
        const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
        Matrix m(rows, cols);
        for (double& v : m.values()) v = rng.uniform(-bound, bound);
        return m;
    };
    if (adapts_visual(variant)) {
        params.w1_visual = uniform(dim, hidden, "init/w1_visual");
        params.w2_visual = uniform(hidden, dim, "init/w2_visual");
    }
    if (adapts_text(variant)) {
        params.w1_text = uniform(dim, hidden, "init/w1_text");
        params.w2_text = uniform(hidden, dim, "init/w2_text");
    }
    return params;
}

double scheduled_learning_rate(const TrainConfig& config, std::size_t epoch) {
    if (config.schedule == Schedule::Constant) return config.learning_rate;
    const double progress = static_cast<double>(epoch) / static_cast<double>(config.epochs);
    return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(m.row(rows[r]).begin(), m.row(rows[r]).end(), out.row(r).begin());
    }
    return out;
}

bool is_weight_matrix(const std::string& name) { return name.rfind("w", 0) == 0; }

}  // namespace

TrainResult train(const EmbeddingCache& cache, const Episode& episode, const TrainConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    validate_config(config);
    if (episode.indices.empty()) throw ArgumentError("episode is empty");
    for (auto i : episode.indices) {
        if (i >= cache.num_images()) throw ArgumentError("episode index outside the cache");
        if (cache.split_tags[i] != SplitTag::Train) throw ArgumentError("episode index is not a train image");
    }
    const Matrix features = gather_features(cache, episode.indices);
    const auto labels = gather_labels(cache, episode.indices);
    const Matrix classifier = classifier_matrix(cache);
    const auto options = forward_options(config);

    TrainResult result;
    result.params = init_params(cache.dim, config.bottleneck_ratio, config.variant,
                                derive_seed(config.seed, "init"));
    result.ratio_mode = config.ratio_mode;
    validate_ratio_mode(result.ratio_mode, cache.dim);

    auto groups = parameter_groups(result.params, result.ratio_mode, config.variant);
    std::vector<std::vector<double>> velocity;
    for (const auto& g : groups) velocity.emplace_back(g.values.size(), 0.0);

    result.initial_loss =
        cross_entropy(forward_batch(features, classifier, result.params, result.ratio_mode, options).probs, labels);
    if (!std::isfinite(result.initial_loss)) throw DivergenceError(0, 0);

    const std::size_t n = labels.size();
    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng rng(derive_seed(config.seed, "shuffle", epoch));
        rng.shuffle(order);
        const double lr = scheduled_learning_rate(config, epoch);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            const Matrix batch = select_rows(features, rows);
            std::vector<std::size_t> batch_labels;
            for (auto r : rows) batch_labels.push_back(labels[r]);

            const auto tape = forward_batch(batch, classifier, result.params, result.ratio_mode, options);
            const double loss = cross_entropy(tape.probs, batch_labels);
            if (!std::isfinite(loss)) throw DivergenceError(epoch, batch_index);
            loss_sum += loss * static_cast<double>(rows.size());
            for (std::size_t b = 0; b < rows.size(); ++b) {
                if (argmax(tape.probs.row(b)) == batch_labels[b]) ++correct;
            }

            const auto grads = backward(tape, batch_labels);
            const auto grad_groups = gradient_groups(grads);
            if (grad_groups.size() != groups.size()) throw ArgumentError("gradient groups do not match parameters");
            for (std::size_t g = 0; g < groups.size(); ++g) {
                if (grad_groups[g].name != groups[g].name) throw ArgumentError("gradient group order mismatch");
            }
            for (std::size_t g = 0; g < groups.size(); ++g) {
                auto values = groups[g].values;
                const auto grad = grad_groups[g].values;
                auto& vel = velocity[g];
                const double decay = is_weight_matrix(groups[g].name) ? config.weight_decay : 0.0;
                for (std::size_t i = 0; i < values.size(); ++i) {
                    vel[i] = config.momentum * vel[i] + grad[i] + decay * values[i];
                    values[i] -= lr * vel[i];
                }
                if (!all_finite(values)) throw DivergenceError(epoch, batch_index);
            }
        }
        result.loss_curve.push_back(loss_sum / static_cast<double>(n));
        result.train_accuracy_curve.push_back(static_cast<double>(correct) / static_cast<double>(n));
    }

    const auto final_tape = forward_batch(features, classifier, result.params, result.ratio_mode, options);
    result.final_loss = cross_entropy(final_tape.probs, labels);
    auto mean = [](const std::vector<double>& v, double fallback) {
        if (v.empty()) return fallback;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    const auto fixed = std::holds_alternative<HypernetRatio>(result.ratio_mode)
                           ? RatioPair{}
                           : effective_ratios(result.ratio_mode, {});
    result.final_alpha = fixed.alpha;
    result.final_beta = fixed.beta;
    if (const auto* q = std::get_if<HypernetRatio>(&result.ratio_mode)) {
        result.final_alpha = mean(final_tape.visual.ratio, 0.0);
        result.final_beta = mean(final_tape.text.ratio, 0.0);
        // Inactive branch: report the ratio the bias alone would give.
        if (final_tape.visual.ratio.empty()) result.final_alpha = sigmoid(q->alpha_bias);
        if (final_tape.text.ratio.empty()) result.final_beta = sigmoid(q->beta_bias);
    }
    result.wallclock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
    return std::abs(analytic - numeric) / denom;
}

namespace {

// Unit rows clustered around a shared direction, so pairwise cosines fall in
// a narrow band the way contrastive embeddings do and scale-100 logits stay
// out of softmax saturation.
Matrix clustered_unit_rows(std::size_t rows, std::span<const double> shared, double spread, Rng& rng) {
    Matrix m(rows, shared.size());
    for (std::size_t r = 0; r < rows; ++r) {
        do {
            auto row = m.row(r);
            for (std::size_t d = 0; d < row.size(); ++d) row[d] = shared[d] + spread * rng.normal();
        } while (normalize_in_place(m.row(r)) == 0.0);
    }
    return m;
}

RatioMode random_ratio_mode(const std::string& name, std::size_t dim, Rng& rng) {
    if (name == "fixed") return FixedRatio{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
    if (name == "learnable") return LearnableRatio{rng.normal(), rng.normal()};
    if (name == "hypernet") {
        HypernetRatio q;
        for (std::size_t d = 0; d < dim; ++d) {
            q.alpha_weights.push_back(rng.normal(0.0, 0.5));
            q.beta_weights.push_back(rng.normal(0.0, 0.5));
        }
        q.alpha_bias = rng.normal();
        q.beta_bias = rng.normal();
        return q;
    }
    throw ArgumentError("unknown ratio mode '" + name + "'");
}

}  // namespace

GradCheckReport grad_check(const GradCheckOptions& opts) {
    const auto started = std::chrono::steady_clock::now();
    if (opts.trials == 0) throw ArgumentError("trials must be >= 1");
    if (opts.classes < 2 || opts.batch < 1) throw ArgumentError("grad check needs >= 2 classes and >= 1 example");

    GradCheckReport report;
    report.tolerance = opts.tolerance;
    report.trials = opts.trials;

    auto entry_for = [&](Variant v, const std::string& mode, const std::string& group) -> GradCheckEntry& {
        for (auto& e : report.entries) {
            if (e.variant == v && e.ratio_mode == mode && e.group == group) return e;
        }
        report.entries.push_back({v, mode, group, 0.0, 0});
        return report.entries.back();
    };

    for (std::size_t trial = 0; trial < opts.trials; ++trial) {
        Rng problem_rng(derive_seed(opts.seed, "gradcheck/problem", trial));
        std::vector<double> shared(opts.dim);
        for (double& v : shared) v = problem_rng.normal();
        normalize_in_place(shared);
        const Matrix features = clustered_unit_rows(opts.batch, shared, opts.spread, problem_rng);
        const Matrix classifier = clustered_unit_rows(opts.classes, shared, opts.spread, problem_rng);
        std::vector<std::size_t> labels(opts.batch);
        for (auto& y : labels) y = static_cast<std::size_t>(problem_rng.below(opts.classes));

        for (std::size_t vi = 0; vi < opts.variants.size(); ++vi) {
            for (std::size_t mi = 0; mi < opts.ratio_modes.size(); ++mi) {
                const Variant variant = opts.variants[vi];
                const std::string& mode_name = opts.ratio_modes[mi];
                const std::uint64_t combo = trial * 1000 + vi * 10 + mi;
                AdapterParams params = init_params(opts.dim, opts.bottleneck_ratio, variant,
                                                   derive_seed(opts.seed, "gradcheck/params", combo));
                Rng ratio_rng(derive_seed(opts.seed, "gradcheck/ratio", combo));
                RatioMode ratio = random_ratio_mode(mode_name, opts.dim, ratio_rng);
                const ForwardOptions fwd{variant, LogitScale{opts.logit_scale}, opts.renormalize};

                auto loss_at = [&]() {
                    return cross_entropy_from_logits(forward_batch(features, classifier, params, ratio, fwd).logits, labels);
                };

                Gradients grads = backward(forward_batch(features, classifier, params, ratio, fwd), labels);
                if (opts.corrupt) opts.corrupt(grads);
                const auto analytic = gradient_groups(grads);
                auto groups = parameter_groups(params, ratio, variant);
                if (analytic.size() != groups.size()) {
                    throw ArgumentError("gradient groups do not match parameter groups");
                }
                for (std::size_t g = 0; g < groups.size(); ++g) {
                    auto& entry = entry_for(variant, mode_name, groups[g].name);
                    auto values = groups[g].values;
                    for (std::size_t i = 0; i < values.size(); ++i) {
                        const double saved = values[i];
                        values[i] = saved + opts.step;
                        const double up = loss_at();
                        values[i] = saved - opts.step;
                        const double down = loss_at();
                        values[i] = saved;
                        const double numeric = (up - down) / (2.0 * opts.step);
                        double err = relative_error(analytic[g].values[i], numeric);
                        if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
                        entry.max_relative_error = std::max(entry.max_relative_error, err);
                        ++entry.entries;
                    }
                }
            }
        }
    }
    for (const auto& e : report.entries) {
        report.max_relative_error = std::max(report.max_relative_error, e.max_relative_error);
    }
    report.passed = report.max_relative_error < opts.tolerance;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace resadapt
