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

#include "resadapt/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include "resadapt/errors.hpp"

namespace resadapt {

const char* to_string(Method m) {
    switch (m) {
        case Method::ZeroShot: return "zero_shot";
        case Method::LinearProbe: return "linear_probe";
        case Method::Adapter: return "adapter";
    }
    return "?";
}

EvalReport make_report(Method method, SplitTag split, std::size_t num_classes,
                       std::vector<std::size_t> images, std::vector<std::size_t> predictions,
                       std::vector<std::size_t> labels) {
    if (predictions.size() != labels.size() || images.size() != labels.size()) {
        throw ArgumentError("predictions, labels and images differ in length");
    }
    EvalReport report;
    report.method = method;
    report.split = split;
    report.num_test = labels.size();
    report.per_class_accuracy.assign(num_classes, 0.0);
    report.per_class_count.assign(num_classes, 0);
    std::vector<std::size_t> hits(num_classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++report.per_class_count[labels[i]];
        if (predictions[i] == labels[i]) {
            ++hits[labels[i]];
            ++correct;
        }
    }
    for (std::size_t k = 0; k < num_classes; ++k) {
        if (report.per_class_count[k] > 0) {
            report.per_class_accuracy[k] =
                static_cast<double>(hits[k]) / static_cast<double>(report.per_class_count[k]);
        }
    }
    report.overall_accuracy =
        labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
    report.images = std::move(images);
    report.predictions = std::move(predictions);
    report.labels = std::move(labels);
    return report;
}

namespace {

std::vector<std::size_t> nonempty_split(const EmbeddingCache& cache, SplitTag split) {
    auto images = split_indices(cache, split);
    if (images.empty()) throw ArgumentError(std::string("split '") + to_string(split) + "' is empty");
    return images;
}

constexpr std::size_t kEvalChunk = 512;

}  // namespace

EvalReport eval_zero_shot(const EmbeddingCache& cache, LogitScale scale, SplitTag split) {
    validate_logit_scale(scale);
    auto images = nonempty_split(cache, split);
    Matrix classifier = classifier_matrix(cache);
    for (std::size_t k = 0; k < classifier.rows(); ++k) {
        if (normalize_in_place(classifier.row(k)) == 0.0) throw DegenerateFeatureError("zero classifier row");
    }
    std::vector<std::size_t> predictions;
    predictions.reserve(images.size());
    std::vector<double> feature(cache.dim);
    std::vector<double> logits(cache.num_classes());
    for (auto i : images) {
        const auto src = cache.feature(i);
        for (std::size_t d = 0; d < cache.dim; ++d) feature[d] = static_cast<double>(src[d]);
        if (normalize_in_place(feature) == 0.0) throw DegenerateFeatureError("zero image feature");
        for (std::size_t k = 0; k < logits.size(); ++k) logits[k] = scale.value * dot(feature, classifier.row(k));
        predictions.push_back(argmax(logits));
    }
    auto labels = gather_labels(cache, images);
    return make_report(Method::ZeroShot, split, cache.num_classes(), std::move(images),
                       std::move(predictions), std::move(labels));
}

EvalReport eval_adapter(const EmbeddingCache& cache, const AdapterModel& model, LogitScale scale,
                        bool renormalize, SplitTag split) {
    auto images = nonempty_split(cache, split);
    const Matrix classifier = classifier_matrix(cache);
    const ForwardOptions options{model.variant, scale, renormalize};
    std::vector<std::size_t> predictions;
    predictions.reserve(images.size());
    for (std::size_t start = 0; start < images.size(); start += kEvalChunk) {
        const std::size_t stop = std::min(images.size(), start + kEvalChunk);
        const std::span<const std::size_t> chunk(images.data() + start, stop - start);
        const auto tape = forward_batch(gather_features(cache, chunk), classifier, model.params,
                                        model.ratio_mode, options);
        for (std::size_t b = 0; b < chunk.size(); ++b) predictions.push_back(argmax(tape.logits.row(b)));
    }
    auto labels = gather_labels(cache, images);
    return make_report(Method::Adapter, split, cache.num_classes(), std::move(images),
                       std::move(predictions), std::move(labels));
}

// ---------------------------------------------------------------------------
// Linear probe

ProbeObjective probe_objective(const Matrix& features, std::span<const std::size_t> labels,
                               const Matrix& weights, std::span<const double> bias, double l2) {
    const std::size_t n = features.rows();
    const std::size_t classes = weights.rows();
    const std::size_t dim = features.cols();
    if (weights.cols() != dim || bias.size() != classes) throw ShapeError("probe parameters have the wrong shape");
    if (labels.size() != n || n == 0) throw ArgumentError("probe needs one label per example");

    ProbeObjective out{0.0, Matrix(classes, dim), std::vector<double>(classes, 0.0)};
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> z(classes);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = features.row(i);
        for (std::size_t k = 0; k < classes; ++k) z[k] = dot(weights.row(k), x) + bias[k];
        const double peak = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (double& v : z) {
            v = std::exp(v - peak);
            total += v;
        }
        const std::size_t y = labels[i];
        if (y >= classes) throw ArgumentError("probe label out of range");
        out.value += (std::log(total) - std::log(z[y])) * inv_n;
        for (std::size_t k = 0; k < classes; ++k) {
            const double g = (z[k] / total - (k == y ? 1.0 : 0.0)) * inv_n;
            out.grad_bias[k] += g;
            auto gw = out.grad_weights.row(k);
            for (std::size_t d = 0; d < dim; ++d) gw[d] += g * x[d];
        }
    }
    const double reg = l2 * inv_n;
    double sq = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
        const auto w = weights.row(k);
        auto gw = out.grad_weights.row(k);
        for (std::size_t d = 0; d < dim; ++d) {
            sq += w[d] * w[d];
            gw[d] += reg * w[d];
        }
    }
    out.value += 0.5 * reg * sq;
    return out;
}

namespace {

double gradient_norm(const ProbeObjective& obj) {
    return std::sqrt(dot(obj.grad_weights.values(), obj.grad_weights.values()) + dot(obj.grad_bias, obj.grad_bias));
}

}  // namespace

LinearProbe train_linear_probe(const Matrix& features, std::span<const std::size_t> labels,
                               std::size_t num_classes, const LinearProbeConfig& config) {
    if (!(config.l2 >= 0.0) || !(config.step > 0.0) || !(config.tolerance > 0.0)) {
        throw ArgumentError("probe needs l2 >= 0, step > 0 and tolerance > 0");
    }
    LinearProbe probe;
    probe.weights = Matrix(num_classes, features.cols());
    probe.bias.assign(num_classes, 0.0);

    auto obj = probe_objective(features, labels, probe.weights, probe.bias, config.l2);
    double step = config.step;
    Matrix trial_w;
    std::vector<double> trial_b;
    for (probe.iterations = 0; probe.iterations < config.max_iterations; ++probe.iterations) {
        const double gnorm = gradient_norm(obj);
        if (!std::isfinite(obj.value) || !std::isfinite(gnorm)) {
            throw DivergenceError("linear probe diverged at iteration " + std::to_string(probe.iterations));
        }
        if (gnorm < config.tolerance) break;
        const double gsq = gnorm * gnorm;
        auto take_step = [&](double t) {
            trial_w = probe.weights;
            trial_b = probe.bias;
            auto w = trial_w.values();
            const auto gw = obj.grad_weights.values();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= t * gw[i];
            for (std::size_t k = 0; k < trial_b.size(); ++k) trial_b[k] -= t * obj.grad_bias[k];
            return probe_objective(features, labels, trial_w, trial_b, config.l2);
        };
        ProbeObjective next;
        if (config.line_search) {
            // Armijo backtracking; the accepted step seeds the next iteration at 2x.
            step *= 2.0;
            for (;;) {
                next = take_step(step);
                if (next.value <= obj.value - 0.5 * step * gsq || step < 1e-300) break;
                step *= 0.5;
            }
        } else {
            next = take_step(step);
        }
        probe.weights = std::move(trial_w);
        probe.bias = std::move(trial_b);
        obj = std::move(next);
    }
    probe.objective = obj.value;
    probe.gradient_norm = gradient_norm(obj);
    if (!std::isfinite(probe.objective) || !std::isfinite(probe.gradient_norm)) {
        throw DivergenceError("linear probe diverged");
    }
    probe.converged = probe.gradient_norm < config.tolerance;
    return probe;
}

LinearProbe train_linear_probe(const EmbeddingCache& cache, const Episode& episode,
                               const LinearProbeConfig& config) {
    if (episode.indices.empty()) throw ArgumentError("episode is empty");
    return train_linear_probe(gather_features(cache, episode.indices),
                              gather_labels(cache, episode.indices), cache.num_classes(), config);
}

std::vector<std::size_t> probe_predict(const LinearProbe& probe, const Matrix& features) {
    if (features.cols() != probe.weights.cols()) throw ShapeError("probe/feature dimension mismatch");
    std::vector<std::size_t> out;
    std::vector<double> z(probe.bias.size());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        for (std::size_t k = 0; k < z.size(); ++k) z[k] = dot(probe.weights.row(k), features.row(i)) + probe.bias[k];
        out.push_back(argmax(z));
    }
    return out;
}

EvalReport eval_linear_probe(const EmbeddingCache& cache, const LinearProbe& probe, SplitTag split) {
    auto images = nonempty_split(cache, split);
    auto predictions = probe_predict(probe, gather_features(cache, images));
    auto labels = gather_labels(cache, images);
    return make_report(Method::LinearProbe, split, cache.num_classes(), std::move(images),
                       std::move(predictions), std::move(labels));
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

// Runs cells [0, n) on up to `jobs` threads; results land by index.
void run_cells(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& cell) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) cell(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t j = 0; j < jobs; ++j) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) cell(i);
        });
    }
    for (auto& w : workers) w.join();
}

void pick_best(SweepTable& table) {
    for (std::size_t i = 0; i < table.axis_values.size(); ++i) {
        if (!table.accuracies[i]) continue;
        if (!table.best_value) {
            table.best_value = table.axis_values[i];
            continue;
        }
        const auto best_it = std::find(table.axis_values.begin(), table.axis_values.end(), *table.best_value);
        const double best_acc = *table.accuracies[static_cast<std::size_t>(best_it - table.axis_values.begin())];
        const double acc = *table.accuracies[i];
        if (acc > best_acc || (acc == best_acc && table.axis_values[i] < *table.best_value)) {
            table.best_value = table.axis_values[i];
        }
    }
}

double adapter_test_accuracy(const EmbeddingCache& cache, const Episode& episode, const TrainConfig& config) {
    const auto result = train(cache, episode, config);
    const AdapterModel model{config.variant, result.ratio_mode, result.params};
    return eval_adapter(cache, model, LogitScale{config.logit_scale}, config.renormalize, SplitTag::Test)
        .overall_accuracy;
}

}  // namespace

SweepTable sweep_alpha(const EmbeddingCache& cache, const Episode& episode, const TrainConfig& base,
                       const std::vector<double>& grid, std::size_t jobs) {
    if (grid.empty()) throw ArgumentError("alpha grid is empty");
    for (double a : grid) {
        if (!(a >= 0.0 && a <= 1.0)) throw ArgumentError("alpha grid values must lie in [0,1]");
    }
    validate_config(base);
    double beta = FixedRatio{}.beta;
    if (const auto* f = std::get_if<FixedRatio>(&base.ratio_mode)) beta = f->beta;

    SweepTable table;
    table.axis_name = "alpha";
    table.axis_values = grid;
    table.accuracies.assign(grid.size(), std::nullopt);
    table.errors.assign(grid.size(), "");
    std::vector<std::exception_ptr> failures(grid.size());
    run_cells(grid.size(), jobs, [&](std::size_t i) {
        try {
            if (grid[i] == 0.0) {
                table.accuracies[i] =
                    eval_zero_shot(cache, LogitScale{base.logit_scale}, SplitTag::Test).overall_accuracy;
                return;
            }
            TrainConfig config = base;
            config.ratio_mode = FixedRatio{grid[i], beta};
            table.accuracies[i] = adapter_test_accuracy(cache, episode, config);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    });
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    pick_best(table);
    return table;
}

SweepTable sweep_bottleneck(const EmbeddingCache& cache, const Episode& episode,
                            const TrainConfig& base, const std::vector<std::size_t>& ratios,
                            std::size_t jobs) {
    if (ratios.empty()) throw ArgumentError("bottleneck ratio list is empty");
    SweepTable table;
    table.axis_name = "bottleneck_ratio";
    for (auto r : ratios) table.axis_values.push_back(static_cast<double>(r));
    table.accuracies.assign(ratios.size(), std::nullopt);
    table.errors.assign(ratios.size(), "");
    run_cells(ratios.size(), jobs, [&](std::size_t i) {
        try {
            TrainConfig config = base;
            config.bottleneck_ratio = ratios[i];
            table.accuracies[i] = adapter_test_accuracy(cache, episode, config);
        } catch (const Error& e) {
            table.errors[i] = std::string(e.kind()) + ": " + e.what();
        }
    });
    pick_best(table);
    return table;
}

FeatureTable export_adapted_features(const EmbeddingCache& cache, const AdapterModel& model,
                                     std::optional<SplitTag> split) {
    std::vector<std::size_t> images;
    if (split) {
        images = split_indices(cache, *split);
    } else {
        for (std::size_t i = 0; i < cache.num_images(); ++i) images.push_back(i);
    }
    FeatureTable table;
    table.features = Matrix(images.size(), cache.dim);
    table.labels = gather_labels(cache, images);
    if (images.empty()) return table;
    const Matrix classifier = classifier_matrix(cache);
    const ForwardOptions options{model.variant, LogitScale{}, true};
    for (std::size_t start = 0; start < images.size(); start += kEvalChunk) {
        const std::size_t stop = std::min(images.size(), start + kEvalChunk);
        const std::span<const std::size_t> chunk(images.data() + start, stop - start);
        const auto tape = forward_batch(gather_features(cache, chunk), classifier, model.params,
                                        model.ratio_mode, options);
        for (std::size_t b = 0; b < chunk.size(); ++b) {
            const auto row = tape.visual.output.row(b);
            std::copy(row.begin(), row.end(), table.features.row(start + b).begin());
        }
    }
    return table;
}

}  // namespace resadapt
