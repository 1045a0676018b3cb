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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "resadapt/adapter.hpp"
#include "resadapt/embedding_store.hpp"
#include "resadapt/trainer.hpp"

namespace resadapt {

enum class Method { ZeroShot, LinearProbe, Adapter };

const char* to_string(Method m);

struct EvalReport {
    Method method = Method::ZeroShot;
    SplitTag split = SplitTag::Test;
    double overall_accuracy = 0.0;
    std::vector<double> per_class_accuracy;     // 0 for classes absent from the split
    std::vector<std::size_t> per_class_count;
    std::size_t num_test = 0;
    std::vector<std::size_t> images;            // evaluated image indices
    std::vector<std::size_t> predictions;       // one per image, ties -> smallest class
    std::vector<std::size_t> labels;
};

EvalReport make_report(Method method, SplitTag split, std::size_t num_classes,
                       std::vector<std::size_t> images, std::vector<std::size_t> predictions,
                       std::vector<std::size_t> labels);

// argmax_k scale * cos(f, W_k) over the split.
EvalReport eval_zero_shot(const EmbeddingCache& cache, LogitScale scale, SplitTag split);

EvalReport eval_adapter(const EmbeddingCache& cache, const AdapterModel& model, LogitScale scale,
                        bool renormalize, SplitTag split);

// Multinomial logistic regression on frozen episode features:
//   J(W, b) = (1/n) sum_i CE(softmax(W x_i + b), y_i) + (l2 / 2n) ||W||_F^2
// Full-batch gradient descent, Armijo backtracking (or a fixed step), until
// ||grad J|| < tolerance or max_iterations.
struct LinearProbeConfig {
    double l2 = 1.0;
    std::size_t max_iterations = 10000;
    double tolerance = 1e-6;
    bool line_search = true;
    double step = 1.0;  // fixed step, or the first trial step of the line search
};

struct LinearProbe {
    Matrix weights;             // K x D
    std::vector<double> bias;   // K
    std::size_t iterations = 0;
    double objective = 0.0;
    double gradient_norm = 0.0;
    bool converged = false;
};

struct ProbeObjective {
    double value = 0.0;
    Matrix grad_weights;
    std::vector<double> grad_bias;
};

ProbeObjective probe_objective(const Matrix& features, std::span<const std::size_t> labels,
                               const Matrix& weights, std::span<const double> bias, double l2);

LinearProbe train_linear_probe(const EmbeddingCache& cache, const Episode& episode,
                               const LinearProbeConfig& config);
LinearProbe train_linear_probe(const Matrix& features, std::span<const std::size_t> labels,
                               std::size_t num_classes, const LinearProbeConfig& config);

std::vector<std::size_t> probe_predict(const LinearProbe& probe, const Matrix& features);

EvalReport eval_linear_probe(const EmbeddingCache& cache, const LinearProbe& probe, SplitTag split);

struct SweepTable {
    std::string axis_name;
    std::vector<double> axis_values;
    std::vector<std::optional<double>> accuracies;  // empty where the cell failed
    std::vector<std::string> errors;                // "" where the cell succeeded
    std::optional<double> best_value;               // max accuracy, ties -> smallest axis value
};

// One Fixed-ratio training per alpha, evaluated on the test split. alpha = 0
// is served by zero-shot evaluation without training. Cell errors propagate.
SweepTable sweep_alpha(const EmbeddingCache& cache, const Episode& episode, const TrainConfig& base,
                       const std::vector<double>& grid, std::size_t jobs = 1);

// One training per bottleneck ratio. A failing cell records its error and
// the rest of the sweep continues.
SweepTable sweep_bottleneck(const EmbeddingCache& cache, const Episode& episode,
                            const TrainConfig& base, const std::vector<std::size_t>& ratios,
                            std::size_t jobs = 1);

// Blended, unit-normalized image features f* (rows) of the chosen images.
struct FeatureTable {
    Matrix features;
    std::vector<std::size_t> labels;
};

FeatureTable export_adapted_features(const EmbeddingCache& cache, const AdapterModel& model,
                                     std::optional<SplitTag> split);

}  // namespace resadapt
