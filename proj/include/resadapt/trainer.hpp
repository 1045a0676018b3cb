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
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resadapt/adapter.hpp"
#include "resadapt/embedding_store.hpp"

namespace resadapt {

enum class Schedule { Constant, Cosine };

const char* to_string(Schedule s);
Schedule parse_schedule(const std::string& name);

struct TrainConfig {
    std::size_t shots = 16;
    std::uint64_t seed = 0;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double learning_rate = 1e-5;
    double momentum = 0.9;
    Schedule schedule = Schedule::Cosine;
    Variant variant = Variant::VisualOnly;
    RatioMode ratio_mode = FixedRatio{0.2, 0.2};
    std::size_t bottleneck_ratio = 4;
    double weight_decay = 0.0;
    bool renormalize = true;
    double logit_scale = 100.0;
};

void validate_config(const TrainConfig& config);

ForwardOptions forward_options(const TrainConfig& config);

// Mean negative log-likelihood; probabilities are floored at 1e-12 inside
// the log only.
double cross_entropy(const Matrix& probs, std::span<const std::size_t> labels);

inline constexpr double kProbabilityFloor = 1e-12;

// Exact mean CE from logits via log-sum-exp, with no floor. This is the
// function the analytic gradients differentiate; the finite-difference
// checker uses it as its objective.
double cross_entropy_from_logits(const Matrix& logits, std::span<const std::size_t> labels);

// d(mean CE)/d(logits) = (probs - onehot) / B.
Matrix logit_gradient(const Matrix& probs, std::span<const std::size_t> labels);

// Gradients of the batch loss. A field is engaged exactly when the
// corresponding parameter takes part in the forward pass of the variant and
// ratio mode recorded on the tape.
struct Gradients {
    std::optional<Matrix> w1_visual;
    std::optional<Matrix> w2_visual;
    std::optional<Matrix> w1_text;
    std::optional<Matrix> w2_text;
    std::optional<double> theta_alpha;
    std::optional<double> theta_beta;
    std::optional<std::vector<double>> q_alpha_weights;
    std::optional<double> q_alpha_bias;
    std::optional<std::vector<double>> q_beta_weights;
    std::optional<double> q_beta_bias;
};

// Mutable view of one trainable parameter group, paired by name with the
// matching gradient group.
struct ParamGroup {
    std::string name;
    std::span<double> values;
};

struct GradGroup {
    std::string name;
    std::span<const double> values;
};

// Active parameter groups in a fixed order. `params`/`ratio` must outlive the
// returned spans.
std::vector<ParamGroup> parameter_groups(AdapterParams& params, RatioMode& ratio, Variant variant);
std::vector<GradGroup> gradient_groups(const Gradients& grads);

Gradients backward(const ForwardTape& tape, std::span<const std::size_t> labels);

// 2*D*H per adapted branch plus one ratio scalar (learnable) or D+1 hypernet
// parameters (one weight column and bias) per adapted branch.
std::size_t trainable_parameter_count(const AdapterParams& params, const RatioMode& ratio,
                                      Variant variant);

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) per matrix, one stream per matrix.
AdapterParams init_params(std::size_t dim, std::size_t bottleneck_ratio, Variant variant,
                          std::uint64_t seed);

struct TrainResult {
    AdapterParams params;
    RatioMode ratio_mode;
    std::vector<double> loss_curve;            // per-epoch, batch-size weighted
    std::vector<double> train_accuracy_curve;  // per-epoch, pre-update predictions
    double initial_loss = 0.0;                 // full-episode loss at initialization
    double final_loss = 0.0;                   // full-episode loss after the last epoch
    double final_alpha = 0.0;                  // effective ratios after training
    double final_beta = 0.0;                   // (episode-mean for hypernet)
    double wallclock_seconds = 0.0;
};

// Mini-batch SGD with momentum over the episode. The cache is read-only.
TrainResult train(const EmbeddingCache& cache, const Episode& episode, const TrainConfig& config);

// Learning rate for `epoch` (0-based).
double scheduled_learning_rate(const TrainConfig& config, std::size_t epoch);

struct GradCheckOptions {
    std::size_t dim = 8;
    std::size_t bottleneck_ratio = 4;  // hidden = dim / ratio
    std::size_t classes = 3;
    std::size_t batch = 4;
    std::size_t trials = 20;
    std::uint64_t seed = 0;
    double step = 1e-5;
    double tolerance = 1e-4;
    // Central differences lose relative precision on tiny entries at large
    // logit scale; 10 keeps roundoff well below the tolerance.
    double logit_scale = 10.0;
    // Per-component spread of problem rows around a shared unit direction.
    double spread = 0.5;
    std::vector<Variant> variants = {Variant::VisualOnly, Variant::TextOnly, Variant::Both};
    std::vector<std::string> ratio_modes = {"fixed", "learnable", "hypernet"};
    bool renormalize = true;
    // Test hook: applied to every analytic gradient before comparison.
    std::function<void(Gradients&)> corrupt;
};

struct GradCheckEntry {
    Variant variant = Variant::VisualOnly;
    std::string ratio_mode;
    std::string group;
    double max_relative_error = 0.0;
    std::size_t entries = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;  // worst error per (variant, mode, group) over trials
    double max_relative_error = 0.0;
    double tolerance = 0.0;
    std::size_t trials = 0;
    bool passed = false;
    double seconds = 0.0;
};

// |a - n| / max(|a|, |n|, 1e-5). The floor turns the check into an absolute
// 1e-9 test for entries the central difference cannot resolve relatively.
double relative_error(double analytic, double numeric);

GradCheckReport grad_check(const GradCheckOptions& options);

}  // namespace resadapt
