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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "resadapt/matrix.hpp"

namespace resadapt {

enum class Variant : std::uint8_t { VisualOnly = 0, TextOnly = 1, Both = 2 };

inline bool adapts_visual(Variant v) { return v != Variant::TextOnly; }
inline bool adapts_text(Variant v) { return v != Variant::VisualOnly; }

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);  // visual | text | both

// Residual ratios held constant.
struct FixedRatio {
    double alpha = 0.2;
    double beta = 0.2;
    bool operator==(const FixedRatio&) const = default;
};

// alpha = sigmoid(theta_alpha), beta = sigmoid(theta_beta).
struct LearnableRatio {
    double theta_alpha = 0.0;
    double theta_beta = 0.0;
    bool operator==(const LearnableRatio&) const = default;
};

// Linear hypernetwork Q with weights q (D x 2) and bias (2), stored by column.
// alpha for image b is sigmoid(f_b . q[:,0] + bias[0]), computed from that
// image's own frozen feature; beta for class k is sigmoid(W_k . q[:,1] + bias[1]),
// computed from that class's frozen classifier row.
struct HypernetRatio {
    std::vector<double> alpha_weights;
    std::vector<double> beta_weights;
    double alpha_bias = 0.0;
    double beta_bias = 0.0;
    bool operator==(const HypernetRatio&) const = default;
};

using RatioMode = std::variant<FixedRatio, LearnableRatio, HypernetRatio>;

const char* ratio_mode_name(const RatioMode& mode);  // fixed | learnable | hypernet

// Builds a ratio mode whose effective starting ratios are (alpha, beta):
// fixed stores them, learnable stores their logits, hypernet gets zero
// weights and logit biases. alpha/beta must lie in [0,1] (open for the
// sigmoid modes).
RatioMode make_ratio_mode(const std::string& name, double alpha, double beta, std::size_t dim);

void validate_ratio_mode(const RatioMode& mode, std::size_t dim);

double sigmoid(double x);
double logit(double p);

struct RatioPair {
    double alpha = 0.0;
    double beta = 0.0;
};

RatioPair effective_ratios(const RatioMode& mode, std::span<const double> feature);

struct LogitScale {
    double value = 100.0;
};

void validate_logit_scale(LogitScale scale);

// Bottleneck adapter weights. `hidden` = dim / bottleneck_ratio. A branch's
// matrices are present exactly when the variant adapts that branch.
struct AdapterParams {
    std::size_t dim = 0;
    std::size_t hidden = 0;
    std::size_t bottleneck_ratio = 4;
    std::optional<Matrix> w1_visual;  // dim x hidden
    std::optional<Matrix> w2_visual;  // hidden x dim
    std::optional<Matrix> w1_text;    // dim x hidden
    std::optional<Matrix> w2_text;    // hidden x dim

    bool operator==(const AdapterParams&) const = default;
};

// Throws ShapeError for inconsistent shapes, ArgumentError for NaN/Inf or a
// matrix missing for a branch `variant` adapts.
void validate_params(const AdapterParams& params, Variant variant);

// ReLU(x^T w1) w2.
std::vector<double> adapter_forward(std::span<const double> x, const Matrix& w1, const Matrix& w2);

// ratio * adapted + (1 - ratio) * original, optionally rescaled to unit norm.
std::vector<double> blend(std::span<const double> original, std::span<const double> adapted,
                          double ratio, bool renormalize);

// Intermediates of one adapter branch over a set of rows (images for the
// visual branch, classes for the text branch).
struct BranchTape {
    bool adapted = false;
    Matrix input;         // frozen rows
    Matrix hidden_pre;    // input * w1
    Matrix hidden;        // ReLU(hidden_pre)
    Matrix adapter_out;   // hidden * w2
    std::vector<double> ratio;  // per-row blend ratio
    Matrix blended;       // ratio * adapter_out + (1 - ratio) * input
    std::vector<double> norms;  // L2 norm of each blended row
    Matrix output;        // blended, or blended / norm when renormalizing
    Matrix w2;            // copy of the second-layer weights for backprop
};

struct ForwardOptions {
    Variant variant = Variant::VisualOnly;
    LogitScale scale{};
    bool renormalize = true;
};

struct ForwardTape {
    ForwardOptions options;
    RatioMode ratio_mode;
    BranchTape visual;
    BranchTape text;
    Matrix logits;  // scale * visual.output * text.output^T
    Matrix probs;   // row-wise softmax of logits
};

// features: B x D (frozen image rows), classifier: K x D (frozen class rows).
ForwardTape forward_batch(const Matrix& features, const Matrix& classifier,
                          const AdapterParams& params, const RatioMode& ratio_mode,
                          const ForwardOptions& options);

// Numerically stable row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

// Index of the largest entry; ties go to the smallest index.
std::size_t argmax(std::span<const double> row);

// ADPT model file: variant, ratio mode and adapter weights.
struct AdapterModel {
    Variant variant = Variant::VisualOnly;
    RatioMode ratio_mode;
    AdapterParams params;

    bool operator==(const AdapterModel&) const = default;
};

inline constexpr std::uint32_t kAdapterFormatVersion = 1;

std::vector<std::uint8_t> serialize_adapter(const AdapterModel& model);
AdapterModel deserialize_adapter(std::span<const std::uint8_t> bytes);
void save_adapter(const AdapterModel& model, const std::filesystem::path& path);
AdapterModel load_adapter(const std::filesystem::path& path);

}  // namespace resadapt
