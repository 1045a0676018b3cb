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

#include "resadapt/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "resadapt/embedding_store.hpp"
#include "resadapt/errors.hpp"

namespace resadapt {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::VisualOnly: return "visual";
        case Variant::TextOnly: return "text";
        case Variant::Both: return "both";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    if (name == "visual") return Variant::VisualOnly;
    if (name == "text") return Variant::TextOnly;
    if (name == "both") return Variant::Both;
    throw ArgumentError("unknown variant '" + name + "' (expected visual, text or both)");
}

const char* ratio_mode_name(const RatioMode& mode) {
    switch (mode.index()) {
        case 0: return "fixed";
        case 1: return "learnable";
        default: return "hypernet";
    }
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

RatioMode make_ratio_mode(const std::string& name, double alpha, double beta, std::size_t dim) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (name == "fixed") {
        if (!in_unit(alpha) || !in_unit(beta)) throw ArgumentError("fixed alpha/beta must lie in [0,1]");
        return FixedRatio{alpha, beta};
    }
    if (!in_open_unit(alpha) || !in_open_unit(beta)) {
        throw ArgumentError("initial alpha/beta for sigmoid ratio modes must lie in (0,1)");
    }
    if (name == "learnable") return LearnableRatio{logit(alpha), logit(beta)};
    if (name == "hypernet") {
        HypernetRatio q;
        q.alpha_weights.assign(dim, 0.0);
        q.beta_weights.assign(dim, 0.0);
        q.alpha_bias = logit(alpha);
        q.beta_bias = logit(beta);
        return q;
    }
    throw ArgumentError("unknown ratio mode '" + name + "' (expected fixed, learnable or hypernet)");
}

void validate_ratio_mode(const RatioMode& mode, std::size_t dim) {
    if (const auto* f = std::get_if<FixedRatio>(&mode)) {
        if (!(f->alpha >= 0.0 && f->alpha <= 1.0) || !(f->beta >= 0.0 && f->beta <= 1.0)) {
            throw ArgumentError("fixed alpha/beta must lie in [0,1]");
        }
    } else if (const auto* l = std::get_if<LearnableRatio>(&mode)) {
        if (!std::isfinite(l->theta_alpha) || !std::isfinite(l->theta_beta)) {
            throw ArgumentError("learnable ratio parameters must be finite");
        }
    } else {
        const auto& q = std::get<HypernetRatio>(mode);
        if (q.alpha_weights.size() != dim || q.beta_weights.size() != dim) {
            throw ShapeError("hypernetwork weights must have one entry per feature dimension");
        }
        if (!all_finite(q.alpha_weights) || !all_finite(q.beta_weights) ||
            !std::isfinite(q.alpha_bias) || !std::isfinite(q.beta_bias)) {
            throw ArgumentError("hypernetwork parameters must be finite");
        }
    }
}

RatioPair effective_ratios(const RatioMode& mode, std::span<const double> feature) {
    if (const auto* f = std::get_if<FixedRatio>(&mode)) return {f->alpha, f->beta};
    if (const auto* l = std::get_if<LearnableRatio>(&mode)) {
        return {sigmoid(l->theta_alpha), sigmoid(l->theta_beta)};
    }
    const auto& q = std::get<HypernetRatio>(mode);
    if (feature.size() != q.alpha_weights.size()) throw ShapeError("hypernetwork input has wrong length");
    return {sigmoid(dot(feature, q.alpha_weights) + q.alpha_bias),
            sigmoid(dot(feature, q.beta_weights) + q.beta_bias)};
}

void validate_logit_scale(LogitScale scale) {
    if (!(scale.value > 0.0) || !std::isfinite(scale.value)) {
        throw ArgumentError("logit scale must be positive and finite");
    }
}

void validate_params(const AdapterParams& params, Variant variant) {
    if (params.hidden < 1) throw ArgumentError("bottleneck width must be >= 1");
    auto check = [&](const std::optional<Matrix>& m, std::size_t rows, std::size_t cols,
                     bool required, const char* name) {
        if (!m) {
            if (required) throw ArgumentError(std::string(name) + " is required by the variant");
            return;
        }
        if (m->rows() != rows || m->cols() != cols) throw ShapeError(std::string(name) + " has the wrong shape");
        if (!all_finite(m->values())) throw ArgumentError(std::string(name) + " contains NaN/Inf");
    };
    check(params.w1_visual, params.dim, params.hidden, adapts_visual(variant), "w1_visual");
    check(params.w2_visual, params.hidden, params.dim, adapts_visual(variant), "w2_visual");
    check(params.w1_text, params.dim, params.hidden, adapts_text(variant), "w1_text");
    check(params.w2_text, params.hidden, params.dim, adapts_text(variant), "w2_text");
}

std::vector<double> adapter_forward(std::span<const double> x, const Matrix& w1, const Matrix& w2) {
    if (x.size() != w1.rows() || w1.cols() != w2.rows() || w2.cols() != x.size()) {
        throw ShapeError("adapter_forward: expected x (D), w1 (D x H), w2 (H x D)");
    }
    std::vector<double> hidden(w1.cols(), 0.0);
    for (std::size_t d = 0; d < x.size(); ++d) {
        const auto w = w1.row(d);
        for (std::size_t h = 0; h < hidden.size(); ++h) hidden[h] += x[d] * w[h];
    }
    std::vector<double> out(w2.cols(), 0.0);
    for (std::size_t h = 0; h < hidden.size(); ++h) {
        const double r = std::max(hidden[h], 0.0);
        const auto w = w2.row(h);
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += r * w[d];
    }
    return out;
}

namespace {

void blend_into(std::span<const double> original, std::span<const double> adapted, double ratio,
                std::span<double> out) {
    const double keep = 1.0 - ratio;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ratio * adapted[i] + keep * original[i];
}

// Runs ReLU(input * w1) * w2, blends per-row with `ratio` and optionally
// renormalizes. With no weights the branch is frozen: output is the input
// (renormalized when requested).
BranchTape run_branch(const Matrix& input, const std::optional<Matrix>& w1,
                      const std::optional<Matrix>& w2, std::vector<double> ratio, bool renormalize,
                      const char* what) {
    BranchTape tape;
    tape.input = input;
    tape.adapted = w1.has_value();
    const std::size_t rows = input.rows();
    const std::size_t dim = input.cols();
    if (tape.adapted) {
        tape.hidden_pre = matmul(input, *w1);
        tape.hidden = tape.hidden_pre;
        for (double& v : tape.hidden.values()) v = std::max(v, 0.0);
        tape.adapter_out = matmul(tape.hidden, *w2);
        tape.w2 = *w2;
        tape.ratio = std::move(ratio);
        tape.blended = Matrix(rows, dim);
        for (std::size_t r = 0; r < rows; ++r) {
            blend_into(input.row(r), tape.adapter_out.row(r), tape.ratio[r], tape.blended.row(r));
        }
    } else {
        tape.blended = input;
    }
    tape.output = tape.blended;
    tape.norms.assign(rows, 1.0);
    if (renormalize) {
        for (std::size_t r = 0; r < rows; ++r) {
            tape.norms[r] = normalize_in_place(tape.output.row(r));
            if (tape.norms[r] == 0.0) {
                throw DegenerateFeatureError(std::string(what) + " row " + std::to_string(r) +
                                             " blends to the zero vector");
            }
        }
    }
    return tape;
}

std::vector<double> row_ratios(const RatioMode& mode, const Matrix& rows, bool alpha) {
    std::vector<double> out(rows.rows());
    if (const auto* h = std::get_if<HypernetRatio>(&mode)) {
        const auto& weights = alpha ? h->alpha_weights : h->beta_weights;
        const double bias = alpha ? h->alpha_bias : h->beta_bias;
        for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = sigmoid(dot(rows.row(r), weights) + bias);
    } else {
        const auto pair = effective_ratios(mode, {});
        std::fill(out.begin(), out.end(), alpha ? pair.alpha : pair.beta);
    }
    return out;
}

}  // namespace

std::vector<double> blend(std::span<const double> original, std::span<const double> adapted,
                          double ratio, bool renormalize) {
    if (original.size() != adapted.size()) throw ShapeError("blend: vectors differ in length");
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw ArgumentError("blend: ratio must lie in [0,1]");
    std::vector<double> out(original.size());
    blend_into(original, adapted, ratio, out);
    if (renormalize && normalize_in_place(out) == 0.0) {
        throw DegenerateFeatureError("blend result is the zero vector");
    }
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix probs(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto z = logits.row(r);
        const double peak = *std::max_element(z.begin(), z.end());
        auto p = probs.row(r);
        double total = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) {
            p[k] = std::exp(z[k] - peak);
            total += p[k];
        }
        for (double& v : p) v /= total;
    }
    return probs;
}

std::size_t argmax(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
        if (row[k] > row[best]) best = k;
    }
    return best;
}

ForwardTape forward_batch(const Matrix& features, const Matrix& classifier,
                          const AdapterParams& params, const RatioMode& ratio_mode,
                          const ForwardOptions& options) {
    validate_logit_scale(options.scale);
    if (features.cols() != classifier.cols()) throw ShapeError("features and classifier differ in D");
    if (features.cols() != params.dim) throw ShapeError("adapter dim does not match the features");
    validate_params(params, options.variant);
    validate_ratio_mode(ratio_mode, params.dim);

    ForwardTape tape;
    tape.options = options;
    tape.ratio_mode = ratio_mode;
    const bool visual = adapts_visual(options.variant);
    const bool text = adapts_text(options.variant);
    const std::optional<Matrix> none;
    tape.visual = run_branch(features, visual ? params.w1_visual : none,
                             visual ? params.w2_visual : none,
                             visual ? row_ratios(ratio_mode, features, true) : std::vector<double>{},
                             options.renormalize, "image");
    tape.text = run_branch(classifier, text ? params.w1_text : none, text ? params.w2_text : none,
                           text ? row_ratios(ratio_mode, classifier, false) : std::vector<double>{},
                           options.renormalize, "classifier");

    tape.logits = matmul_transposed(tape.visual.output, tape.text.output);
    for (double& z : tape.logits.values()) z = options.scale.value * z;
    tape.probs = softmax_rows(tape.logits);
    return tape;
}

// ---------------------------------------------------------------------------
// ADPT serialization

namespace {

constexpr char kAdapterMagic[4] = {'A', 'D', 'P', 'T'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

void put_matrix(std::vector<std::uint8_t>& out, const std::optional<Matrix>& m) {
    put<std::uint32_t>(out, m ? static_cast<std::uint32_t>(m->rows()) : 0);
    put<std::uint32_t>(out, m ? static_cast<std::uint32_t>(m->cols()) : 0);
    if (m) {
        for (double v : m->values()) put<double>(out, v);
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    template <typename T>
    T get() {
        if (bytes_.size() - pos_ < sizeof(T)) throw FormatError("truncated adapter file");
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::optional<Matrix> get_matrix(Reader& r) {
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (rows == 0 && cols == 0) return std::nullopt;
    if (rows == 0 || cols == 0) throw FormatError("matrix with one zero dimension");
    const std::size_t count = static_cast<std::size_t>(rows) * cols;
    if (count > r.remaining() / sizeof(double)) throw FormatError("truncated adapter file");
    Matrix m(rows, cols);
    for (double& v : m.values()) v = r.get<double>();
    return m;
}

}  // namespace

std::vector<std::uint8_t> serialize_adapter(const AdapterModel& model) {
    validate_params(model.params, model.variant);
    validate_ratio_mode(model.ratio_mode, model.params.dim);
    std::vector<std::uint8_t> out(kAdapterMagic, kAdapterMagic + 4);
    put<std::uint32_t>(out, kAdapterFormatVersion);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(model.variant));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(model.ratio_mode.index()));
    std::vector<double> ratio_values;
    if (const auto* f = std::get_if<FixedRatio>(&model.ratio_mode)) {
        ratio_values = {f->alpha, f->beta};
    } else if (const auto* l = std::get_if<LearnableRatio>(&model.ratio_mode)) {
        ratio_values = {l->theta_alpha, l->theta_beta};
    } else {
        const auto& q = std::get<HypernetRatio>(model.ratio_mode);
        for (std::size_t d = 0; d < q.alpha_weights.size(); ++d) {
            ratio_values.push_back(q.alpha_weights[d]);
            ratio_values.push_back(q.beta_weights[d]);
        }
        ratio_values.push_back(q.alpha_bias);
        ratio_values.push_back(q.beta_bias);
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ratio_values.size()));
    for (double v : ratio_values) put<double>(out, v);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.params.dim));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.params.hidden));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.params.bottleneck_ratio));
    put_matrix(out, model.params.w1_visual);
    put_matrix(out, model.params.w2_visual);
    put_matrix(out, model.params.w1_text);
    put_matrix(out, model.params.w2_text);
    return out;
}

AdapterModel deserialize_adapter(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kAdapterMagic, 4) != 0) {
        throw FormatError("bad magic: not an ADPT adapter file");
    }
    Reader r(bytes.subspan(4));
    const auto version = r.get<std::uint32_t>();
    if (version != kAdapterFormatVersion) throw FormatError("unsupported adapter version " + std::to_string(version));
    AdapterModel model;
    const auto variant = r.get<std::uint8_t>();
    if (variant > 2) throw FormatError("invalid variant byte");
    model.variant = static_cast<Variant>(variant);
    const auto mode = r.get<std::uint8_t>();
    if (mode > 2) throw FormatError("invalid ratio-mode byte");
    const auto count = r.get<std::uint32_t>();
    if (count > r.remaining() / sizeof(double)) throw FormatError("truncated adapter file");
    std::vector<double> values(count);
    for (double& v : values) v = r.get<double>();
    model.params.dim = r.get<std::uint32_t>();
    model.params.hidden = r.get<std::uint32_t>();
    model.params.bottleneck_ratio = r.get<std::uint32_t>();
    if (mode == 0 || mode == 1) {
        if (count != 2) throw FormatError("fixed/learnable ratio modes carry exactly 2 values");
        if (mode == 0) {
            model.ratio_mode = FixedRatio{values[0], values[1]};
        } else {
            model.ratio_mode = LearnableRatio{values[0], values[1]};
        }
    } else {
        if (count != 2 * model.params.dim + 2) throw FormatError("hypernetwork parameter count mismatch");
        HypernetRatio q;
        for (std::size_t d = 0; d < model.params.dim; ++d) {
            q.alpha_weights.push_back(values[2 * d]);
            q.beta_weights.push_back(values[2 * d + 1]);
        }
        q.alpha_bias = values[2 * model.params.dim];
        q.beta_bias = values[2 * model.params.dim + 1];
        model.ratio_mode = std::move(q);
    }
    model.params.w1_visual = get_matrix(r);
    model.params.w2_visual = get_matrix(r);
    model.params.w1_text = get_matrix(r);
    model.params.w2_text = get_matrix(r);
    if (r.remaining() != 0) throw FormatError("trailing bytes in adapter file");
    try {
        validate_params(model.params, model.variant);
        validate_ratio_mode(model.ratio_mode, model.params.dim);
    } catch (const Error& e) {
        throw FormatError(std::string("invalid adapter contents: ") + e.what());
    }
    return model;
}

void save_adapter(const AdapterModel& model, const std::filesystem::path& path) {
    write_file_bytes(path, serialize_adapter(model));
}

AdapterModel load_adapter(const std::filesystem::path& path) {
    return deserialize_adapter(read_file_bytes(path));
}

}  // namespace resadapt
