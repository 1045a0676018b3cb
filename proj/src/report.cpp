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

#include "resadapt/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "resadapt/errors.hpp"

namespace resadapt {

namespace {

Json ratio_to_json(const RatioMode& mode) {
    Json j;
    j["mode"] = ratio_mode_name(mode);
    if (const auto* f = std::get_if<FixedRatio>(&mode)) {
        j["alpha"] = f->alpha;
        j["beta"] = f->beta;
    } else if (const auto* l = std::get_if<LearnableRatio>(&mode)) {
        j["theta_alpha"] = l->theta_alpha;
        j["theta_beta"] = l->theta_beta;
        j["alpha"] = sigmoid(l->theta_alpha);
        j["beta"] = sigmoid(l->theta_beta);
    } else {
        const auto& q = std::get<HypernetRatio>(mode);
        j["alpha_weights"] = q.alpha_weights;
        j["beta_weights"] = q.beta_weights;
        j["alpha_bias"] = q.alpha_bias;
        j["beta_bias"] = q.beta_bias;
    }
    return j;
}

RatioMode ratio_from_json(const Json& j, std::size_t dim) {
    const std::string mode = j.at("mode").get<std::string>();
    RatioMode out;
    if (mode == "fixed") {
        out = FixedRatio{j.at("alpha").get<double>(), j.at("beta").get<double>()};
    } else if (mode == "learnable") {
        out = LearnableRatio{j.at("theta_alpha").get<double>(), j.at("theta_beta").get<double>()};
    } else if (mode == "hypernet") {
        out = HypernetRatio{j.at("alpha_weights").get<std::vector<double>>(),
                            j.at("beta_weights").get<std::vector<double>>(),
                            j.at("alpha_bias").get<double>(), j.at("beta_bias").get<double>()};
    } else {
        throw ArgumentError("unknown ratio mode '" + mode + "'");
    }
    validate_ratio_mode(out, dim);
    return out;
}

std::string percent(double accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * accuracy);
    return buf;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

Json to_json(const TrainConfig& c) {
    Json j;
    j["shots"] = c.shots;
    j["seed"] = c.seed;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["momentum"] = c.momentum;
    j["schedule"] = to_string(c.schedule);
    j["variant"] = to_string(c.variant);
    j["ratio"] = ratio_to_json(c.ratio_mode);
    j["bottleneck_ratio"] = c.bottleneck_ratio;
    j["weight_decay"] = c.weight_decay;
    j["renormalize"] = c.renormalize;
    j["logit_scale"] = c.logit_scale;
    return j;
}

TrainConfig config_from_json(const Json& j, std::size_t dim) {
    TrainConfig c;
    try {
        c.shots = j.at("shots").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.epochs = j.at("epochs").get<std::size_t>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.learning_rate = j.at("learning_rate").get<double>();
        c.momentum = j.at("momentum").get<double>();
        c.schedule = parse_schedule(j.at("schedule").get<std::string>());
        c.variant = parse_variant(j.at("variant").get<std::string>());
        c.ratio_mode = ratio_from_json(j.at("ratio"), dim);
        c.bottleneck_ratio = j.at("bottleneck_ratio").get<std::size_t>();
        c.weight_decay = j.at("weight_decay").get<double>();
        c.renormalize = j.at("renormalize").get<bool>();
        c.logit_scale = j.at("logit_scale").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad config JSON: ") + e.what());
    }
    validate_config(c);
    return c;
}

Json to_json(const LinearProbeConfig& c) {
    Json j;
    j["l2"] = c.l2;
    j["max_iterations"] = c.max_iterations;
    j["tolerance"] = c.tolerance;
    j["line_search"] = c.line_search;
    j["step"] = c.step;
    return j;
}

Json to_json(const EvalReport& r, const EmbeddingCache& cache) {
    Json j;
    j["method"] = to_string(r.method);
    j["split"] = to_string(r.split);
    j["overall_accuracy"] = r.overall_accuracy;
    j["num_test"] = r.num_test;
    Json classes = Json::array();
    for (std::size_t k = 0; k < r.per_class_accuracy.size(); ++k) {
        Json c;
        c["index"] = k;
        c["name"] = k < cache.class_names.size() ? cache.class_names[k] : std::string();
        c["count"] = r.per_class_count[k];
        c["accuracy"] = r.per_class_accuracy[k];
        classes.push_back(std::move(c));
    }
    j["per_class"] = std::move(classes);
    j["images"] = r.images;
    j["predictions"] = r.predictions;
    j["labels"] = r.labels;
    return j;
}

Json to_json(const SweepTable& t) {
    Json j;
    j["axis"] = t.axis_name;
    Json cells = Json::array();
    for (std::size_t i = 0; i < t.axis_values.size(); ++i) {
        Json c;
        c["value"] = t.axis_values[i];
        c["accuracy"] = t.accuracies[i] ? Json(*t.accuracies[i]) : Json(nullptr);
        if (!t.errors[i].empty()) c["error"] = t.errors[i];
        cells.push_back(std::move(c));
    }
    j["cells"] = std::move(cells);
    j["best_value"] = t.best_value ? Json(*t.best_value) : Json(nullptr);
    return j;
}

Json to_json(const TrainResult& r, const TrainConfig& config) {
    Json j;
    j["config"] = to_json(config);
    j["trainable_parameters"] = trainable_parameter_count(r.params, r.ratio_mode, config.variant);
    j["hidden"] = r.params.hidden;
    j["initial_loss"] = r.initial_loss;
    j["final_loss"] = r.final_loss;
    j["final_alpha"] = r.final_alpha;
    j["final_beta"] = r.final_beta;
    j["final_ratio"] = ratio_to_json(r.ratio_mode);
    j["loss_curve"] = r.loss_curve;
    j["train_accuracy_curve"] = r.train_accuracy_curve;
    return j;
}

Json to_json(const GradCheckReport& r) {
    Json j;
    j["passed"] = r.passed;
    j["max_relative_error"] = r.max_relative_error;
    j["tolerance"] = r.tolerance;
    j["trials"] = r.trials;
    Json entries = Json::array();
    for (const auto& e : r.entries) {
        Json x;
        x["variant"] = to_string(e.variant);
        x["ratio_mode"] = e.ratio_mode;
        x["group"] = e.group;
        x["entries"] = e.entries;
        x["max_relative_error"] = e.max_relative_error;
        entries.push_back(std::move(x));
    }
    j["entries"] = std::move(entries);
    return j;
}

std::string eval_csv(const EvalReport& r, const EmbeddingCache& cache) {
    std::string out = "class,name,count,accuracy\r\n";
    for (std::size_t k = 0; k < r.per_class_accuracy.size(); ++k) {
        out += std::to_string(k) + "," + csv_field(cache.class_names.at(k)) + "," +
               std::to_string(r.per_class_count[k]) + "," + format_double(r.per_class_accuracy[k]) + "\r\n";
    }
    return out;
}

std::string sweep_csv(const std::vector<std::pair<std::string, SweepTable>>& rows) {
    if (rows.empty()) throw ArgumentError("no sweep rows");
    const auto& head = rows.front().second;
    std::string out = csv_field(head.axis_name);
    for (double v : head.axis_values) out += "," + format_double(v);
    out += "\r\n";
    for (const auto& [name, table] : rows) {
        if (table.axis_values != head.axis_values) throw ArgumentError("sweep rows use different axes");
        out += csv_field(name);
        for (const auto& acc : table.accuracies) out += "," + (acc ? percent(*acc) : std::string());
        out += "\r\n";
    }
    return out;
}

std::string features_csv(const FeatureTable& t) {
    std::string out;
    const std::size_t dim = t.features.cols();
    for (std::size_t d = 0; d < dim; ++d) out += "f" + std::to_string(d) + ",";
    out += "label\r\n";
    for (std::size_t i = 0; i < t.features.rows(); ++i) {
        const auto row = t.features.row(i);
        for (double v : row) {
            out += format_double(v);
            out += ',';
        }
        out += std::to_string(t.labels[i]);
        out += "\r\n";
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace resadapt
