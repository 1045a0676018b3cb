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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "resadapt/baselines.hpp"
#include "resadapt/trainer.hpp"

namespace resadapt {

using Json = nlohmann::ordered_json;

// Every field of the config, including the starting ratios. Feeding the echo
// back through config_from_json reproduces the run.
Json to_json(const TrainConfig& config);
TrainConfig config_from_json(const Json& j, std::size_t dim);

Json to_json(const LinearProbeConfig& config);

Json to_json(const EvalReport& report, const EmbeddingCache& cache);
Json to_json(const SweepTable& table);
// Wallclock is left out so that identical runs give identical bytes.
Json to_json(const TrainResult& result, const TrainConfig& config);
Json to_json(const GradCheckReport& report);

// Per-class rows: class,name,count,accuracy.
std::string eval_csv(const EvalReport& report, const EmbeddingCache& cache);

// Header row "axis,v1,v2,..." then one row per dataset with accuracies in
// percent, two decimals. Failed cells are empty fields.
std::string sweep_csv(const std::vector<std::pair<std::string, SweepTable>>& rows);

// Header f0..f{D-1},label; one row per image, shortest round-trip decimals.
std::string features_csv(const FeatureTable& table);

// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

// Shortest decimal that round-trips.
std::string format_double(double v);

// Writes bytes verbatim; IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace resadapt
