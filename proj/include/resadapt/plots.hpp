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
#include <vector>

#include "resadapt/baselines.hpp"
#include "resadapt/trainer.hpp"

namespace resadapt {

// Self-contained SVG documents. Coordinates are printed with three decimals,
// so identical input gives identical bytes.

struct LineSeries {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> x_ticks;  // one label per point, placed evenly
    std::vector<double> y;             // NaN breaks the line and drops the marker
};

struct BarSeries {
    std::string title;
    std::string y_label;
    std::vector<std::string> labels;
    std::vector<double> values;  // may be negative; the zero line is drawn
};

std::string line_chart_svg(const LineSeries& series);
std::string bar_chart_svg(const BarSeries& series);

// Loss per epoch, one marker per epoch.
std::string loss_curve_svg(const TrainResult& result);
// Accuracy per axis value, one marker per successful cell.
std::string sweep_svg(const SweepTable& table);
// Percentage-point gain of each method over zero-shot.
std::string gain_svg(const std::vector<std::string>& methods, const std::vector<double>& accuracies,
                     double zero_shot_accuracy);
std::string per_class_svg(const EvalReport& report, const EmbeddingCache& cache);

std::string xml_escape(const std::string& s);

}  // namespace resadapt
