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

#include "resadapt/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "resadapt/errors.hpp"
#include "resadapt/report.hpp"

namespace resadapt {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr std::size_t kMaxTickLabels = 12;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string header(const std::string& title) {
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" + xml_escape(title) + "</text>\n";
    return s;
}

std::string text(double x, double y, const std::string& body, const char* anchor, int size = 11,
                 const std::string& extra = "") {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor +
           "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) + "\"" + extra + ">" +
           xml_escape(body) + "</text>\n";
}

std::string line(double x1, double y1, double x2, double y2, const char* stroke) {
    return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
           "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range value_range(const std::vector<double>& values, bool include_zero) {
    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        r.lo = std::min(r.lo, v);
        r.hi = std::max(r.hi, v);
    }
    if (!std::isfinite(r.lo)) return Range{};
    if (include_zero) {
        r.lo = std::min(r.lo, 0.0);
        r.hi = std::max(r.hi, 0.0);
    }
    if (r.hi - r.lo < 1e-12) {
        r.lo -= 0.5;
        r.hi += 0.5;
    }
    const double pad = 0.05 * (r.hi - r.lo);
    return Range{include_zero && r.lo == 0.0 ? 0.0 : r.lo - pad, r.hi + pad};
}

std::string y_axis(const Range& r, const std::string& label) {
    const double plot_h = kHeight - kTop - kBottom;
    std::string s = line(kLeft, kTop, kLeft, kHeight - kBottom, "black");
    for (int i = 0; i <= 4; ++i) {
        const double v = r.lo + (r.hi - r.lo) * i / 4.0;
        const double y = kHeight - kBottom - plot_h * i / 4.0;
        s += line(kLeft - 4, y, kLeft, y, "black");
        s += text(kLeft - 6, y + 4, num(v), "end", 10);
    }
    s += text(16, kTop + plot_h / 2, label, "middle", 12,
              " transform=\"rotate(-90 16 " + num(kTop + plot_h / 2) + ")\"");
    return s;
}

}  // namespace

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string line_chart_svg(const LineSeries& series) {
    if (series.y.empty()) throw ArgumentError("line chart needs at least one point");
    if (!series.x_ticks.empty() && series.x_ticks.size() != series.y.size()) {
        throw ArgumentError("line chart tick count differs from point count");
    }
    const std::size_t n = series.y.size();
    const Range r = value_range(series.y, false);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](std::size_t i) { return n == 1 ? kLeft + plot_w / 2 : kLeft + plot_w * i / double(n - 1); };
    auto py = [&](double v) { return kHeight - kBottom - plot_h * (v - r.lo) / (r.hi - r.lo); };

    std::string s = header(series.title);
    s += y_axis(r, series.y_label);
    s += line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "black");
    const std::size_t stride = std::max<std::size_t>(1, (n + kMaxTickLabels - 1) / kMaxTickLabels);
    for (std::size_t i = 0; i < n; ++i) {
        if (i % stride != 0 && i + 1 != n) continue;
        s += line(px(i), kHeight - kBottom, px(i), kHeight - kBottom + 4, "black");
        const std::string label = series.x_ticks.empty() ? std::to_string(i + 1) : series.x_ticks[i];
        s += text(px(i), kHeight - kBottom + 16, label, "middle", 10);
    }
    s += text(kLeft + plot_w / 2, kHeight - 14, series.x_label, "middle", 12);

    std::string path;
    bool pen_down = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(series.y[i])) {
            pen_down = false;
            continue;
        }
        path += (pen_down ? " L " : (path.empty() ? "M " : " M ")) + num(px(i)) + " " + num(py(series.y[i]));
        pen_down = true;
    }
    if (!path.empty()) {
        s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(series.y[i])) continue;
        s += "<circle cx=\"" + num(px(i)) + "\" cy=\"" + num(py(series.y[i])) +
             "\" r=\"2.5\" fill=\"#1f77b4\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string bar_chart_svg(const BarSeries& series) {
    if (series.values.empty()) throw ArgumentError("bar chart needs at least one bar");
    if (series.labels.size() != series.values.size()) throw ArgumentError("bar chart label count differs");
    const std::size_t n = series.values.size();
    const Range r = value_range(series.values, true);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto py = [&](double v) { return kHeight - kBottom - plot_h * (v - r.lo) / (r.hi - r.lo); };
    const double slot = plot_w / double(n);
    const double bar_w = slot * 0.7;

    std::string s = header(series.title);
    s += y_axis(r, series.y_label);
    const double zero = py(0.0);
    s += line(kLeft, zero, kWidth - kRight, zero, "black");
    const std::size_t stride = std::max<std::size_t>(1, (n + kMaxTickLabels * 2 - 1) / (kMaxTickLabels * 2));
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::isfinite(series.values[i]) ? series.values[i] : 0.0;
        const double x = kLeft + slot * i + (slot - bar_w) / 2;
        const double top = std::min(py(v), zero);
        const double h = std::abs(py(v) - zero);
        s += "<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(bar_w) + "\" height=\"" +
             num(h) + "\" fill=\"" + (v >= 0 ? "#2ca02c" : "#d62728") + "\"/>\n";
        if (i % stride == 0) s += text(x + bar_w / 2, kHeight - kBottom + 16, series.labels[i], "middle", 10);
    }
    s += "</svg>\n";
    return s;
}

std::string loss_curve_svg(const TrainResult& result) {
    LineSeries series;
    series.title = "Training loss";
    series.x_label = "epoch";
    series.y_label = "cross-entropy";
    series.y = result.loss_curve;
    return line_chart_svg(series);
}

std::string sweep_svg(const SweepTable& table) {
    LineSeries series;
    series.title = "Test accuracy vs " + table.axis_name;
    series.x_label = table.axis_name;
    series.y_label = "accuracy (%)";
    for (std::size_t i = 0; i < table.axis_values.size(); ++i) {
        series.x_ticks.push_back(format_double(table.axis_values[i]));
        series.y.push_back(table.accuracies[i] ? 100.0 * *table.accuracies[i]
                                               : std::numeric_limits<double>::quiet_NaN());
    }
    return line_chart_svg(series);
}

std::string gain_svg(const std::vector<std::string>& methods, const std::vector<double>& accuracies,
                     double zero_shot_accuracy) {
    BarSeries series;
    series.title = "Gain over zero-shot";
    series.y_label = "accuracy gain (points)";
    series.labels = methods;
    for (double a : accuracies) series.values.push_back(100.0 * (a - zero_shot_accuracy));
    return bar_chart_svg(series);
}

std::string per_class_svg(const EvalReport& report, const EmbeddingCache& cache) {
    BarSeries series;
    series.title = std::string("Per-class accuracy (") + to_string(report.method) + ")";
    series.y_label = "accuracy (%)";
    for (std::size_t k = 0; k < report.per_class_accuracy.size(); ++k) {
        series.labels.push_back(k < cache.class_names.size() ? cache.class_names[k] : std::to_string(k));
        series.values.push_back(100.0 * report.per_class_accuracy[k]);
    }
    return bar_chart_svg(series);
}

}  // namespace resadapt
