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

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "resadapt/errors.hpp"

namespace resadapt {

// Dense row-major matrix of doubles. All products are plain loops with a
// fixed accumulation order so a row's result never depends on how many other
// rows share the call.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Divides in place by the L2 norm and returns the norm. Zero vectors are left
// untouched; callers decide whether that is an error.
inline double normalize_in_place(std::span<double> a) {
    const double norm = l2_norm(a);
    if (norm > 0.0) {
        for (double& v : a) v = v / norm;
    }
    return norm;
}

// out(b, :) = in(b, :) * weights, weights is (in.cols x out_cols).
inline Matrix matmul(const Matrix& in, const Matrix& weights) {
    if (in.cols() != weights.rows()) throw ShapeError("matmul: inner dimensions differ");
    Matrix out(in.rows(), weights.cols());
    for (std::size_t r = 0; r < in.rows(); ++r) {
        auto dst = out.row(r);
        for (std::size_t k = 0; k < in.cols(); ++k) {
            const double x = in(r, k);
            const auto w = weights.row(k);
            for (std::size_t c = 0; c < w.size(); ++c) dst[c] += x * w[c];
        }
    }
    return out;
}

// out(b, k) = dot(a.row(b), b.row(k)).
inline Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeError("matmul_transposed: row lengths differ");
    Matrix out(a.rows(), b.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t k = 0; k < b.rows(); ++k) out(r, k) = dot(a.row(r), b.row(k));
    }
    return out;
}

inline bool all_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace resadapt
