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
#include <span>
#include <string>
#include <vector>

#include "resadapt/matrix.hpp"

namespace resadapt {

enum class SplitTag : std::uint8_t { Train = 0, Val = 1, Test = 2 };

const char* to_string(SplitTag tag);
SplitTag parse_split(const std::string& name);

// Frozen image features and text-derived classifier weights for one dataset.
// Immutable once validated; every consumer takes it by const reference.
struct EmbeddingCache {
    std::uint32_t dim = 0;
    std::vector<float> image_features;      // num_images x dim, row-major
    std::vector<std::uint32_t> labels;      // num_images
    std::vector<SplitTag> split_tags;       // num_images
    std::vector<std::string> class_names;   // num_classes
    std::vector<float> classifier_weights;  // num_classes x dim, row-major
    bool normalized = false;

    std::size_t num_images() const noexcept { return labels.size(); }
    std::size_t num_classes() const noexcept { return class_names.size(); }

    std::span<const float> feature(std::size_t image) const {
        return {image_features.data() + image * dim, dim};
    }
    std::span<const float> classifier_row(std::size_t k) const {
        return {classifier_weights.data() + k * dim, dim};
    }

    bool operator==(const EmbeddingCache&) const = default;
};

inline constexpr double kUnitNormTolerance = 1e-3;
inline constexpr std::uint32_t kCacheFormatVersion = 1;
inline constexpr std::size_t kCacheHeaderBytes = 32;

// Throws ValidationError naming the first violated invariant.
void validate(const EmbeddingCache& cache);

// Exact on-disk bytes of the EMBC format. Validates first.
std::vector<std::uint8_t> serialize_cache(const EmbeddingCache& cache);
EmbeddingCache deserialize_cache(std::span<const std::uint8_t> bytes);

void save_cache(const EmbeddingCache& cache, const std::filesystem::path& path);
EmbeddingCache load_cache(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Image indices carrying `tag`, ascending.
std::vector<std::size_t> split_indices(const EmbeddingCache& cache, SplitTag tag);

// One seeded K-shot selection over the train split. `indices` is grouped by
// class (class 0 first) and ascending inside each group.
struct Episode {
    std::size_t shots = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> indices;

    bool operator==(const Episode&) const = default;
};

// Each class draws from its own stream derived from (seed, class index), so
// adding classes never changes the shots chosen for existing ones.
Episode sample_episode(const EmbeddingCache& cache, std::size_t shots, std::uint64_t seed);

struct SyntheticSpec {
    std::size_t classes = 10;
    std::size_t per_class = 40;
    std::size_t dim = 64;
    double text_noise = 0.6;
    double feature_noise = 0.2;
    std::uint64_t seed = 0;
};

// Unit prototypes per class; image rows are normalize(prototype + N(0, feature_noise)),
// classifier rows normalize(prototype + N(0, text_noise)). Within a class the
// j-th image goes to train for even j and to test for odd j. The prototype,
// image-noise and text-noise streams are independent, so changing one noise
// level leaves the other draws untouched.
EmbeddingCache make_synthetic_cache(const SyntheticSpec& spec);

// Features of the given images as 64-bit rows.
Matrix gather_features(const EmbeddingCache& cache, std::span<const std::size_t> images);
Matrix classifier_matrix(const EmbeddingCache& cache);
std::vector<std::size_t> gather_labels(const EmbeddingCache& cache,
                                       std::span<const std::size_t> images);

}  // namespace resadapt
