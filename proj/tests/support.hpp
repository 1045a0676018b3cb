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

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "resadapt/embedding_store.hpp"
#include "resadapt/random.hpp"

namespace resadapt::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("resadapt-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::uint64_t hash_bytes(const std::vector<std::uint8_t>& bytes) {
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

inline std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

// Randomized valid cache: 2..6 classes, dim 2..24, 1..8 images per class,
// random split tags (every class keeps at least one train and one test image),
// multi-byte class names, normalized or raw rows.
inline EmbeddingCache random_cache(std::uint64_t seed) {
    Rng rng(derive_seed(seed, "test/random-cache"));
    EmbeddingCache c;
    const std::size_t classes = 2 + rng.below(5);
    c.dim = static_cast<std::uint32_t>(2 + rng.below(23));
    c.normalized = rng.below(2) == 1;
    static const char* stems[] = {"cat", "caf\xc3\xa9", "\xe7\x8a\xac", "a,b", "q\"t", "line"};
    for (std::size_t k = 0; k < classes; ++k) {
        c.class_names.push_back(std::string(stems[rng.below(6)]) + "_" + std::to_string(k));
    }
    auto push_row = [&](std::vector<float>& dst) {
        std::vector<double> row(c.dim);
        for (auto& v : row) v = rng.normal();
        if (c.normalized) {
            double n = 0.0;
            for (double v : row) n += v * v;
            n = std::sqrt(n);
            for (auto& v : row) v /= n;
        }
        for (double v : row) dst.push_back(static_cast<float>(v));
    };
    for (std::size_t k = 0; k < classes; ++k) {
        const std::size_t count = 2 + rng.below(7);
        for (std::size_t j = 0; j < count; ++j) {
            push_row(c.image_features);
            c.labels.push_back(static_cast<std::uint32_t>(k));
            SplitTag tag = j == 0 ? SplitTag::Train : j == 1 ? SplitTag::Test : static_cast<SplitTag>(rng.below(3));
            c.split_tags.push_back(tag);
        }
    }
    for (std::size_t k = 0; k < classes; ++k) push_row(c.classifier_weights);
    return c;
}

inline EmbeddingCache fixture_cache() { return make_synthetic_cache(SyntheticSpec{}); }

}  // namespace resadapt::testing
