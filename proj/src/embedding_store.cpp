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

#include "resadapt/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "resadapt/errors.hpp"
#include "resadapt/random.hpp"

namespace resadapt {

static_assert(std::endian::native == std::endian::little,
              "the EMBC/ADPT writers assume a little-endian host");

const char* to_string(SplitTag tag) {
    switch (tag) {
        case SplitTag::Train: return "train";
        case SplitTag::Val: return "val";
        case SplitTag::Test: return "test";
    }
    return "?";
}

SplitTag parse_split(const std::string& name) {
    if (name == "train") return SplitTag::Train;
    if (name == "val") return SplitTag::Val;
    if (name == "test") return SplitTag::Test;
    throw ArgumentError("unknown split '" + name + "' (expected train, val or test)");
}

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'C'};

bool valid_utf8(const std::string& s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        static constexpr std::uint32_t kMin[4] = {0, 0x80, 0x800, 0x10000};
        if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += extra + 1;
    }
    return true;
}

double row_norm(std::span<const float> row) {
    double sum = 0.0;
    for (float v : row) sum += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(sum);
}

class ByteWriter {
public:
    template <typename T>
    void put(T value) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void put_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes_.insert(bytes_.end(), p, p + n);
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        T value;
        get_bytes(&value, sizeof(T), what);
        return value;
    }
    void get_bytes(void* out, std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(std::string("truncated cache: payload ends inside ") + what);
        }
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

void validate(const EmbeddingCache& cache) {
    const std::size_t n = cache.num_images();
    const std::size_t k = cache.num_classes();
    if (cache.dim < 2) throw ValidationError("dim must be >= 2");
    if (k < 2) throw ValidationError("num_classes must be >= 2");
    if (n < k) throw ValidationError("num_images must be >= num_classes");
    if (cache.image_features.size() != n * cache.dim) {
        throw ValidationError("image_features size does not match num_images x dim");
    }
    if (cache.split_tags.size() != n) throw ValidationError("split_tags length != num_images");
    if (cache.classifier_weights.size() != k * cache.dim) {
        throw ValidationError("classifier_weights size does not match num_classes x dim");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (cache.labels[i] >= k) {
            throw ValidationError("label " + std::to_string(cache.labels[i]) + " of image " +
                                  std::to_string(i) + " is not below num_classes " +
                                  std::to_string(k));
        }
        const auto tag = static_cast<std::uint8_t>(cache.split_tags[i]);
        if (tag > 2) throw ValidationError("invalid split tag on image " + std::to_string(i));
    }
    std::set<std::string> seen;
    for (std::size_t c = 0; c < k; ++c) {
        const auto& name = cache.class_names[c];
        if (name.empty()) throw ValidationError("class " + std::to_string(c) + " has an empty name");
        if (name.size() > 0xFFFF) throw ValidationError("class name longer than 65535 bytes");
        if (!valid_utf8(name)) throw ValidationError("class " + std::to_string(c) + " name is not UTF-8");
        if (!seen.insert(name).second) throw ValidationError("duplicate class name '" + name + "'");
    }
    for (float v : cache.image_features) {
        if (!std::isfinite(v)) throw ValidationError("non-finite image feature");
    }
    for (float v : cache.classifier_weights) {
        if (!std::isfinite(v)) throw ValidationError("non-finite classifier weight");
    }
    if (cache.normalized) {
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(row_norm(cache.feature(i)) - 1.0) > kUnitNormTolerance) {
                throw ValidationError("image " + std::to_string(i) +
                                      " is not unit-norm but the cache is flagged normalized");
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (std::abs(row_norm(cache.classifier_row(c)) - 1.0) > kUnitNormTolerance) {
                throw ValidationError("classifier row " + std::to_string(c) +
                                      " is not unit-norm but the cache is flagged normalized");
            }
        }
    }
}

std::vector<std::uint8_t> serialize_cache(const EmbeddingCache& cache) {
    validate(cache);
    ByteWriter w;
    w.put_bytes(kMagic, 4);
    w.put<std::uint32_t>(kCacheFormatVersion);
    w.put<std::uint32_t>(cache.dim);
    w.put<std::uint64_t>(cache.num_images());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cache.num_classes()));
    w.put<std::uint8_t>(cache.normalized ? 1 : 0);
    const std::uint8_t reserved[7] = {};
    w.put_bytes(reserved, sizeof reserved);
    w.put_bytes(cache.image_features.data(), cache.image_features.size() * sizeof(float));
    w.put_bytes(cache.labels.data(), cache.labels.size() * sizeof(std::uint32_t));
    w.put_bytes(cache.split_tags.data(), cache.split_tags.size());
    for (const auto& name : cache.class_names) {
        w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
        w.put_bytes(name.data(), name.size());
    }
    w.put_bytes(cache.classifier_weights.data(), cache.classifier_weights.size() * sizeof(float));
    return w.take();
}

EmbeddingCache deserialize_cache(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    char magic[4];
    r.get_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic: not an EMBC cache");
    const auto version = r.get<std::uint32_t>("header");
    if (version != kCacheFormatVersion) {
        throw FormatError("unsupported cache version " + std::to_string(version));
    }
    EmbeddingCache cache;
    cache.dim = r.get<std::uint32_t>("header");
    const auto num_images = r.get<std::uint64_t>("header");
    const auto num_classes = r.get<std::uint32_t>("header");
    const auto flag = r.get<std::uint8_t>("header");
    if (flag > 1) throw FormatError("normalized_flag must be 0 or 1");
    cache.normalized = flag == 1;
    std::uint8_t reserved[7];
    r.get_bytes(reserved, sizeof reserved, "header");
    for (auto b : reserved) {
        if (b != 0) throw FormatError("reserved header bytes must be zero");
    }

    // Refuse sizes the remaining payload cannot possibly hold before allocating.
    const std::size_t per_image = static_cast<std::size_t>(cache.dim) * sizeof(float) + 5;
    if (per_image != 0 && num_images > r.remaining() / per_image) {
        throw FormatError("truncated cache: payload ends inside image_features");
    }
    cache.image_features.resize(num_images * cache.dim);
    r.get_bytes(cache.image_features.data(), cache.image_features.size() * sizeof(float),
                "image_features");
    cache.labels.resize(num_images);
    r.get_bytes(cache.labels.data(), num_images * sizeof(std::uint32_t), "labels");
    cache.split_tags.resize(num_images);
    r.get_bytes(cache.split_tags.data(), num_images, "split_tags");
    for (auto tag : cache.split_tags) {
        if (static_cast<std::uint8_t>(tag) > 2) throw FormatError("split tag outside {0,1,2}");
    }
    if (num_classes > r.remaining() / 2) throw FormatError("truncated cache: payload ends inside class_names");
    cache.class_names.resize(num_classes);
    for (auto& name : cache.class_names) {
        const auto len = r.get<std::uint16_t>("class_names");
        name.resize(len);
        r.get_bytes(name.data(), len, "class_names");
    }
    cache.classifier_weights.resize(static_cast<std::size_t>(num_classes) * cache.dim);
    r.get_bytes(cache.classifier_weights.data(), cache.classifier_weights.size() * sizeof(float),
                "classifier_weights");
    if (r.remaining() != 0) throw FormatError("trailing bytes after classifier_weights");
    validate(cache);
    return cache;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void save_cache(const EmbeddingCache& cache, const std::filesystem::path& path) {
    const auto bytes = serialize_cache(cache);
    write_file_bytes(path, bytes);
}

EmbeddingCache load_cache(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("cache '" + path.string() + "' does not exist");
    const auto bytes = read_file_bytes(path);
    return deserialize_cache(bytes);
}

std::vector<std::size_t> split_indices(const EmbeddingCache& cache, SplitTag tag) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cache.num_images(); ++i) {
        if (cache.split_tags[i] == tag) out.push_back(i);
    }
    return out;
}

Episode sample_episode(const EmbeddingCache& cache, std::size_t shots, std::uint64_t seed) {
    if (shots == 0) throw ArgumentError("shots must be positive");
    std::vector<std::vector<std::size_t>> by_class(cache.num_classes());
    for (std::size_t i = 0; i < cache.num_images(); ++i) {
        if (cache.split_tags[i] == SplitTag::Train) by_class[cache.labels[i]].push_back(i);
    }
    Episode episode;
    episode.shots = shots;
    episode.seed = seed;
    episode.indices.reserve(shots * cache.num_classes());
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& pool = by_class[c];
        if (pool.size() < shots) {
            throw InsufficientShotsError(c, cache.class_names[c], pool.size(), shots);
        }
        // Partial Fisher-Yates: the first `shots` slots become a uniform sample.
        Rng rng(derive_seed(seed, "episode", c));
        for (std::size_t i = 0; i < shots; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(shots));
        std::sort(chosen.begin(), chosen.end());
        episode.indices.insert(episode.indices.end(), chosen.begin(), chosen.end());
    }
    return episode;
}

EmbeddingCache make_synthetic_cache(const SyntheticSpec& spec) {
    if (spec.classes < 2) throw ArgumentError("classes must be >= 2");
    if (spec.dim < 2) throw ArgumentError("dim must be >= 2");
    if (spec.per_class < 1) throw ArgumentError("per_class must be >= 1");
    if (!(spec.text_noise >= 0.0) || !(spec.feature_noise >= 0.0)) {
        throw ArgumentError("noise levels must be non-negative");
    }
    const std::size_t dim = spec.dim;
    Rng proto_rng(derive_seed(spec.seed, "synthetic/prototypes"));
    Rng image_rng(derive_seed(spec.seed, "synthetic/image-noise"));
    Rng text_rng(derive_seed(spec.seed, "synthetic/text-noise"));

    Matrix prototypes(spec.classes, dim);
    for (std::size_t c = 0; c < spec.classes; ++c) {
        auto row = prototypes.row(c);
        // A Gaussian draw is zero with probability zero; retry keeps the contract anyway.
        do {
            for (double& v : row) v = proto_rng.normal();
        } while (normalize_in_place(row) == 0.0);
    }

    EmbeddingCache cache;
    cache.dim = static_cast<std::uint32_t>(dim);
    cache.normalized = true;
    std::vector<double> buf(dim);
    auto emit = [&](std::span<const double> proto, double noise, Rng& rng, std::vector<float>& dst) {
        for (std::size_t d = 0; d < dim; ++d) buf[d] = proto[d] + noise * rng.normal();
        if (normalize_in_place(buf) == 0.0) {
            std::copy(proto.begin(), proto.end(), buf.begin());
        }
        for (double v : buf) dst.push_back(static_cast<float>(v));
    };
    for (std::size_t c = 0; c < spec.classes; ++c) {
        cache.class_names.push_back("class_" + std::to_string(c));
        emit(prototypes.row(c), spec.text_noise, text_rng, cache.classifier_weights);
        for (std::size_t j = 0; j < spec.per_class; ++j) {
            emit(prototypes.row(c), spec.feature_noise, image_rng, cache.image_features);
            cache.labels.push_back(static_cast<std::uint32_t>(c));
            cache.split_tags.push_back(j % 2 == 0 ? SplitTag::Train : SplitTag::Test);
        }
    }
    validate(cache);
    return cache;
}

Matrix gather_features(const EmbeddingCache& cache, std::span<const std::size_t> images) {
    Matrix out(images.size(), cache.dim);
    for (std::size_t r = 0; r < images.size(); ++r) {
        if (images[r] >= cache.num_images()) throw ArgumentError("image index out of range");
        const auto src = cache.feature(images[r]);
        auto dst = out.row(r);
        for (std::size_t d = 0; d < cache.dim; ++d) dst[d] = static_cast<double>(src[d]);
    }
    return out;
}

Matrix classifier_matrix(const EmbeddingCache& cache) {
    Matrix out(cache.num_classes(), cache.dim);
    for (std::size_t k = 0; k < cache.num_classes(); ++k) {
        const auto src = cache.classifier_row(k);
        auto dst = out.row(k);
        for (std::size_t d = 0; d < cache.dim; ++d) dst[d] = static_cast<double>(src[d]);
    }
    return out;
}

std::vector<std::size_t> gather_labels(const EmbeddingCache& cache,
                                       std::span<const std::size_t> images) {
    std::vector<std::size_t> out;
    out.reserve(images.size());
    for (auto i : images) {
        if (i >= cache.num_images()) throw ArgumentError("image index out of range");
        out.push_back(cache.labels[i]);
    }
    return out;
}

}  // namespace resadapt
