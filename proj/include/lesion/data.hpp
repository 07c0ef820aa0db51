/*
 * Copyright 2026 The Lesionkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "lesion/error.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lesion {

inline constexpr int kNumClasses = 8;

/// Lesion classes in the column order of the ISIC 2019 ground-truth CSV.
enum class ClassLabel : std::uint8_t { MEL = 0, NV, BCC, AK, BKL, DF, VASC, SCC };

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "MEL", "NV", "BCC", "AK", "BKL", "DF", "VASC", "SCC"};

inline constexpr int index_of(ClassLabel c) noexcept { return static_cast<int>(c); }
ClassLabel label_from_index(int index);
std::optional<ClassLabel> label_from_name(std::string_view name) noexcept;
inline std::string_view class_name(ClassLabel c) noexcept { return kClassNames[static_cast<std::size_t>(c)]; }

using ClassCounts = std::array<std::uint64_t, kNumClasses>;

struct ManifestRow {
    std::string image_id;
    ClassLabel label;

    bool operator==(const ManifestRow&) const = default;
};

struct Manifest {
    std::vector<ManifestRow> rows;
    std::string source_dir;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }
};

/// Parses a one-hot ground-truth CSV (header `image,MEL,...,SCC`, optionally
/// followed by an all-zero `UNK` column). Accepts LF or CRLF line endings.
Manifest parse_manifest(std::string_view csv, const std::string& source_dir);
Manifest read_manifest(const std::string& path, const std::string& source_dir);

struct ClassDistribution {
    ClassCounts counts{};
    std::uint64_t total = 0;

    static ClassDistribution from_counts(const ClassCounts& counts);
};

ClassDistribution class_distribution(const Manifest& m);

struct SplitAssignment {
    Manifest train;
    Manifest val;
    std::uint64_t seed = 0;
    double val_fraction = 0.0;
};

/// Number of validation samples for a class of size n: round-half-up of fraction * n.
std::uint64_t validation_count(std::uint64_t n, double val_fraction);

/// Per class, shuffles that class's rows (in file order) with the seeded
/// generator and sends the first validation_count() of them to validation.
/// Output manifests keep the source manifest's row order.
SplitAssignment stratified_split(const Manifest& m, double val_fraction, std::uint64_t seed);

/// Stratified subsample of at most `limit` rows, used for smoke runs.
Manifest stratified_limit(const Manifest& m, std::size_t limit, std::uint64_t seed);

/// `image,subset` CSV with subset in {train, val}, rows in source order.
std::string format_split_csv(const SplitAssignment& split, const Manifest& source);
/// Applies a split CSV to a manifest. Rows of the manifest that the split
/// does not mention are dropped; ids in the split missing from the manifest
/// raise IdMismatch.
SplitAssignment apply_split_csv(const Manifest& m, std::string_view csv);

enum class WeightMode { MinOverCount, Literal, Uniform, Custom };

std::string_view weight_mode_name(WeightMode mode) noexcept;
std::optional<WeightMode> weight_mode_from_name(std::string_view name) noexcept;

struct ClassWeights {
    std::array<double, kNumClasses> weights{};
    WeightMode mode = WeightMode::Uniform;

    double operator[](ClassLabel c) const noexcept { return weights[static_cast<std::size_t>(c)]; }
};

/// min_over_count: w_c = min_i n_i / n_c. literal: w_c = min_i n_i / N.
/// uniform: 1. Custom weights go through custom_weights().
/// Throws ZeroClassCount if a required count is zero.
ClassWeights class_weights(const ClassDistribution& d, WeightMode mode);

/// Same as class_weights(), but classes with zero samples are ignored when
/// taking the minimum and receive weight 1.0. Used when training on a subset
/// of the eight classes.
ClassWeights class_weights_present(const ClassDistribution& d, WeightMode mode);

ClassWeights custom_weights(const std::array<double, kNumClasses>& values);

enum class Sampler { Shuffled, Balanced };

struct BatchPlan {
    std::vector<std::vector<std::size_t>> batches;
    std::size_t batch_size = 0;
    Sampler strategy = Sampler::Shuffled;
};

/// Balanced oversampling. Sample indices address the class-grouped ordering:
/// class c owns [offset_c, offset_c + n_c) where offset_c = sum of the
/// preceding classes' sizes.
BatchPlan balanced_batches(const ClassCounts& train_size_per_class, std::size_t batch_size,
                           std::size_t num_batches, std::uint64_t seed);

/// A seeded permutation of [0, n) cut into batches; the last one may be short.
BatchPlan shuffled_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed);

} // namespace lesion
