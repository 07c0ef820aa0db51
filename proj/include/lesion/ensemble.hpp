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

#include "lesion/data.hpp"

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lesion {

using Probabilities = std::array<double, kNumClasses>;

/// Per-image class-probability rows in canonical class order. Rows keep
/// their insertion order, which is the order they are written in.
class PredictionSet {
public:
    /// Throws DuplicateId if the id is already present.
    void add(std::string image_id, const Probabilities& row);

    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const Probabilities& row(std::size_t i) const { return rows_.at(i); }
    const Probabilities* find(std::string_view image_id) const;

    bool operator==(const PredictionSet& other) const { return ids_ == other.ids_ && rows_ == other.rows_; }

private:
    std::vector<std::string> ids_;
    std::vector<Probabilities> rows_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Elementwise mean of the sets' rows. Output rows follow the first set's
/// order. Throws Empty for no sets and IdMismatch when the sets do not cover
/// exactly the same images.
PredictionSet average(std::span<const PredictionSet> sets);

/// Index of the largest probability; ties go to the lowest class index.
ClassLabel argmax(const Probabilities& row) noexcept;

std::vector<std::pair<std::string, ClassLabel>> argmax_labels(const PredictionSet& s);

/// Rows whose sum is off by more than this are rejected.
inline constexpr double kRejectTolerance = 1e-3;
/// Rows whose sum is off by more than this (but within kRejectTolerance) are
/// renormalized with a warning.
inline constexpr double kRenormalizeTolerance = 1e-6;

/// Parses a prediction CSV with the ground-truth header. Warnings about
/// renormalized rows are appended to `warnings` when it is non-null.
PredictionSet parse_predictions(std::string_view csv, std::vector<std::string>* warnings = nullptr);
PredictionSet read_predictions(const std::string& path, std::vector<std::string>* warnings = nullptr);

/// Six decimal places, LF endings. Each row is rounded so that its printed
/// values sum to exactly 1.000000.
std::string format_predictions(const PredictionSet& s);
void write_predictions(const PredictionSet& s, const std::string& path);

} // namespace lesion
