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
#include <cstdint>
#include <span>
#include <string>

namespace lesion {

/// Rows index the true class, columns the predicted class.
class ConfusionMatrix {
public:
    using Counts = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(const Counts& counts) : counts_(counts) {}

    void add(ClassLabel truth, ClassLabel predicted) { ++counts_[index(truth)][index(predicted)]; }

    std::uint64_t at(int truth, int predicted) const
    {
        return counts_.at(static_cast<std::size_t>(truth)).at(static_cast<std::size_t>(predicted));
    }
    const Counts& counts() const noexcept { return counts_; }

    std::uint64_t total() const noexcept;
    std::uint64_t trace() const noexcept;
    /// Row sum: number of samples whose true class is c.
    std::uint64_t support(int c) const noexcept;
    /// Column sum: number of samples predicted as c.
    std::uint64_t predicted(int c) const noexcept;

    std::uint64_t tp(int c) const noexcept { return counts_[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)]; }
    std::uint64_t fp(int c) const noexcept { return predicted(c) - tp(c); }
    std::uint64_t fn(int c) const noexcept { return support(c) - tp(c); }
    std::uint64_t tn(int c) const noexcept { return total() - tp(c) - fp(c) - fn(c); }

    bool operator==(const ConfusionMatrix&) const = default;

private:
    static std::size_t index(ClassLabel c) noexcept { return static_cast<std::size_t>(c); }
    Counts counts_{};
};

/// Throws LengthMismatch or Empty.
ConfusionMatrix confusion(std::span<const ClassLabel> y_true, std::span<const ClassLabel> y_pred);

/// trace / total. Throws Empty on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

/// A per-class metric. `undefined[c]` marks a zero denominator, in which case
/// values[c] is 0.
struct PerClassMetric {
    std::array<double, kNumClasses> values{};
    std::array<bool, kNumClasses> undefined{};
};

PerClassMetric precision_per_class(const ConfusionMatrix& cm);
PerClassMetric recall_per_class(const ConfusionMatrix& cm);
PerClassMetric f1_per_class(const ConfusionMatrix& cm);

/// Unweighted mean over classes with nonzero support; 0 if no class is present.
double macro_average(std::span<const double, kNumClasses> values, std::span<const std::uint64_t, kNumClasses> supports);

enum class MicroMetric { Precision, Recall, F1 };

/// Pools TP/FP (precision) or TP/FN (recall) across classes before dividing.
double micro_average(const ConfusionMatrix& cm, MicroMetric metric);

struct ClassificationReport {
    PerClassMetric precision;
    PerClassMetric recall;
    PerClassMetric f1;
    std::array<std::uint64_t, kNumClasses> support{};

    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
    double accuracy = 0.0;
    std::uint64_t total = 0;
};

ClassificationReport report(const ConfusionMatrix& cm);

/// Aligned plain-text table: per-class rows in canonical order, then
/// accuracy, macro avg and micro avg rows. Undefined entries carry a '*'.
std::string render_report_text(const ClassificationReport& r);
std::string render_report_json(const ClassificationReport& r);
/// `true\predicted,MEL,...,SCC` followed by one row per true class.
std::string render_confusion_csv(const ConfusionMatrix& cm);

} // namespace lesion
