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

#include "lesion/metrics.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

namespace lesion {

std::uint64_t ConfusionMatrix::total() const noexcept
{
    std::uint64_t n = 0;
    for (const auto& row : counts_) {
        for (auto v : row) n += v;
    }
    return n;
}

std::uint64_t ConfusionMatrix::trace() const noexcept
{
    std::uint64_t n = 0;
    for (int c = 0; c < kNumClasses; ++c) n += tp(c);
    return n;
}

std::uint64_t ConfusionMatrix::support(int c) const noexcept
{
    std::uint64_t n = 0;
    for (auto v : counts_[static_cast<std::size_t>(c)]) n += v;
    return n;
}

std::uint64_t ConfusionMatrix::predicted(int c) const noexcept
{
    std::uint64_t n = 0;
    for (const auto& row : counts_) n += row[static_cast<std::size_t>(c)];
    return n;
}

ConfusionMatrix confusion(std::span<const ClassLabel> y_true, std::span<const ClassLabel> y_pred)
{
    if (y_true.size() != y_pred.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(y_true.size()) + " true labels vs " +
                                                   std::to_string(y_pred.size()) + " predictions");
    }
    if (y_true.empty()) throw Error(ErrorCode::Empty, "no samples to compare");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_true[i], y_pred[i]);
    return cm;
}

double accuracy(const ConfusionMatrix& cm)
{
    const auto total = cm.total();
    if (total == 0) throw Error(ErrorCode::Empty, "accuracy of an empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

namespace {

PerClassMetric ratio_per_class(const ConfusionMatrix& cm, bool use_fp)
{
    PerClassMetric out;
    for (int c = 0; c < kNumClasses; ++c) {
        const auto tp = cm.tp(c);
        const auto denom = tp + (use_fp ? cm.fp(c) : cm.fn(c));
        const auto k = static_cast<std::size_t>(c);
        if (denom == 0) {
            out.undefined[k] = true;
            out.values[k] = 0.0;
        } else {
            out.values[k] = static_cast<double>(tp) / static_cast<double>(denom);
        }
    }
    return out;
}

double harmonic(double p, double r)
{
    if (p + r == 0.0) return 0.0;
    if (p == r) return p;
    return 2.0 * p * r / (p + r);
}

} // namespace

PerClassMetric precision_per_class(const ConfusionMatrix& cm) { return ratio_per_class(cm, true); }

PerClassMetric recall_per_class(const ConfusionMatrix& cm) { return ratio_per_class(cm, false); }

PerClassMetric f1_per_class(const ConfusionMatrix& cm)
{
    const auto p = precision_per_class(cm);
    const auto r = recall_per_class(cm);
    PerClassMetric out;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        out.values[c] = harmonic(p.values[c], r.values[c]);
        out.undefined[c] = p.values[c] + r.values[c] == 0.0;
    }
    return out;
}

double macro_average(std::span<const double, kNumClasses> values, std::span<const std::uint64_t, kNumClasses> supports)
{
    double sum = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (supports[c] == 0) continue;
        sum += values[c];
        ++present;
    }
    return present == 0 ? 0.0 : sum / present;
}

double micro_average(const ConfusionMatrix& cm, MicroMetric metric)
{
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        tp += cm.tp(c);
        fp += cm.fp(c);
        fn += cm.fn(c);
    }
    if (tp + fp + fn == 0) throw Error(ErrorCode::Empty, "micro average of an empty confusion matrix");
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    switch (metric) {
    case MicroMetric::Precision: return p;
    case MicroMetric::Recall: return r;
    case MicroMetric::F1: return harmonic(p, r);
    }
    return 0.0;
}

ClassificationReport report(const ConfusionMatrix& cm)
{
    ClassificationReport r;
    r.total = cm.total();
    if (r.total == 0) throw Error(ErrorCode::Empty, "report on an empty confusion matrix");
    r.precision = precision_per_class(cm);
    r.recall = recall_per_class(cm);
    r.f1 = f1_per_class(cm);
    for (int c = 0; c < kNumClasses; ++c) r.support[static_cast<std::size_t>(c)] = cm.support(c);
    r.macro_precision = macro_average(r.precision.values, r.support);
    r.macro_recall = macro_average(r.recall.values, r.support);
    r.macro_f1 = macro_average(r.f1.values, r.support);
    r.micro_precision = micro_average(cm, MicroMetric::Precision);
    r.micro_recall = micro_average(cm, MicroMetric::Recall);
    r.micro_f1 = micro_average(cm, MicroMetric::F1);
    r.accuracy = accuracy(cm);
    return r;
}

std::string render_report_text(const ClassificationReport& r)
{
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-12s %10s %10s %10s %10s\n", "", "precision", "recall", "f1-score", "support");
    out += line;
    auto cell = [](double v, bool undefined) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f%s", v, undefined ? "*" : "");
        return std::string(buf);
    };
    bool any_undefined = false;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const std::string name(kClassNames[c]);
        std::snprintf(line, sizeof line, "%-12s %10s %10s %10s %10llu\n", name.c_str(),
                      cell(r.precision.values[c], r.precision.undefined[c]).c_str(),
                      cell(r.recall.values[c], r.recall.undefined[c]).c_str(),
                      cell(r.f1.values[c], r.f1.undefined[c]).c_str(),
                      static_cast<unsigned long long>(r.support[c]));
        out += line;
        any_undefined = any_undefined || r.precision.undefined[c] || r.recall.undefined[c] || r.f1.undefined[c];
    }
    out += "\n";
    std::snprintf(line, sizeof line, "%-12s %10s %10s %10.4f %10llu\n", "accuracy", "", "", r.accuracy,
                  static_cast<unsigned long long>(r.total));
    out += line;
    std::snprintf(line, sizeof line, "%-12s %10.4f %10.4f %10.4f %10llu\n", "macro avg", r.macro_precision,
                  r.macro_recall, r.macro_f1, static_cast<unsigned long long>(r.total));
    out += line;
    std::snprintf(line, sizeof line, "%-12s %10.4f %10.4f %10.4f %10llu\n", "micro avg", r.micro_precision,
                  r.micro_recall, r.micro_f1, static_cast<unsigned long long>(r.total));
    out += line;
    if (any_undefined) out += "\n* zero denominator, reported as 0\n";
    return out;
}

std::string render_report_json(const ClassificationReport& r)
{
    nlohmann::ordered_json j;
    j["classes"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        nlohmann::ordered_json row;
        row["class"] = std::string(kClassNames[c]);
        row["precision"] = r.precision.values[c];
        row["recall"] = r.recall.values[c];
        row["f1"] = r.f1.values[c];
        row["support"] = r.support[c];
        row["precision_undefined"] = r.precision.undefined[c];
        row["recall_undefined"] = r.recall.undefined[c];
        row["f1_undefined"] = r.f1.undefined[c];
        j["classes"].push_back(row);
    }
    j["accuracy"] = r.accuracy;
    j["macro_avg"] = {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}};
    j["micro_avg"] = {{"precision", r.micro_precision}, {"recall", r.micro_recall}, {"f1", r.micro_f1}};
    j["total"] = r.total;
    return j.dump(2) + "\n";
}

std::string render_confusion_csv(const ConfusionMatrix& cm)
{
    std::ostringstream os;
    os << "true\\predicted";
    for (auto name : kClassNames) os << ',' << name;
    os << '\n';
    for (int t = 0; t < kNumClasses; ++t) {
        os << kClassNames[static_cast<std::size_t>(t)];
        for (int p = 0; p < kNumClasses; ++p) os << ',' << cm.at(t, p);
        os << '\n';
    }
    return os.str();
}

} // namespace lesion
