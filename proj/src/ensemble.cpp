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

#include "lesion/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lesion {

void PredictionSet::add(std::string image_id, const Probabilities& row)
{
    if (!index_.emplace(image_id, ids_.size()).second) {
        throw Error(ErrorCode::DuplicateId, "duplicate prediction for " + image_id);
    }
    ids_.push_back(std::move(image_id));
    rows_.push_back(row);
}

const Probabilities* PredictionSet::find(std::string_view image_id) const
{
    const auto it = index_.find(std::string(image_id));
    return it == index_.end() ? nullptr : &rows_[it->second];
}

PredictionSet average(std::span<const PredictionSet> sets)
{
    if (sets.empty()) throw Error(ErrorCode::Empty, "nothing to average");
    const auto& first = sets.front();
    for (std::size_t s = 1; s < sets.size(); ++s) {
        if (sets[s].size() != first.size()) {
            throw Error(ErrorCode::IdMismatch, "prediction set " + std::to_string(s) + " has " +
                                                   std::to_string(sets[s].size()) + " rows, expected " +
                                                   std::to_string(first.size()));
        }
    }
    PredictionSet out;
    for (std::size_t i = 0; i < first.size(); ++i) {
        const auto& id = first.ids()[i];
        // Running mean: exact when every set agrees on a value.
        Probabilities mean = first.row(i);
        for (std::size_t s = 1; s < sets.size(); ++s) {
            const Probabilities* row = sets[s].find(id);
            if (!row) throw Error(ErrorCode::IdMismatch, "image " + id + " is missing from a prediction set");
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                mean[c] += ((*row)[c] - mean[c]) / static_cast<double>(s + 1);
            }
        }
        out.add(id, mean);
    }
    return out;
}

ClassLabel argmax(const Probabilities& row) noexcept
{
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c) {
        if (row[c] > row[best]) best = c;
    }
    return static_cast<ClassLabel>(best);
}

std::vector<std::pair<std::string, ClassLabel>> argmax_labels(const PredictionSet& s)
{
    std::vector<std::pair<std::string, ClassLabel>> out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out.emplace_back(s.ids()[i], argmax(s.row(i)));
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) return fields;
        start = pos + 1;
    }
}

std::string_view strip(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

PredictionSet parse_predictions(std::string_view csv, std::vector<std::string>* warnings)
{
    if (csv.substr(0, 3) == "\xEF\xBB\xBF") csv.remove_prefix(3);
    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start < csv.size();) {
        auto end = csv.find('\n', start);
        if (end == std::string_view::npos) end = csv.size();
        const auto line = strip(csv.substr(start, end - start));
        if (!line.empty()) lines.push_back(line);
        start = end + 1;
    }
    if (lines.empty()) throw Error(ErrorCode::BadHeader, "empty prediction file");

    const auto header = split_fields(lines.front());
    bool header_ok = header.size() == kNumClasses + 1 && strip(header[0]) == "image";
    for (std::size_t c = 0; header_ok && c < kNumClasses; ++c) header_ok = strip(header[c + 1]) == kClassNames[c];
    if (!header_ok) {
        throw Error(ErrorCode::BadHeader, "expected header image,MEL,NV,BCC,AK,BKL,DF,VASC,SCC; got '" +
                                              std::string(lines.front()) + "'");
    }

    PredictionSet out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_fields(lines[li]);
        const std::string where = "line " + std::to_string(li + 1);
        if (fields.size() != kNumClasses + 1) throw Error(ErrorCode::BadRow, where + ": expected 9 fields");
        Probabilities row{};
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const std::string text(strip(fields[c + 1]));
            char* end = nullptr;
            const double v = std::strtod(text.c_str(), &end);
            if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
                throw Error(ErrorCode::BadRow, where + ": '" + text + "' is not a number");
            }
            if (v < 0.0 || v > 1.0 + kRejectTolerance) {
                throw Error(ErrorCode::BadRow, where + ": probability " + text + " outside [0, 1]");
            }
            row[c] = v;
        }
        const double sum = std::accumulate(row.begin(), row.end(), 0.0);
        const double off = std::abs(sum - 1.0);
        const std::string id(strip(fields[0]));
        if (off > kRejectTolerance) {
            throw Error(ErrorCode::NotNormalized, where + ": row for " + id + " sums to " + std::to_string(sum));
        }
        if (off > kRenormalizeTolerance) {
            for (double& v : row) v /= sum;
            if (warnings) {
                warnings->push_back(where + ": row for " + id + " sums to " + std::to_string(sum) + ", renormalized");
            }
        }
        out.add(id, row);
    }
    return out;
}

PredictionSet read_predictions(const std::string& path, std::vector<std::string>* warnings)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_predictions(ss.str(), warnings);
}

namespace {

/// Row in millionths, rounded so the parts sum to exactly 1,000,000 when the
/// input is a probability vector (largest-remainder method).
std::array<long long, kNumClasses> to_micro_units(const Probabilities& row)
{
    std::array<long long, kNumClasses> units{};
    std::array<double, kNumClasses> frac{};
    long long sum = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double scaled = row[c] * 1e6;
        units[c] = static_cast<long long>(std::floor(scaled));
        frac[c] = scaled - std::floor(scaled);
        sum += units[c];
    }
    const long long deficit = 1000000 - sum;
    if (deficit < 0 || deficit > kNumClasses) {
        // Not a probability row; plain rounding.
        for (std::size_t c = 0; c < kNumClasses; ++c) units[c] = std::llround(row[c] * 1e6);
        return units;
    }
    std::array<std::size_t, kNumClasses> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (long long k = 0; k < deficit; ++k) ++units[order[static_cast<std::size_t>(k)]];
    return units;
}

} // namespace

std::string format_predictions(const PredictionSet& s)
{
    std::string out = "image";
    for (auto name : kClassNames) {
        out += ',';
        out += name;
    }
    out += '\n';
    char buf[32];
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += s.ids()[i];
        for (long long u : to_micro_units(s.row(i))) {
            std::snprintf(buf, sizeof buf, ",%lld.%06lld", u / 1000000, u % 1000000);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void write_predictions(const PredictionSet& s, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << format_predictions(s);
    if (!out) throw Error(ErrorCode::Io, "error writing " + path);
}

} // namespace lesion
