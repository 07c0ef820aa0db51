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

#include "lesion/data.hpp"
#include "lesion/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace lesion {

namespace {

std::vector<std::string_view> split_line(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Splits into lines, dropping a UTF-8 BOM, CR terminators and blank lines.
std::vector<std::string_view> lines_of(std::string_view text)
{
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// 1 for "1"/"1.0", 0 for "0"/"0.0", -1 for anything else.
int one_hot_value(std::string_view field)
{
    field = trim(field);
    double v = 0.0;
    try {
        std::size_t used = 0;
        v = std::stod(std::string(field), &used);
        if (used != field.size()) return -1;
    } catch (const std::exception&) {
        return -1;
    }
    if (v == 1.0) return 1;
    if (v == 0.0) return 0;
    return -1;
}

} // namespace

ClassLabel label_from_index(int index)
{
    if (index < 0 || index >= kNumClasses) {
        throw Error(ErrorCode::InvalidArgument, "class index out of range: " + std::to_string(index));
    }
    return static_cast<ClassLabel>(index);
}

std::optional<ClassLabel> label_from_name(std::string_view name) noexcept
{
    for (int c = 0; c < kNumClasses; ++c) {
        if (kClassNames[static_cast<std::size_t>(c)] == name) return static_cast<ClassLabel>(c);
    }
    return std::nullopt;
}

Manifest parse_manifest(std::string_view csv, const std::string& source_dir)
{
    const auto lines = lines_of(csv);
    if (lines.empty()) throw Error(ErrorCode::BadHeader, "missing header line");

    const auto header = split_line(lines.front());
    bool has_unk = false;
    bool header_ok = header.size() == kNumClasses + 1 || header.size() == kNumClasses + 2;
    if (header_ok) {
        header_ok = trim(header[0]) == "image";
        for (int c = 0; c < kNumClasses && header_ok; ++c) {
            header_ok = trim(header[static_cast<std::size_t>(c) + 1]) == kClassNames[static_cast<std::size_t>(c)];
        }
        if (header_ok && header.size() == kNumClasses + 2) {
            has_unk = true;
            header_ok = trim(header.back()) == "UNK";
        }
    }
    if (!header_ok) {
        throw Error(ErrorCode::BadHeader, "expected header image,MEL,NV,BCC,AK,BKL,DF,VASC,SCC; got '" +
                                              std::string(lines.front()) + "'");
    }

    Manifest m;
    m.source_dir = source_dir;
    m.rows.reserve(lines.size() - 1);
    std::unordered_set<std::string> seen;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_line(lines[li]);
        const std::string where = "line " + std::to_string(li + 1);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::NotOneHot, where + ": expected " + std::to_string(header.size()) +
                                                  " fields, got " + std::to_string(fields.size()));
        }
        int ones = 0;
        int label = -1;
        for (std::size_t f = 1; f < fields.size(); ++f) {
            const int v = one_hot_value(fields[f]);
            if (v < 0) {
                throw Error(ErrorCode::NotOneHot, where + ": value '" + std::string(fields[f]) + "' is not 0 or 1");
            }
            if (v == 1) {
                ++ones;
                label = static_cast<int>(f) - 1;
            }
        }
        if (ones != 1 || (has_unk && label == kNumClasses)) {
            throw Error(ErrorCode::NotOneHot, where + ": row must have exactly one class set");
        }
        std::string id(trim(fields[0]));
        if (!seen.insert(id).second) {
            throw Error(ErrorCode::DuplicateId, where + ": duplicate image id " + id);
        }
        m.rows.push_back({std::move(id), static_cast<ClassLabel>(label)});
    }
    return m;
}

Manifest read_manifest(const std::string& path, const std::string& source_dir)
{
    return parse_manifest(read_file(path), source_dir);
}

ClassDistribution ClassDistribution::from_counts(const ClassCounts& counts)
{
    ClassDistribution d;
    d.counts = counts;
    d.total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    return d;
}

ClassDistribution class_distribution(const Manifest& m)
{
    ClassCounts counts{};
    for (const auto& row : m.rows) {
        ++counts[static_cast<std::size_t>(row.label)];
    }
    return ClassDistribution::from_counts(counts);
}

std::uint64_t validation_count(std::uint64_t n, double val_fraction)
{
    return static_cast<std::uint64_t>(std::floor(val_fraction * static_cast<double>(n) + 0.5));
}

SplitAssignment stratified_split(const Manifest& m, double val_fraction, std::uint64_t seed)
{
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "val_fraction must be in (0, 1)");
    }
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        by_class[static_cast<std::size_t>(m.rows[i].label)].push_back(i);
    }

    Rng rng(seed);
    std::vector<bool> is_val(m.rows.size(), false);
    for (auto& members : by_class) {
        rng.shuffle(std::span<std::size_t>(members));
        const auto k = std::min<std::uint64_t>(validation_count(members.size(), val_fraction), members.size());
        for (std::size_t j = 0; j < k; ++j) {
            is_val[members[j]] = true;
        }
    }

    SplitAssignment out;
    out.seed = seed;
    out.val_fraction = val_fraction;
    out.train.source_dir = m.source_dir;
    out.val.source_dir = m.source_dir;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        (is_val[i] ? out.val : out.train).rows.push_back(m.rows[i]);
    }
    return out;
}

Manifest stratified_limit(const Manifest& m, std::size_t limit, std::uint64_t seed)
{
    if (limit >= m.size()) return m;

    const auto dist = class_distribution(m);
    // Largest-remainder apportionment of `limit` across classes.
    std::array<std::uint64_t, kNumClasses> quota{};
    std::array<double, kNumClasses> remainder{};
    std::uint64_t assigned = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double exact = static_cast<double>(limit) * static_cast<double>(dist.counts[c]) /
                             static_cast<double>(dist.total);
        quota[c] = static_cast<std::uint64_t>(std::floor(exact));
        remainder[c] = exact - std::floor(exact);
        assigned += quota[c];
    }
    std::array<std::size_t, kNumClasses> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < limit; k = (k + 1) % kNumClasses) {
        const auto c = order[k];
        if (quota[c] < dist.counts[c]) {
            ++quota[c];
            ++assigned;
        }
    }

    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        by_class[static_cast<std::size_t>(m.rows[i].label)].push_back(i);
    }
    Rng rng(seed);
    std::vector<bool> keep(m.rows.size(), false);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        rng.shuffle(std::span<std::size_t>(by_class[c]));
        for (std::size_t j = 0; j < quota[c]; ++j) keep[by_class[c][j]] = true;
    }
    Manifest out;
    out.source_dir = m.source_dir;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        if (keep[i]) out.rows.push_back(m.rows[i]);
    }
    return out;
}

std::string format_split_csv(const SplitAssignment& split, const Manifest& source)
{
    std::unordered_set<std::string_view> val_ids;
    for (const auto& row : split.val.rows) val_ids.insert(row.image_id);
    std::string out = "image,subset\n";
    for (const auto& row : source.rows) {
        out += row.image_id;
        out += val_ids.count(row.image_id) ? ",val\n" : ",train\n";
    }
    return out;
}

SplitAssignment apply_split_csv(const Manifest& m, std::string_view csv)
{
    const auto lines = lines_of(csv);
    if (lines.empty() || trim(lines.front()) != "image,subset") {
        throw Error(ErrorCode::BadHeader, "split file must start with 'image,subset'");
    }
    std::unordered_map<std::string, bool> subset_is_val;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_line(lines[li]);
        if (fields.size() != 2) {
            throw Error(ErrorCode::BadRow, "split file line " + std::to_string(li + 1) + ": expected 2 fields");
        }
        const auto subset = trim(fields[1]);
        if (subset != "train" && subset != "val") {
            throw Error(ErrorCode::BadRow, "split file line " + std::to_string(li + 1) +
                                               ": subset must be train or val");
        }
        if (!subset_is_val.emplace(std::string(trim(fields[0])), subset == "val").second) {
            throw Error(ErrorCode::DuplicateId, "split file repeats id " + std::string(trim(fields[0])));
        }
    }
    SplitAssignment out;
    out.train.source_dir = m.source_dir;
    out.val.source_dir = m.source_dir;
    std::size_t matched = 0;
    for (const auto& row : m.rows) {
        const auto it = subset_is_val.find(row.image_id);
        if (it == subset_is_val.end()) continue;
        ++matched;
        (it->second ? out.val : out.train).rows.push_back(row);
    }
    if (matched != subset_is_val.size()) {
        throw Error(ErrorCode::IdMismatch, std::to_string(subset_is_val.size() - matched) +
                                               " ids in the split file are not in the manifest");
    }
    return out;
}

std::string_view weight_mode_name(WeightMode mode) noexcept
{
    switch (mode) {
    case WeightMode::MinOverCount: return "min_over_count";
    case WeightMode::Literal: return "literal";
    case WeightMode::Uniform: return "uniform";
    case WeightMode::Custom: return "custom";
    }
    return "uniform";
}

std::optional<WeightMode> weight_mode_from_name(std::string_view name) noexcept
{
    for (auto mode : {WeightMode::MinOverCount, WeightMode::Literal, WeightMode::Uniform, WeightMode::Custom}) {
        if (weight_mode_name(mode) == name) return mode;
    }
    return std::nullopt;
}

namespace {

ClassWeights weights_impl(const ClassDistribution& d, WeightMode mode, bool skip_absent)
{
    ClassWeights w;
    w.mode = mode;
    if (mode == WeightMode::Uniform) {
        w.weights.fill(1.0);
        return w;
    }
    if (mode == WeightMode::Custom) {
        throw Error(ErrorCode::InvalidArgument, "custom weights must be supplied explicitly");
    }

    std::uint64_t min_count = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto n = d.counts[c];
        if (n == 0) {
            if (skip_absent) continue;
            throw Error(ErrorCode::ZeroClassCount,
                        "class " + std::string(kClassNames[c]) + " has no samples");
        }
        if (min_count == 0 || n < min_count) min_count = n;
    }
    if (min_count == 0) {
        throw Error(ErrorCode::ZeroClassCount, "distribution has no samples");
    }
    const auto total = std::accumulate(d.counts.begin(), d.counts.end(), std::uint64_t{0});
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (d.counts[c] == 0) {
            w.weights[c] = 1.0;
        } else if (mode == WeightMode::MinOverCount) {
            w.weights[c] = static_cast<double>(min_count) / static_cast<double>(d.counts[c]);
        } else {
            w.weights[c] = static_cast<double>(min_count) / static_cast<double>(total);
        }
    }
    return w;
}

} // namespace

ClassWeights class_weights(const ClassDistribution& d, WeightMode mode)
{
    return weights_impl(d, mode, false);
}

ClassWeights class_weights_present(const ClassDistribution& d, WeightMode mode)
{
    return weights_impl(d, mode, true);
}

ClassWeights custom_weights(const std::array<double, kNumClasses>& values)
{
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::InvalidArgument, "custom class weights must be non-negative and finite");
        }
    }
    ClassWeights w;
    w.mode = WeightMode::Custom;
    w.weights = values;
    return w;
}

BatchPlan balanced_batches(const ClassCounts& train_size_per_class, std::size_t batch_size,
                           std::size_t num_batches, std::uint64_t seed)
{
    if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");

    std::vector<std::size_t> present;
    std::array<std::size_t, kNumClasses> offset{};
    std::size_t running = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        offset[c] = running;
        running += train_size_per_class[c];
        if (train_size_per_class[c] > 0) present.push_back(c);
    }
    if (present.empty()) throw Error(ErrorCode::NoSamples, "every class is empty");

    BatchPlan plan;
    plan.batch_size = batch_size;
    plan.strategy = Sampler::Balanced;
    plan.batches.reserve(num_batches);
    Rng rng(seed);
    // The slot cursor runs on across batches so the classes that get the extra
    // slot rotate from batch to batch.
    std::size_t slot = 0;
    for (std::size_t b = 0; b < num_batches; ++b) {
        std::vector<std::size_t> batch(batch_size);
        for (auto& index : batch) {
            const auto c = present[slot++ % present.size()];
            index = offset[c] + static_cast<std::size_t>(rng.below(train_size_per_class[c]));
        }
        plan.batches.push_back(std::move(batch));
    }
    return plan;
}

BatchPlan shuffled_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed)
{
    if (n == 0) throw Error(ErrorCode::NoSamples, "cannot batch an empty set");
    if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(perm));

    BatchPlan plan;
    plan.batch_size = batch_size;
    plan.strategy = Sampler::Shuffled;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const auto end = std::min(n, start + batch_size);
        plan.batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                  perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return plan;
}

} // namespace lesion
