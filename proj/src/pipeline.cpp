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

#include "lesion/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lesion {

std::string format_split_summary(const SplitAssignment& split)
{
    const auto train = class_distribution(split.train);
    const auto val = class_distribution(split.val);
    std::string out;
    char cell[32];
    std::snprintf(cell, sizeof cell, "%-12s", "Type");
    out += cell;
    for (auto name : kClassNames) {
        std::snprintf(cell, sizeof cell, "%8s", std::string(name).c_str());
        out += cell;
    }
    out += "   TOTAL\n";
    auto row = [&](const char* label, const ClassCounts& counts, std::uint64_t total) {
        std::snprintf(cell, sizeof cell, "%-12s", label);
        out += cell;
        for (auto n : counts) {
            std::snprintf(cell, sizeof cell, "%8llu", static_cast<unsigned long long>(n));
            out += cell;
        }
        std::snprintf(cell, sizeof cell, "%8llu\n", static_cast<unsigned long long>(total));
        out += cell;
    };
    ClassCounts all{};
    for (std::size_t c = 0; c < kNumClasses; ++c) all[c] = train.counts[c] + val.counts[c];
    row("Sub-set", all, train.total + val.total);
    row("Training", train.counts, train.total);
    row("Validation", val.counts, val.total);
    return out;
}

std::vector<std::string> split_warnings(const SplitAssignment& split)
{
    const auto train = class_distribution(split.train);
    const auto val = class_distribution(split.val);
    std::vector<std::string> out;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (train.counts[c] == 0 && val.counts[c] > 0) {
            out.push_back("class " + std::string(kClassNames[c]) + " has " + std::to_string(val.counts[c]) +
                          " validation samples and none for training");
        }
    }
    return out;
}

void preprocess_file(const std::string& in_path, const std::string& out_path, const AugmentConfig& cfg)
{
    write_png(to_u8(augment_eval(read_image(in_path), cfg)), out_path);
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Io, "error writing " + path);
}

} // namespace lesion
