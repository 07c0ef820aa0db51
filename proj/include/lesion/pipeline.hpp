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
#include "lesion/imaging.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace lesion {

/// Per-class table with rows for the full set, training and validation, and
/// a TOTAL column.
std::string format_split_summary(const SplitAssignment& split);

/// Classes whose training subset ended up empty while validation is not.
std::vector<std::string> split_warnings(const SplitAssignment& split);

/// Reads a PNG/JPEG, runs augment_eval and writes the result as PNG.
void preprocess_file(const std::string& in_path, const std::string& out_path, const AugmentConfig& cfg);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

} // namespace lesion
