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

#include <stdexcept>
#include <string>

namespace lesion {

/// Every failure the library can report. The numeric values are mirrored by
/// the LESION_ERROR_* constants of the C API (negated).
enum class ErrorCode : int {
    InvalidArgument = 1,
    Io = 2,
    CropTooLarge = 3,
    BadHeader = 4,
    NotOneHot = 5,
    DuplicateId = 6,
    ZeroClassCount = 7,
    NoSamples = 8,
    ShapeMismatch = 9,
    NonFiniteInput = 10,
    EmptyTraining = 11,
    MissingImageFile = 12,
    CorruptCheckpoint = 13,
    LengthMismatch = 14,
    Empty = 15,
    IdMismatch = 16,
    BadRow = 17,
    NotNormalized = 18,
    Config = 19,
    ImageDecode = 20,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace lesion
