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

#include "lesion/error.hpp"
#include "lesion/rng.hpp"

#include <cmath>
#include <numbers>

namespace lesion {

const char* error_code_name(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::CropTooLarge: return "CropTooLarge";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::NotOneHot: return "NotOneHot";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ZeroClassCount: return "ZeroClassCount";
    case ErrorCode::NoSamples: return "NoSamples";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyTraining: return "EmptyTraining";
    case ErrorCode::MissingImageFile: return "MissingImageFile";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::BadRow: return "BadRow";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::Config: return "Config";
    case ErrorCode::ImageDecode: return "ImageDecode";
    }
    return "Unknown";
}

double Rng::normal()
{
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) noexcept
{
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(master) ^ a) ^ b);
}

} // namespace lesion
