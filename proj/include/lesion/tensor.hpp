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

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace lesion {

/// Dense row-major array of doubles.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0)
        : shape(std::move(dims)), data(element_count(shape), fill)
    {
    }

    Tensor(std::vector<std::size_t> dims, std::vector<double> values)
        : shape(std::move(dims)), data(std::move(values))
    {
        if (data.size() != element_count(shape)) {
            throw Error(ErrorCode::ShapeMismatch, "tensor data length " + std::to_string(data.size()) +
                                                      " does not match shape " + shape_string());
        }
    }

    static std::size_t element_count(const std::vector<std::size_t>& dims)
    {
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t size() const noexcept { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    double& operator[](std::size_t i) noexcept { return data[i]; }
    double operator[](std::size_t i) const noexcept { return data[i]; }

    std::string shape_string() const
    {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    bool operator==(const Tensor&) const = default;
};

} // namespace lesion
