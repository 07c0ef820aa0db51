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

#include "lesion/imaging.hpp"
#include "lesion/nn.hpp"
#include "lesion/training.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace lesion {

/// Everything a CLI run depends on. Serialized as a flat JSON object; the
/// key names are listed by RunConfig::keys().
struct RunConfig {
    AugmentConfig augment;
    TrainConfig train;
    std::string layers = ModelSpec::small_cnn(224).layers_string();
    double val_frac = 0.2;
    /// 0 means no limit.
    std::size_t limit = 0;

    static const std::vector<std::string>& keys();

    /// Applies every key of a JSON object. Unknown keys and ill-typed values
    /// raise Error(Config) naming the key.
    void merge_json(std::string_view json_text);
    /// Sets one key from its command-line text (parsed as JSON when possible,
    /// otherwise taken as a string).
    void set(const std::string& key, const std::string& value);

    void validate() const;
    /// The model whose input matches augment.random_crop.
    ModelSpec model_spec() const;
    std::string to_json() const;
};

} // namespace lesion
