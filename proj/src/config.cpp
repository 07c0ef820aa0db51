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

#include "lesion/config.hpp"

#include <json.hpp>

namespace lesion {

namespace {

using json = nlohmann::json;

template <typename T>
T typed(const std::string& key, const json& v)
{
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw std::invalid_argument("expected true or false");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
                    throw std::invalid_argument("expected a non-negative integer");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw std::invalid_argument("expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw std::invalid_argument("expected a string");
        }
        return v.get<T>();
    } catch (const std::exception& e) {
        throw Error(ErrorCode::Config, "key '" + key + "': " + e.what());
    }
}

void apply(RunConfig& cfg, const std::string& key, const json& v)
{
    auto& a = cfg.augment;
    auto& t = cfg.train;
    if (key == "resize_w") a.resize_w = typed<int>(key, v);
    else if (key == "resize_h") a.resize_h = typed<int>(key, v);
    else if (key == "center_crop") a.center_crop = typed<int>(key, v);
    else if (key == "random_crop") a.random_crop = typed<int>(key, v);
    else if (key == "brightness_delta") a.brightness_delta = typed<double>(key, v);
    else if (key == "flip_prob") a.flip_prob = typed<double>(key, v);
    else if (key == "color_constancy") a.apply_color_constancy = typed<bool>(key, v);
    else if (key == "standardize") a.standardize = typed<bool>(key, v);
    else if (key == "lr") t.lr0 = typed<double>(key, v);
    else if (key == "plateau_factor") t.plateau_factor = typed<double>(key, v);
    else if (key == "plateau_patience") t.plateau_patience = typed<int>(key, v);
    else if (key == "max_epochs") t.max_epochs = typed<int>(key, v);
    else if (key == "batch_size") t.batch_size = typed<std::size_t>(key, v);
    else if (key == "seed") t.seed = typed<std::uint64_t>(key, v);
    else if (key == "adam_beta1") t.adam.beta1 = typed<double>(key, v);
    else if (key == "adam_beta2") t.adam.beta2 = typed<double>(key, v);
    else if (key == "adam_eps") t.adam.eps = typed<double>(key, v);
    else if (key == "layers") cfg.layers = typed<std::string>(key, v);
    else if (key == "val_frac") cfg.val_frac = typed<double>(key, v);
    else if (key == "limit") cfg.limit = typed<std::size_t>(key, v);
    else if (key == "sampler") {
        const auto s = sampler_from_name(typed<std::string>(key, v));
        if (!s) throw Error(ErrorCode::Config, "key 'sampler': expected shuffled or balanced");
        t.sampler = *s;
    } else if (key == "weight_mode") {
        const auto m = weight_mode_from_name(typed<std::string>(key, v));
        if (!m) throw Error(ErrorCode::Config, "key 'weight_mode': expected min_over_count, literal, uniform or custom");
        t.weight_mode = *m;
    } else if (key == "monitor") {
        const auto m = monitor_from_name(typed<std::string>(key, v));
        if (!m) throw Error(ErrorCode::Config, "key 'monitor': expected val_accuracy or val_macro_recall");
        t.monitor = *m;
    } else if (key == "class_weights") {
        if (!v.is_array() || v.size() != kNumClasses) {
            throw Error(ErrorCode::Config, "key 'class_weights': expected an array of 8 numbers");
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) t.custom_weights[c] = typed<double>(key, v[c]);
    } else {
        throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
    }
}

} // namespace

const std::vector<std::string>& RunConfig::keys()
{
    static const std::vector<std::string> k = {
        "resize_w",   "resize_h",       "center_crop",      "random_crop", "brightness_delta", "flip_prob",
        "color_constancy", "standardize", "lr",             "plateau_factor", "plateau_patience", "max_epochs",
        "batch_size", "sampler",        "weight_mode",      "class_weights", "seed",            "monitor",
        "adam_beta1", "adam_beta2",     "adam_eps",         "layers",      "val_frac",         "limit"};
    return k;
}

void RunConfig::merge_json(std::string_view json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) apply(*this, key, value);
}

void RunConfig::set(const std::string& key, const std::string& value)
{
    json v;
    try {
        v = json::parse(value);
    } catch (const json::parse_error&) {
        v = value;
    }
    apply(*this, key, v);
}

void RunConfig::validate() const
{
    try {
        augment.validate();
        train.validate();
        model_spec().shapes();
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, e.what());
    }
    if (!(val_frac > 0.0 && val_frac < 1.0)) throw Error(ErrorCode::Config, "key 'val_frac': must be in (0, 1)");
}

ModelSpec RunConfig::model_spec() const
{
    ModelSpec spec;
    spec.in_channels = 3;
    spec.in_height = augment.random_crop;
    spec.in_width = augment.random_crop;
    spec.layers = ModelSpec::parse_layers(layers);
    return spec;
}

std::string RunConfig::to_json() const
{
    nlohmann::ordered_json j;
    j["resize_w"] = augment.resize_w;
    j["resize_h"] = augment.resize_h;
    j["center_crop"] = augment.center_crop;
    j["random_crop"] = augment.random_crop;
    j["brightness_delta"] = augment.brightness_delta;
    j["flip_prob"] = augment.flip_prob;
    j["color_constancy"] = augment.apply_color_constancy;
    j["standardize"] = augment.standardize;
    j["lr"] = train.lr0;
    j["plateau_factor"] = train.plateau_factor;
    j["plateau_patience"] = train.plateau_patience;
    j["max_epochs"] = train.max_epochs;
    j["batch_size"] = train.batch_size;
    j["sampler"] = std::string(sampler_name(train.sampler));
    j["weight_mode"] = std::string(weight_mode_name(train.weight_mode));
    j["class_weights"] = train.custom_weights;
    j["seed"] = train.seed;
    j["monitor"] = std::string(monitor_name(train.monitor));
    j["adam_beta1"] = train.adam.beta1;
    j["adam_beta2"] = train.adam.beta2;
    j["adam_eps"] = train.adam.eps;
    j["layers"] = layers;
    j["val_frac"] = val_frac;
    j["limit"] = limit;
    return j.dump(2) + "\n";
}

} // namespace lesion
