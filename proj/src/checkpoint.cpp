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

#include "lesion/training.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lesion {

namespace {

constexpr char kMagic[6] = {'L', 'F', 'C', 'K', 'P', 'T'};
constexpr std::size_t kPrefix = sizeof kMagic + 1 + 4;

[[noreturn]] void corrupt(const std::string& msg)
{
    throw Error(ErrorCode::CorruptCheckpoint, msg);
}

void put_u32(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view in, std::size_t at)
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

void put_f64(std::string& out, double d)
{
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(std::string_view in, std::size_t at)
{
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

nlohmann::ordered_json augment_to_json(const AugmentConfig& a)
{
    return {{"resize_w", a.resize_w},
            {"resize_h", a.resize_h},
            {"center_crop", a.center_crop},
            {"random_crop", a.random_crop},
            {"brightness_delta", a.brightness_delta},
            {"flip_prob", a.flip_prob},
            {"color_constancy", a.apply_color_constancy},
            {"standardize", a.standardize}};
}

AugmentConfig augment_from_json(const nlohmann::json& j)
{
    AugmentConfig a;
    a.resize_w = j.at("resize_w").get<int>();
    a.resize_h = j.at("resize_h").get<int>();
    a.center_crop = j.at("center_crop").get<int>();
    a.random_crop = j.at("random_crop").get<int>();
    a.brightness_delta = j.at("brightness_delta").get<double>();
    a.flip_prob = j.at("flip_prob").get<double>();
    a.apply_color_constancy = j.at("color_constancy").get<bool>();
    a.standardize = j.at("standardize").get<bool>();
    return a;
}

} // namespace

bool Checkpoint::operator==(const Checkpoint& o) const
{
    if (!(spec == o.spec) || epoch != o.epoch || !same_bits(metric, o.metric) || monitor != o.monitor ||
        class_order != o.class_order || seed != o.seed || init_seed != o.init_seed || weights.mode != o.weights.mode) {
        return false;
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (!same_bits(weights.weights[c], o.weights.weights[c])) return false;
    }
    const auto a = params.flatten();
    const auto b = o.params.flatten();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!same_bits(a[i], b[i])) return false;
    }
    return augment_to_json(augment) == augment_to_json(o.augment);
}

std::string serialize_checkpoint(const Checkpoint& c)
{
    nlohmann::ordered_json meta;
    meta["model"] = {{"input", {c.spec.in_channels, c.spec.in_height, c.spec.in_width}},
                     {"layers", c.spec.layers_string()}};
    meta["epoch"] = c.epoch;
    meta["metric"] = c.metric;
    meta["monitor"] = std::string(monitor_name(c.monitor));
    meta["class_order"] = c.class_order;
    meta["seed"] = c.seed;
    meta["init_seed"] = c.init_seed;
    meta["weight_mode"] = std::string(weight_mode_name(c.weights.mode));
    meta["class_weights"] = c.weights.weights;
    meta["augment"] = augment_to_json(c.augment);
    meta["param_count"] = c.params.count();
    const std::string header = meta.dump();

    std::string out(kMagic, sizeof kMagic);
    out.push_back(static_cast<char>(kCheckpointVersion));
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    for (double v : c.params.flatten()) put_f64(out, v);
    return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes)
{
    if (bytes.size() < kPrefix || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        corrupt("missing LFCKPT magic");
    }
    const auto version = static_cast<std::uint8_t>(bytes[sizeof kMagic]);
    if (version != kCheckpointVersion) {
        corrupt("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t header_len = get_u32(bytes, sizeof kMagic + 1);
    if (bytes.size() - kPrefix < header_len) corrupt("truncated metadata header");

    Checkpoint c;
    std::size_t expected_params = 0;
    try {
        const auto meta = nlohmann::json::parse(bytes.substr(kPrefix, header_len));
        const auto& model = meta.at("model");
        const auto input = model.at("input").get<std::vector<int>>();
        if (input.size() != 3) corrupt("model input must have 3 dimensions");
        c.spec.in_channels = input[0];
        c.spec.in_height = input[1];
        c.spec.in_width = input[2];
        c.spec.layers = ModelSpec::parse_layers(model.at("layers").get<std::string>());
        c.epoch = meta.at("epoch").get<int>();
        c.metric = meta.at("metric").get<double>();
        const auto monitor = monitor_from_name(meta.at("monitor").get<std::string>());
        if (!monitor) corrupt("unknown monitor");
        c.monitor = *monitor;
        c.class_order = meta.at("class_order").get<std::array<std::string, kNumClasses>>();
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            if (c.class_order[k] != kClassNames[k]) corrupt("class order differs from MEL,NV,BCC,AK,BKL,DF,VASC,SCC");
        }
        c.seed = meta.at("seed").get<std::uint64_t>();
        c.init_seed = meta.at("init_seed").get<std::uint64_t>();
        const auto mode = weight_mode_from_name(meta.at("weight_mode").get<std::string>());
        if (!mode) corrupt("unknown weight mode");
        c.weights.mode = *mode;
        c.weights.weights = meta.at("class_weights").get<std::array<double, kNumClasses>>();
        c.augment = augment_from_json(meta.at("augment"));
        expected_params = meta.at("param_count").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        corrupt(std::string("bad metadata: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptCheckpoint) throw;
        corrupt(std::string("bad model description: ") + e.what());
    }

    try {
        c.params = zero_params(c.spec);
    } catch (const Error& e) {
        corrupt(std::string("inconsistent model: ") + e.what());
    }
    if (c.params.count() != expected_params) corrupt("parameter count does not match the model");
    const std::size_t block = bytes.size() - kPrefix - header_len;
    if (block != expected_params * 8) {
        corrupt("parameter block is " + std::to_string(block) + " bytes, expected " + std::to_string(expected_params * 8));
    }
    std::vector<double> flat(expected_params);
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = get_f64(bytes, kPrefix + header_len + 8 * i);
    c.params.assign(flat);
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    const auto bytes = serialize_checkpoint(c);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "error writing " + path);
}

Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

} // namespace lesion
