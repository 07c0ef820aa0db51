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

#include "lesion/imaging.hpp"

#include <algorithm>
#include <cmath>

namespace lesion {

namespace {

std::uint8_t round_to_u8(double v)
{
    // Inputs are non-negative, so floor(v + 0.5) is round-half-away-from-zero.
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

void check_crop(int img_w, int img_h, int cw, int ch)
{
    if (cw < 1 || ch < 1 || cw > img_w || ch > img_h) {
        throw Error(ErrorCode::CropTooLarge, "cannot crop " + std::to_string(cw) + "x" +
                                                 std::to_string(ch) + " from a " +
                                                 std::to_string(img_w) + "x" +
                                                 std::to_string(img_h) + " image");
    }
}

} // namespace

void AugmentConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (resize_w < 1 || resize_h < 1) fail("resize dimensions must be positive");
    if (center_crop < 1 || random_crop < 1) fail("crop sizes must be positive");
    if (random_crop > center_crop) fail("random_crop must not exceed center_crop");
    if (center_crop > std::min(resize_w, resize_h)) fail("center_crop must fit inside the resized image");
    if (!(brightness_delta >= 0.0 && brightness_delta < 1.0)) fail("brightness_delta must be in [0, 1)");
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) fail("flip_prob must be in [0, 1]");
}

ImageU8 resize(const ImageU8& img, int out_w, int out_h)
{
    if (out_w < 1 || out_h < 1) {
        throw Error(ErrorCode::InvalidArgument, "resize target must be positive");
    }
    if (out_w == img.width() && out_h == img.height()) {
        return img;
    }
    const double sx = static_cast<double>(img.width()) / out_w;
    const double sy = static_cast<double>(img.height()) / out_h;

    // Precompute the horizontal taps once per column.
    struct Tap {
        int i0, i1;
        double t;
    };
    auto taps = [](int n_out, int n_in, double scale) {
        std::vector<Tap> out(static_cast<std::size_t>(n_out));
        for (int o = 0; o < n_out; ++o) {
            double src = (o + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
            const int i0 = static_cast<int>(std::floor(src));
            const int i1 = std::min(i0 + 1, n_in - 1);
            out[static_cast<std::size_t>(o)] = {i0, i1, src - i0};
        }
        return out;
    };
    const auto xt = taps(out_w, img.width(), sx);
    const auto yt = taps(out_h, img.height(), sy);

    ImageU8 out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const Tap& ty = yt[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w; ++x) {
            const Tap& tx = xt[static_cast<std::size_t>(x)];
            for (int c = 0; c < 3; ++c) {
                const double top = img.at(tx.i0, ty.i0, c) * (1.0 - tx.t) + img.at(tx.i1, ty.i0, c) * tx.t;
                const double bot = img.at(tx.i0, ty.i1, c) * (1.0 - tx.t) + img.at(tx.i1, ty.i1, c) * tx.t;
                out.at(x, y, c) = round_to_u8(top * (1.0 - ty.t) + bot * ty.t);
            }
        }
    }
    return out;
}

ImageU8 white_patch_retinex(const ImageU8& img)
{
    std::uint8_t channel_max[3] = {0, 0, 0};
    const auto& px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        auto& m = channel_max[i % 3];
        m = std::max(m, px[i]);
    }
    ImageU8 out = img;
    auto& dst = out.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const std::uint8_t m = channel_max[i % 3];
        if (m == 0 || m == 255) {
            continue; // degenerate channel, or gain of exactly 1
        }
        dst[i] = round_to_u8(static_cast<double>(px[i]) * 255.0 / m);
    }
    return out;
}

ImageF normalize(const ImageU8& img)
{
    std::vector<double> values(img.pixels().size());
    std::transform(img.pixels().begin(), img.pixels().end(), values.begin(),
                   [](std::uint8_t v) { return v / 255.0; });
    return ImageF(img.width(), img.height(), std::move(values));
}

ImageU8 to_u8(const ImageF& img)
{
    std::vector<std::uint8_t> values(img.pixels().size());
    std::transform(img.pixels().begin(), img.pixels().end(), values.begin(),
                   [](double v) { return round_to_u8(v * 255.0); });
    return ImageU8(img.width(), img.height(), std::move(values));
}

template <typename T>
Image<T> crop(const Image<T>& img, int x0, int y0, int cw, int ch)
{
    check_crop(img.width(), img.height(), cw, ch);
    if (x0 < 0 || y0 < 0 || x0 + cw > img.width() || y0 + ch > img.height()) {
        throw Error(ErrorCode::CropTooLarge, "crop window leaves the image");
    }
    Image<T> out(cw, ch);
    const auto row_len = static_cast<std::size_t>(cw) * 3;
    for (int y = 0; y < ch; ++y) {
        const T* src = &img.at(x0, y0 + y, 0);
        std::copy(src, src + row_len, &out.at(0, y, 0));
    }
    return out;
}

template <typename T>
Image<T> center_crop(const Image<T>& img, int cw, int ch)
{
    check_crop(img.width(), img.height(), cw, ch);
    return crop(img, (img.width() - cw) / 2, (img.height() - ch) / 2, cw, ch);
}

template <typename T>
Image<T> random_crop(const Image<T>& img, int cw, int ch, Rng& rng)
{
    check_crop(img.width(), img.height(), cw, ch);
    const auto x0 = static_cast<int>(rng.between(0, img.width() - cw));
    const auto y0 = static_cast<int>(rng.between(0, img.height() - ch));
    return crop(img, x0, y0, cw, ch);
}

template <typename T>
Image<T> flip_horizontal(const Image<T>& img)
{
    Image<T> out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
            }
        }
    }
    return out;
}

template <typename T>
Image<T> flip_vertical(const Image<T>& img)
{
    Image<T> out(img.width(), img.height());
    const auto row_len = static_cast<std::size_t>(img.width()) * 3;
    for (int y = 0; y < img.height(); ++y) {
        const T* src = &img.at(0, y, 0);
        std::copy(src, src + row_len, &out.at(0, img.height() - 1 - y, 0));
    }
    return out;
}

template <typename T>
Image<T> random_flip(const Image<T>& img, double flip_prob, Rng& rng)
{
    // Both coins are always drawn so the stream position does not depend on outcomes.
    const bool horizontal = rng.bernoulli(flip_prob);
    const bool vertical = rng.bernoulli(flip_prob);
    Image<T> out = horizontal ? flip_horizontal(img) : img;
    return vertical ? flip_vertical(out) : out;
}

ImageF adjust_brightness(const ImageF& img, double delta)
{
    ImageF out = img;
    for (double& v : out.pixels()) {
        v = std::clamp(v + delta, 0.0, 1.0);
    }
    return out;
}

ImageF random_brightness(const ImageF& img, double delta_max, Rng& rng)
{
    if (!(delta_max >= 0.0 && delta_max < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "brightness delta_max must be in [0, 1)");
    }
    return adjust_brightness(img, rng.uniform(-delta_max, delta_max));
}

namespace {

ImageF prepare(const ImageU8& img, const AugmentConfig& cfg)
{
    ImageU8 resized = resize(img, cfg.resize_w, cfg.resize_h);
    if (cfg.apply_color_constancy) {
        resized = white_patch_retinex(resized);
    }
    return normalize(resized);
}

} // namespace

ImageF augment_train(const ImageU8& img, const AugmentConfig& cfg, Rng& rng)
{
    cfg.validate();
    ImageF out = center_crop(prepare(img, cfg), cfg.center_crop, cfg.center_crop);
    out = random_flip(out, cfg.flip_prob, rng);
    out = random_crop(out, cfg.random_crop, cfg.random_crop, rng);
    return random_brightness(out, cfg.brightness_delta, rng);
}

ImageF augment_eval(const ImageU8& img, const AugmentConfig& cfg)
{
    cfg.validate();
    return center_crop(prepare(img, cfg), cfg.random_crop, cfg.random_crop);
}

template ImageU8 crop(const ImageU8&, int, int, int, int);
template ImageF crop(const ImageF&, int, int, int, int);
template ImageU8 center_crop(const ImageU8&, int, int);
template ImageF center_crop(const ImageF&, int, int);
template ImageU8 random_crop(const ImageU8&, int, int, Rng&);
template ImageF random_crop(const ImageF&, int, int, Rng&);
template ImageU8 flip_horizontal(const ImageU8&);
template ImageF flip_horizontal(const ImageF&);
template ImageU8 flip_vertical(const ImageU8&);
template ImageF flip_vertical(const ImageF&);
template ImageU8 random_flip(const ImageU8&, double, Rng&);
template ImageF random_flip(const ImageF&, double, Rng&);

} // namespace lesion
