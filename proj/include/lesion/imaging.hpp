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
#include "lesion/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace lesion {

/// Row-major interleaved RGB raster.
template <typename T>
class Image {
public:
    static constexpr int kChannels = 3;

    Image() = default;

    Image(int width, int height, T fill = T{})
        : width_(width), height_(height), pixels_(checked_size(width, height), fill)
    {
    }

    Image(int width, int height, std::vector<T> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels))
    {
        if (pixels_.size() != checked_size(width, height)) {
            throw Error(ErrorCode::InvalidArgument, "pixel buffer length does not match " +
                                                        std::to_string(width) + "x" +
                                                        std::to_string(height) + "x3");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return pixels_.empty(); }

    T& at(int x, int y, int c) { return pixels_[index(x, y, c)]; }
    const T& at(int x, int y, int c) const { return pixels_[index(x, y, c)]; }

    std::vector<T>& pixels() noexcept { return pixels_; }
    const std::vector<T>& pixels() const noexcept { return pixels_; }

    bool operator==(const Image&) const = default;

private:
    static std::size_t checked_size(int width, int height)
    {
        if (width < 1 || height < 1) {
            throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
        }
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels;
    }

    std::size_t index(int x, int y, int c) const noexcept
    {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> pixels_;
};

using ImageU8 = Image<std::uint8_t>;
/// Unit-interval floating point raster.
using ImageF = Image<double>;

struct AugmentConfig {
    int resize_w = 600;
    int resize_h = 450;
    int center_crop = 320;
    int random_crop = 224;
    double brightness_delta = 0.1;
    double flip_prob = 0.5;
    bool apply_color_constancy = true;
    /// Per-channel zero-mean/unit-variance at tensor conversion. Off by default.
    bool standardize = false;

    /// Throws Error(InvalidArgument) describing the first violated constraint.
    void validate() const;
};

ImageU8 resize(const ImageU8& img, int out_w, int out_h);
ImageU8 white_patch_retinex(const ImageU8& img);
ImageF normalize(const ImageU8& img);
/// Inverse of normalize: v * 255, rounded and clamped.
ImageU8 to_u8(const ImageF& img);

template <typename T>
Image<T> crop(const Image<T>& img, int x0, int y0, int cw, int ch);
template <typename T>
Image<T> center_crop(const Image<T>& img, int cw, int ch);
template <typename T>
Image<T> random_crop(const Image<T>& img, int cw, int ch, Rng& rng);

template <typename T>
Image<T> flip_horizontal(const Image<T>& img);
template <typename T>
Image<T> flip_vertical(const Image<T>& img);
/// Draws the horizontal coin, then the vertical coin, each with flip_prob.
template <typename T>
Image<T> random_flip(const Image<T>& img, double flip_prob, Rng& rng);

ImageF adjust_brightness(const ImageF& img, double delta);
ImageF random_brightness(const ImageF& img, double delta_max, Rng& rng);

ImageF augment_train(const ImageU8& img, const AugmentConfig& cfg, Rng& rng);
ImageF augment_eval(const ImageU8& img, const AugmentConfig& cfg);

extern template ImageU8 crop(const ImageU8&, int, int, int, int);
extern template ImageF crop(const ImageF&, int, int, int, int);
extern template ImageU8 center_crop(const ImageU8&, int, int);
extern template ImageF center_crop(const ImageF&, int, int);
extern template ImageU8 random_crop(const ImageU8&, int, int, Rng&);
extern template ImageF random_crop(const ImageF&, int, int, Rng&);
extern template ImageU8 flip_horizontal(const ImageU8&);
extern template ImageF flip_horizontal(const ImageF&);
extern template ImageU8 flip_vertical(const ImageU8&);
extern template ImageF flip_vertical(const ImageF&);
extern template ImageU8 random_flip(const ImageU8&, double, Rng&);
extern template ImageF random_flip(const ImageF&, double, Rng&);

// File I/O (image_io.cpp). Format chosen by extension on write (PNG only)
// and by signature on read (PNG or JPEG).
ImageU8 read_image(const std::string& path);
void write_png(const ImageU8& img, const std::string& path);

} // namespace lesion
