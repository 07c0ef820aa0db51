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
#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

using namespace lesion;

namespace {

ImageU8 random_image(int w, int h, Rng& rng)
{
    ImageU8 img(w, h);
    for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

ImageU8 numbered_image(int w, int h)
{
    ImageU8 img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(y * w + x + c);
    return img;
}

// Direct evaluation of the half-pixel bilinear formula.
double bilinear_oracle(const ImageU8& img, int ow, int oh, int x, int y, int c)
{
    const double sx = (x + 0.5) * img.width() / ow - 0.5;
    const double sy = (y + 0.5) * img.height() / oh - 0.5;
    auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi); };
    const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
    const double fx = sx - x0, fy = sy - y0;
    auto px = [&](int xx, int yy) {
        return static_cast<double>(img.at(clampi(xx, img.width() - 1), clampi(yy, img.height() - 1), c));
    };
    return (1 - fy) * ((1 - fx) * px(x0, y0) + fx * px(x0 + 1, y0)) +
           fy * ((1 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1));
}

} // namespace

TEST_CASE("resize")
{
    Rng rng(3);
    const ImageU8 img = random_image(7, 5, rng);
    CHECK(resize(img, 7, 5) == img);

    ImageU8 two(2, 2);
    for (int c = 0; c < 3; ++c) {
        two.at(0, 0, c) = 0;
        two.at(1, 0, c) = 0;
        two.at(0, 1, c) = 255;
        two.at(1, 1, c) = 255;
    }
    const ImageU8 one = resize(two, 1, 1);
    for (int c = 0; c < 3; ++c) CHECK(one.at(0, 0, c) == 128);

    const ImageU8 big = resize(img, 600, 450);
    CHECK(big.width() == 600);
    CHECK(big.height() == 450);

    // Against the formula, rounding half away from zero.
    const ImageU8 out = resize(img, 11, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 11; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(out.at(x, y, c) == static_cast<int>(std::round(bilinear_oracle(img, 11, 3, x, y, c))));

    CHECK_THROWS_AS(resize(img, 0, 3), Error);
}

TEST_CASE("white patch retinex")
{
    ImageU8 sat(3, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x)
            for (int c = 0; c < 3; ++c) sat.at(x, y, c) = static_cast<std::uint8_t>(x == 2 && y == 1 ? 255 : 40 * x + c);
    CHECK(white_patch_retinex(sat) == sat);

    const ImageU8 gray(4, 4, 128);
    CHECK(white_patch_retinex(gray) == ImageU8(4, 4, 255));

    const ImageU8 black(4, 4, 0);
    CHECK(white_patch_retinex(black) == black);

    SUBCASE("per-channel gain, round half away from zero")
    {
        ImageU8 img(2, 1);
        img.at(0, 0, 0) = 100; img.at(1, 0, 0) = 200;  // gain 1.275
        img.at(0, 0, 1) = 1;   img.at(1, 0, 1) = 2;    // gain 127.5
        img.at(0, 0, 2) = 0;   img.at(1, 0, 2) = 0;    // untouched
        const ImageU8 out = white_patch_retinex(img);
        CHECK(out.at(0, 0, 0) == 128); // 127.5
        CHECK(out.at(1, 0, 0) == 255);
        CHECK(out.at(0, 0, 1) == 128); // 127.5
        CHECK(out.at(1, 0, 1) == 255);
        CHECK(out.at(0, 0, 2) == 0);
    }

    SUBCASE("idempotent, monotone and saturating on random images")
    {
        Rng rng(11);
        for (int trial = 0; trial < 100; ++trial) {
            const ImageU8 img = random_image(1 + static_cast<int>(rng.below(9)), 1 + static_cast<int>(rng.below(9)), rng);
            const ImageU8 once = white_patch_retinex(img);
            REQUIRE(white_patch_retinex(once) == once);
            for (int c = 0; c < 3; ++c) {
                int maxv = 0, maxo = 0;
                for (std::size_t i = static_cast<std::size_t>(c); i < img.pixels().size(); i += 3) {
                    maxv = std::max<int>(maxv, img.pixels()[i]);
                    maxo = std::max<int>(maxo, once.pixels()[i]);
                    for (std::size_t j = static_cast<std::size_t>(c); j < img.pixels().size(); j += 3) {
                        if (img.pixels()[i] <= img.pixels()[j]) REQUIRE(once.pixels()[i] <= once.pixels()[j]);
                    }
                }
                if (maxv > 0) REQUIRE(maxo == 255);
            }
        }
    }
}

TEST_CASE("normalize and to_u8")
{
    ImageU8 img(3, 1);
    img.at(0, 0, 0) = 0;
    img.at(1, 0, 0) = 255;
    img.at(2, 0, 0) = 128;
    const ImageF f = normalize(img);
    CHECK(f.at(0, 0, 0) == 0.0);
    CHECK(f.at(1, 0, 0) == 1.0);
    CHECK(f.at(2, 0, 0) == doctest::Approx(0.501961).epsilon(1e-6));

    Rng rng(5);
    const ImageU8 r = random_image(9, 4, rng);
    CHECK(to_u8(normalize(r)) == r);
}

TEST_CASE("center crop")
{
    const ImageU8 img = numbered_image(4, 4);
    CHECK(center_crop(img, 4, 4) == img);
    const ImageU8 c = center_crop(img, 2, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
            for (int ch = 0; ch < 3; ++ch) CHECK(c.at(x, y, ch) == img.at(x + 1, y + 1, ch));

    ImageU8 big(600, 450);
    big.at(140, 65, 0) = 7;
    big.at(139, 65, 0) = 9;
    const ImageU8 cc = center_crop(big, 320, 320);
    CHECK(cc.width() == 320);
    CHECK(cc.at(0, 0, 0) == 7);
    CHECK(cc == crop(big, 140, 65, 320, 320));

    try {
        (void)center_crop(img, 5, 2);
        FAIL("expected CropTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CropTooLarge);
    }
}

TEST_CASE("random crop")
{
    const ImageU8 img = numbered_image(4, 4);
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        CHECK(random_crop(img, 4, 4, rng) == img);
    }

    Rng a(42), b(42);
    CHECK(random_crop(img, 2, 3, a) == random_crop(img, 2, 3, b));

    // Every output is one of the 9 windows and each window occurs.
    std::set<std::pair<int, int>> seen;
    for (std::uint64_t s = 0; s < 500; ++s) {
        Rng rng(s);
        const ImageU8 out = random_crop(img, 2, 2, rng);
        bool matched = false;
        for (int y0 = 0; y0 <= 2 && !matched; ++y0)
            for (int x0 = 0; x0 <= 2 && !matched; ++x0)
                if (out == crop(img, x0, y0, 2, 2)) {
                    seen.insert({x0, y0});
                    matched = true;
                }
        REQUIRE(matched);
    }
    CHECK(seen.size() == 9);

    Rng rng(1);
    CHECK_THROWS_AS(random_crop(img, 2, 5, rng), Error);
}

TEST_CASE("flips")
{
    ImageU8 ab(2, 1);
    for (int c = 0; c < 3; ++c) {
        ab.at(0, 0, c) = 10;
        ab.at(1, 0, c) = 20;
    }
    const ImageU8 ba = flip_horizontal(ab);
    CHECK(ba.at(0, 0, 0) == 20);
    CHECK(ba.at(1, 0, 0) == 10);

    Rng rng(9);
    const ImageU8 img = random_image(5, 3, rng);
    CHECK(flip_horizontal(flip_horizontal(img)) == img);
    CHECK(flip_vertical(flip_vertical(img)) == img);
    CHECK(flip_horizontal(flip_vertical(img)) == flip_vertical(flip_horizontal(img)));
    for (std::uint64_t s = 0; s < 10; ++s) {
        Rng r(s);
        CHECK(random_flip(img, 0.0, r) == img);
        CHECK(random_flip(random_flip(img, 1.0, r), 1.0, r) == img);
    }
    Rng r1(1);
    CHECK(random_flip(img, 1.0, r1) == flip_vertical(flip_horizontal(img)));
}

TEST_CASE("brightness")
{
    Rng rng(4);
    const ImageF img = normalize(random_image(6, 6, rng));
    for (std::uint64_t s = 0; s < 10; ++s) {
        Rng r(s);
        CHECK(random_brightness(img, 0.0, r) == img);
    }
    const ImageF half(3, 3, 0.5);
    CHECK(adjust_brightness(half, 0.6) == ImageF(3, 3, 1.0));
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng r(s);
        const ImageF out = random_brightness(img, 0.6, r);
        for (double v : out.pixels()) REQUIRE((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("augment pipelines")
{
    Rng rng(8);
    const ImageU8 img = random_image(64, 48, rng);
    AugmentConfig cfg;

    Rng r1(7), r2(7);
    const ImageF t1 = augment_train(img, cfg, r1);
    CHECK(t1.width() == 224);
    CHECK(t1.height() == 224);
    CHECK(t1 == augment_train(img, cfg, r2));

    const ImageF e = augment_eval(img, cfg);
    CHECK(e.width() == 224);
    CHECK(e == augment_eval(img, cfg));

    AugmentConfig fixed = cfg;
    fixed.brightness_delta = 0.0;
    fixed.flip_prob = 0.0;
    fixed.random_crop = fixed.center_crop;
    Rng s1(1), s2(999);
    CHECK(augment_train(img, fixed, s1) == augment_train(img, fixed, s2));

    AugmentConfig plain = cfg;
    plain.apply_color_constancy = false;
    CHECK(augment_eval(ImageU8(30, 30, 255), plain) == ImageF(224, 224, 1.0));

    AugmentConfig bad = cfg;
    bad.random_crop = 400;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("png round trip")
{
    Rng rng(2);
    const ImageU8 img = random_image(13, 7, rng);
    const std::string path = "imaging_roundtrip_test.png";
    write_png(img, path);
    CHECK(read_image(path) == img);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_image("does_not_exist.png"), Error);
}

TEST_CASE("jpeg decode")
{
    const ImageU8 img = read_image(LESION_TEST_DATA "/solid_16x8.jpg");
    CHECK(img.width() == 16);
    CHECK(img.height() == 8);
    const int expect[3] = {200, 100, 50};
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) REQUIRE(std::abs(img.at(x, y, c) - expect[c]) <= 3);

    const std::string bogus = "not_an_image_test.jpg";
    std::FILE* f = std::fopen(bogus.c_str(), "wb");
    std::fputs("\xFF\xD8garbage", f);
    std::fclose(f);
    try {
        (void)read_image(bogus);
        FAIL("expected ImageDecode");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ImageDecode);
    }
    std::remove(bogus.c_str());
}
