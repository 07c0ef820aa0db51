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

#include "lesion/ensemble.hpp"
#include "lesion/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>

using namespace lesion;

namespace {

const std::string kHeader = "image,MEL,NV,BCC,AK,BKL,DF,VASC,SCC\n";

PredictionSet one(std::string id, Probabilities row)
{
    PredictionSet s;
    s.add(std::move(id), row);
    return s;
}

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode{};
}

} // namespace

TEST_CASE("average")
{
    const PredictionSet a = one("x", {0.8, 0.2, 0, 0, 0, 0, 0, 0});
    const PredictionSet b = one("x", {0.4, 0.6, 0, 0, 0, 0, 0, 0});
    const std::vector<PredictionSet> ab = {a, b};
    const auto m = average(ab);
    CHECK(m.row(0)[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(m.row(0)[1] == doctest::Approx(0.4).epsilon(1e-15));

    const std::vector<PredictionSet> single = {a};
    CHECK(average(single) == a);
    const std::vector<PredictionSet> same = {a, a, a};
    CHECK(average(same) == a);

    const std::vector<PredictionSet> mismatch = {a, one("y", {1, 0, 0, 0, 0, 0, 0, 0})};
    CHECK(code_of([&] { average(mismatch); }) == ErrorCode::IdMismatch);
    CHECK(code_of([&] { average(std::vector<PredictionSet>{}); }) == ErrorCode::Empty);

    PredictionSet dup = a;
    CHECK(code_of([&] { dup.add("x", a.row(0)); }) == ErrorCode::DuplicateId);

    // Output follows the first set's order even when others differ.
    PredictionSet p, q;
    p.add("b", {0, 1, 0, 0, 0, 0, 0, 0});
    p.add("a", {1, 0, 0, 0, 0, 0, 0, 0});
    q.add("a", {0, 0, 1, 0, 0, 0, 0, 0});
    q.add("b", {0, 1, 0, 0, 0, 0, 0, 0});
    const std::vector<PredictionSet> pq = {p, q};
    const auto avg = average(pq);
    CHECK(avg.ids() == std::vector<std::string>{"b", "a"});
    CHECK(avg.row(1)[0] == 0.5);
    CHECK(avg.row(1)[2] == 0.5);
}

TEST_CASE("argmax")
{
    CHECK(argmax({1, 0, 0, 0, 0, 0, 0, 0}) == ClassLabel::MEL);
    CHECK(argmax({0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125}) == ClassLabel::MEL);
    CHECK(argmax({0.1, 0.7, 0.2, 0, 0, 0, 0, 0}) == ClassLabel::NV);
    CHECK(argmax({0, 0, 0, 0, 0, 0, 0.5, 0.5}) == ClassLabel::VASC);
}

TEST_CASE("prediction CSV")
{
    const auto s = parse_predictions(kHeader + "a,0.1,0.7,0.2,0,0,0,0,0\nb,0.125,0.125,0.125,0.125,0.125,0.125,0.125,0.125\n");
    REQUIRE(s.size() == 2);
    CHECK(s.row(0)[1] == 0.7);

    CHECK(code_of([&] { parse_predictions(kHeader + "a,0.5,0,0,0,0,0,0,0\n"); }) == ErrorCode::NotNormalized);
    CHECK(code_of([&] { parse_predictions(kHeader + "a,0.5,0,0\n"); }) == ErrorCode::BadRow);
    CHECK(code_of([&] { parse_predictions("image,NV\n"); }) == ErrorCode::BadHeader);

    std::vector<std::string> warnings;
    const auto r = parse_predictions(kHeader + "a,0.5004,0.5,0,0,0,0,0,0\n", &warnings);
    CHECK(warnings.size() == 1);
    double sum = 0.0;
    for (double v : r.row(0)) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));

    SUBCASE("printed rows sum to exactly one and survive a round trip")
    {
        Rng rng(21);
        PredictionSet set;
        for (int i = 0; i < 200; ++i) {
            Probabilities row{};
            double total = 0.0;
            for (auto& v : row) total += (v = rng.uniform() * rng.uniform());
            for (auto& v : row) v /= total;
            set.add("img" + std::to_string(i), row);
        }
        const std::string text = format_predictions(set);
        const auto back = parse_predictions(text);
        REQUIRE(back.size() == set.size());
        for (std::size_t i = 0; i < set.size(); ++i) {
            long long micro = 0;
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                REQUIRE(std::abs(back.row(i)[c] - set.row(i)[c]) <= 1.5e-6);
                micro += std::llround(back.row(i)[c] * 1e6);
            }
            REQUIRE(micro == 1000000);
        }
        // Idempotent once the values are on the 6-decimal grid.
        CHECK(format_predictions(back) == text);

        const std::string path = "ensemble_roundtrip_test.csv";
        write_predictions(set, path);
        CHECK(read_predictions(path) == back);
        std::remove(path.c_str());
    }
}
