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

#include "lesion/metrics.hpp"
#include "lesion/rng.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace lesion;

namespace {

ConfusionMatrix two_class(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d)
{
    ConfusionMatrix::Counts k{};
    k[0][0] = a;
    k[0][1] = b;
    k[1][0] = c;
    k[1][1] = d;
    return ConfusionMatrix(k);
}

std::vector<ClassLabel> labels(std::initializer_list<int> v)
{
    std::vector<ClassLabel> out;
    for (int i : v) out.push_back(label_from_index(i));
    return out;
}

} // namespace

TEST_CASE("confusion")
{
    const auto t = labels({0, 0, 1});
    const auto p = labels({0, 1, 1});
    const ConfusionMatrix cm = confusion(t, p);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 1) == 1);
    CHECK(cm.total() == 3);

    const auto same = labels({0, 3, 3, 7, 5});
    const ConfusionMatrix diag = confusion(same, same);
    CHECK(diag.trace() == diag.total());
    CHECK(diag.support(3) == 2);

    CHECK_THROWS_AS(confusion(t, labels({0})), Error);
    CHECK_THROWS_AS(confusion(std::vector<ClassLabel>{}, std::vector<ClassLabel>{}), Error);
}

TEST_CASE("scalar metrics on [[8,2],[1,9]]")
{
    const ConfusionMatrix cm = two_class(8, 2, 1, 9);
    CHECK(accuracy(cm) == doctest::Approx(0.85).epsilon(1e-15));
    const auto p = precision_per_class(cm);
    const auto r = recall_per_class(cm);
    const auto f = f1_per_class(cm);
    CHECK(p.values[0] == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
    CHECK(p.values[1] == doctest::Approx(9.0 / 11.0).epsilon(1e-15));
    CHECK(r.values[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(f.values[0] == doctest::Approx(0.842105).epsilon(1e-6));
    CHECK(p.undefined[2]);
    CHECK(p.values[2] == 0.0);
    CHECK(r.undefined[2]);

    const auto rep = report(cm);
    CHECK(rep.macro_precision == doctest::Approx((8.0 / 9.0 + 9.0 / 11.0) / 2).epsilon(1e-15));
    CHECK(rep.macro_precision == doctest::Approx(0.853535).epsilon(1e-6));
    CHECK(rep.micro_precision == 0.85);
    CHECK(rep.micro_recall == 0.85);
    CHECK(rep.accuracy == 0.85);
    CHECK(rep.precision.values == p.values);
    CHECK(rep.f1.values == f.values);
}

TEST_CASE("degenerate matrices")
{
    const ConfusionMatrix diag = two_class(4, 0, 0, 6);
    CHECK(accuracy(diag) == 1.0);
    CHECK(micro_average(diag, MicroMetric::F1) == 1.0);
    const auto rep = report(diag);
    CHECK(rep.precision.values[0] == 1.0);
    CHECK(rep.recall.values[1] == 1.0);
    CHECK(rep.macro_f1 == 1.0);

    const ConfusionMatrix off = two_class(0, 3, 5, 0);
    CHECK(accuracy(off) == 0.0);
    const auto f = f1_per_class(off);
    CHECK(f.values[0] == 0.0);
    CHECK(f.values[1] == 0.0);

    CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), Error);
}

TEST_CASE("macro average")
{
    std::array<double, kNumClasses> v{};
    std::array<std::uint64_t, kNumClasses> s{};
    v.fill(0.4);
    s.fill(3);
    CHECK(macro_average(v, s) == doctest::Approx(0.4).epsilon(1e-15));
    v = {1.0, 0.5, 0, 0, 0, 0, 0, 0};
    s = {2, 7, 0, 0, 0, 0, 0, 0};
    CHECK(macro_average(v, s) == 0.75);
}

TEST_CASE("micro equals accuracy on random matrices")
{
    Rng rng(17);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<ClassLabel> yt, yp;
        for (std::size_t i = 0; i < n; ++i) {
            yt.push_back(label_from_index(static_cast<int>(rng.below(kNumClasses))));
            yp.push_back(label_from_index(static_cast<int>(rng.below(kNumClasses))));
        }
        const auto cm = confusion(yt, yp);
        const double acc = accuracy(cm);
        REQUIRE(micro_average(cm, MicroMetric::Precision) == acc);
        REQUIRE(micro_average(cm, MicroMetric::Recall) == acc);
        REQUIRE(micro_average(cm, MicroMetric::F1) == acc);
    }
}

TEST_CASE("renderers")
{
    const auto rep = report(two_class(8, 2, 1, 9));
    const std::string text = render_report_text(rep);
    CHECK(text.find("macro avg") != std::string::npos);
    CHECK(text.find("micro avg") != std::string::npos);
    CHECK(text.find("accuracy") != std::string::npos);
    CHECK(text.find('*') != std::string::npos);

    const auto j = nlohmann::json::parse(render_report_json(rep));
    CHECK(j.at("accuracy").get<double>() == rep.accuracy);
    CHECK(j.at("macro_avg").at("precision").get<double>() == rep.macro_precision);
    CHECK(j.at("classes").at(0).at("class") == "MEL");
    CHECK(j.at("classes").at(0).at("recall").get<double>() == rep.recall.values[0]);

    const std::string csv = render_confusion_csv(two_class(8, 2, 1, 9));
    CHECK(csv.rfind("true\\predicted,MEL,NV,BCC,AK,BKL,DF,VASC,SCC\n", 0) == 0);
    CHECK(csv.find("MEL,8,2,0,0,0,0,0,0\n") != std::string::npos);
}
