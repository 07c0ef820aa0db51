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
#include "lesion/imaging.hpp"
#include "cli_harness.hpp"

#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>

using namespace lesion;
using namespace lesion::testing;

namespace {

const std::string kHeader = "image,MEL,NV,BCC,AK,BKL,DF,VASC,SCC\n";

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(scratch_dir(name)) {}
    ~Scratch() { fs::remove_all(dir); }
    std::string q(const std::string& rel) const { return quote((dir / rel).string()); }
};

} // namespace

TEST_CASE("usage errors exit 2")
{
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("split") == 2);
    CHECK(run_cli("--help") == 0);
}

TEST_CASE("preprocess")
{
    Scratch s("cli_pre");
    fs::create_directories(s.dir / "empty");
    CHECK(run_cli("preprocess --in " + s.q("empty") + " --out " + s.q("out_empty")) == 0);
    CHECK(slurp(s.dir / "out_empty" / "processed.csv") == "image,file\n");
    CHECK(fs::exists(s.dir / "out_empty" / "config.json"));

    CHECK(run_cli("preprocess --in " + s.q("nope") + " --out " + s.q("out_nope")) == 2);

    fs::create_directories(s.dir / "one");
    Rng rng(1);
    ImageU8 img(300, 240);
    for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng.below(256));
    write_png(img, (s.dir / "one" / "lesion_a.png").string());
    CHECK(run_cli("preprocess --in " + s.q("one") + " --out " + s.q("out_one")) == 0);
    const ImageU8 out = read_image((s.dir / "out_one" / "lesion_a.png").string());
    CHECK(out.width() == 224);
    CHECK(out.height() == 224);
    CHECK(out == to_u8(augment_eval(img, AugmentConfig{})));

    CHECK(run_cli("preprocess --in " + s.q("one") + " --out " + s.q("out_two")) == 0);
    CHECK(slurp(s.dir / "out_one" / "lesion_a.png") == slurp(s.dir / "out_two" / "lesion_a.png"));

    spit(s.dir / "one" / "broken.jpg", "not really a jpeg");
    CHECK(run_cli("preprocess --in " + s.q("one") + " --out " + s.q("out_partial")) == 1);
    CHECK(slurp(s.dir / "out_partial" / "processed.csv") == "image,file\nlesion_a,lesion_a.png\n");
}

TEST_CASE("split")
{
    Scratch s("cli_split");
    std::string csv = kHeader;
    for (int i = 0; i < 20; ++i) csv += "m" + std::to_string(i) + ",1,0,0,0,0,0,0,0\n";
    csv += "v0,0,0,0,0,0,0,1,0\nv1,0,0,0,0,0,0,1,0\n";
    spit(s.dir / "truth.csv", csv);

    CHECK(run_cli("split --manifest " + s.q("truth.csv") + " --seed 3 --out " + s.q("a")) == 0);
    CHECK(run_cli("split --manifest " + s.q("truth.csv") + " --seed 3 --out " + s.q("b")) == 0);
    CHECK(slurp(s.dir / "a" / "splits.csv") == slurp(s.dir / "b" / "splits.csv"));
    CHECK(slurp(s.dir / "a" / "splits.csv").rfind("image,subset\n", 0) == 0);

    const std::string log = (s.dir / "stderr.txt").string();
    CHECK(run_cli("split --manifest " + s.q("truth.csv") + " --val-frac 0.999 --out " + s.q("c"), log) == 0);
    const std::string splits = slurp(s.dir / "c" / "splits.csv");
    CHECK(splits.find("v0,val") != std::string::npos);
    CHECK(splits.find("v1,val") != std::string::npos);
    CHECK(slurp(log).find("VASC") != std::string::npos);

    CHECK(run_cli("split --manifest " + s.q("truth.csv") + " --limit 11 --out " + s.q("d")) == 0);
    const std::string limited = slurp(s.dir / "d" / "splits.csv");
    CHECK(std::count(limited.begin(), limited.end(), '\n') == 12);

    spit(s.dir / "bad.csv", "image,MEL\nx,1\n");
    CHECK(run_cli("split --manifest " + s.q("bad.csv") + " --out " + s.q("e")) == 2);
}

TEST_CASE("train, eval and ensemble")
{
    Scratch s("cli_train");
    SyntheticSpec spec;
    spec.size = 8;
    spec.counts = {12, 12, 12, 0, 0, 0, 0, 0};
    spec.amplitude = 120.0;
    spec.noise = 0.0;
    write_dataset(s.dir / "data", spec);
    // Training on every sample: an all-train split file.
    std::string all_train = "image,subset\n";
    std::string truth = slurp(s.dir / "data" / "truth.csv");
    for (std::size_t pos = truth.find('\n') + 1; pos < truth.size(); pos = truth.find('\n', pos) + 1)
        all_train += truth.substr(pos, truth.find(',', pos) - pos) + ",train\n";
    spit(s.dir / "all_train.csv", all_train);
    CHECK(run_cli("split --manifest " + s.q("data/truth.csv") + " --seed 1 --out " + s.q("split")) == 0);

    spit(s.dir / "config.json", R"({"resize_w": 8, "resize_h": 8, "center_crop": 8, "random_crop": 8,
        "flip_prob": 0.0, "brightness_delta": 0.0, "color_constancy": false, "max_epochs": 40, "batch_size": 6,
        "lr": 0.01, "weight_mode": "uniform"})");
    const std::string data = "--manifest " + s.q("data/truth.csv") + " --images " + s.q("data/images");

    SUBCASE("invalid config key")
    {
        spit(s.dir / "bad.json", R"({"learning_rate": 0.1})");
        const std::string log = (s.dir / "bad_stderr.txt").string();
        CHECK(run_cli("train " + data + " --splits " + s.q("split/splits.csv") + " --config " + s.q("bad.json") +
                          " --out " + s.q("bad"),
                      log) == 2);
        CHECK(slurp(log).find("learning_rate") != std::string::npos);
        CHECK(run_cli("train " + data + " --splits " + s.q("split/splits.csv") + " --set nope=1 --out " + s.q("bad2")) == 2);
    }

    SUBCASE("memorizing the training set")
    {
        const std::string train = "train " + data + " --config " + s.q("config.json") + " --seed 5 --splits ";
        REQUIRE(run_cli(train + s.q("split/splits.csv") + " --out " + s.q("t1")) == 0);
        REQUIRE(run_cli(train + s.q("split/splits.csv") + " --out " + s.q("t2")) == 0);
        CHECK(fs::exists(s.dir / "t1" / "checkpoint.lfckpt"));
        CHECK(slurp(s.dir / "t1" / "train_log.csv") == slurp(s.dir / "t2" / "train_log.csv"));
        CHECK(slurp(s.dir / "t1" / "checkpoint.lfckpt") == slurp(s.dir / "t2" / "checkpoint.lfckpt"));
        const auto echoed = nlohmann::json::parse(slurp(s.dir / "t1" / "config.json"));
        CHECK(echoed.at("seed") == 5);
        CHECK(echoed.at("max_epochs") == 40);

        // All-train split: no validation rows, which training rejects.
        CHECK(run_cli(train + s.q("all_train.csv") + " --out " + s.q("t3")) == 2);

        REQUIRE(run_cli("eval " + data + " --checkpoint " + s.q("t1/checkpoint.lfckpt") + " --splits " +
                        s.q("split/splits.csv") + " --subset train --out " + s.q("e1")) == 0);
        const auto report = nlohmann::json::parse(slurp(s.dir / "e1" / "report.json"));
        CHECK(report.at("accuracy").get<double>() == 1.0);

        const auto preds = read_predictions((s.dir / "e1" / "predictions.csv").string());
        for (std::size_t i = 0; i < preds.size(); ++i) {
            double sum = 0;
            for (double v : preds.row(i)) sum += v;
            CHECK(std::abs(sum - 1.0) <= 1e-6);
        }
        CHECK(slurp(s.dir / "e1" / "confusion.csv").rfind("true\\predicted,", 0) == 0);
        CHECK(fs::exists(s.dir / "e1" / "report.txt"));

        // Ensemble of a file with itself reproduces it.
        const std::string p = s.q("e1/predictions.csv");
        CHECK(run_cli("ensemble --pred " + p + " " + p + " --truth " + s.q("data/truth.csv") + " --out " + s.q("ens")) == 0);
        CHECK(slurp(s.dir / "ens" / "ensemble_predictions.csv") == slurp(s.dir / "e1" / "predictions.csv"));
        CHECK(slurp(s.dir / "ens" / "report.json") == slurp(s.dir / "e1" / "report.json"));
    }
}

TEST_CASE("ensemble")
{
    Scratch s("cli_ens");
    spit(s.dir / "a.csv", kHeader + "x,0.8,0.2,0,0,0,0,0,0\ny,0,1,0,0,0,0,0,0\n");
    spit(s.dir / "b.csv", kHeader + "x,0.4,0.6,0,0,0,0,0,0\ny,0,0,1,0,0,0,0,0\n");
    spit(s.dir / "c.csv", kHeader + "x,0.4,0.6,0,0,0,0,0,0\nz,0,0,1,0,0,0,0,0\n");
    spit(s.dir / "truth.csv", kHeader + "x,1,0,0,0,0,0,0,0\ny,0,1,0,0,0,0,0,0\n");

    CHECK(run_cli("ensemble --pred " + s.q("a.csv") + " " + s.q("b.csv") + " --truth " + s.q("truth.csv") + " --out " +
                  s.q("ab")) == 0);
    CHECK(slurp(s.dir / "ab" / "ensemble_predictions.csv") ==
          kHeader + "x,0.600000,0.400000,0.000000,0.000000,0.000000,0.000000,0.000000,0.000000\n"
                    "y,0.000000,0.500000,0.500000,0.000000,0.000000,0.000000,0.000000,0.000000\n");
    const auto rep = nlohmann::json::parse(slurp(s.dir / "ab" / "report.json"));
    CHECK(rep.at("accuracy").get<double>() == 1.0);

    const std::string log = (s.dir / "stderr.txt").string();
    CHECK(run_cli("ensemble --pred " + s.q("a.csv") + " " + s.q("c.csv") + " --out " + s.q("ac"), log) == 2);
    CHECK(slurp(log).find("IdMismatch") != std::string::npos);
    CHECK(run_cli("ensemble --pred " + s.q("a.csv") + " --out " + s.q("single")) == 2);
}
