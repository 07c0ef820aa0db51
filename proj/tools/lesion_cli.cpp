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

// lesion-cli: preprocess, split, train, eval and ensemble subcommands on top
// of the lesionkit C API.
//
// Exit codes: 0 success, 1 partial failure (some items skipped),
// 2 usage, configuration or data error.

#include "lesion/lesion.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitError = 2;

/// A failed C API call; carries the library's message.
struct ApiFailure {
    std::string what;
};

void check(int rc, const std::string& context)
{
    if (rc != LESION_OK) {
        throw ApiFailure{context + ": " + lesion_last_error()};
    }
}

void log(const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); }

template <typename T, int (*Destroy)(T)>
struct Owned {
    T h = nullptr;
    Owned() = default;
    Owned(const Owned&) = delete;
    Owned& operator=(const Owned&) = delete;
    Owned(Owned&& o) noexcept : h(o.h) { o.h = nullptr; }
    Owned& operator=(Owned&& o) noexcept
    {
        std::swap(h, o.h);
        return *this;
    }
    ~Owned() { Destroy(h); }
    T* out() { return &h; }
    T get() const { return h; }
};

using Config = Owned<lesion_config_t, lesion_config_destroy>;
using Manifest = Owned<lesion_manifest_t, lesion_manifest_destroy>;
using Split = Owned<lesion_split_t, lesion_split_destroy>;
using Checkpoint = Owned<lesion_checkpoint_t, lesion_checkpoint_destroy>;
using Predictions = Owned<lesion_predictions_t, lesion_predictions_destroy>;
using Report = Owned<lesion_report_t, lesion_report_destroy>;

template <typename F>
std::string fetch_text(F&& call, const std::string& context)
{
    std::size_t len = 0;
    call(nullptr, &len);
    std::string buf(len, '\0');
    check(call(buf.data(), &len), context);
    buf.resize(len - 1);
    return buf;
}

struct CommonOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> sets;
    long long seed = -1;
    long long limit = -1;
};

void add_common(CLI::App* cmd, CommonOptions& opt)
{
    cmd->add_option("--config", opt.config_path, "JSON config file (flat keys)")->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", opt.seed, "Master seed (overrides the config file)");
    cmd->add_option("--limit", opt.limit, "Stratified subsample of at most N rows (smoke runs)");
    cmd->add_option("--set", opt.sets, "Override one config key, KEY=VALUE (repeatable)");
}

/// Builds the effective config (defaults < file < --set < dedicated flags),
/// validates it and echoes it to <out>/config.json.
Config effective_config(const CommonOptions& opt, const std::vector<std::pair<std::string, std::string>>& flags)
{
    Config cfg;
    check(lesion_config_create(cfg.out()), "config");
    if (!opt.config_path.empty()) check(lesion_config_merge_file(cfg.get(), opt.config_path.c_str()), opt.config_path);
    for (const auto& kv : opt.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ApiFailure{"--set expects KEY=VALUE, got '" + kv + "'"};
        check(lesion_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()), "--set " + kv);
    }
    if (opt.seed >= 0) check(lesion_config_set(cfg.get(), "seed", std::to_string(opt.seed).c_str()), "--seed");
    if (opt.limit >= 0) check(lesion_config_set(cfg.get(), "limit", std::to_string(opt.limit).c_str()), "--limit");
    for (const auto& [key, value] : flags) check(lesion_config_set(cfg.get(), key.c_str(), value.c_str()), key);
    check(lesion_config_validate(cfg.get()), "config");

    fs::create_directories(opt.out_dir);
    const auto json = fetch_text([&](char* b, std::size_t* n) { return lesion_config_to_json(cfg.get(), b, n); }, "config");
    const auto path = (fs::path(opt.out_dir) / "config.json").string();
    std::ofstream(path, std::ios::binary | std::ios::trunc) << json;
    return cfg;
}

std::string out_path(const CommonOptions& opt, const char* name) { return (fs::path(opt.out_dir) / name).string(); }

std::uint64_t config_seed(const Config& cfg)
{
    std::uint64_t seed = 0;
    check(lesion_config_seed(cfg.get(), &seed), "config");
    return seed;
}

std::size_t config_limit(const Config& cfg)
{
    std::size_t cap = 0;
    check(lesion_config_limit(cfg.get(), &cap), "config");
    return cap;
}

std::size_t manifest_size(lesion_manifest_t m)
{
    std::size_t n = 0;
    check(lesion_manifest_size(m, &n), "manifest");
    return n;
}

/// Replaces `m` by a stratified subsample of at most `cap` rows (0 = no cap).
void limit_manifest(Manifest& m, std::size_t cap, std::uint64_t seed)
{
    if (cap == 0 || manifest_size(m.get()) <= cap) return;
    Manifest limited;
    check(lesion_manifest_limit(m.get(), cap, seed, limited.out()), "limit");
    m = std::move(limited);
}

bool is_image_file(const fs::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

int cmd_preprocess(const CommonOptions& opt, const std::string& in_dir)
{
    std::error_code ec;
    if (!fs::is_directory(in_dir, ec)) {
        log("error: input directory " + in_dir + " is not readable");
        return kExitError;
    }
    Config cfg = effective_config(opt, {});

    std::vector<fs::path> inputs;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) inputs.push_back(entry.path());
    }
    std::sort(inputs.begin(), inputs.end());

    std::string manifest = "image,file\n";
    int failures = 0;
    for (const auto& in : inputs) {
        const std::string name = in.stem().string() + ".png";
        const int rc = lesion_preprocess_image(cfg.get(), in.string().c_str(), out_path(opt, name.c_str()).c_str());
        if (rc != LESION_OK) {
            log("error: " + in.string() + ": " + lesion_last_error());
            ++failures;
            continue;
        }
        manifest += in.stem().string() + "," + name + "\n";
    }
    std::ofstream(out_path(opt, "processed.csv"), std::ios::binary | std::ios::trunc) << manifest;
    log("preprocessed " + std::to_string(inputs.size() - static_cast<std::size_t>(failures)) + " of " +
        std::to_string(inputs.size()) + " images");
    return failures ? kExitPartial : kExitOk;
}

int cmd_split(const CommonOptions& opt, const std::string& manifest_path, double val_frac)
{
    std::vector<std::pair<std::string, std::string>> flags;
    if (val_frac >= 0) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", val_frac);
        flags.emplace_back("val_frac", buf);
    }
    Config cfg = effective_config(opt, flags);

    Manifest manifest;
    check(lesion_manifest_load(manifest.out(), manifest_path.c_str(), nullptr), manifest_path);
    limit_manifest(manifest, config_limit(cfg), config_seed(cfg));
    double frac = 0.0;
    check(lesion_config_val_frac(cfg.get(), &frac), "config");

    Split split;
    check(lesion_split_create(manifest.get(), frac, config_seed(cfg), split.out()), "split");
    check(lesion_split_write(split.get(), manifest.get(), out_path(opt, "splits.csv").c_str()), "splits.csv");
    const auto summary = fetch_text([&](char* b, std::size_t* n) { return lesion_split_summary(split.get(), b, n); }, "summary");
    std::ofstream(out_path(opt, "split_summary.txt"), std::ios::binary | std::ios::trunc) << summary;
    std::fputs(summary.c_str(), stderr);
    return kExitOk;
}

int cmd_train(const CommonOptions& opt, const std::string& manifest_path, const std::string& splits_path,
              const std::string& images_dir)
{
    Config cfg = effective_config(opt, {});
    Manifest manifest;
    check(lesion_manifest_load(manifest.out(), manifest_path.c_str(), images_dir.c_str()), manifest_path);
    Split split;
    check(lesion_split_load(manifest.get(), splits_path.c_str(), split.out()), splits_path);
    Manifest train, val;
    check(lesion_split_subset(split.get(), 0, train.out()), "split");
    check(lesion_split_subset(split.get(), 1, val.out()), "split");
    if (const std::size_t cap = config_limit(cfg); cap > 0) {
        // Keep the train/val proportion of the split file.
        const std::size_t nt = manifest_size(train.get()), nv = manifest_size(val.get());
        if (nt + nv > cap) {
            const std::size_t ct = std::max<std::size_t>(1, cap * nt / (nt + nv));
            limit_manifest(train, ct, config_seed(cfg));
            limit_manifest(val, std::max<std::size_t>(1, cap - std::min(cap, ct)), config_seed(cfg));
        }
    }

    Checkpoint ckpt;
    check(lesion_train(cfg.get(), train.get(), val.get(), ckpt.out(), out_path(opt, "train_log.csv").c_str()), "train");
    check(lesion_checkpoint_save(ckpt.get(), out_path(opt, "checkpoint.lfckpt").c_str()), "checkpoint");
    int epoch = 0;
    double metric = 0.0;
    check(lesion_checkpoint_info(ckpt.get(), &epoch, &metric), "checkpoint");
    log("best checkpoint: epoch " + std::to_string(epoch) + ", monitored metric " + std::to_string(metric));
    return kExitOk;
}

void write_report(const CommonOptions& opt, lesion_predictions_t preds, lesion_manifest_t truth)
{
    Report rep;
    check(lesion_report_create(preds, truth, rep.out()), "report");
    check(lesion_report_write(rep.get(), out_path(opt, "report.json").c_str(), out_path(opt, "report.txt").c_str(),
                              out_path(opt, "confusion.csv").c_str()),
          "report");
    const auto text = fetch_text([&](char* b, std::size_t* n) { return lesion_report_text(rep.get(), b, n); }, "report");
    std::fputs(text.c_str(), stderr);
}

int cmd_eval(const CommonOptions& opt, const std::string& ckpt_path, const std::string& manifest_path,
             const std::string& images_dir, const std::string& splits_path, const std::string& subset)
{
    Config cfg = effective_config(opt, {});
    Checkpoint ckpt;
    check(lesion_checkpoint_load(ckpt_path.c_str(), ckpt.out()), ckpt_path);
    Manifest manifest;
    check(lesion_manifest_load(manifest.out(), manifest_path.c_str(), images_dir.c_str()), manifest_path);
    if (!splits_path.empty() && subset != "all") {
        Split split;
        check(lesion_split_load(manifest.get(), splits_path.c_str(), split.out()), splits_path);
        Manifest part;
        check(lesion_split_subset(split.get(), subset == "train" ? 0 : 1, part.out()), "split");
        manifest = std::move(part);
    }
    limit_manifest(manifest, config_limit(cfg), config_seed(cfg));
    Predictions preds;
    check(lesion_evaluate(ckpt.get(), manifest.get(), preds.out()), "evaluate");
    check(lesion_predictions_write(preds.get(), out_path(opt, "predictions.csv").c_str()), "predictions");
    write_report(opt, preds.get(), manifest.get());
    return kExitOk;
}

int cmd_ensemble(const CommonOptions& opt, const std::vector<std::string>& pred_paths, const std::string& truth_path)
{
    effective_config(opt, {});
    std::vector<Predictions> sets(pred_paths.size());
    std::vector<lesion_predictions_t> handles;
    for (std::size_t i = 0; i < pred_paths.size(); ++i) {
        check(lesion_predictions_read(pred_paths[i].c_str(), sets[i].out()), pred_paths[i]);
        handles.push_back(sets[i].get());
    }
    Predictions avg;
    check(lesion_predictions_average(handles.data(), handles.size(), avg.out()), "ensemble");
    check(lesion_predictions_write(avg.get(), out_path(opt, "ensemble_predictions.csv").c_str()), "predictions");
    if (!truth_path.empty()) {
        Manifest truth;
        check(lesion_manifest_load(truth.out(), truth_path.c_str(), nullptr), truth_path);
        write_report(opt, avg.get(), truth.get());
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Skin-lesion classification pipeline: preprocess, split, train, eval, ensemble"};
    app.require_subcommand(1);

    CommonOptions opt;

    std::string in_dir;
    auto* preprocess = app.add_subcommand("preprocess", "Deterministic evaluation preprocessing of an image directory");
    add_common(preprocess, opt);
    preprocess->add_option("--in", in_dir, "Directory of PNG/JPEG images")->required();

    std::string manifest_path;
    double val_frac = -1.0;
    auto* split = app.add_subcommand("split", "Stratified train/validation split of a ground-truth CSV");
    add_common(split, opt);
    split->add_option("--manifest", manifest_path, "Ground-truth CSV")->required()->check(CLI::ExistingFile);
    split->add_option("--val-frac", val_frac, "Validation fraction (default 0.2)");

    std::string splits_path, images_dir;
    auto* train = app.add_subcommand("train", "Train the configured CNN and keep the best checkpoint");
    add_common(train, opt);
    train->add_option("--manifest", manifest_path, "Ground-truth CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--splits", splits_path, "splits.csv from the split command")->required()->check(CLI::ExistingFile);
    train->add_option("--images", images_dir, "Image directory")->required();

    std::string ckpt_path, subset = "val";
    auto* eval = app.add_subcommand("eval", "Predict with a checkpoint and write the classification report");
    add_common(eval, opt);
    eval->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--manifest", manifest_path, "Ground-truth CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--images", images_dir, "Image directory")->required();
    eval->add_option("--splits", splits_path, "splits.csv; restricts evaluation to --subset")->check(CLI::ExistingFile);
    eval->add_option("--subset", subset, "train, val or all")->check(CLI::IsMember({"train", "val", "all"}))->capture_default_str();

    std::vector<std::string> pred_paths;
    std::string truth_path;
    auto* ensemble = app.add_subcommand("ensemble", "Average prediction CSVs and report against ground truth");
    add_common(ensemble, opt);
    ensemble->add_option("--pred", pred_paths, "Prediction CSV (at least two)")->required()->expected(2, -1)->check(CLI::ExistingFile);
    ensemble->add_option("--truth", truth_path, "Ground-truth CSV for the report")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitError;
    }

    lesion_set_message_callback([](const char* msg, void*) { log(msg); }, nullptr);
    try {
        if (*preprocess) return cmd_preprocess(opt, in_dir);
        if (*split) return cmd_split(opt, manifest_path, val_frac);
        if (*train) return cmd_train(opt, manifest_path, splits_path, images_dir);
        if (*eval) return cmd_eval(opt, ckpt_path, manifest_path, images_dir, splits_path, subset);
        if (*ensemble) return cmd_ensemble(opt, pred_paths, truth_path);
    } catch (const ApiFailure& f) {
        log("error: " + f.what);
        return kExitError;
    } catch (const std::exception& e) {
        log(std::string("error: ") + e.what());
        return kExitError;
    }
    return kExitError;
}
