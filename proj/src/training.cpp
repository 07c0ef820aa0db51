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
#include "lesion/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

namespace lesion {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;    // "init"
constexpr std::uint64_t kPlanStream = 0x706c616e;    // "plan"
constexpr std::uint64_t kAugmentStream = 0x61756720; // "aug "
constexpr std::size_t kEvalChunk = 64;
constexpr std::size_t kValCacheBytes = std::size_t{512} << 20;

} // namespace

std::string_view monitor_name(Monitor m) noexcept
{
    return m == Monitor::ValAccuracy ? "val_accuracy" : "val_macro_recall";
}

std::optional<Monitor> monitor_from_name(std::string_view name) noexcept
{
    if (name == "val_accuracy") return Monitor::ValAccuracy;
    if (name == "val_macro_recall") return Monitor::ValMacroRecall;
    return std::nullopt;
}

std::string_view sampler_name(Sampler s) noexcept
{
    return s == Sampler::Shuffled ? "shuffled" : "balanced";
}

std::optional<Sampler> sampler_from_name(std::string_view name) noexcept
{
    if (name == "shuffled") return Sampler::Shuffled;
    if (name == "balanced") return Sampler::Balanced;
    return std::nullopt;
}

void TrainConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (!(lr0 > 0.0)) fail("lr must be positive");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) fail("plateau_factor must be in (0, 1)");
    if (plateau_patience < 1) fail("plateau_patience must be at least 1");
    if (max_epochs < 0) fail("max_epochs must be non-negative");
    if (batch_size < 1) fail("batch_size must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0)) {
        fail("Adam hyperparameters out of range");
    }
    if (weight_mode == WeightMode::Custom) (void)lesion::custom_weights(custom_weights);
}

std::string DirectoryImageSource::resolve(const std::string& image_id) const
{
    namespace fs = std::filesystem;
    const fs::path base = fs::path(dir_) / image_id;
    if (fs::is_regular_file(base)) return base.string();
    for (const char* ext : {".jpg", ".jpeg", ".png", ".JPG", ".JPEG", ".PNG"}) {
        fs::path candidate = base;
        candidate += ext;
        if (fs::is_regular_file(candidate)) return candidate.string();
    }
    throw Error(ErrorCode::MissingImageFile, "no image file for " + image_id + " in " + dir_);
}

ImageU8 DirectoryImageSource::load(const std::string& image_id) const
{
    return read_image(resolve(image_id));
}

ImageU8 MemoryImageSource::load(const std::string& image_id) const
{
    const auto it = images_.find(image_id);
    if (it == images_.end()) throw Error(ErrorCode::MissingImageFile, "no image registered for " + image_id);
    return it->second;
}

void write_planar(const ImageF& img, bool standardize, Tensor& batch, std::size_t slot)
{
    const auto H = static_cast<std::size_t>(img.height());
    const auto W = static_cast<std::size_t>(img.width());
    if (batch.shape.size() != 4 || batch.dim(1) != 3 || batch.dim(2) != H || batch.dim(3) != W || slot >= batch.dim(0)) {
        throw Error(ErrorCode::ShapeMismatch, "image " + std::to_string(W) + "x" + std::to_string(H) +
                                                  " does not fit batch " + batch.shape_string());
    }
    const std::size_t plane = H * W;
    double* dst = batch.data.data() + slot * 3 * plane;
    const auto& px = img.pixels();
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0, scale = 1.0;
        if (standardize) {
            for (std::size_t i = 0; i < plane; ++i) mean += px[i * 3 + c];
            mean /= static_cast<double>(plane);
            double var = 0.0;
            for (std::size_t i = 0; i < plane; ++i) var += (px[i * 3 + c] - mean) * (px[i * 3 + c] - mean);
            const double sd = std::sqrt(var / static_cast<double>(plane));
            scale = sd > 1e-12 ? 1.0 / sd : 1.0;
        }
        for (std::size_t i = 0; i < plane; ++i) dst[c * plane + i] = (px[i * 3 + c] - mean) * scale;
    }
}

std::string format_epoch_log(const std::vector<EpochLog>& log)
{
    std::string out = "epoch,train_loss,val_accuracy,val_macro_recall,lr\n";
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_accuracy,
                      e.val_macro_recall, e.lr);
        out += buf;
    }
    return out;
}

namespace {

void check_input_shape(const ModelSpec& spec, const AugmentConfig& aug)
{
    spec.shapes();
    if (spec.in_channels != 3 || spec.in_height != aug.random_crop || spec.in_width != aug.random_crop) {
        throw Error(ErrorCode::ShapeMismatch, "model input " + std::to_string(spec.in_height) + "x" +
                                                  std::to_string(spec.in_width) + " does not match the " +
                                                  std::to_string(aug.random_crop) + "px preprocessing crop");
    }
}

Tensor eval_batch(const ModelSpec& spec, const std::vector<ImageF>& images, bool standardize)
{
    Tensor batch({images.size(), 3, static_cast<std::size_t>(spec.in_height), static_cast<std::size_t>(spec.in_width)});
    for (std::size_t i = 0; i < images.size(); ++i) write_planar(images[i], standardize, batch, i);
    return batch;
}

/// Softmax rows for a manifest, processed in chunks.
template <typename LoadFn>
void predict_rows(const ModelSpec& spec, const Params& params, std::size_t n, bool standardize, LoadFn&& load,
                  const std::function<void(std::size_t, const double*)>& sink)
{
    for (std::size_t start = 0; start < n; start += kEvalChunk) {
        const auto end = std::min(n, start + kEvalChunk);
        std::vector<ImageF> chunk;
        chunk.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) chunk.push_back(load(i));
        const Tensor probs = softmax(forward(spec, params, eval_batch(spec, chunk, standardize)));
        for (std::size_t i = start; i < end; ++i) sink(i, probs.data.data() + (i - start) * kNumClasses);
    }
}

} // namespace

PredictionSet evaluate(const ModelSpec& spec, const Params& params, const Manifest& m, const AugmentConfig& aug,
                       const ImageSource& images)
{
    check_input_shape(spec, aug);
    PredictionSet out;
    predict_rows(
        spec, params, m.size(), aug.standardize,
        [&](std::size_t i) { return augment_eval(images.load(m.rows[i].image_id), aug); },
        [&](std::size_t i, const double* p) {
            Probabilities row{};
            std::copy(p, p + kNumClasses, row.begin());
            out.add(m.rows[i].image_id, row);
        });
    return out;
}

ConfusionMatrix confusion_from_predictions(const PredictionSet& preds, const Manifest& truth)
{
    std::unordered_map<std::string_view, ClassLabel> labels;
    for (const auto& row : truth.rows) labels.emplace(row.image_id, row.label);
    if (preds.empty()) throw Error(ErrorCode::Empty, "no predictions");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto it = labels.find(preds.ids()[i]);
        if (it == labels.end()) {
            throw Error(ErrorCode::IdMismatch, "prediction for " + preds.ids()[i] + " has no ground-truth label");
        }
        cm.add(it->second, argmax(preds.row(i)));
    }
    return cm;
}

FitResult fit(const ModelSpec& spec, const Manifest& train, const Manifest& val, const TrainConfig& cfg,
              const AugmentConfig& aug, const ImageSource& images, const ProgressFn& progress)
{
    cfg.validate();
    aug.validate();
    check_input_shape(spec, aug);
    if (cfg.max_epochs == 0) throw Error(ErrorCode::EmptyTraining, "max_epochs is 0, no epoch would run");
    if (train.empty()) throw Error(ErrorCode::EmptyTraining, "training manifest is empty");
    if (val.empty()) throw Error(ErrorCode::NoSamples, "validation manifest is empty");

    const auto dist = class_distribution(train);
    const ClassWeights weights = cfg.weight_mode == WeightMode::Custom ? custom_weights(cfg.custom_weights)
                                                                       : class_weights_present(dist, cfg.weight_mode);

    // Training rows grouped by class, as addressed by balanced_batches().
    std::vector<std::size_t> grouped(train.size());
    std::iota(grouped.begin(), grouped.end(), 0);
    std::stable_sort(grouped.begin(), grouped.end(), [&](std::size_t a, std::size_t b) {
        return train.rows[a].label < train.rows[b].label;
    });

    const std::uint64_t init_seed = derive_seed(cfg.seed, kInitStream);
    Params params = init_params(spec, init_seed);
    AdamState adam = AdamState::zeros_like(params, cfg.adam);
    PlateauScheduler scheduler(cfg.lr0, cfg.plateau_factor, cfg.plateau_patience);

    const std::size_t sample_bytes = 3 * static_cast<std::size_t>(spec.in_height * spec.in_width) * sizeof(double);
    std::vector<ImageF> val_cache;
    if (val.size() * sample_bytes <= kValCacheBytes) {
        val_cache.reserve(val.size());
        for (const auto& row : val.rows) val_cache.push_back(augment_eval(images.load(row.image_id), aug));
    }
    auto load_val = [&](std::size_t i) {
        return val_cache.empty() ? augment_eval(images.load(val.rows[i].image_id), aug) : val_cache[i];
    };

    const std::size_t num_batches = (train.size() + cfg.batch_size - 1) / cfg.batch_size;
    const auto H = static_cast<std::size_t>(spec.in_height);
    const auto W = static_cast<std::size_t>(spec.in_width);

    FitResult result;
    bool have_best = false;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double lr = scheduler.lr();
        const auto plan_seed = derive_seed(cfg.seed, kPlanStream, static_cast<std::uint64_t>(epoch));
        BatchPlan plan = cfg.sampler == Sampler::Balanced
                             ? balanced_batches(dist.counts, cfg.batch_size, num_batches, plan_seed)
                             : shuffled_batches(train.size(), cfg.batch_size, plan_seed);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        const auto epoch_aug_seed = derive_seed(cfg.seed, kAugmentStream, static_cast<std::uint64_t>(epoch));
        for (std::size_t bi = 0; bi < plan.batches.size(); ++bi) {
            const auto& indices = plan.batches[bi];
            Tensor batch({indices.size(), 3, H, W});
            std::vector<ClassLabel> labels(indices.size());
            for (std::size_t k = 0; k < indices.size(); ++k) {
                const auto row_index = cfg.sampler == Sampler::Balanced ? grouped[indices[k]] : indices[k];
                const auto& row = train.rows[row_index];
                Rng rng(derive_seed(epoch_aug_seed, bi, k));
                write_planar(augment_train(images.load(row.image_id), aug, rng), aug.standardize, batch, k);
                labels[k] = row.label;
            }
            auto step = loss_and_gradient(spec, params, batch, labels, weights);
            adam_step(params, step.grads, adam, lr);
            loss_sum += step.loss * static_cast<double>(indices.size());
            seen += indices.size();
        }

        ConfusionMatrix cm;
        predict_rows(spec, params, val.size(), aug.standardize, load_val, [&](std::size_t i, const double* p) {
            Probabilities row{};
            std::copy(p, p + kNumClasses, row.begin());
            cm.add(val.rows[i].label, argmax(row));
        });
        const auto rep = report(cm);

        EpochLog entry{epoch, loss_sum / static_cast<double>(seen), rep.accuracy, rep.macro_recall, lr};
        result.log.push_back(entry);
        const double monitored = cfg.monitor == Monitor::ValAccuracy ? rep.accuracy : rep.macro_recall;
        scheduler.step(monitored);

        if (!have_best || monitored > result.best.metric) {
            have_best = true;
            auto& best = result.best;
            best.spec = spec;
            best.params = params;
            best.epoch = epoch;
            best.metric = monitored;
            best.monitor = cfg.monitor;
            for (std::size_t c = 0; c < kNumClasses; ++c) best.class_order[c] = std::string(kClassNames[c]);
            best.seed = cfg.seed;
            best.init_seed = init_seed;
            best.weights = weights;
            best.augment = aug;
        }
        if (progress) progress(entry);
    }
    return result;
}

} // namespace lesion
