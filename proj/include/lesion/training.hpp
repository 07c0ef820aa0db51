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

#include "lesion/data.hpp"
#include "lesion/ensemble.hpp"
#include "lesion/imaging.hpp"
#include "lesion/metrics.hpp"
#include "lesion/nn.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace lesion {

enum class Monitor { ValAccuracy, ValMacroRecall };

std::string_view monitor_name(Monitor m) noexcept;
std::optional<Monitor> monitor_from_name(std::string_view name) noexcept;
std::string_view sampler_name(Sampler s) noexcept;
std::optional<Sampler> sampler_from_name(std::string_view name) noexcept;

struct TrainConfig {
    double lr0 = 1e-4;
    double plateau_factor = 0.5;
    int plateau_patience = 2;
    int max_epochs = 30;
    std::size_t batch_size = 32;
    Sampler sampler = Sampler::Shuffled;
    WeightMode weight_mode = WeightMode::MinOverCount;
    /// Only read when weight_mode is Custom.
    std::array<double, kNumClasses> custom_weights{1, 1, 1, 1, 1, 1, 1, 1};
    std::uint64_t seed = 0;
    Monitor monitor = Monitor::ValAccuracy;
    AdamHyper adam;

    void validate() const;
};

inline double plateau_schedule(std::span<const double> history, double lr, const TrainConfig& cfg)
{
    return plateau_schedule(history, lr, cfg.plateau_factor, cfg.plateau_patience);
}

/// Resolves image ids to decoded rasters.
class ImageSource {
public:
    virtual ~ImageSource() = default;
    /// Throws MissingImageFile when the id cannot be resolved.
    virtual ImageU8 load(const std::string& image_id) const = 0;
};

/// Looks for <dir>/<id>, then <dir>/<id>.jpg, .jpeg, .png (and upper-case variants).
class DirectoryImageSource final : public ImageSource {
public:
    explicit DirectoryImageSource(std::string dir) : dir_(std::move(dir)) {}
    ImageU8 load(const std::string& image_id) const override;
    std::string resolve(const std::string& image_id) const;

private:
    std::string dir_;
};

class MemoryImageSource final : public ImageSource {
public:
    void put(std::string image_id, ImageU8 img) { images_.insert_or_assign(std::move(image_id), std::move(img)); }
    ImageU8 load(const std::string& image_id) const override;

private:
    std::unordered_map<std::string, ImageU8> images_;
};

/// ImageF (interleaved RGB) to one [3, H, W] planar slice of `batch` at `slot`.
void write_planar(const ImageF& img, bool standardize, Tensor& batch, std::size_t slot);

struct Checkpoint {
    ModelSpec spec;
    Params params;
    int epoch = 0;
    double metric = 0.0;
    Monitor monitor = Monitor::ValAccuracy;
    std::array<std::string, kNumClasses> class_order{};
    std::uint64_t seed = 0;
    std::uint64_t init_seed = 0;
    ClassWeights weights;
    AugmentConfig augment;

    bool operator==(const Checkpoint& o) const;
};

inline constexpr std::uint8_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_macro_recall = 0.0;
    /// Rate used while training this epoch.
    double lr = 0.0;

    bool operator==(const EpochLog&) const = default;
};

std::string format_epoch_log(const std::vector<EpochLog>& log);

struct FitResult {
    Checkpoint best;
    std::vector<EpochLog> log;
};

using ProgressFn = std::function<void(const EpochLog&)>;

/// Trains from seeded initialization and returns the checkpoint with the
/// strictly best monitored validation metric (first best wins ties).
FitResult fit(const ModelSpec& spec, const Manifest& train, const Manifest& val, const TrainConfig& cfg,
              const AugmentConfig& aug, const ImageSource& images, const ProgressFn& progress = {});

/// augment_eval + forward + softmax per image, in manifest order.
PredictionSet evaluate(const ModelSpec& spec, const Params& params, const Manifest& m, const AugmentConfig& aug,
                       const ImageSource& images);

/// Confusion matrix of argmax predictions against a manifest's labels. Every
/// prediction id must appear in the manifest (IdMismatch otherwise).
ConfusionMatrix confusion_from_predictions(const PredictionSet& preds, const Manifest& truth);

} // namespace lesion
