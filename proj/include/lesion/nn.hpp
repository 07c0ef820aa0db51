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
#include "lesion/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lesion {

enum class LayerKind { Conv2d, Relu, MaxPool, Flatten, Dense };

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int out = 0;     // conv2d: output channels; dense: output features
    int kernel = 0;  // conv2d / maxpool window
    int stride = 1;
    int padding = 0; // conv2d only

    static LayerSpec conv2d(int out_channels, int kernel, int stride = 1, int padding = 0)
    {
        return {LayerKind::Conv2d, out_channels, kernel, stride, padding};
    }
    static LayerSpec relu() { return {LayerKind::Relu, 0, 0, 1, 0}; }
    static LayerSpec maxpool(int kernel, int stride) { return {LayerKind::MaxPool, 0, kernel, stride, 0}; }
    static LayerSpec flatten() { return {LayerKind::Flatten, 0, 0, 1, 0}; }
    static LayerSpec dense(int out_features) { return {LayerKind::Dense, out_features, 0, 1, 0}; }

    bool operator==(const LayerSpec&) const = default;
};

/// Per-sample activation shape. Flat activations have height = width = 1.
struct ActShape {
    int channels = 0;
    int height = 0;
    int width = 0;
    bool flat = false;

    std::size_t size() const noexcept
    {
        return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
               static_cast<std::size_t>(width);
    }
    bool operator==(const ActShape&) const = default;
};

struct ModelSpec {
    int in_channels = 3;
    int in_height = 32;
    int in_width = 32;
    std::vector<LayerSpec> layers;

    /// Activation shape after each layer (index 0 is the input). Throws
    /// ShapeMismatch if the chain is inconsistent or does not end in 8 logits.
    std::vector<ActShape> shapes() const;
    std::size_t num_params() const;

    /// Compact text form, e.g. "conv:8:3:1:1,relu,maxpool:2:2,flatten,dense:8".
    std::string layers_string() const;
    static std::vector<LayerSpec> parse_layers(const std::string& text);

    /// conv(8,3x3)-relu-maxpool(2)-conv(16,3x3)-relu-maxpool(2)-flatten-dense(8),
    /// 'same' padding on the convolutions.
    static ModelSpec small_cnn(int input_size);

    bool operator==(const ModelSpec&) const = default;
};

/// Weight and bias for one layer; both empty for parameter-free layers.
/// conv2d weight is [out, in, k, k]; dense weight is [out, in].
struct LayerParams {
    Tensor weight;
    Tensor bias;

    bool operator==(const LayerParams&) const = default;
};

struct Params {
    std::vector<LayerParams> layers;

    std::size_t count() const noexcept;
    /// Weight then bias of each layer, in layer order.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
    /// Visits every parameter tensor (weight then bias per layer).
    template <typename F>
    void for_each_tensor(F&& f)
    {
        for (auto& l : layers) {
            f(l.weight);
            f(l.bias);
        }
    }

    bool operator==(const Params&) const = default;
};

Params zero_params(const ModelSpec& spec);
/// He (fan-in) normal initialization for weights, zero biases.
Params init_params(const ModelSpec& spec, std::uint64_t seed);

/// batch is [B, C, H, W]; returns logits [B, 8].
Tensor forward(const ModelSpec& spec, const Params& params, const Tensor& batch);

/// Row-wise softmax of [B, K] with max subtraction.
Tensor softmax(const Tensor& logits);

inline constexpr double kProbabilityFloor = 1e-12;

/// (1/B) * sum_b -w[y_b] * log(max(p[b, y_b], 1e-12)).
double weighted_ce_loss(const Tensor& probs, std::span<const ClassLabel> labels, const ClassWeights& w);

/// Fused softmax + weighted cross-entropy gradient with respect to the logits:
/// (w[y_b] / B) * (p_b - onehot(y_b)).
Tensor logit_gradient(const Tensor& probs, std::span<const ClassLabel> labels, const ClassWeights& w);

struct LossAndGradient {
    double loss = 0.0;
    Tensor probs;
    Params grads;
};

LossAndGradient loss_and_gradient(const ModelSpec& spec, const Params& params, const Tensor& batch,
                                  std::span<const ClassLabel> labels, const ClassWeights& w);

Params backward(const ModelSpec& spec, const Params& params, const Tensor& batch,
                std::span<const ClassLabel> labels, const ClassWeights& w);

/// Loss of the full forward pass; what the finite-difference oracle perturbs.
double model_loss(const ModelSpec& spec, const Params& params, const Tensor& batch,
                  std::span<const ClassLabel> labels, const ClassWeights& w);

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
};

/// Compares an analytic gradient against central differences at up to
/// `per_tensor` sampled coordinates of every parameter tensor. The relative
/// error of a coordinate is |analytic - numeric| / max(|numeric|, 1e-3).
GradCheckResult compare_gradients(const ModelSpec& spec, const Params& params, const Tensor& batch,
                                  std::span<const ClassLabel> labels, const ClassWeights& w,
                                  const Params& analytic, double h, std::size_t per_tensor,
                                  std::uint64_t seed);

/// compare_gradients() against backward().
GradCheckResult grad_check(const ModelSpec& spec, const Params& params, const Tensor& batch,
                           std::span<const ClassLabel> labels, const ClassWeights& w, double h,
                           std::size_t per_tensor = 64, std::uint64_t seed = 0);

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Params m;
    Params v;
    std::uint64_t t = 0;
    AdamHyper hyper;

    static AdamState zeros_like(const Params& params, AdamHyper hyper = {});
};

/// One bias-corrected Adam update, in place.
void adam_step(Params& params, const Params& grads, AdamState& state, double lr);

/// Reduce-on-plateau for a metric where larger is better. A value improves
/// only if it is strictly greater than the best so far; after `patience`
/// consecutive non-improving epochs the rate is multiplied by `factor` and
/// the counter restarts.
class PlateauScheduler {
public:
    PlateauScheduler(double lr0, double factor, int patience);

    /// Feeds one epoch's monitored value; returns the rate for the next epoch.
    double step(double value);
    double lr() const noexcept { return lr_; }
    int reductions() const noexcept { return reductions_; }

private:
    double lr_;
    double factor_;
    int patience_;
    bool has_best_ = false;
    double best_ = 0.0;
    int bad_epochs_ = 0;
    int reductions_ = 0;
};

/// Replays `history` through a fresh PlateauScheduler starting at `lr`.
double plateau_schedule(std::span<const double> history, double lr, double factor, int patience);

} // namespace lesion
