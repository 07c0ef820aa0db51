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

#include "lesion/nn.hpp"
#include "lesion/rng.hpp"

#include <algorithm>
#include <cmath>

namespace lesion {

AdamState AdamState::zeros_like(const Params& params, AdamHyper hyper)
{
    AdamState s;
    s.m = params;
    s.m.for_each_tensor([](Tensor& t) { std::fill(t.data.begin(), t.data.end(), 0.0); });
    s.v = s.m;
    s.hyper = hyper;
    return s;
}

void adam_step(Params& params, const Params& grads, AdamState& state, double lr)
{
    const auto n = params.layers.size();
    if (grads.layers.size() != n || state.m.layers.size() != n || state.v.layers.size() != n) {
        throw Error(ErrorCode::ShapeMismatch, "Adam: parameter, gradient and state layouts differ");
    }
    const auto& h = state.hyper;
    state.t += 1;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));

    auto update = [&](Tensor& theta, const Tensor& g, Tensor& m, Tensor& v) {
        if (g.shape != theta.shape || m.shape != theta.shape || v.shape != theta.shape) {
            throw Error(ErrorCode::ShapeMismatch, "Adam: tensor shapes differ");
        }
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        update(params.layers[i].weight, grads.layers[i].weight, state.m.layers[i].weight, state.v.layers[i].weight);
        update(params.layers[i].bias, grads.layers[i].bias, state.m.layers[i].bias, state.v.layers[i].bias);
    }
}

PlateauScheduler::PlateauScheduler(double lr0, double factor, int patience)
    : lr_(lr0), factor_(factor), patience_(patience)
{
    if (!(lr0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial learning rate must be positive");
    if (!(factor > 0.0 && factor < 1.0)) throw Error(ErrorCode::InvalidArgument, "plateau factor must be in (0, 1)");
    if (patience < 1) throw Error(ErrorCode::InvalidArgument, "plateau patience must be at least 1");
}

double PlateauScheduler::step(double value)
{
    if (!has_best_ || value > best_) {
        has_best_ = true;
        best_ = value;
        bad_epochs_ = 0;
        return lr_;
    }
    if (++bad_epochs_ >= patience_) {
        lr_ *= factor_;
        ++reductions_;
        bad_epochs_ = 0;
    }
    return lr_;
}

double plateau_schedule(std::span<const double> history, double lr, double factor, int patience)
{
    if (history.empty()) throw Error(ErrorCode::InvalidArgument, "plateau history must be nonempty");
    PlateauScheduler sched(lr, factor, patience);
    for (double v : history) sched.step(v);
    return sched.lr();
}

GradCheckResult compare_gradients(const ModelSpec& spec, const Params& params, const Tensor& batch,
                                  std::span<const ClassLabel> labels, const ClassWeights& w,
                                  const Params& analytic, double h, std::size_t per_tensor,
                                  std::uint64_t seed)
{
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
    if (analytic.count() != params.count() || analytic.layers.size() != params.layers.size()) {
        throw Error(ErrorCode::ShapeMismatch, "gradient layout does not match parameters");
    }
    // Central differences at h = 1e-6 carry roughly eps * |loss| / h of
    // rounding noise, so near-zero gradients are compared in absolute terms.
    constexpr double kFloor = 1e-3;
    Rng rng(seed);
    Params probe = params;
    GradCheckResult result;

    for (std::size_t li = 0; li < probe.layers.size(); ++li) {
        for (int which = 0; which < 2; ++which) {
            Tensor& t = which == 0 ? probe.layers[li].weight : probe.layers[li].bias;
            const Tensor& g = which == 0 ? analytic.layers[li].weight : analytic.layers[li].bias;
            if (t.size() == 0) continue;

            std::vector<std::size_t> coords(t.size());
            for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
            if (coords.size() > per_tensor) {
                rng.shuffle(std::span<std::size_t>(coords));
                coords.resize(per_tensor);
            }
            for (std::size_t i : coords) {
                const double saved = t[i];
                t[i] = saved + h;
                const double up = model_loss(spec, probe, batch, labels, w);
                t[i] = saved - h;
                const double down = model_loss(spec, probe, batch, labels, w);
                t[i] = saved;
                const double numeric = (up - down) / (2.0 * h);
                const double err = std::abs(g[i] - numeric) / std::max(std::abs(numeric), kFloor);
                result.max_relative_error = std::max(result.max_relative_error, err);
                ++result.checked;
            }
        }
    }
    return result;
}

GradCheckResult grad_check(const ModelSpec& spec, const Params& params, const Tensor& batch,
                           std::span<const ClassLabel> labels, const ClassWeights& w, double h,
                           std::size_t per_tensor, std::uint64_t seed)
{
    const Params analytic = backward(spec, params, batch, labels, w);
    return compare_gradients(spec, params, batch, labels, w, analytic, h, per_tensor, seed);
}

} // namespace lesion
