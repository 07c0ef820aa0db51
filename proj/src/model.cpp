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
#include <limits>
#include <sstream>

namespace lesion {

namespace {

[[noreturn]] void shape_error(const std::string& msg)
{
    throw Error(ErrorCode::ShapeMismatch, msg);
}

bool has_params(LayerKind kind)
{
    return kind == LayerKind::Conv2d || kind == LayerKind::Dense;
}

int conv_out_extent(int in, const LayerSpec& l)
{
    return (in + 2 * l.padding - l.kernel) / l.stride + 1;
}

} // namespace

std::vector<ActShape> ModelSpec::shapes() const
{
    if (in_channels < 1 || in_height < 1 || in_width < 1) shape_error("input dimensions must be positive");
    std::vector<ActShape> out;
    out.reserve(layers.size() + 1);
    ActShape cur{in_channels, in_height, in_width, false};
    out.push_back(cur);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string where = "layer " + std::to_string(i) + ": ";
        switch (l.kind) {
        case LayerKind::Conv2d:
            if (cur.flat) shape_error(where + "conv2d needs a spatial input");
            if (l.out < 1 || l.kernel < 1 || l.stride < 1 || l.padding < 0) shape_error(where + "bad conv2d parameters");
            if (cur.height + 2 * l.padding < l.kernel || cur.width + 2 * l.padding < l.kernel) {
                shape_error(where + "conv2d kernel larger than its padded input");
            }
            cur = {l.out, conv_out_extent(cur.height, l), conv_out_extent(cur.width, l), false};
            break;
        case LayerKind::MaxPool:
            if (cur.flat) shape_error(where + "maxpool needs a spatial input");
            if (l.kernel < 1 || l.stride < 1) shape_error(where + "bad maxpool parameters");
            if (cur.height < l.kernel || cur.width < l.kernel) shape_error(where + "maxpool window larger than input");
            cur = {cur.channels, (cur.height - l.kernel) / l.stride + 1, (cur.width - l.kernel) / l.stride + 1, false};
            break;
        case LayerKind::Relu:
            break;
        case LayerKind::Flatten:
            cur = {static_cast<int>(cur.size()), 1, 1, true};
            break;
        case LayerKind::Dense:
            if (!cur.flat) shape_error(where + "dense needs a flattened input");
            if (l.out < 1) shape_error(where + "dense needs at least one output");
            cur = {l.out, 1, 1, true};
            break;
        }
        out.push_back(cur);
    }
    if (!cur.flat || cur.channels != kNumClasses) {
        shape_error("model must end in a flat vector of " + std::to_string(kNumClasses) + " logits");
    }
    return out;
}

std::size_t ModelSpec::num_params() const
{
    const auto s = shapes();
    std::size_t n = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.kind == LayerKind::Conv2d) {
            n += static_cast<std::size_t>(l.out) * static_cast<std::size_t>(s[i].channels * l.kernel * l.kernel) +
                 static_cast<std::size_t>(l.out);
        } else if (l.kind == LayerKind::Dense) {
            n += static_cast<std::size_t>(l.out) * (s[i].size() + 1);
        }
    }
    return n;
}

std::string ModelSpec::layers_string() const
{
    std::ostringstream os;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (i) os << ',';
        const auto& l = layers[i];
        switch (l.kind) {
        case LayerKind::Conv2d: os << "conv:" << l.out << ':' << l.kernel << ':' << l.stride << ':' << l.padding; break;
        case LayerKind::Relu: os << "relu"; break;
        case LayerKind::MaxPool: os << "maxpool:" << l.kernel << ':' << l.stride; break;
        case LayerKind::Flatten: os << "flatten"; break;
        case LayerKind::Dense: os << "dense:" << l.out; break;
        }
    }
    return os.str();
}

std::vector<LayerSpec> ModelSpec::parse_layers(const std::string& text)
{
    std::vector<LayerSpec> out;
    std::istringstream in(text);
    std::string token;
    while (std::getline(in, token, ',')) {
        std::vector<std::string> parts;
        std::istringstream ts(token);
        std::string part;
        while (std::getline(ts, part, ':')) parts.push_back(part);
        if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "empty layer descriptor");

        std::vector<int> nums;
        for (std::size_t i = 1; i < parts.size(); ++i) {
            try {
                std::size_t used = 0;
                nums.push_back(std::stoi(parts[i], &used));
                if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidArgument, "bad number in layer descriptor '" + token + "'");
            }
        }
        auto arity = [&](std::size_t lo, std::size_t hi) {
            if (nums.size() < lo || nums.size() > hi) {
                throw Error(ErrorCode::InvalidArgument, "wrong argument count in layer descriptor '" + token + "'");
            }
        };
        const auto& name = parts[0];
        if (name == "conv") {
            arity(2, 4);
            out.push_back(LayerSpec::conv2d(nums[0], nums[1], nums.size() > 2 ? nums[2] : 1, nums.size() > 3 ? nums[3] : 0));
        } else if (name == "relu") {
            arity(0, 0);
            out.push_back(LayerSpec::relu());
        } else if (name == "maxpool") {
            arity(1, 2);
            out.push_back(LayerSpec::maxpool(nums[0], nums.size() > 1 ? nums[1] : nums[0]));
        } else if (name == "flatten") {
            arity(0, 0);
            out.push_back(LayerSpec::flatten());
        } else if (name == "dense") {
            arity(1, 1);
            out.push_back(LayerSpec::dense(nums[0]));
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown layer type '" + name + "'");
        }
    }
    return out;
}

ModelSpec ModelSpec::small_cnn(int input_size)
{
    ModelSpec spec;
    spec.in_channels = 3;
    spec.in_height = input_size;
    spec.in_width = input_size;
    spec.layers = {LayerSpec::conv2d(8, 3, 1, 1), LayerSpec::relu(),    LayerSpec::maxpool(2, 2),
                   LayerSpec::conv2d(16, 3, 1, 1), LayerSpec::relu(),   LayerSpec::maxpool(2, 2),
                   LayerSpec::flatten(),           LayerSpec::dense(kNumClasses)};
    return spec;
}

std::size_t Params::count() const noexcept
{
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<double> Params::flatten() const
{
    std::vector<double> flat;
    flat.reserve(count());
    for (const auto& l : layers) {
        flat.insert(flat.end(), l.weight.data.begin(), l.weight.data.end());
        flat.insert(flat.end(), l.bias.data.begin(), l.bias.data.end());
    }
    return flat;
}

void Params::assign(std::span<const double> flat)
{
    if (flat.size() != count()) {
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(count()) + " parameters, got " +
                                                  std::to_string(flat.size()));
    }
    auto it = flat.begin();
    for (auto& l : layers) {
        for (Tensor* t : {&l.weight, &l.bias}) {
            std::copy(it, it + static_cast<std::ptrdiff_t>(t->size()), t->data.begin());
            it += static_cast<std::ptrdiff_t>(t->size());
        }
    }
}

Params zero_params(const ModelSpec& spec)
{
    const auto s = spec.shapes();
    Params p;
    p.layers.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        const auto out = static_cast<std::size_t>(l.out);
        if (l.kind == LayerKind::Conv2d) {
            const auto k = static_cast<std::size_t>(l.kernel);
            p.layers[i].weight = Tensor({out, static_cast<std::size_t>(s[i].channels), k, k});
            p.layers[i].bias = Tensor({out});
        } else if (l.kind == LayerKind::Dense) {
            p.layers[i].weight = Tensor({out, s[i].size()});
            p.layers[i].bias = Tensor({out});
        }
    }
    return p;
}

Params init_params(const ModelSpec& spec, std::uint64_t seed)
{
    Params p = zero_params(spec);
    Rng rng(seed);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (!has_params(spec.layers[i].kind)) continue;
        auto& w = p.layers[i].weight;
        const auto fan_in = w.size() / w.dim(0);
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& v : w.data) v = scale * rng.normal();
    }
    return p;
}

namespace {

void check_params(const ModelSpec& spec, const Params& params)
{
    const Params expect = zero_params(spec);
    if (params.layers.size() != expect.layers.size()) shape_error("parameter layer count does not match the model");
    for (std::size_t i = 0; i < expect.layers.size(); ++i) {
        if (params.layers[i].weight.shape != expect.layers[i].weight.shape ||
            params.layers[i].bias.shape != expect.layers[i].bias.shape) {
            shape_error("parameters of layer " + std::to_string(i) + " do not match the model");
        }
    }
}

/// Activations stored per layer during the forward pass: acts[i] is the input
/// of layer i, acts.back() the logits. argmax[i] holds maxpool winners.
struct ForwardTrace {
    std::vector<Tensor> acts;
    std::vector<std::vector<std::size_t>> argmax;
};

Tensor conv_forward(const Tensor& in, const ActShape& is, const ActShape& os, const LayerSpec& l,
                    const LayerParams& p)
{
    const std::size_t B = in.dim(0);
    Tensor out({B, static_cast<std::size_t>(os.channels), static_cast<std::size_t>(os.height),
                static_cast<std::size_t>(os.width)});
    const int C = is.channels, H = is.height, W = is.width, K = l.kernel;
    const double* w = p.weight.data.data();
    for (std::size_t b = 0; b < B; ++b) {
        const double* x = in.data.data() + b * is.size();
        double* y = out.data.data() + b * os.size();
        for (int o = 0; o < os.channels; ++o) {
            for (int oy = 0; oy < os.height; ++oy) {
                for (int ox = 0; ox < os.width; ++ox) {
                    double acc = p.bias[static_cast<std::size_t>(o)];
                    for (int c = 0; c < C; ++c) {
                        for (int ky = 0; ky < K; ++ky) {
                            const int iy = oy * l.stride - l.padding + ky;
                            if (iy < 0 || iy >= H) continue;
                            const double* wrow = w + ((o * C + c) * K + ky) * K;
                            const double* xrow = x + (c * H + iy) * W;
                            for (int kx = 0; kx < K; ++kx) {
                                const int ix = ox * l.stride - l.padding + kx;
                                if (ix < 0 || ix >= W) continue;
                                acc += wrow[kx] * xrow[ix];
                            }
                        }
                    }
                    y[(o * os.height + oy) * os.width + ox] = acc;
                }
            }
        }
    }
    return out;
}

Tensor conv_backward(const Tensor& in, const Tensor& grad_out, const ActShape& is, const ActShape& os,
                     const LayerSpec& l, const LayerParams& p, LayerParams& g)
{
    const std::size_t B = in.dim(0);
    Tensor grad_in(in.shape);
    const int C = is.channels, H = is.height, W = is.width, K = l.kernel;
    const double* w = p.weight.data.data();
    double* gw = g.weight.data.data();
    for (std::size_t b = 0; b < B; ++b) {
        const double* x = in.data.data() + b * is.size();
        double* gx = grad_in.data.data() + b * is.size();
        const double* gy = grad_out.data.data() + b * os.size();
        for (int o = 0; o < os.channels; ++o) {
            for (int oy = 0; oy < os.height; ++oy) {
                for (int ox = 0; ox < os.width; ++ox) {
                    const double d = gy[(o * os.height + oy) * os.width + ox];
                    g.bias[static_cast<std::size_t>(o)] += d;
                    if (d == 0.0) continue;
                    for (int c = 0; c < C; ++c) {
                        for (int ky = 0; ky < K; ++ky) {
                            const int iy = oy * l.stride - l.padding + ky;
                            if (iy < 0 || iy >= H) continue;
                            const int wbase = ((o * C + c) * K + ky) * K;
                            const int xbase = (c * H + iy) * W;
                            for (int kx = 0; kx < K; ++kx) {
                                const int ix = ox * l.stride - l.padding + kx;
                                if (ix < 0 || ix >= W) continue;
                                gw[wbase + kx] += d * x[xbase + ix];
                                gx[xbase + ix] += d * w[wbase + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

Tensor maxpool_forward(const Tensor& in, const ActShape& is, const ActShape& os, const LayerSpec& l,
                       std::vector<std::size_t>* argmax)
{
    const std::size_t B = in.dim(0);
    Tensor out({B, static_cast<std::size_t>(os.channels), static_cast<std::size_t>(os.height),
                static_cast<std::size_t>(os.width)});
    if (argmax) argmax->assign(out.size(), 0);
    std::size_t oi = 0;
    for (std::size_t b = 0; b < B; ++b) {
        for (int c = 0; c < is.channels; ++c) {
            const std::size_t plane = b * is.size() + static_cast<std::size_t>(c * is.height * is.width);
            for (int oy = 0; oy < os.height; ++oy) {
                for (int ox = 0; ox < os.width; ++ox, ++oi) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_at = plane;
                    for (int ky = 0; ky < l.kernel; ++ky) {
                        for (int kx = 0; kx < l.kernel; ++kx) {
                            const auto at = plane + static_cast<std::size_t>((oy * l.stride + ky) * is.width +
                                                                             ox * l.stride + kx);
                            // Strict comparison: the first maximum in scan order wins ties.
                            if (in[at] > best) {
                                best = in[at];
                                best_at = at;
                            }
                        }
                    }
                    out[oi] = best;
                    if (argmax) (*argmax)[oi] = best_at;
                }
            }
        }
    }
    return out;
}

Tensor dense_forward(const Tensor& in, const ActShape& is, const LayerSpec& l, const LayerParams& p)
{
    const std::size_t B = in.dim(0);
    const std::size_t F = is.size();
    const auto O = static_cast<std::size_t>(l.out);
    Tensor out({B, O});
    for (std::size_t b = 0; b < B; ++b) {
        const double* x = in.data.data() + b * F;
        for (std::size_t o = 0; o < O; ++o) {
            const double* w = p.weight.data.data() + o * F;
            double acc = p.bias[o];
            for (std::size_t f = 0; f < F; ++f) acc += w[f] * x[f];
            out[b * O + o] = acc;
        }
    }
    return out;
}

Tensor run_forward(const ModelSpec& spec, const Params& params, const Tensor& batch, ForwardTrace* trace)
{
    const auto shapes = spec.shapes();
    check_params(spec, params);
    if (batch.shape.size() != 4 || batch.dim(0) == 0 || batch.dim(1) != static_cast<std::size_t>(spec.in_channels) ||
        batch.dim(2) != static_cast<std::size_t>(spec.in_height) ||
        batch.dim(3) != static_cast<std::size_t>(spec.in_width)) {
        shape_error("batch shape " + batch.shape_string() + " does not match model input [B," +
                    std::to_string(spec.in_channels) + "," + std::to_string(spec.in_height) + "," +
                    std::to_string(spec.in_width) + "]");
    }
    const std::size_t B = batch.dim(0);
    if (trace) {
        trace->acts.clear();
        trace->acts.reserve(spec.layers.size() + 1);
        trace->argmax.assign(spec.layers.size(), {});
    }

    Tensor cur = batch;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        const auto& is = shapes[i];
        const auto& os = shapes[i + 1];
        Tensor next;
        switch (l.kind) {
        case LayerKind::Conv2d: next = conv_forward(cur, is, os, l, params.layers[i]); break;
        case LayerKind::MaxPool: next = maxpool_forward(cur, is, os, l, trace ? &trace->argmax[i] : nullptr); break;
        case LayerKind::Relu:
            next = cur;
            for (double& v : next.data) v = v > 0.0 ? v : 0.0;
            break;
        case LayerKind::Flatten: next = Tensor({B, os.size()}, cur.data); break;
        case LayerKind::Dense: next = dense_forward(cur, is, l, params.layers[i]); break;
        }
        if (trace) trace->acts.push_back(std::move(cur));
        cur = std::move(next);
    }
    return cur;
}

} // namespace

Tensor forward(const ModelSpec& spec, const Params& params, const Tensor& batch)
{
    return run_forward(spec, params, batch, nullptr);
}

Tensor softmax(const Tensor& logits)
{
    if (logits.shape.size() != 2) shape_error("softmax expects a [B, K] tensor");
    const std::size_t B = logits.dim(0), K = logits.dim(1);
    Tensor out(logits.shape);
    for (std::size_t b = 0; b < B; ++b) {
        const double* z = logits.data.data() + b * K;
        double* p = out.data.data() + b * K;
        double zmax = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
            if (!std::isfinite(z[k])) {
                throw Error(ErrorCode::NonFiniteInput, "non-finite logit in row " + std::to_string(b));
            }
            zmax = std::max(zmax, z[k]);
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            p[k] = std::exp(z[k] - zmax);
            sum += p[k];
        }
        for (std::size_t k = 0; k < K; ++k) p[k] /= sum;
    }
    return out;
}

namespace {

void check_labels(const Tensor& probs, std::span<const ClassLabel> labels)
{
    if (probs.shape.size() != 2 || probs.dim(1) != kNumClasses || probs.dim(0) != labels.size() || labels.empty()) {
        shape_error("probabilities " + probs.shape_string() + " do not match " + std::to_string(labels.size()) +
                    " labels over " + std::to_string(kNumClasses) + " classes");
    }
}

} // namespace

double weighted_ce_loss(const Tensor& probs, std::span<const ClassLabel> labels, const ClassWeights& w)
{
    check_labels(probs, labels);
    double total = 0.0;
    for (std::size_t b = 0; b < labels.size(); ++b) {
        const auto y = static_cast<std::size_t>(labels[b]);
        const double p = std::max(probs[b * kNumClasses + y], kProbabilityFloor);
        total += -w[labels[b]] * std::log(p);
    }
    return total / static_cast<double>(labels.size());
}

Tensor logit_gradient(const Tensor& probs, std::span<const ClassLabel> labels, const ClassWeights& w)
{
    check_labels(probs, labels);
    Tensor g = probs;
    const double inv_b = 1.0 / static_cast<double>(labels.size());
    for (std::size_t b = 0; b < labels.size(); ++b) {
        const auto y = static_cast<std::size_t>(labels[b]);
        const double scale = w[labels[b]] * inv_b;
        double* row = g.data.data() + b * kNumClasses;
        row[y] -= 1.0;
        for (std::size_t k = 0; k < kNumClasses; ++k) row[k] *= scale;
    }
    return g;
}

LossAndGradient loss_and_gradient(const ModelSpec& spec, const Params& params, const Tensor& batch,
                                  std::span<const ClassLabel> labels, const ClassWeights& w)
{
    ForwardTrace trace;
    const Tensor logits = run_forward(spec, params, batch, &trace);
    LossAndGradient out;
    out.probs = softmax(logits);
    out.loss = weighted_ce_loss(out.probs, labels, w);
    out.grads = zero_params(spec);

    const auto shapes = spec.shapes();
    Tensor grad = logit_gradient(out.probs, labels, w);
    for (std::size_t i = spec.layers.size(); i-- > 0;) {
        const auto& l = spec.layers[i];
        const Tensor& in = trace.acts[i];
        switch (l.kind) {
        case LayerKind::Conv2d:
            grad = conv_backward(in, grad, shapes[i], shapes[i + 1], l, params.layers[i], out.grads.layers[i]);
            break;
        case LayerKind::MaxPool: {
            Tensor gin(in.shape);
            const auto& winners = trace.argmax[i];
            for (std::size_t k = 0; k < grad.size(); ++k) gin[winners[k]] += grad[k];
            grad = std::move(gin);
            break;
        }
        case LayerKind::Relu:
            for (std::size_t k = 0; k < grad.size(); ++k) {
                if (!(in[k] > 0.0)) grad[k] = 0.0;
            }
            break;
        case LayerKind::Flatten:
            grad.shape = in.shape;
            break;
        case LayerKind::Dense: {
            const std::size_t B = in.dim(0);
            const std::size_t F = shapes[i].size();
            const auto O = static_cast<std::size_t>(l.out);
            auto& g = out.grads.layers[i];
            Tensor gin(in.shape);
            for (std::size_t b = 0; b < B; ++b) {
                const double* x = in.data.data() + b * F;
                double* gx = gin.data.data() + b * F;
                for (std::size_t o = 0; o < O; ++o) {
                    const double d = grad[b * O + o];
                    g.bias[o] += d;
                    const double* wrow = params.layers[i].weight.data.data() + o * F;
                    double* gwrow = g.weight.data.data() + o * F;
                    for (std::size_t f = 0; f < F; ++f) {
                        gwrow[f] += d * x[f];
                        gx[f] += d * wrow[f];
                    }
                }
            }
            grad = std::move(gin);
            break;
        }
        }
    }
    return out;
}

Params backward(const ModelSpec& spec, const Params& params, const Tensor& batch,
                std::span<const ClassLabel> labels, const ClassWeights& w)
{
    return loss_and_gradient(spec, params, batch, labels, w).grads;
}

double model_loss(const ModelSpec& spec, const Params& params, const Tensor& batch,
                  std::span<const ClassLabel> labels, const ClassWeights& w)
{
    return weighted_ce_loss(softmax(forward(spec, params, batch)), labels, w);
}

} // namespace lesion
