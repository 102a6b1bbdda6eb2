/*
 * Copyright 2026 The uvcg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uvcg/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sidecar_encoder.hpp"
#include "uvcg/error.hpp"
#include "uvcg/kernels/kernels.hpp"
#include "uvcg/random.hpp"

namespace uvcg {

std::string to_string(const LatentShape& shape) {
    return "(" + std::to_string(shape.channels) + ", " + std::to_string(shape.height) + ", " +
           std::to_string(shape.width) + ")";
}

std::string to_string(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::reference: return "reference";
        case EncoderKind::identity: return "identity";
        case EncoderKind::sidecar: return "sidecar";
    }
    return "unknown";
}

LatentTensor::LatentTensor(LatentShape shape, std::vector<float> values)
    : shape_(shape), values_(std::move(values)) {
    if (shape_.channels < 1 || shape_.height < 1 || shape_.width < 1) {
        throw ConfigError("latent shape must be positive, got " + to_string(shape_));
    }
    if (values_.size() != shape_.size()) throw ConfigError("latent buffer does not match shape " + to_string(shape_));
    for (float v : values_) {
        if (!std::isfinite(v)) throw NumericalError("latent contains a non-finite value");
    }
}

LatentSequence::LatentSequence(std::vector<LatentTensor> latents, std::string source_name)
    : latents_(std::move(latents)), source_name_(std::move(source_name)) {
    if (latents_.empty()) throw ConfigError("latent sequence must not be empty");
    for (const auto& z : latents_) {
        if (z.shape() != latents_.front().shape()) throw ConfigError("latents of one sequence must share a shape");
    }
}

double squared_distance(const LatentTensor& a, const LatentTensor& b) {
    if (a.shape() != b.shape()) {
        throw ConfigError("latent shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.values()[i]) - static_cast<double>(b.values()[i]);
        sum += d * d;
    }
    return sum;
}

namespace {

void check_delta(const FrameImage& frame, std::span<const float> delta) {
    if (delta.size() != frame.size()) throw ConfigError("perturbation does not match frame size");
}

void check_target(const LatentShape& expected, const LatentTensor& target) {
    if (target.shape() != expected) {
        throw ConfigError("target latent shape " + to_string(target.shape()) + " does not match encoder output " +
                          to_string(expected));
    }
}

class IdentityEncoder final : public EncoderEndpoint {
  public:
    EncoderKind kind() const override { return EncoderKind::identity; }

    LatentShape latent_shape(int width, int height) const override { return {3, height, width}; }

    LatentTensor encode(const FrameImage& frame) const override {
        const LatentShape shape = latent_shape(frame.width(), frame.height());
        const std::size_t plane = static_cast<std::size_t>(frame.width()) * frame.height();
        std::vector<float> planar(frame.size());
        const auto px = frame.pixels();
        for (std::size_t p = 0; p < plane; ++p) {
            for (int c = 0; c < 3; ++c) planar[c * plane + p] = px[p * 3 + c];
        }
        return LatentTensor(shape, std::move(planar));
    }

    LossGradient loss_gradient(const FrameImage& frame, std::span<const float> delta,
                               const LatentTensor& target) const override {
        check_delta(frame, delta);
        check_target(latent_shape(frame.width(), frame.height()), target);
        const std::size_t plane = static_cast<std::size_t>(frame.width()) * frame.height();
        const auto px = frame.pixels();
        const auto z = target.values();
        LossGradient out;
        out.grad.resize(frame.size());
        for (std::size_t p = 0; p < plane; ++p) {
            for (int c = 0; c < 3; ++c) {
                const std::size_t i = p * 3 + c;
                const float diff = (px[i] + delta[i]) - z[c * plane + p];
                out.loss += static_cast<double>(diff) * static_cast<double>(diff);
                out.grad[i] = 2.0f * diff;
            }
        }
        return out;
    }

    double evaluate_loss(std::span<const double> input, int width, int height,
                         const LatentTensor& target) const override {
        check_target(latent_shape(width, height), target);
        const std::size_t plane = static_cast<std::size_t>(width) * height;
        double loss = 0.0;
        for (std::size_t p = 0; p < plane; ++p) {
            for (int c = 0; c < 3; ++c) {
                const double diff = input[p * 3 + c] - static_cast<double>(target.values()[c * plane + p]);
                loss += diff * diff;
            }
        }
        return loss;
    }
};

struct ConvLayer {
    int cin = 0;
    int cout = 0;
    bool strided = false;      // 3x3 stride 2 pad 1, else 1x1
    std::vector<float> w;      // [taps][cin][cout]
    std::vector<float> wt;     // [taps][cout][cin]
    std::vector<float> bias;   // [cout]
};

int log2_exact(int v) {
    int k = 0;
    while ((1 << k) < v) ++k;
    return (1 << k) == v ? k : -1;
}

// Weights are drawn in layer order; within a layer in [cout][cin][ky][kx]
// order, then the cout biases, each uniform in [-s, s] with s = 1/sqrt(fan_in).
ConvLayer make_layer(Rng& rng, int cin, int cout, bool strided) {
    ConvLayer layer;
    layer.cin = cin;
    layer.cout = cout;
    layer.strided = strided;
    const int taps = strided ? 9 : 1;
    const float bound = static_cast<float>(1.0 / std::sqrt(static_cast<double>(cin * taps)));
    layer.w.assign(static_cast<std::size_t>(taps) * cin * cout, 0.0f);
    layer.wt.assign(layer.w.size(), 0.0f);
    for (int co = 0; co < cout; ++co) {
        for (int ci = 0; ci < cin; ++ci) {
            for (int t = 0; t < taps; ++t) {
                const float v = rng.uniform(-bound, bound);
                layer.w[(static_cast<std::size_t>(t) * cin + ci) * cout + co] = v;
                layer.wt[(static_cast<std::size_t>(t) * cout + co) * cin + ci] = v;
            }
        }
    }
    layer.bias.resize(static_cast<std::size_t>(cout));
    for (auto& b : layer.bias) b = rng.uniform(-bound, bound);
    return layer;
}

class ReferenceEncoder final : public EncoderEndpoint {
  public:
    ReferenceEncoder(std::uint64_t seed, int downsample_factor, int latent_channels)
        : factor_(downsample_factor), latent_channels_(latent_channels) {
        const int levels = log2_exact(downsample_factor);
        if (downsample_factor < 1 || levels < 0) {
            throw ConfigError("downsample_factor must be a power of two, got " + std::to_string(downsample_factor));
        }
        if (latent_channels < 1) throw ConfigError("latent_channels must be >= 1");
        Rng rng(seed);
        int channels = 3;
        for (int l = 0; l < levels; ++l) {
            layers_.push_back(make_layer(rng, channels, kReferenceHiddenChannels, true));
            channels = kReferenceHiddenChannels;
        }
        head_ = make_layer(rng, channels, latent_channels, false);
    }

    EncoderKind kind() const override { return EncoderKind::reference; }

    LatentShape latent_shape(int width, int height) const override {
        if (width % factor_ != 0 || height % factor_ != 0) {
            throw ConfigError("frame size " + std::to_string(width) + "x" + std::to_string(height) +
                              " is not divisible by downsample_factor " + std::to_string(factor_));
        }
        return {latent_channels_, height / factor_, width / factor_};
    }

    LatentTensor encode(const FrameImage& frame) const override {
        const LatentShape shape = latent_shape(frame.width(), frame.height());
        Activations acts = forward(frame.pixels(), frame.width(), frame.height());
        return LatentTensor(shape, to_planar(acts.output, shape));
    }

    LossGradient loss_gradient(const FrameImage& frame, std::span<const float> delta,
                               const LatentTensor& target) const override {
        check_delta(frame, delta);
        const LatentShape shape = latent_shape(frame.width(), frame.height());
        check_target(shape, target);

        std::vector<float> input(frame.size());
        const auto px = frame.pixels();
        for (std::size_t i = 0; i < input.size(); ++i) input[i] = px[i] + delta[i];
        const Activations acts = forward(input, frame.width(), frame.height());

        // dL/dout, interleaved like the head output.
        const std::size_t plane = static_cast<std::size_t>(shape.height) * shape.width;
        const auto z = target.values();
        LossGradient result;
        std::vector<float> grad(acts.output.size());
        for (std::size_t p = 0; p < plane; ++p) {
            for (int c = 0; c < shape.channels; ++c) {
                const float diff = acts.output[p * shape.channels + c] - z[c * plane + p];
                result.loss += static_cast<double>(diff) * static_cast<double>(diff);
                grad[p * shape.channels + c] = 2.0f * diff;
            }
        }

        const kernels::KernelSet& k = kernels::active_kernels();
        std::vector<float> upstream(plane * static_cast<std::size_t>(head_.cin));
        k.pointwise_backward_input(plane, head_.cin, head_.cout, grad.data(), head_.wt.data(), upstream.data());

        int h = frame.height() / factor_;
        int w = frame.width() / factor_;
        for (std::size_t l = layers_.size(); l-- > 0;) {
            const ConvLayer& layer = layers_[l];
            const std::vector<float>& act = acts.hidden[l];
            k.tanh_backward(act.size(), act.data(), upstream.data());
            const kernels::StridedConvShape s{h * 2, w * 2, layer.cin, layer.cout};
            std::vector<float> below(static_cast<std::size_t>(s.in_h) * s.in_w * s.cin);
            k.conv3x3s2_backward_input(s, upstream.data(), layer.wt.data(), below.data());
            upstream = std::move(below);
            h *= 2;
            w *= 2;
        }
        result.grad = std::move(upstream);
        return result;
    }

    double evaluate_loss(std::span<const double> input, int width, int height,
                         const LatentTensor& target) const override {
        const LatentShape shape = latent_shape(width, height);
        check_target(shape, target);
        std::vector<double> act(input.begin(), input.end());
        int h = height;
        int w = width;
        for (const ConvLayer& layer : layers_) {
            const int oh = h / 2;
            const int ow = w / 2;
            std::vector<double> out(static_cast<std::size_t>(oh) * ow * layer.cout);
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    for (int co = 0; co < layer.cout; ++co) {
                        double acc = layer.bias[co];
                        for (int ky = 0; ky < 3; ++ky) {
                            const int iy = 2 * oy - 1 + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int ix = 2 * ox - 1 + kx;
                                if (ix < 0 || ix >= w) continue;
                                for (int ci = 0; ci < layer.cin; ++ci) {
                                    acc += act[(static_cast<std::size_t>(iy) * w + ix) * layer.cin + ci] *
                                           layer.w[((ky * 3 + kx) * static_cast<std::size_t>(layer.cin) + ci) *
                                                       layer.cout + co];
                                }
                            }
                        }
                        out[(static_cast<std::size_t>(oy) * ow + ox) * layer.cout + co] = std::tanh(acc);
                    }
                }
            }
            act = std::move(out);
            h = oh;
            w = ow;
        }
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        double loss = 0.0;
        for (std::size_t p = 0; p < plane; ++p) {
            for (int co = 0; co < head_.cout; ++co) {
                double acc = head_.bias[co];
                for (int ci = 0; ci < head_.cin; ++ci) {
                    acc += act[p * head_.cin + ci] * head_.w[static_cast<std::size_t>(ci) * head_.cout + co];
                }
                const double diff = acc - static_cast<double>(target.values()[co * plane + p]);
                loss += diff * diff;
            }
        }
        return loss;
    }

  private:
    struct Activations {
        std::vector<std::vector<float>> hidden;  // tanh outputs per strided layer
        std::vector<float> output;               // head output, interleaved
    };

    Activations forward(std::span<const float> input, int width, int height) const {
        const kernels::KernelSet& k = kernels::active_kernels();
        Activations acts;
        acts.hidden.reserve(layers_.size());
        const float* in = input.data();
        int h = height;
        int w = width;
        for (const ConvLayer& layer : layers_) {
            const kernels::StridedConvShape s{h, w, layer.cin, layer.cout};
            std::vector<float> out(static_cast<std::size_t>(s.out_h()) * s.out_w() * s.cout);
            k.conv3x3s2_forward(s, in, layer.w.data(), layer.bias.data(), out.data());
            for (float& v : out) v = std::tanh(v);
            acts.hidden.push_back(std::move(out));
            in = acts.hidden.back().data();
            h = s.out_h();
            w = s.out_w();
        }
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        acts.output.resize(plane * static_cast<std::size_t>(head_.cout));
        k.pointwise_forward(plane, head_.cin, head_.cout, in, head_.w.data(), head_.bias.data(), acts.output.data());
        return acts;
    }

    static std::vector<float> to_planar(const std::vector<float>& interleaved, const LatentShape& shape) {
        const std::size_t plane = static_cast<std::size_t>(shape.height) * shape.width;
        std::vector<float> planar(interleaved.size());
        for (std::size_t p = 0; p < plane; ++p) {
            for (int c = 0; c < shape.channels; ++c) planar[c * plane + p] = interleaved[p * shape.channels + c];
        }
        return planar;
    }

    int factor_;
    int latent_channels_;
    std::vector<ConvLayer> layers_;
    ConvLayer head_;
};

}  // namespace

std::unique_ptr<EncoderEndpoint> build_encoder(const EncoderSpec& spec) {
    switch (spec.kind) {
        case EncoderKind::reference:
            return std::make_unique<ReferenceEncoder>(spec.seed, spec.downsample_factor, spec.latent_channels);
        case EncoderKind::identity: return std::make_unique<IdentityEncoder>();
        case EncoderKind::sidecar: return detail::make_sidecar_encoder(spec.sidecar_command);
    }
    throw ConfigError("unknown encoder kind");
}

std::vector<double> finite_difference_gradient(const EncoderEndpoint& endpoint, const FrameImage& frame,
                                               std::span<const float> delta, const LatentTensor& target,
                                               double step) {
    if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
    check_delta(frame, delta);
    std::vector<double> input(frame.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        input[i] = static_cast<double>(frame.pixels()[i]) + static_cast<double>(delta[i]);
    }
    std::vector<double> grad(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double saved = input[i];
        input[i] = saved + step;
        const double up = endpoint.evaluate_loss(input, frame.width(), frame.height(), target);
        input[i] = saved - step;
        const double down = endpoint.evaluate_loss(input, frame.width(), frame.height(), target);
        input[i] = saved;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double gradient_relative_error(std::span<const float> analytic, std::span<const double> numeric) {
    if (analytic.size() != numeric.size()) throw ConfigError("gradient sizes differ");
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        worst = std::max(worst, std::fabs(static_cast<double>(analytic[i]) - numeric[i]));
        scale = std::max(scale, std::fabs(numeric[i]));
    }
    if (scale == 0.0) return worst == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return worst / scale;
}

LatentSequence encode_sequence(const EncoderEndpoint& endpoint, const VideoClip& clip) {
    std::vector<LatentTensor> latents;
    latents.reserve(clip.length());
    for (const auto& frame : clip.frames()) latents.push_back(endpoint.encode(frame));
    return LatentSequence(std::move(latents), clip.name());
}

}  // namespace uvcg
