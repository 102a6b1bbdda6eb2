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

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uvcg/media.hpp"

namespace uvcg {

struct LatentShape {
    int channels = 0;
    int height = 0;
    int width = 0;

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(channels) * height * width;
    }
    friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

std::string to_string(const LatentShape& shape);

/// Planar (channels x height x width) encoder output. Values are finite.
class LatentTensor {
  public:
    /// Throws NumericalError on NaN/Inf and ConfigError on a size mismatch.
    LatentTensor(LatentShape shape, std::vector<float> values);

    [[nodiscard]] const LatentShape& shape() const { return shape_; }
    [[nodiscard]] std::span<const float> values() const { return values_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }

    friend bool operator==(const LatentTensor&, const LatentTensor&) = default;

  private:
    LatentShape shape_;
    std::vector<float> values_;
};

class LatentSequence {
  public:
    LatentSequence(std::vector<LatentTensor> latents, std::string source_name);

    [[nodiscard]] std::size_t length() const { return latents_.size(); }
    [[nodiscard]] const LatentTensor& at(std::size_t i) const { return latents_.at(i); }
    [[nodiscard]] const std::vector<LatentTensor>& latents() const { return latents_; }
    [[nodiscard]] const LatentShape& shape() const { return latents_.front().shape(); }
    [[nodiscard]] const std::string& source_name() const { return source_name_; }

  private:
    std::vector<LatentTensor> latents_;
    std::string source_name_;
};

enum class EncoderKind { reference, identity, sidecar };

std::string to_string(EncoderKind kind);

struct EncoderSpec {
    EncoderKind kind = EncoderKind::reference;
    std::uint64_t seed = 0;
    int downsample_factor = 8;
    int latent_channels = 4;
    std::string sidecar_command;
};

/// Channel width of every strided layer of the reference encoder.
inline constexpr int kReferenceHiddenChannels = 8;

struct LossGradient {
    double loss = 0.0;
    std::vector<float> grad;  // same layout as the frame (height x width x 3)
};

/// The latent encoder E. Reference and identity endpoints are immutable and
/// safe for concurrent use; sidecar endpoints serialize their requests.
class EncoderEndpoint {
  public:
    virtual ~EncoderEndpoint() = default;

    [[nodiscard]] virtual EncoderKind kind() const = 0;

    /// Output geometry for a frame size; throws ConfigError if incompatible.
    [[nodiscard]] virtual LatentShape latent_shape(int width, int height) const = 0;

    [[nodiscard]] virtual LatentTensor encode(const FrameImage& frame) const = 0;

    /// L = ||E(x + delta) - target||_2^2 and dL/dx. x + delta is not clamped.
    [[nodiscard]] virtual LossGradient loss_gradient(const FrameImage& frame, std::span<const float> delta,
                                                     const LatentTensor& target) const = 0;

    /// L evaluated at an arbitrary interleaved input (height x width x 3),
    /// in the highest precision the endpoint offers. Used by the
    /// finite-difference oracle.
    [[nodiscard]] virtual double evaluate_loss(std::span<const double> input, int width, int height,
                                               const LatentTensor& target) const = 0;
};

/// Throws ConfigError for invalid specs and SidecarError if a sidecar cannot
/// be launched or fails its handshake.
std::unique_ptr<EncoderEndpoint> build_encoder(const EncoderSpec& spec);

/// Central-difference estimate of dL/dx, one coordinate at a time, in
/// double precision.
std::vector<double> finite_difference_gradient(const EncoderEndpoint& endpoint, const FrameImage& frame,
                                               std::span<const float> delta, const LatentTensor& target,
                                               double step);

/// Gradient agreement measure: max_i |analytic_i - numeric_i| divided by
/// max_i |numeric_i|, i.e. the worst coordinate error relative to the
/// gradient's scale.
double gradient_relative_error(std::span<const float> analytic, std::span<const double> numeric);

LatentSequence encode_sequence(const EncoderEndpoint& endpoint, const VideoClip& clip);

/// Sum of squared differences, accumulated in double.
double squared_distance(const LatentTensor& a, const LatentTensor& b);

}  // namespace uvcg
