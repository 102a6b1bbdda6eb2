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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uvcg/encoder.hpp"
#include "uvcg/media.hpp"
#include "uvcg/random.hpp"

namespace uvcg {

struct ProtectionConfig {
    float epsilon = 15.0f / 255.0f;  // l-infinity budget, normalized intensity
    float alpha = 2.0f / 255.0f;     // sign-step size
    int steps = 200;
    bool warm_start = true;
    std::uint64_t seed = 0;
    float pixel_min = 0.0f;
    float pixel_max = 1.0f;
    /// Return the final iterate instead of the lowest-loss one.
    bool last_iterate = false;
    /// Start frame 0 (and every frame when warm_start is off) from zero
    /// instead of uniform noise.
    bool zero_init = false;

    /// Requires 0 < alpha <= epsilon <= 1, steps >= 1 and
    /// 0 <= pixel_min < pixel_max <= 1. Throws ConfigError.
    void validate() const;
};

/// Per-frame perturbations, every entry within [-epsilon, epsilon].
class PerturbationField {
  public:
    PerturbationField(std::vector<std::vector<float>> deltas, float epsilon);

    [[nodiscard]] std::size_t length() const { return deltas_.size(); }
    [[nodiscard]] const std::vector<float>& at(std::size_t i) const { return deltas_.at(i); }
    [[nodiscard]] const std::vector<std::vector<float>>& deltas() const { return deltas_; }
    [[nodiscard]] float epsilon() const { return epsilon_; }
    /// Largest |entry| over all frames.
    [[nodiscard]] float max_abs() const;

  private:
    std::vector<std::vector<float>> deltas_;
    float epsilon_;
};

struct FrameFailure {
    std::size_t frame = 0;
    std::string reason;
};

struct ProtectionResult {
    ProtectionResult(VideoClip immunized_clip, PerturbationField field)
        : immunized(std::move(immunized_clip)), perturbations(std::move(field)) {}

    VideoClip immunized;
    PerturbationField perturbations;
    /// False for the noise baseline, whose loss fields are empty.
    bool has_losses = true;
    /// Loss at the first iterate (after projecting the initial perturbation).
    std::vector<double> per_frame_loss_initial;
    /// Loss of the returned iterate.
    std::vector<double> per_frame_loss_final;
    /// Loss of the unperturbed frame, ||E(x) - z||^2.
    std::vector<double> per_frame_loss_clean;
    std::vector<int> per_frame_iterations;
    std::vector<std::size_t> target_indices;
    std::vector<std::vector<double>> loss_traces;
    std::vector<FrameFailure> failures;
    double wall_clock_seconds = 0.0;
};

/// Index of the target latent aligned with frame i: i mod m.
std::size_t target_for_frame(std::size_t i, std::size_t m);

/// Initial perturbation for frame i. Frame 0, or any frame with warm start
/// disabled, draws each entry from U(-epsilon, epsilon) (zeros with
/// zero_init); otherwise the previous frame's final perturbation is copied.
std::vector<float> init_delta(std::size_t i, std::optional<std::span<const float>> previous_final, std::size_t size,
                              const ProtectionConfig& config, Rng& rng);

/// delta' = clamp(clamp(delta - alpha * sign(grad), -eps, eps), pixel_min - x, pixel_max - x),
/// sign(0) = 0.
std::vector<float> pgd_step(std::span<const float> delta, std::span<const float> grad, const ProtectionConfig& config,
                            const FrameImage& frame);

struct FrameProtection {
    std::vector<float> delta;
    /// Loss of every iterate delta^0 .. delta^T (T + 1 entries), rounded to
    /// float32 precision.
    std::vector<double> loss_trace;
    std::size_t returned_iterate = 0;
};

/// Runs config.steps sign-descent iterations from init (first projected onto
/// the pixel range). Throws NumericalError if the loss becomes NaN.
FrameProtection protect_frame(const FrameImage& frame, const LatentTensor& target, std::span<const float> init,
                              const EncoderEndpoint& endpoint, const ProtectionConfig& config);

/// Aligns every frame of clip with the target clip's latent sequence,
/// frames in order with warm start. A frame whose loss turns NaN is recorded
/// in failures and left unperturbed.
ProtectionResult protect_video(const VideoClip& clip, const VideoClip& target, const EncoderEndpoint& endpoint,
                               const ProtectionConfig& config);

/// Independent U(-epsilon, epsilon) noise per frame, pixel-clamped.
ProtectionResult random_noise_baseline(const VideoClip& clip, const ProtectionConfig& config);

/// Writes delta_%05d.f32 (raw float32 little-endian, height x width x 3) per
/// frame plus index.json into directory.
void write_perturbations(const PerturbationField& field, int width, int height, const std::filesystem::path& directory);

struct PerturbationFiles {
    int width = 0;
    int height = 0;
    float epsilon = 0.0f;
    std::vector<std::vector<float>> deltas;
};

/// Reads a directory written by write_perturbations without enforcing the
/// budget, so it can be audited.
PerturbationFiles read_perturbations(const std::filesystem::path& directory);

}  // namespace uvcg
