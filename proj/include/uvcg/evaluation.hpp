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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uvcg/encoder.hpp"
#include "uvcg/media.hpp"

namespace uvcg {

inline constexpr double kPsnrCapDb = 100.0;

/// SSIM constants: 11x11 Gaussian window with sigma 1.5, K1 = 0.01,
/// K2 = 0.03, dynamic range 1. Statistics are taken over every full window
/// position ("valid" region), per channel, and the channel means averaged.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

struct MetricSeries {
    double mean = 0.0;
    std::vector<double> per_frame;
};

/// 10 log10(1 / MSE), peak 1, capped at kPsnrCapDb (also when MSE = 0).
double psnr_frame(const FrameImage& a, const FrameImage& b);
double ssim_frame(const FrameImage& a, const FrameImage& b);

/// Both throw ConfigError unless the clips have equal length and resolution;
/// ssim also requires frames of at least 11x11.
MetricSeries psnr(const VideoClip& a, const VideoClip& b);
MetricSeries ssim(const VideoClip& a, const VideoClip& b);

/// Produces unit-norm embeddings of frames and, if supported, of text.
class Embedder {
  public:
    virtual ~Embedder() = default;
    [[nodiscard]] virtual std::string kind() const = 0;
    [[nodiscard]] virtual std::vector<float> embed_image(const FrameImage& frame) const = 0;
    [[nodiscard]] virtual bool supports_text() const = 0;
    /// Throws CapabilityError when supports_text() is false.
    [[nodiscard]] virtual std::vector<float> embed_text(const std::string& text) const = 0;
};

/// Flattened latent of a reference encoder, L2-normalized. No text support.
std::unique_ptr<Embedder> make_reference_embedder(const EncoderSpec& spec);

/// Embeddings from a sidecar (opcodes 4 and 5), normalized on receipt.
std::unique_ptr<Embedder> make_sidecar_embedder(const std::string& command);

/// Mean cosine similarity of consecutive frame embeddings; per_frame holds
/// the n - 1 pair values. Throws ConfigError for single-frame clips.
MetricSeries frame_consistency(const VideoClip& clip, const Embedder& embedder);

/// Mean cosine similarity between each frame and the prompt embedding.
MetricSeries prompt_consistency(const VideoClip& clip, const std::string& prompt, const Embedder& embedder);

struct EvaluationReport {
    nlohmann::json meta = nlohmann::json::object();
    std::optional<double> prompt_consistency;
    double frame_consistency = 0.0;
    std::optional<double> ssim;
    std::optional<double> psnr;
    std::optional<double> lpips;  // reserved for external tools
    std::optional<double> vmaf;   // reserved for external tools
    std::vector<double> per_frame_ssim;
    std::vector<double> per_frame_psnr;
    std::vector<double> per_frame_frame_cos;
};

/// Throws SchemaError unless doc matches the report schema: exactly the keys
/// meta, prompt_consistency, frame_consistency, ssim, psnr, lpips, vmaf,
/// per_frame{ssim, psnr, frame_cos}; every non-null aggregate backed by a
/// non-empty per-frame list whose arithmetic_mean equals it exactly.
void validate_report_json(const nlohmann::json& doc);

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& doc);

/// Validates, then writes JSON to path and, if csv_path is given, one
/// "metric,scope,value" row per aggregate metric.
void emit_report(const EvaluationReport& report, const std::filesystem::path& path,
                 const std::optional<std::filesystem::path>& csv_path = std::nullopt);

}  // namespace uvcg
