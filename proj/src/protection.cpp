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

#include "uvcg/protection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "uvcg/error.hpp"
#include "uvcg/kernels/kernels.hpp"

namespace uvcg {

void ProtectionConfig::validate() const {
    if (!(epsilon > 0.0f && epsilon <= 1.0f)) throw ConfigError("epsilon must lie in (0, 1]");
    if (!(alpha > 0.0f && alpha <= epsilon)) throw ConfigError("alpha must satisfy 0 < alpha <= epsilon");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (!(pixel_min >= 0.0f && pixel_min < pixel_max && pixel_max <= 1.0f)) {
        throw ConfigError("pixel range must satisfy 0 <= pixel_min < pixel_max <= 1");
    }
}

PerturbationField::PerturbationField(std::vector<std::vector<float>> deltas, float epsilon)
    : deltas_(std::move(deltas)), epsilon_(epsilon) {
    for (const auto& d : deltas_) {
        for (float v : d) {
            if (!(std::fabs(v) <= epsilon_)) throw IntegrityError("perturbation entry exceeds the budget");
        }
    }
}

float PerturbationField::max_abs() const {
    float m = 0.0f;
    for (const auto& d : deltas_) {
        for (float v : d) m = std::max(m, std::fabs(v));
    }
    return m;
}

std::size_t target_for_frame(std::size_t i, std::size_t m) {
    if (m == 0) throw ConfigError("target sequence is empty");
    return i % m;
}

std::vector<float> init_delta(std::size_t i, std::optional<std::span<const float>> previous_final, std::size_t size,
                              const ProtectionConfig& config, Rng& rng) {
    if (i > 0 && config.warm_start) {
        if (!previous_final) throw ConfigError("warm start needs the previous frame's perturbation");
        if (previous_final->size() != size) throw ConfigError("previous perturbation has the wrong size");
        return {previous_final->begin(), previous_final->end()};
    }
    std::vector<float> delta(size, 0.0f);
    if (!config.zero_init) {
        for (float& v : delta) v = rng.uniform(-config.epsilon, config.epsilon);
    }
    return delta;
}

std::vector<float> pgd_step(std::span<const float> delta, std::span<const float> grad, const ProtectionConfig& config,
                            const FrameImage& frame) {
    if (delta.size() != frame.size() || grad.size() != frame.size()) {
        throw ConfigError("pgd_step operands must match the frame size");
    }
    std::vector<float> out(delta.begin(), delta.end());
    kernels::active_kernels().pgd_step(out.size(), frame.pixels().data(), grad.data(), config.alpha, config.epsilon,
                                       config.pixel_min, config.pixel_max, out.data());
    return out;
}

namespace {

// Projection alone: a step with zero gradient.
std::vector<float> project(std::span<const float> delta, const ProtectionConfig& config, const FrameImage& frame) {
    const std::vector<float> zero(delta.size(), 0.0f);
    return pgd_step(delta, zero, config, frame);
}

FrameImage apply(const FrameImage& frame, std::span<const float> delta, const ProtectionConfig& config) {
    const auto px = frame.pixels();
    std::vector<float> out(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        out[i] = std::clamp(px[i] + delta[i], config.pixel_min, config.pixel_max);
    }
    return FrameImage(frame.width(), frame.height(), std::move(out));
}

LossGradient checked_loss_gradient(const EncoderEndpoint& endpoint, const FrameImage& frame,
                                   std::span<const float> delta, const LatentTensor& target, std::size_t t) {
    LossGradient lg = endpoint.loss_gradient(frame, delta, target);
    if (std::isnan(lg.loss)) throw NumericalError("loss is NaN at iteration " + std::to_string(t));
    // Kept at float32, the wire precision of sidecar endpoints, so every
    // endpoint selects iterates from identical values.
    lg.loss = static_cast<double>(static_cast<float>(lg.loss));
    return lg;
}

}  // namespace

FrameProtection protect_frame(const FrameImage& frame, const LatentTensor& target, std::span<const float> init,
                              const EncoderEndpoint& endpoint, const ProtectionConfig& config) {
    config.validate();
    if (init.size() != frame.size()) throw ConfigError("initial perturbation does not match the frame");
    for (float v : init) {
        if (!(std::fabs(v) <= config.epsilon)) throw ConfigError("initial perturbation exceeds the budget");
    }

    FrameProtection out;
    out.loss_trace.reserve(static_cast<std::size_t>(config.steps) + 1);
    std::vector<float> delta = project(init, config, frame);
    std::vector<float> best = delta;
    double best_loss = std::numeric_limits<double>::infinity();

    for (int t = 0; t <= config.steps; ++t) {
        LossGradient lg = checked_loss_gradient(endpoint, frame, delta, target, static_cast<std::size_t>(t));
        out.loss_trace.push_back(lg.loss);
        if (lg.loss < best_loss) {
            best_loss = lg.loss;
            best = delta;
            out.returned_iterate = static_cast<std::size_t>(t);
        }
        if (t == config.steps) break;
        delta = pgd_step(delta, lg.grad, config, frame);
    }

    if (config.last_iterate) {
        out.delta = std::move(delta);
        out.returned_iterate = static_cast<std::size_t>(config.steps);
    } else {
        out.delta = std::move(best);
    }
    return out;
}

ProtectionResult protect_video(const VideoClip& clip, const VideoClip& target, const EncoderEndpoint& endpoint,
                               const ProtectionConfig& config) {
    config.validate();
    if (clip.width() != target.width() || clip.height() != target.height()) {
        throw ConfigError("target resolution " + std::to_string(target.width()) + "x" + std::to_string(target.height()) +
                          " differs from protected resolution " + std::to_string(clip.width()) + "x" +
                          std::to_string(clip.height()));
    }
    const auto started = std::chrono::steady_clock::now();

    const LatentSequence targets = encode_sequence(endpoint, target);
    Rng rng(config.seed);
    const std::size_t n = clip.length();
    const std::size_t size = clip.frame(0).size();

    std::vector<FrameImage> frames;
    std::vector<std::vector<float>> deltas;
    frames.reserve(n);
    deltas.reserve(n);

    // Filled per frame; moved into the result once the clip is assembled.
    struct {
        std::vector<double> per_frame_loss_clean, per_frame_loss_initial, per_frame_loss_final;
        std::vector<int> per_frame_iterations;
        std::vector<std::size_t> target_indices;
        std::vector<std::vector<double>> loss_traces;
        std::vector<FrameFailure> failures;
    } partial;
    for (std::size_t i = 0; i < n; ++i) {
        const FrameImage& frame = clip.frame(i);
        const std::size_t ti = target_for_frame(i, targets.length());
        const LatentTensor& z = targets.at(ti);
        partial.target_indices.push_back(ti);

        std::optional<std::span<const float>> previous;
        if (i > 0) previous = std::span<const float>(deltas.back());
        const std::vector<float> init = init_delta(i, previous, size, config, rng);

        std::vector<float> delta;
        try {
            const std::vector<float> zero(size, 0.0f);
            const double clean = checked_loss_gradient(endpoint, frame, zero, z, 0).loss;
            FrameProtection fp = protect_frame(frame, z, init, endpoint, config);
            partial.per_frame_loss_clean.push_back(clean);
            partial.per_frame_loss_initial.push_back(fp.loss_trace.front());
            partial.per_frame_loss_final.push_back(fp.loss_trace[fp.returned_iterate]);
            partial.per_frame_iterations.push_back(config.steps);
            partial.loss_traces.push_back(std::move(fp.loss_trace));
            delta = std::move(fp.delta);
        } catch (const NumericalError& e) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            partial.failures.push_back({i, e.what()});
            partial.per_frame_loss_clean.push_back(nan);
            partial.per_frame_loss_initial.push_back(nan);
            partial.per_frame_loss_final.push_back(nan);
            partial.per_frame_iterations.push_back(0);
            partial.loss_traces.emplace_back();
            delta.assign(size, 0.0f);
        }
        frames.push_back(apply(frame, delta, config));
        deltas.push_back(std::move(delta));
    }

    ProtectionResult result{VideoClip(std::move(frames), clip.fps(), clip.name() + "_immunized"),
                            PerturbationField(std::move(deltas), config.epsilon)};
    result.per_frame_loss_initial = std::move(partial.per_frame_loss_initial);
    result.per_frame_loss_final = std::move(partial.per_frame_loss_final);
    result.per_frame_loss_clean = std::move(partial.per_frame_loss_clean);
    result.per_frame_iterations = std::move(partial.per_frame_iterations);
    result.target_indices = std::move(partial.target_indices);
    result.loss_traces = std::move(partial.loss_traces);
    result.failures = std::move(partial.failures);
    result.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

ProtectionResult random_noise_baseline(const VideoClip& clip, const ProtectionConfig& config) {
    if (!(config.epsilon > 0.0f && config.epsilon <= 1.0f)) throw ConfigError("epsilon must lie in (0, 1]");
    const auto started = std::chrono::steady_clock::now();
    Rng rng(config.seed);
    std::vector<FrameImage> frames;
    std::vector<std::vector<float>> deltas;
    for (const FrameImage& frame : clip.frames()) {
        std::vector<float> delta(frame.size());
        for (float& v : delta) v = rng.uniform(-config.epsilon, config.epsilon);
        delta = project(delta, config, frame);
        frames.push_back(apply(frame, delta, config));
        deltas.push_back(std::move(delta));
    }
    ProtectionResult result{VideoClip(std::move(frames), clip.fps(), clip.name() + "_noise"),
                            PerturbationField(std::move(deltas), config.epsilon)};
    result.has_losses = false;
    result.per_frame_iterations.assign(clip.length(), 0);
    result.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

namespace fs = std::filesystem;

void write_perturbations(const PerturbationField& field, int width, int height, const fs::path& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < field.length(); ++i) {
        const std::string name = format_frame_name("delta_%05d.f32", static_cast<int>(i));
        std::ofstream out(directory / name, std::ios::binary | std::ios::trunc);
        const auto& d = field.at(i);
        // Host is little-endian (asserted by the protocol codec).
        out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(float)));
        if (!out) throw IoError("cannot write " + (directory / name).string());
        files.push_back(name);
    }
    const nlohmann::json index = {
        {"dtype", "float32"},   {"byte_order", "little"}, {"layout", "height,width,channel"},
        {"width", width},       {"height", height},       {"channels", 3},
        {"epsilon", field.epsilon()}, {"frame_count", field.length()}, {"files", files},
    };
    std::ofstream out(directory / "index.json", std::ios::trunc);
    out << index.dump(2) << '\n';
    if (!out) throw IoError("cannot write perturbation index");
}

PerturbationFiles read_perturbations(const fs::path& directory) {
    std::ifstream in(directory / "index.json");
    if (!in) throw FormatError("missing perturbation index in " + directory.string());
    PerturbationFiles result;
    std::vector<std::string> files;
    try {
        const auto index = nlohmann::json::parse(in);
        if (index.at("dtype").get<std::string>() != "float32") throw FormatError("perturbation dtype must be float32");
        result.width = index.at("width").get<int>();
        result.height = index.at("height").get<int>();
        result.epsilon = index.at("epsilon").get<float>();
        files = index.at("files").get<std::vector<std::string>>();
        if (index.at("frame_count").get<std::size_t>() != files.size()) {
            throw IntegrityError("perturbation index frame_count disagrees with its file list");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed perturbation index: ") + e.what());
    }
    const std::size_t count = static_cast<std::size_t>(result.width) * result.height * 3;
    for (const auto& name : files) {
        std::ifstream f(directory / name, std::ios::binary);
        if (!f) throw IntegrityError("missing perturbation file " + name);
        std::vector<float> d(count);
        f.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(count * sizeof(float)));
        if (f.gcount() != static_cast<std::streamsize>(count * sizeof(float)) || f.peek() != EOF) {
            throw IntegrityError("perturbation file " + name + " has the wrong size");
        }
        result.deltas.push_back(std::move(d));
    }
    return result;
}

}  // namespace uvcg
