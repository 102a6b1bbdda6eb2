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

#include "uvcg/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "uvcg/error.hpp"
#include "uvcg/sidecar.hpp"
#include "uvcg/similarity.hpp"

namespace uvcg {

using nlohmann::json;

namespace {

void check_pair(const FrameImage& a, const FrameImage& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw ConfigError("frames differ in resolution");
}

void check_clips(const VideoClip& a, const VideoClip& b) {
    if (a.length() != b.length()) {
        throw ConfigError("clips differ in length: " + std::to_string(a.length()) + " vs " + std::to_string(b.length()));
    }
    if (a.width() != b.width() || a.height() != b.height()) throw ConfigError("clips differ in resolution");
}

std::vector<double> gaussian_window() {
    std::vector<double> g(kSsimWindow);
    const int r = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - r;
        g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

// Separable valid-region Gaussian filter of one h x w plane.
std::vector<double> blur_valid(const std::vector<double>& plane, int h, int w, const std::vector<double>& g) {
    const int oh = h - kSsimWindow + 1;
    const int ow = w - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * plane[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

std::vector<float> normalized(std::vector<float> v) {
    double n = 0.0;
    for (float x : v) n += static_cast<double>(x) * x;
    if (n == 0.0 || !std::isfinite(n)) throw NumericalError("embedding has zero or non-finite norm");
    const double inv = 1.0 / std::sqrt(n);
    for (float& x : v) x = static_cast<float>(x * inv);
    return v;
}

}  // namespace

double psnr_frame(const FrameImage& a, const FrameImage& b) {
    check_pair(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.pixels()[i]) - static_cast<double>(b.pixels()[i]);
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double ssim_frame(const FrameImage& a, const FrameImage& b) {
    check_pair(a, b);
    const int h = a.height();
    const int w = a.width();
    if (h < kSsimWindow || w < kSsimWindow) throw ConfigError("SSIM needs frames of at least 11x11 pixels");
    static const std::vector<double> g = gaussian_window();
    const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
    const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    double channel_sum = 0.0;
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t p = 0; p < plane; ++p) {
            x[p] = a.pixels()[p * 3 + c];
            y[p] = b.pixels()[p * 3 + c];
            xx[p] = x[p] * x[p];
            yy[p] = y[p] * y[p];
            xy[p] = x[p] * y[p];
        }
        const auto mx = blur_valid(x, h, w, g);
        const auto my = blur_valid(y, h, w, g);
        const auto mxx = blur_valid(xx, h, w, g);
        const auto myy = blur_valid(yy, h, w, g);
        const auto mxy = blur_valid(xy, h, w, g);
        double sum = 0.0;
        for (std::size_t p = 0; p < mx.size(); ++p) {
            const double vx = mxx[p] - mx[p] * mx[p];
            const double vy = myy[p] - my[p] * my[p];
            const double cov = mxy[p] - mx[p] * my[p];
            sum += ((2.0 * mx[p] * my[p] + c1) * (2.0 * cov + c2)) /
                   ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
        }
        channel_sum += sum / static_cast<double>(mx.size());
    }
    return std::clamp(channel_sum / 3.0, -1.0, 1.0);
}

MetricSeries psnr(const VideoClip& a, const VideoClip& b) {
    check_clips(a, b);
    MetricSeries s;
    for (std::size_t i = 0; i < a.length(); ++i) s.per_frame.push_back(psnr_frame(a.frame(i), b.frame(i)));
    s.mean = arithmetic_mean(s.per_frame);
    return s;
}

MetricSeries ssim(const VideoClip& a, const VideoClip& b) {
    check_clips(a, b);
    MetricSeries s;
    for (std::size_t i = 0; i < a.length(); ++i) s.per_frame.push_back(ssim_frame(a.frame(i), b.frame(i)));
    s.mean = arithmetic_mean(s.per_frame);
    return s;
}

namespace {

class ReferenceEmbedder final : public Embedder {
  public:
    explicit ReferenceEmbedder(const EncoderSpec& spec) : encoder_(build_encoder(spec)) {}

    std::string kind() const override { return "reference"; }

    std::vector<float> embed_image(const FrameImage& frame) const override {
        const LatentTensor z = encoder_->encode(frame);
        return normalized({z.values().begin(), z.values().end()});
    }

    bool supports_text() const override { return false; }

    std::vector<float> embed_text(const std::string&) const override {
        throw CapabilityError("the reference embedder cannot embed text; use a sidecar embedder");
    }

  private:
    std::unique_ptr<EncoderEndpoint> encoder_;
};

class SidecarEmbedder final : public Embedder {
  public:
    explicit SidecarEmbedder(const std::string& command) : client_(command) {
        if (!client_.capabilities().has(protocol::Opcode::embed_image)) {
            throw CapabilityError("sidecar does not support image embedding");
        }
    }

    std::string kind() const override { return "sidecar"; }

    std::vector<float> embed_image(const FrameImage& frame) const override {
        protocol::Tensor t{{static_cast<std::uint32_t>(frame.height()), static_cast<std::uint32_t>(frame.width()), 3u},
                           {frame.pixels().begin(), frame.pixels().end()}};
        return vector_reply(client_.request({protocol::kVersion, protocol::Opcode::embed_image, {std::move(t)}}));
    }

    bool supports_text() const override { return client_.capabilities().has(protocol::Opcode::embed_text); }

    std::vector<float> embed_text(const std::string& text) const override {
        if (!supports_text()) throw CapabilityError("sidecar does not support text embedding");
        return vector_reply(client_.request({protocol::kVersion, protocol::Opcode::embed_text, {text}}));
    }

  private:
    static std::vector<float> vector_reply(const protocol::Message& m) {
        if (m.blocks.empty() || !std::holds_alternative<protocol::Tensor>(m.blocks.front())) {
            throw SidecarError("embedding reply carries no tensor");
        }
        return normalized(std::get<protocol::Tensor>(m.blocks.front()).data);
    }

    mutable SidecarClient client_;
};

}  // namespace

std::unique_ptr<Embedder> make_reference_embedder(const EncoderSpec& spec) {
    if (spec.kind != EncoderKind::reference) throw ConfigError("reference embedder needs a reference encoder spec");
    return std::make_unique<ReferenceEmbedder>(spec);
}

std::unique_ptr<Embedder> make_sidecar_embedder(const std::string& command) {
    return std::make_unique<SidecarEmbedder>(command);
}

MetricSeries frame_consistency(const VideoClip& clip, const Embedder& embedder) {
    if (clip.length() < 2) throw ConfigError("frame consistency needs at least two frames");
    MetricSeries s;
    std::vector<float> prev = embedder.embed_image(clip.frame(0));
    for (std::size_t i = 1; i < clip.length(); ++i) {
        std::vector<float> cur = embedder.embed_image(clip.frame(i));
        s.per_frame.push_back(cosine_similarity(prev, cur));
        prev = std::move(cur);
    }
    s.mean = arithmetic_mean(s.per_frame);
    return s;
}

MetricSeries prompt_consistency(const VideoClip& clip, const std::string& prompt, const Embedder& embedder) {
    if (!embedder.supports_text()) throw CapabilityError("embedder '" + embedder.kind() + "' cannot embed text");
    const std::vector<float> text = embedder.embed_text(prompt);
    MetricSeries s;
    for (const FrameImage& f : clip.frames()) s.per_frame.push_back(cosine_similarity(embedder.embed_image(f), text));
    s.mean = arithmetic_mean(s.per_frame);
    return s;
}

namespace {

std::vector<double> number_list(const json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_array()) throw SchemaError(std::string("per_frame.") + key + " must be an array");
    std::vector<double> out;
    for (const auto& v : *it) {
        if (!v.is_number()) throw SchemaError(std::string("per_frame.") + key + " must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::optional<double> nullable_number(const json& doc, const char* key) {
    const auto& v = doc.at(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw SchemaError(std::string(key) + " must be a number or null");
    return v.get<double>();
}

void check_aggregate(const char* name, const std::optional<double>& value, const std::vector<double>& list,
                     bool required) {
    if (!value) {
        if (required) throw SchemaError(std::string(name) + " must not be null");
        if (!list.empty()) throw SchemaError(std::string(name) + " is null but has per-frame values");
        return;
    }
    if (list.empty()) throw SchemaError(std::string(name) + " has an empty per-frame list");
    if (arithmetic_mean(list) != *value) throw SchemaError(std::string(name) + " is not the mean of its per-frame list");
}

void check_range(const char* name, const std::optional<double>& v, double lo, double hi) {
    if (v && !(*v >= lo && *v <= hi)) throw SchemaError(std::string(name) + " out of range");
}

}  // namespace

void validate_report_json(const json& doc) {
    static const std::set<std::string> top{"meta", "prompt_consistency", "frame_consistency", "ssim",
                                           "psnr", "lpips",              "vmaf",              "per_frame"};
    static const std::set<std::string> frames{"ssim", "psnr", "frame_cos"};
    if (!doc.is_object()) throw SchemaError("report must be a JSON object");
    std::set<std::string> keys;
    for (const auto& [k, v] : doc.items()) keys.insert(k);
    if (keys != top) throw SchemaError("report keys do not match the schema");
    if (!doc.at("meta").is_object()) throw SchemaError("meta must be an object");
    const json& pf = doc.at("per_frame");
    if (!pf.is_object()) throw SchemaError("per_frame must be an object");
    keys.clear();
    for (const auto& [k, v] : pf.items()) keys.insert(k);
    if (keys != frames) throw SchemaError("per_frame keys do not match the schema");

    const auto prompt = nullable_number(doc, "prompt_consistency");
    const auto fc = nullable_number(doc, "frame_consistency");
    const auto s = nullable_number(doc, "ssim");
    const auto p = nullable_number(doc, "psnr");
    nullable_number(doc, "lpips");
    nullable_number(doc, "vmaf");

    check_aggregate("frame_consistency", fc, number_list(pf, "frame_cos"), true);
    check_aggregate("ssim", s, number_list(pf, "ssim"), false);
    check_aggregate("psnr", p, number_list(pf, "psnr"), false);
    check_range("prompt_consistency", prompt, -1.0, 1.0);
    check_range("frame_consistency", fc, -1.0, 1.0);
    check_range("ssim", s, -1.0, 1.0);
    if (p && !(*p > 0.0 && *p <= kPsnrCapDb)) throw SchemaError("psnr out of range");
}

json report_to_json(const EvaluationReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json doc = {
        {"meta", r.meta},
        {"prompt_consistency", opt(r.prompt_consistency)},
        {"frame_consistency", r.frame_consistency},
        {"ssim", opt(r.ssim)},
        {"psnr", opt(r.psnr)},
        {"lpips", opt(r.lpips)},
        {"vmaf", opt(r.vmaf)},
        {"per_frame", {{"ssim", r.per_frame_ssim}, {"psnr", r.per_frame_psnr}, {"frame_cos", r.per_frame_frame_cos}}},
    };
    validate_report_json(doc);
    return doc;
}

EvaluationReport report_from_json(const json& doc) {
    validate_report_json(doc);
    EvaluationReport r;
    r.meta = doc.at("meta");
    r.prompt_consistency = nullable_number(doc, "prompt_consistency");
    r.frame_consistency = doc.at("frame_consistency").get<double>();
    r.ssim = nullable_number(doc, "ssim");
    r.psnr = nullable_number(doc, "psnr");
    r.lpips = nullable_number(doc, "lpips");
    r.vmaf = nullable_number(doc, "vmaf");
    const json& pf = doc.at("per_frame");
    r.per_frame_ssim = number_list(pf, "ssim");
    r.per_frame_psnr = number_list(pf, "psnr");
    r.per_frame_frame_cos = number_list(pf, "frame_cos");
    return r;
}

void emit_report(const EvaluationReport& report, const std::filesystem::path& path,
                 const std::optional<std::filesystem::path>& csv_path) {
    const json doc = report_to_json(report);
    {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << doc.dump(2) << '\n';
        if (!out) throw IoError("cannot write " + path.string());
    }
    if (csv_path) {
        std::ofstream out(*csv_path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + csv_path->string());
        out << "metric,scope,value\n";
        for (const char* key : {"prompt_consistency", "frame_consistency", "ssim", "psnr", "lpips", "vmaf"}) {
            out << key << ",clip,";
            if (!doc.at(key).is_null()) out << doc.at(key).dump();
            out << '\n';
        }
        if (!out) throw IoError("cannot write " + csv_path->string());
    }
}

}  // namespace uvcg
