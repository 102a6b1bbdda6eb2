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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "test_clips.hpp"
#include "uvcg/error.hpp"
#include "uvcg/evaluation.hpp"
#include "uvcg/protection.hpp"

using namespace uvcg;
using uvcg::testing::TempDir;

namespace {

constexpr float kEps = 15.0f / 255.0f;
constexpr float kAlpha = 2.0f / 255.0f;

std::unique_ptr<EncoderEndpoint> encoder(EncoderKind kind, std::uint64_t seed = 7) {
    EncoderSpec s;
    s.kind = kind;
    s.seed = seed;
    return build_encoder(s);
}

// Reports a NaN loss for bright frames.
class PoisonedEncoder final : public EncoderEndpoint {
  public:
    PoisonedEncoder() : inner_(encoder(EncoderKind::identity)) {}
    EncoderKind kind() const override { return EncoderKind::identity; }
    LatentShape latent_shape(int w, int h) const override { return inner_->latent_shape(w, h); }
    LatentTensor encode(const FrameImage& f) const override { return inner_->encode(f); }
    LossGradient loss_gradient(const FrameImage& f, std::span<const float> d, const LatentTensor& z) const override {
        LossGradient lg = inner_->loss_gradient(f, d, z);
        if (f.at(0, 0, 0) > 0.9f) lg.loss = std::nan("");
        return lg;
    }
    double evaluate_loss(std::span<const double> in, int w, int h, const LatentTensor& z) const override {
        return inner_->evaluate_loss(in, w, h, z);
    }

  private:
    std::unique_ptr<EncoderEndpoint> inner_;
};

}  // namespace

TEST(ProtectionConfig, Validation) {
    ProtectionConfig c;
    EXPECT_NO_THROW(c.validate());
    c.alpha = 0.0f;
    EXPECT_THROW(c.validate(), ConfigError);
    c.alpha = 0.2f;
    c.epsilon = 0.1f;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ProtectionConfig{};
    c.epsilon = 1.5f;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ProtectionConfig{};
    c.steps = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ProtectionConfig{};
    c.pixel_min = 0.6f;
    c.pixel_max = 0.5f;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(PerturbationField, EnforcesBudget) {
    EXPECT_NO_THROW(PerturbationField({{kEps, -kEps, 0.0f}}, kEps));
    EXPECT_THROW(PerturbationField({{0.0f, std::nextafter(kEps, 1.0f)}}, kEps), IntegrityError);
    EXPECT_EQ(PerturbationField({{0.01f}, {-0.02f}}, kEps).max_abs(), 0.02f);
}

TEST(TargetForFrame, Cycles) {
    EXPECT_EQ(target_for_frame(0, 3), 0u);
    EXPECT_EQ(target_for_frame(5, 3), 2u);
    EXPECT_EQ(target_for_frame(3, 3), 0u);
    EXPECT_THROW((void)target_for_frame(1, 0), ConfigError);
}

TEST(InitDelta, UniformWithinBudgetAndUnbiased) {
    ProtectionConfig c;
    Rng rng(1);
    const std::size_t n = 1000000;
    const auto d = init_delta(0, std::nullopt, n, c, rng);
    double sum = 0.0;
    for (float v : d) {
        ASSERT_LE(std::fabs(v), kEps);
        sum += v;
    }
    const double sigma = kEps / std::sqrt(3.0);
    EXPECT_LT(std::fabs(sum / n), 3.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST(InitDelta, WarmStartCopiesAndSeedRepeats) {
    ProtectionConfig c;
    Rng a(5);
    Rng b(5);
    const auto d0 = init_delta(0, std::nullopt, 12, c, a);
    EXPECT_EQ(d0, init_delta(0, std::nullopt, 12, c, b));
    const std::vector<float> prev(12, 0.03f);
    EXPECT_EQ(init_delta(4, std::span<const float>(prev), 12, c, a), prev);
    c.warm_start = false;
    const auto cold = init_delta(4, std::span<const float>(prev), 12, c, a);
    EXPECT_NE(cold, prev);
    c.zero_init = true;
    EXPECT_EQ(init_delta(4, std::nullopt, 12, c, a), std::vector<float>(12, 0.0f));
    c.warm_start = true;
    EXPECT_THROW(init_delta(2, std::nullopt, 12, c, a), ConfigError);
}

TEST(PgdStep, SingleDescentStep) {
    ProtectionConfig c;
    const FrameImage frame = FrameImage::filled(2, 2, 0.5f);
    const std::vector<float> zero(frame.size(), 0.0f);
    const std::vector<float> pos(frame.size(), 1.0f);
    for (float v : pgd_step(zero, pos, c, frame)) EXPECT_EQ(v, -kAlpha);
    const std::vector<float> edge(frame.size(), -kEps);
    for (float v : pgd_step(edge, pos, c, frame)) EXPECT_EQ(v, -kEps);
    for (float v : pgd_step(edge, zero, c, frame)) EXPECT_EQ(v, -kEps);
}

TEST(PgdStep, PixelRangeClamp) {
    ProtectionConfig c;
    const FrameImage frame = FrameImage::filled(1, 1, 0.0f);
    const std::vector<float> zero(3, 0.0f);
    const std::vector<float> pos(3, 1.0f);
    for (float v : pgd_step(zero, pos, c, frame)) EXPECT_EQ(v, 0.0f);
    const FrameImage white = FrameImage::filled(1, 1, 1.0f);
    const std::vector<float> neg(3, -1.0f);
    for (float v : pgd_step(zero, neg, c, white)) EXPECT_EQ(v, 0.0f);
}

TEST(ProtectFrame, IdentityScalarOscillationBand) {
    ProtectionConfig c;
    const auto enc = encoder(EncoderKind::identity);
    const FrameImage frame(1, 1, {0.5f, 0.5f, 0.5f});
    const LatentTensor target({3, 1, 1}, {0.52f, 0.52f, 0.52f});
    Rng rng(3);
    const auto init = init_delta(0, std::nullopt, 3, c, rng);
    const FrameProtection fp = protect_frame(frame, target, init, *enc, c);
    ASSERT_EQ(fp.loss_trace.size(), 201u);
    for (int ch = 0; ch < 3; ++ch) EXPECT_LE(std::fabs(0.5f + fp.delta[ch] - 0.52f), 1.01f * kAlpha);
    EXPECT_EQ(fp.loss_trace[fp.returned_iterate], *std::min_element(fp.loss_trace.begin(), fp.loss_trace.end()));
}

TEST(ProtectFrame, AlreadyOptimalStaysPut) {
    ProtectionConfig c;
    c.steps = 10;
    const auto enc = encoder(EncoderKind::identity);
    const FrameImage frame = uvcg::testing::random_clip(4, 4, 1, 8).frame(0);
    const std::vector<float> zero(frame.size(), 0.0f);
    const FrameProtection fp = protect_frame(frame, enc->encode(frame), zero, *enc, c);
    for (double l : fp.loss_trace) EXPECT_EQ(l, 0.0);
    EXPECT_EQ(fp.delta, zero);
}

TEST(ProtectFrame, ReferenceBestLossHalvesInitial) {
    ProtectionConfig c;
    const auto enc = encoder(EncoderKind::reference, 7);
    const FrameImage frame = uvcg::testing::random_clip(32, 32, 1, 100).frame(0);
    const LatentTensor target = enc->encode(uvcg::testing::random_clip(32, 32, 1, 101).frame(0));
    Rng rng(0);
    const auto init = init_delta(0, std::nullopt, frame.size(), c, rng);
    const FrameProtection fp = protect_frame(frame, target, init, *enc, c);
    EXPECT_LE(fp.loss_trace[fp.returned_iterate], 0.5 * fp.loss_trace.front());
}

TEST(ProtectFrame, LastIterateFlag) {
    ProtectionConfig c;
    c.steps = 30;
    c.last_iterate = true;
    const auto enc = encoder(EncoderKind::identity);
    const FrameImage frame(1, 1, {0.5f, 0.5f, 0.5f});
    const LatentTensor target({3, 1, 1}, {0.52f, 0.52f, 0.52f});
    const std::vector<float> zero(3, 0.0f);
    const FrameProtection fp = protect_frame(frame, target, zero, *enc, c);
    EXPECT_EQ(fp.returned_iterate, 30u);
}

TEST(ProtectVideo, CyclesTargets) {
    ProtectionConfig c;
    c.steps = 2;
    const auto enc = encoder(EncoderKind::identity);
    const ProtectionResult r = protect_video(uvcg::testing::random_clip(4, 4, 7, 1),
                                             uvcg::testing::random_clip(4, 4, 3, 2), *enc, c);
    EXPECT_EQ(r.target_indices, (std::vector<std::size_t>{0, 1, 2, 0, 1, 2, 0}));
    EXPECT_EQ(r.loss_traces.size(), 7u);
    EXPECT_EQ(r.per_frame_iterations, std::vector<int>(7, 2));
}

TEST(ProtectVideo, TargetIsClipFixedPoint) {
    ProtectionConfig c;
    c.steps = 5;
    c.warm_start = false;
    c.zero_init = true;
    const auto enc = encoder(EncoderKind::reference);
    const VideoClip clip = uvcg::testing::random_clip(16, 16, 3, 3);
    const ProtectionResult r = protect_video(clip, clip, *enc, c);
    EXPECT_EQ(r.immunized.frames(), clip.frames());
}

TEST(ProtectVideo, ResolutionMismatchIsConfigError) {
    const auto enc = encoder(EncoderKind::identity);
    EXPECT_THROW(protect_video(uvcg::testing::random_clip(4, 4, 2, 1), uvcg::testing::random_clip(8, 4, 2, 1), *enc,
                               ProtectionConfig{}),
                 ConfigError);
}

TEST(ProtectVideo, BudgetPropertySweep) {
    const auto enc = encoder(EncoderKind::reference, 11);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        ProtectionConfig c;
        c.steps = 15;
        c.seed = seed;
        const VideoClip clip = uvcg::testing::random_clip(16, 16, 3, seed);
        const ProtectionResult r = protect_video(clip, uvcg::testing::random_clip(16, 16, 2, seed + 50), *enc, c);
        EXPECT_LE(r.perturbations.max_abs(), kEps + 1e-6f);
        for (std::size_t i = 0; i < clip.length(); ++i) {
            for (std::size_t k = 0; k < clip.frame(i).size(); ++k) {
                const float v = r.immunized.frame(i).pixels()[k];
                EXPECT_GE(v, 0.0f);
                EXPECT_LE(v, 1.0f);
                EXPECT_EQ(v, clip.frame(i).pixels()[k] + r.perturbations.at(i)[k]);
            }
        }
    }
}

TEST(ProtectVideo, Deterministic) {
    ProtectionConfig c;
    c.steps = 10;
    c.seed = 4;
    const auto enc = encoder(EncoderKind::reference);
    const VideoClip clip = uvcg::testing::random_clip(16, 16, 3, 5);
    const VideoClip target = uvcg::testing::random_clip(16, 16, 3, 6);
    const ProtectionResult a = protect_video(clip, target, *enc, c);
    const ProtectionResult b = protect_video(clip, target, *enc, c);
    EXPECT_EQ(a.immunized, b.immunized);
    EXPECT_EQ(a.loss_traces, b.loss_traces);
}

TEST(ProtectVideo, NanLossFrameIsRecordedAndLeftClean) {
    ProtectionConfig c;
    c.steps = 3;
    std::vector<FrameImage> frames{FrameImage::filled(2, 2, 0.2f), FrameImage::filled(2, 2, 0.95f),
                                   FrameImage::filled(2, 2, 0.3f)};
    const VideoClip clip(frames, Rational{}, "nan");
    const PoisonedEncoder enc;
    const ProtectionResult r = protect_video(clip, uvcg::testing::flat_clip(2, 2, 1, 0.5f), enc, c);
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_EQ(r.failures[0].frame, 1u);
    EXPECT_EQ(r.immunized.frame(1), clip.frame(1));
    for (float v : r.perturbations.at(1)) EXPECT_EQ(v, 0.0f);
    EXPECT_NE(r.immunized.frame(2), clip.frame(2));
}

TEST(NoiseBaseline, BudgetSaturationAndReproducibility) {
    ProtectionConfig c;
    c.seed = 12;
    const VideoClip clip = uvcg::testing::random_clip(64, 64, 8, 13, "noise", kEps, 1.0f - kEps);
    const ProtectionResult r = random_noise_baseline(clip, c);
    EXPECT_FALSE(r.has_losses);
    EXPECT_LE(r.perturbations.max_abs(), kEps);
    EXPECT_GT(r.perturbations.max_abs(), 14.0f / 255.0f);
    EXPECT_EQ(r.immunized, random_noise_baseline(clip, c).immunized);
    const double expected = 20.0 * std::log10(255.0 / (15.0 / std::sqrt(3.0)));
    EXPECT_NEAR(psnr(clip, r.immunized).mean, expected, 0.2);
}

TEST(Perturbations, WriteReadRoundTrip) {
    TempDir dir("pert");
    PerturbationField field({{0.01f, -0.02f, 0.0f, kEps, -kEps, 0.03f}, {0, 0, 0, 0, 0, 0}}, kEps);
    write_perturbations(field, 2, 1, dir.path());
    EXPECT_TRUE(std::filesystem::exists(dir / "index.json"));
    EXPECT_EQ(std::filesystem::file_size(dir / "delta_00000.f32"), 24u);
    const PerturbationFiles back = read_perturbations(dir.path());
    EXPECT_EQ(back.width, 2);
    EXPECT_EQ(back.height, 1);
    EXPECT_EQ(back.epsilon, kEps);
    EXPECT_EQ(back.deltas, field.deltas());
}

TEST(Perturbations, TruncatedFileIsIntegrityError) {
    TempDir dir("pert");
    write_perturbations(PerturbationField({{0.01f, 0.0f, 0.0f}}, kEps), 1, 1, dir.path());
    std::filesystem::resize_file(dir / "delta_00000.f32", 8);
    EXPECT_THROW(read_perturbations(dir.path()), IntegrityError);
}
