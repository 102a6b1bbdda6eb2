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

#include <cstring>
#include <thread>

#include "test_clips.hpp"
#include "uvcg/encoder.hpp"
#include "uvcg/error.hpp"
#include "uvcg/evaluation.hpp"
#include "uvcg/protection.hpp"
#include "uvcg/sidecar.hpp"

using namespace uvcg;
using protocol::Message;
using protocol::Opcode;
using protocol::Tensor;

namespace {

std::string echo(const std::string& mode = "normal") { return std::string(UVCG_ECHO_SIDECAR) + " " + mode; }

std::unique_ptr<EncoderEndpoint> sidecar_encoder(const std::string& mode = "normal") {
    EncoderSpec s;
    s.kind = EncoderKind::sidecar;
    s.sidecar_command = echo(mode);
    return build_encoder(s);
}

std::unique_ptr<EncoderEndpoint> identity() {
    EncoderSpec s;
    s.kind = EncoderKind::identity;
    return build_encoder(s);
}

}  // namespace

TEST(Capabilities, ParsesAndValidates) {
    const auto caps = parse_capabilities(
        R"({"supports":[1,2,3],"deterministic":true,"latent_channels":4,"downsample_factor":8,"name":"x"})");
    EXPECT_TRUE(caps.has(Opcode::encode));
    EXPECT_TRUE(caps.has(Opcode::loss_grad));
    EXPECT_FALSE(caps.has(Opcode::embed_text));
    EXPECT_EQ(caps.latent_channels, 4);
    EXPECT_EQ(caps.downsample_factor, 8);
    EXPECT_THROW(parse_capabilities(R"({"supports":[1,2],"deterministic":false})"), SidecarError);
    EXPECT_THROW(parse_capabilities(R"({"supports":[1,3],"deterministic":true})"), SidecarError);
    EXPECT_THROW(parse_capabilities(R"({"supports":[1,42],"deterministic":true})"), SidecarError);
    EXPECT_THROW(parse_capabilities("[1,2]"), SidecarError);
    EXPECT_THROW(parse_capabilities("nope"), SidecarError);
}

TEST(SidecarClient, HandshakeAdvertisesEncodeAndLossGrad) {
    SidecarClient client(echo());
    EXPECT_TRUE(client.capabilities().has(Opcode::encode));
    EXPECT_TRUE(client.capabilities().has(Opcode::loss_grad));
    EXPECT_TRUE(client.capabilities().deterministic);
    EXPECT_EQ(client.capabilities().name, "echo-normal");
}

TEST(SidecarClient, RejectsBadPeers) {
    EXPECT_THROW(SidecarClient(echo("nondeterministic")), SidecarError);
    EXPECT_THROW(SidecarClient(echo("grad-only")), SidecarError);
    EXPECT_THROW(SidecarClient(echo("silent")), SidecarError);
    EXPECT_THROW(SidecarClient(echo("garbage")), SidecarError);
    EXPECT_THROW(SidecarClient("exit 3"), SidecarError);
}

TEST(SidecarClient, WrongMagicGetsErrorThenClose) {
    SidecarClient client(echo());
    auto wire = protocol::encode_message({protocol::kVersion, Opcode::encode, {}});
    wire[8] = 'X';
    const Message reply = client.exchange_raw(wire);
    const auto info = protocol::error_info(reply);
    ASSERT_TRUE(info.has_value());
    EXPECT_EQ(info->code, "magic");
    EXPECT_THROW(client.request({protocol::kVersion, Opcode::hello, {}}), SidecarError);
}

TEST(SidecarClient, VersionAndFramingErrorsKeepConnection) {
    SidecarClient client(echo());
    auto wire = protocol::encode_message({protocol::kVersion, Opcode::hello, {}});
    wire[12] = 2;
    auto info = protocol::error_info(client.exchange_raw(wire));
    ASSERT_TRUE(info.has_value());
    EXPECT_EQ(info->code, "unsupported_version");

    // A body that claims a 3-element tensor but carries two floats.
    auto truncated = protocol::encode_message({protocol::kVersion, Opcode::encode, {Tensor{{3}, {1, 2, 3}}}});
    truncated.resize(truncated.size() - 4);
    const std::uint64_t len = truncated.size() - 8;
    std::memcpy(truncated.data(), &len, 8);
    info = protocol::error_info(client.exchange_raw(truncated));
    ASSERT_TRUE(info.has_value());
    EXPECT_EQ(info->code, "framing");

    EXPECT_NO_THROW(client.request({protocol::kVersion, Opcode::hello, {}}));
}

TEST(SidecarClient, ErrorRepliesRaiseRequestError) {
    SidecarClient client(echo());
    try {
        client.request({protocol::kVersion, Opcode::encode, {Tensor{{2, 2}, {1, 2, 3, 4}}}});
        FAIL() << "expected an error reply";
    } catch (const SidecarRequestError& e) {
        EXPECT_EQ(e.code(), "shape");
    }
    EXPECT_NO_THROW(client.request({protocol::kVersion, Opcode::hello, {}}));
}

TEST(SidecarEncoder, ScalarCaseMatchesIdentity) {
    const auto enc = sidecar_encoder();
    EXPECT_EQ(enc->kind(), EncoderKind::sidecar);
    const FrameImage frame(1, 1, {0.5f, 0.5f, 0.5f});
    const LatentTensor target({3, 1, 1}, {0.53f, 0.5f, 0.5f});
    const LossGradient lg = enc->loss_gradient(frame, std::vector<float>(3, 0.0f), target);
    EXPECT_NEAR(lg.loss, 9e-4, 1e-8);
    EXPECT_NEAR(lg.grad[0], -0.06f, 1e-6);
}

TEST(SidecarEncoder, EncodeAndGradientsBitMatchIdentity) {
    const auto side = sidecar_encoder();
    const auto local = identity();
    const VideoClip clip = uvcg::testing::random_clip(8, 6, 2, 31);
    EXPECT_EQ(side->encode(clip.frame(0)), local->encode(clip.frame(0)));
    const LatentTensor target = local->encode(clip.frame(1));
    std::vector<float> delta(clip.frame(0).size(), 0.01f);
    const LossGradient a = side->loss_gradient(clip.frame(0), delta, target);
    const LossGradient b = local->loss_gradient(clip.frame(0), delta, target);
    EXPECT_EQ(a.grad, b.grad);
    EXPECT_EQ(static_cast<float>(a.loss), static_cast<float>(b.loss));
}

TEST(SidecarEncoder, ProtectVideoMatchesInProcessIdentity) {
    const VideoClip clip = uvcg::testing::random_clip(16, 16, 3, 41);
    const VideoClip target = uvcg::testing::random_clip(16, 16, 2, 42);
    ProtectionConfig config;
    config.steps = 25;
    config.seed = 9;
    const ProtectionResult a = protect_video(clip, target, *sidecar_encoder(), config);
    const ProtectionResult b = protect_video(clip, target, *identity(), config);
    EXPECT_EQ(a.immunized, b.immunized);
    EXPECT_EQ(a.perturbations.deltas(), b.perturbations.deltas());
    EXPECT_EQ(a.target_indices, b.target_indices);
}

TEST(SidecarEncoder, ConcurrentRequestsAreSerialized) {
    const auto enc = sidecar_encoder();
    const VideoClip clip = uvcg::testing::random_clip(8, 8, 4, 43);
    std::vector<LatentTensor> want;
    for (const auto& f : clip.frames()) want.push_back(identity()->encode(f));
    std::vector<int> ok(4, 0);
    {
        std::vector<std::jthread> threads;
        for (int t = 0; t < 4; ++t) {
            threads.emplace_back([&, t] {
                for (int rep = 0; rep < 20; ++rep) ok[t] += enc->encode(clip.frame(t)) == want[t];
            });
        }
    }
    for (int v : ok) EXPECT_EQ(v, 20);
}

TEST(SidecarEmbedder, PromptConsistencyWithConstantEmbeddings) {
    const auto emb = make_sidecar_embedder(echo("constant-embed"));
    EXPECT_TRUE(emb->supports_text());
    const VideoClip clip = uvcg::testing::random_clip(8, 8, 3, 44);
    const MetricSeries pc = prompt_consistency(clip, "a cat", *emb);
    EXPECT_NEAR(pc.mean, 1.0, 1e-12);
    EXPECT_EQ(pc.per_frame.size(), 3u);
}

TEST(SidecarEmbedder, EmbeddingsAreUnitNorm) {
    const auto emb = make_sidecar_embedder(echo());
    const auto v = emb->embed_image(FrameImage::filled(4, 4, 0.3f));
    double n = 0.0;
    for (float x : v) n += static_cast<double>(x) * x;
    EXPECT_NEAR(n, 1.0, 1e-6);
}

TEST(SidecarEmbedder, MissingCapabilities) {
    EXPECT_THROW(make_sidecar_embedder(echo("no-embed")), CapabilityError);
}
