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

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "test_clips.hpp"
#include "uvcg/evaluation.hpp"
#include "uvcg/protection.hpp"

using namespace uvcg;
using nlohmann::json;
using uvcg::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "uvcg");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        save_clip(uvcg::testing::random_clip(16, 16, 3, 1, "video"), dir_ / "video");
        save_clip(uvcg::testing::random_clip(16, 16, 2, 2, "target"), dir_ / "target");
    }
    std::string path(const std::string& sub) const { return (dir_ / sub).string(); }
    TempDir dir_{"cli"};
};

}  // namespace

TEST_F(CliTest, ProtectWritesClipPerturbationsAndReport) {
    const Outcome o = run({"protect", "--input", path("video"), "--target", path("target"), "--out", path("out"),
                           "--epsilon", "15", "--alpha", "2", "--steps", "20", "--encoder", "reference", "--seed", "7"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_TRUE(fs::exists(dir_ / "out/manifest.json"));
    EXPECT_TRUE(fs::exists(dir_ / "out/frame_00002.png"));
    EXPECT_TRUE(fs::exists(dir_ / "out/perturbation/index.json"));
    const json report = read_json(dir_ / "out/protect_report.json");
    EXPECT_EQ(report["frames"].size(), 3u);
    EXPECT_EQ(report["frames"][0]["loss_trace"].size(), 21u);
    EXPECT_EQ(report["frames"][2]["target_index"], 0);
    EXPECT_FALSE(report.contains("wall_clock_seconds"));
    EXPECT_LE(report["max_abs_delta"].get<double>(), 15.0 / 255.0 + 1e-6);

    const Outcome audit = run({"encode-check", "--perturbation", path("out/perturbation"), "--original", path("video"),
                               "--protected", path("out")});
    EXPECT_EQ(audit.code, 0) << audit.err;
    EXPECT_TRUE(json::parse(audit.out)["perturbation"]["within_budget"].get<bool>());
}

TEST_F(CliTest, ProtectRecordTiming) {
    const Outcome o = run({"protect", "--input", path("video"), "--target", path("target"), "--out", path("out"),
                           "--steps", "2", "--record-timing"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_TRUE(read_json(dir_ / "out/protect_report.json").contains("wall_clock_seconds"));
}

TEST_F(CliTest, ProtectUsageErrors) {
    Outcome o = run({"protect", "--input", path("video"), "--out", path("out")});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find("--target"), std::string::npos);
    o = run({"protect", "--input", path("video"), "--target", path("target"), "--out", path("o"), "--epsilon", "0"});
    EXPECT_EQ(o.code, 2);
    o = run({"protect", "--input", path("video"), "--target", path("target"), "--out", path("o"), "--alpha", "20"});
    EXPECT_EQ(o.code, 2);
    o = run({"protect", "--input", path("video"), "--target", path("target"), "--out", path("o"), "--encoder", "magic"});
    EXPECT_EQ(o.code, 2);
    o = run({"protect", "--input", path("missing"), "--target", path("target"), "--out", path("o")});
    EXPECT_EQ(o.code, 3);
    o = run({"frobnicate"});
    EXPECT_EQ(o.code, 2);
}

TEST_F(CliTest, ProtectMultipleInputsWithJobs) {
    save_clip(uvcg::testing::random_clip(16, 16, 2, 3, "second"), dir_ / "second");
    const Outcome o = run({"protect", "--input", path("video"), "--input", path("second"), "--target", path("target"),
                           "--out", path("out"), "--steps", "3", "--jobs", "2"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_TRUE(fs::exists(dir_ / "out/video/protect_report.json"));
    EXPECT_TRUE(fs::exists(dir_ / "out/second/protect_report.json"));
}

TEST_F(CliTest, ProtectThroughEchoSidecar) {
    const Outcome o = run({"protect", "--input", path("video"), "--target", path("target"), "--out", path("out"),
                           "--steps", "5", "--encoder", std::string("sidecar:") + UVCG_ECHO_SIDECAR});
    ASSERT_EQ(o.code, 0) << o.err;
    const Outcome bad = run({"protect", "--input", path("video"), "--target", path("target"), "--out", path("o2"),
                             "--steps", "5", "--encoder", std::string("sidecar:") + UVCG_ECHO_SIDECAR + " silent"});
    EXPECT_EQ(bad.code, 5);
}

TEST_F(CliTest, BaselineBoundsAndDeterminism) {
    Outcome o = run({"baseline", "--input", path("video"), "--out", path("b1"), "--seed", "4"});
    ASSERT_EQ(o.code, 0) << o.err;
    o = run({"baseline", "--input", path("video"), "--out", path("b2"), "--seed", "4"});
    ASSERT_EQ(o.code, 0) << o.err;
    for (int i = 0; i < 3; ++i) {
        const std::string name = format_frame_name(kDefaultFramePattern, i);
        EXPECT_EQ(slurp(dir_ / "b1" / name), slurp(dir_ / "b2" / name));
    }
    const Outcome audit = run({"encode-check", "--perturbation", path("b1/perturbation")});
    EXPECT_EQ(audit.code, 0);
    EXPECT_EQ(run({"baseline", "--input", path("video"), "--out", path("b3"), "--epsilon", "255"}).code, 0);
    EXPECT_EQ(run({"baseline", "--input", path("video"), "--out", path("b4"), "--epsilon", "256"}).code, 2);
}

TEST_F(CliTest, EncodeCheckDetectsOverBudget) {
    write_perturbations(PerturbationField({std::vector<float>(16 * 16 * 3, 0.2f)}, 0.2f), 16, 16, dir_ / "p");
    const Outcome o = run({"encode-check", "--perturbation", path("p"), "--epsilon", "15"});
    EXPECT_EQ(o.code, 3);
    EXPECT_EQ(run({"encode-check"}).code, 2);
}

TEST_F(CliTest, EncodeCheckGradcheck) {
    const Outcome o = run({"encode-check", "--gradcheck", "--frames", "2", "--seed", "3"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_TRUE(json::parse(o.out)["gradcheck"]["passed"].get<bool>());
}

TEST_F(CliTest, EvaluateSelfAndErrors) {
    Outcome o = run({"evaluate", "--a", path("video"), "--b", path("video"), "--out", path("r.json"), "--csv",
                     path("r.csv")});
    ASSERT_EQ(o.code, 0) << o.err;
    const json r = read_json(dir_ / "r.json");
    EXPECT_EQ(r["ssim"].get<double>(), 1.0);
    EXPECT_EQ(r["psnr"].get<double>(), 100.0);
    EXPECT_TRUE(r["prompt_consistency"].is_null());
    EXPECT_NO_THROW(validate_report_json(r));
    EXPECT_TRUE(fs::exists(dir_ / "r.csv"));

    o = run({"evaluate", "--a", path("video"), "--b", path("target")});
    EXPECT_EQ(o.code, 3);
    o = run({"evaluate", "--a", path("video"), "--b", path("video"), "--embedder", "reference", "--prompt", "a cat"});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find("text"), std::string::npos);
}

TEST_F(CliTest, EvaluateWithSidecarPrompt) {
    const Outcome o =
        run({"evaluate", "--a", path("video"), "--b", path("video"), "--embedder",
             std::string("sidecar:") + UVCG_ECHO_SIDECAR + " constant-embed", "--prompt", "a cat"});
    ASSERT_EQ(o.code, 0) << o.err;
    const json r = json::parse(o.out);
    EXPECT_NEAR(r["prompt_consistency"].get<double>(), 1.0, 1e-12);
}

TEST_F(CliTest, EvaluateSmallFramesReportNullSsim) {
    save_clip(uvcg::testing::random_clip(8, 8, 2, 9, "tiny"), dir_ / "tiny");
    const Outcome o = run({"evaluate", "--a", path("tiny"), "--b", path("tiny")});
    ASSERT_EQ(o.code, 0) << o.err;
    const json r = json::parse(o.out);
    EXPECT_TRUE(r["ssim"].is_null());
    EXPECT_TRUE(r["per_frame"]["ssim"].empty());
}

TEST_F(CliTest, SelectTarget) {
    Outcome o = run({"select-target", "--input", path("video"), "--candidate", path("video"), "--w1", "1", "--w2", "0",
                     "--out", path("rank.json")});
    ASSERT_EQ(o.code, 0) << o.err;
    const json r = read_json(dir_ / "rank.json");
    EXPECT_NEAR(r["ranking"][0]["proximity"].get<double>(), 1.0, 1e-12);
    EXPECT_NE(o.out.find("proximity"), std::string::npos);
    EXPECT_EQ(run({"select-target", "--input", path("video")}).code, 2);
}
