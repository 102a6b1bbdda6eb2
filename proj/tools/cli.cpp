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

#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uvcg/encoder.hpp"
#include "uvcg/error.hpp"
#include "uvcg/evaluation.hpp"
#include "uvcg/kernels/kernels.hpp"
#include "uvcg/protection.hpp"
#include "uvcg/random.hpp"
#include "uvcg/sidecar.hpp"
#include "uvcg/target_advisor.hpp"

namespace uvcg::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad flag values; reported with exit code 2.
class UsageError : public Error {
  public:
    using Error::Error;
};

/// A check requested by the user did not pass.
class CheckFailed : public Error {
  public:
    CheckFailed(int code, const std::string& what) : Error(what), code_(code) {}
    [[nodiscard]] int code() const { return code_; }

  private:
    int code_;
};

struct EncoderFlags {
    std::string encoder = "reference";
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> encoder_seed;
    int downsample = 8;
    int latent_channels = 4;

    void add(CLI::App& app) {
        app.add_option("--encoder", encoder, "reference | identity | sidecar:<command>")->capture_default_str();
        app.add_option("--downsample", downsample, "reference encoder downsample factor")->capture_default_str();
        app.add_option("--latent-channels", latent_channels, "reference encoder latent channels")->capture_default_str();
        app.add_option("--encoder-seed", encoder_seed, "reference encoder weight seed (defaults to --seed)");
    }

    [[nodiscard]] EncoderSpec spec() const {
        EncoderSpec s;
        s.seed = encoder_seed.value_or(seed);
        s.downsample_factor = downsample;
        s.latent_channels = latent_channels;
        if (encoder == "reference") {
            s.kind = EncoderKind::reference;
        } else if (encoder == "identity") {
            s.kind = EncoderKind::identity;
        } else if (encoder == "sidecar" || encoder.rfind("sidecar:", 0) == 0) {
            s.kind = EncoderKind::sidecar;
            s.sidecar_command = encoder.size() > 8 ? encoder.substr(8) : "";
            if (const char* env = std::getenv("UVCG_SIDECAR_CMD"); env != nullptr && *env != '\0') {
                s.sidecar_command = env;
            }
            if (s.sidecar_command.empty()) throw UsageError("--encoder sidecar needs a command or UVCG_SIDECAR_CMD");
        } else {
            throw UsageError("unknown encoder '" + encoder + "'");
        }
        if (s.kind == EncoderKind::reference && (downsample < 1 || latent_channels < 1)) {
            throw UsageError("--downsample and --latent-channels must be positive");
        }
        return s;
    }
};

json spec_json(const EncoderSpec& s) {
    json j = {{"kind", to_string(s.kind)}};
    if (s.kind == EncoderKind::reference) {
        j["seed"] = s.seed;
        j["downsample_factor"] = s.downsample_factor;
        j["latent_channels"] = s.latent_channels;
        j["hidden_channels"] = kReferenceHiddenChannels;
    } else if (s.kind == EncoderKind::sidecar) {
        j["command"] = s.sidecar_command;
    }
    return j;
}

json config_json(const ProtectionConfig& c, double eps_flag, double alpha_flag) {
    return {
        {"epsilon", eps_flag / 255.0}, {"epsilon_255", eps_flag},   {"alpha", alpha_flag / 255.0},
        {"alpha_255", alpha_flag},     {"steps", c.steps},          {"warm_start", c.warm_start},
        {"seed", c.seed},              {"pixel_min", c.pixel_min},  {"pixel_max", c.pixel_max},
        {"last_iterate", c.last_iterate}, {"zero_init", c.zero_init},
    };
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

float budget_from_flag(double value, const char* flag) {
    if (!(value > 0.0 && value <= 255.0)) {
        throw UsageError(std::string(flag) + " must lie in (0, 255] (units of 1/255)");
    }
    return static_cast<float>(value / 255.0);
}

// ---------------------------------------------------------------- protect

struct ProtectFlags {
    std::vector<std::string> inputs;
    std::string target;
    std::string out;
    double epsilon = 15.0;
    double alpha = 2.0;
    int steps = 200;
    bool no_warm_start = false;
    bool last_iterate = false;
    bool zero_init = false;
    bool record_timing = false;
    int jobs = 1;
    EncoderFlags enc;
};

json protect_report(const ProtectionResult& r, const VideoClip& input, const VideoClip& target, const EncoderSpec& spec,
                    const ProtectionConfig& config, const ProtectFlags& f) {
    json frames = json::array();
    for (std::size_t i = 0; i < r.immunized.length(); ++i) {
        frames.push_back({
            {"index", i},
            {"target_index", r.target_indices[i]},
            {"loss_clean", r.per_frame_loss_clean[i]},
            {"loss_initial", r.per_frame_loss_initial[i]},
            {"loss_final", r.per_frame_loss_final[i]},
            {"iterations", r.per_frame_iterations[i]},
            {"loss_trace", r.loss_traces[i]},
        });
    }
    json failures = json::array();
    for (const auto& fail : r.failures) failures.push_back({{"frame", fail.frame}, {"reason", fail.reason}});
    json doc = {
        {"input", input.name()},
        {"target", target.name()},
        {"frame_count", input.length()},
        {"target_frame_count", target.length()},
        {"width", input.width()},
        {"height", input.height()},
        {"encoder", spec_json(spec)},
        {"config", config_json(config, f.epsilon, f.alpha)},
        {"max_abs_delta", r.perturbations.max_abs()},
        {"frames", frames},
        {"failures", failures},
    };
    // Timing is opt-in so that identical runs produce identical directories.
    if (f.record_timing) doc["wall_clock_seconds"] = r.wall_clock_seconds;
    return doc;
}

struct JobOutcome {
    int code = kSuccess;
    std::string message;
};

JobOutcome protect_one(const fs::path& input_dir, const VideoClip& target, const fs::path& out_dir,
                       const EncoderSpec& spec, const ProtectionConfig& config, const ProtectFlags& f,
                       std::ostream& log) {
    const VideoClip input = load_clip(input_dir);
    const auto encoder = build_encoder(spec);
    ProtectionResult result = protect_video(input, target, *encoder, config);
    save_clip(result.immunized, out_dir);
    write_perturbations(result.perturbations, input.width(), input.height(), out_dir / "perturbation");
    write_json(out_dir / "protect_report.json", protect_report(result, input, target, spec, config, f));

    std::ostringstream line;
    line << "protected " << input.name() << ": " << input.length() << " frames, max|delta| = "
         << result.perturbations.max_abs() * 255.0f << "/255, " << std::fixed << std::setprecision(2)
         << result.wall_clock_seconds << " s";
    log << line.str() << '\n';
    if (!result.failures.empty()) {
        return {kNumerical, std::to_string(result.failures.size()) + " frame(s) of " + input.name() +
                                " hit a NaN loss and were left unperturbed"};
    }
    return {};
}

int cmd_protect(const ProtectFlags& f, std::ostream& out, std::ostream& err) {
    ProtectionConfig config;
    config.epsilon = budget_from_flag(f.epsilon, "--epsilon");
    config.alpha = budget_from_flag(f.alpha, "--alpha");
    config.steps = f.steps;
    config.warm_start = !f.no_warm_start;
    config.seed = f.enc.seed;
    config.last_iterate = f.last_iterate;
    config.zero_init = f.zero_init;
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    if (f.jobs < 1) throw UsageError("--jobs must be >= 1");
    const EncoderSpec spec = f.enc.spec();

    const VideoClip target = load_clip(f.target);
    err << "kernels: " << kernels::active_kernels().name << '\n';

    if (f.inputs.size() == 1) {
        const JobOutcome o = protect_one(f.inputs.front(), target, f.out, spec, config, f, out);
        if (o.code != kSuccess) err << "error: " << o.message << '\n';
        return o.code;
    }

    // Several inputs: one sub-directory each, protected concurrently.
    std::vector<JobOutcome> outcomes(f.inputs.size());
    std::vector<std::string> logs(f.inputs.size());
    std::size_t next = 0;
    std::mutex m;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(m);
                if (next == f.inputs.size()) return;
                i = next++;
            }
            std::ostringstream log;
            const fs::path in = f.inputs[i];
            const std::string name = fs::absolute(in).lexically_normal().filename().string();
            try {
                outcomes[i] = protect_one(in, target, fs::path(f.out) / name, spec, config, f, log);
            } catch (const SidecarError& e) {
                outcomes[i] = {kSidecar, e.what()};
            } catch (const NumericalError& e) {
                outcomes[i] = {kNumerical, e.what()};
            } catch (const Error& e) {
                outcomes[i] = {kData, e.what()};
            }
            logs[i] = log.str();
        }
    };
    std::vector<std::jthread> pool;
    for (int j = 0; j < std::min<int>(f.jobs, static_cast<int>(f.inputs.size())); ++j) pool.emplace_back(worker);
    pool.clear();

    int code = kSuccess;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        out << logs[i];
        if (outcomes[i].code != kSuccess) {
            err << "error: " << f.inputs[i] << ": " << outcomes[i].message << '\n';
            code = std::max(code, outcomes[i].code);
        }
    }
    return code;
}

// --------------------------------------------------------------- baseline

struct BaselineFlags {
    std::string input;
    std::string out;
    double epsilon = 15.0;
    std::uint64_t seed = 0;
};

int cmd_baseline(const BaselineFlags& f, std::ostream& out) {
    ProtectionConfig config;
    config.epsilon = budget_from_flag(f.epsilon, "--epsilon");
    config.alpha = config.epsilon;
    config.seed = f.seed;
    const VideoClip input = load_clip(f.input);
    const ProtectionResult r = random_noise_baseline(input, config);
    save_clip(r.immunized, f.out);
    write_perturbations(r.perturbations, input.width(), input.height(), fs::path(f.out) / "perturbation");
    const MetricSeries p = psnr(input, r.immunized);
    write_json(fs::path(f.out) / "baseline_report.json",
               {{"input", input.name()},
                {"frame_count", input.length()},
                {"epsilon", f.epsilon / 255.0},
                {"epsilon_255", f.epsilon},
                {"seed", f.seed},
                {"max_abs_delta", r.perturbations.max_abs()},
                {"psnr", p.mean},
                {"per_frame_psnr", p.per_frame},
                {"loss", nullptr}});
    out << "noise baseline for " << input.name() << ": PSNR " << std::fixed << std::setprecision(3) << p.mean
        << " dB\n";
    return kSuccess;
}

// --------------------------------------------------------------- evaluate

struct EvaluateFlags {
    std::string a;
    std::string b;
    std::string embedder = "reference";
    std::optional<std::string> prompt;
    std::optional<std::string> out;
    std::optional<std::string> csv;
    std::uint64_t seed = 0;
};

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out) {
    std::unique_ptr<Embedder> embedder;
    EncoderSpec ref;
    ref.seed = f.seed;
    std::string sidecar_cmd;
    if (f.embedder == "reference") {
        if (f.prompt) throw CapabilityError("prompt consistency needs a text-capable embedder; the reference embedder has none");
    } else if (f.embedder == "sidecar" || f.embedder.rfind("sidecar:", 0) == 0) {
        sidecar_cmd = f.embedder.size() > 8 ? f.embedder.substr(8) : "";
        if (const char* env = std::getenv("UVCG_SIDECAR_CMD"); env != nullptr && *env != '\0') sidecar_cmd = env;
        if (sidecar_cmd.empty()) throw UsageError("--embedder sidecar needs a command or UVCG_SIDECAR_CMD");
    } else {
        throw UsageError("unknown embedder '" + f.embedder + "'");
    }

    const VideoClip a = load_clip(f.a);
    const VideoClip b = load_clip(f.b);
    if (a.length() != b.length()) {
        throw IntegrityError("clips differ in length: " + std::to_string(a.length()) + " vs " + std::to_string(b.length()));
    }
    if (a.width() != b.width() || a.height() != b.height()) throw IntegrityError("clips differ in resolution");

    embedder = sidecar_cmd.empty() ? make_reference_embedder(ref) : make_sidecar_embedder(sidecar_cmd);

    EvaluationReport report;
    report.meta = {{"a", a.name()},
                   {"b", b.name()},
                   {"frame_count", a.length()},
                   {"width", a.width()},
                   {"height", a.height()},
                   {"embedder", embedder->kind()},
                   {"consistency_clip", "b"},
                   {"ssim", {{"window", kSsimWindow}, {"sigma", kSsimSigma}, {"k1", kSsimK1}, {"k2", kSsimK2}}},
                   {"psnr_cap_db", kPsnrCapDb}};
    if (embedder->kind() == "reference") report.meta["encoder"] = spec_json(ref);
    if (f.prompt) report.meta["prompt"] = *f.prompt;

    const MetricSeries p = psnr(a, b);
    report.psnr = p.mean;
    report.per_frame_psnr = p.per_frame;
    if (a.width() >= kSsimWindow && a.height() >= kSsimWindow) {
        const MetricSeries s = ssim(a, b);
        report.ssim = s.mean;
        report.per_frame_ssim = s.per_frame;
    }
    const MetricSeries fc = frame_consistency(b, *embedder);
    report.frame_consistency = fc.mean;
    report.per_frame_frame_cos = fc.per_frame;
    if (f.prompt) report.prompt_consistency = prompt_consistency(b, *f.prompt, *embedder).mean;

    if (f.out) {
        std::optional<fs::path> csv;
        if (f.csv) csv = *f.csv;
        emit_report(report, *f.out, csv);
    } else {
        out << report_to_json(report).dump(2) << '\n';
    }
    return kSuccess;
}

// ---------------------------------------------------------- select-target

struct SelectFlags {
    std::string input;
    std::vector<std::string> candidates;
    double w1 = 0.5;
    double w2 = 0.5;
    std::optional<std::string> out;
    EncoderFlags enc;
};

int cmd_select_target(const SelectFlags& f, std::ostream& out) {
    if (f.candidates.empty()) throw UsageError("select-target needs at least one --candidate");
    const EncoderSpec spec = f.enc.spec();
    const VideoClip input = load_clip(f.input);
    std::vector<VideoClip> candidates;
    for (const auto& c : f.candidates) candidates.push_back(load_clip(c));
    const auto encoder = build_encoder(spec);
    const auto ranking = rank_targets(input, candidates, *encoder, f.w1, f.w2);

    json listing = json::array();
    out << std::left << std::setw(4) << "#" << std::setw(24) << "candidate" << std::right << std::setw(11) << "proximity"
        << std::setw(12) << "simplicity" << std::setw(11) << "combined" << '\n';
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto& s = ranking[i];
        out << std::left << std::setw(4) << i + 1 << std::setw(24) << s.candidate_name << std::right << std::fixed
            << std::setprecision(6) << std::setw(11) << s.proximity << std::setw(12) << s.simplicity << std::setw(11)
            << s.combined << '\n';
        listing.push_back({{"rank", i + 1},
                           {"candidate_name", s.candidate_name},
                           {"proximity", s.proximity},
                           {"simplicity", s.simplicity},
                           {"combined", s.combined}});
    }
    if (f.out) {
        write_json(*f.out, {{"input", input.name()},
                            {"w1", f.w1},
                            {"w2", f.w2},
                            {"encoder", spec_json(spec)},
                            {"ranking", listing}});
    }
    return kSuccess;
}

// ----------------------------------------------------------- encode-check

struct CheckFlags {
    std::optional<std::string> perturbation;
    std::optional<std::string> original;
    std::optional<std::string> protected_dir;
    std::optional<double> epsilon;
    bool gradcheck = false;
    int size = 8;
    int frames = 1;
    double step = 1e-4;
    double tolerance = 1e-4;
    std::optional<std::string> out;
    EncoderFlags enc;
};

int cmd_encode_check(const CheckFlags& f, std::ostream& out) {
    if (!f.perturbation && !f.original && !f.protected_dir && !f.gradcheck) {
        throw UsageError("encode-check needs --perturbation, --original/--protected or --gradcheck");
    }
    if (f.original.has_value() != f.protected_dir.has_value()) {
        throw UsageError("--original and --protected must be given together");
    }
    std::optional<float> eps;
    if (f.epsilon) eps = budget_from_flag(*f.epsilon, "--epsilon");

    json report = json::object();
    int failure = kSuccess;
    std::string why;

    if (f.perturbation) {
        const PerturbationFiles files = read_perturbations(*f.perturbation);
        const float budget = eps.value_or(files.epsilon);
        float worst = 0.0f;
        for (const auto& d : files.deltas) {
            for (float v : d) worst = std::max(worst, std::fabs(v));
        }
        const bool ok = worst <= budget;
        report["perturbation"] = {{"frames", files.deltas.size()}, {"max_abs_delta", worst},
                                  {"max_abs_delta_255", worst * 255.0}, {"epsilon", budget}, {"within_budget", ok}};
        if (!ok) {
            failure = kData;
            why = "perturbation exceeds the budget";
        }
    }
    if (f.original) {
        const VideoClip a = load_clip(*f.original);
        const VideoClip b = load_clip(*f.protected_dir);
        if (a.length() != b.length() || a.width() != b.width() || a.height() != b.height()) {
            throw IntegrityError("original and protected clips differ in shape");
        }
        int worst = 0;
        for (std::size_t i = 0; i < a.length(); ++i) {
            for (std::size_t k = 0; k < a.frame(i).size(); ++k) {
                worst = std::max(worst, std::abs(int{quantize(a.frame(i).pixels()[k])} -
                                                 int{quantize(b.frame(i).pixels()[k])}));
            }
        }
        // Stored frames are 8-bit, so the audit works in whole levels.
        const int budget = static_cast<int>(std::lround(eps.value_or(15.0f / 255.0f) * 255.0f));
        const bool ok = worst <= budget;
        report["frames"] = {{"max_level_difference", worst}, {"budget_levels", budget}, {"within_budget", ok}};
        if (!ok) {
            failure = kData;
            why = "stored frames differ by more than the budget";
        }
    }
    if (f.gradcheck) {
        if (f.size < 1 || f.frames < 1 || !(f.step > 0.0)) throw UsageError("--size, --frames and --step must be positive");
        const EncoderSpec spec = f.enc.spec();
        const auto encoder = build_encoder(spec);
        Rng rng(f.enc.seed ^ 0x9e3779b97f4a7c15ULL);
        double worst = 0.0;
        for (int n = 0; n < f.frames; ++n) {
            std::vector<float> px(static_cast<std::size_t>(f.size) * f.size * 3);
            for (float& v : px) v = rng.uniform(0.0f, 1.0f);
            const FrameImage frame(f.size, f.size, px);
            std::vector<float> tv(px.size());
            for (float& v : tv) v = rng.uniform(0.0f, 1.0f);
            const LatentTensor target = encoder->encode(FrameImage(f.size, f.size, tv));
            const std::vector<float> delta(px.size(), 0.0f);
            const LossGradient lg = encoder->loss_gradient(frame, delta, target);
            const auto fd = finite_difference_gradient(*encoder, frame, delta, target, f.step);
            worst = std::max(worst, gradient_relative_error(lg.grad, fd));
        }
        const bool ok = worst < f.tolerance;
        report["gradcheck"] = {{"encoder", spec_json(spec)}, {"frames", f.frames},   {"size", f.size},
                               {"step", f.step},             {"max_relative_error", worst},
                               {"tolerance", f.tolerance},   {"passed", ok}};
        if (!ok && failure == kSuccess) {
            failure = kNumerical;
            why = "analytic gradient disagrees with finite differences";
        }
    }
    out << report.dump(2) << '\n';
    if (f.out) write_json(*f.out, report);
    if (failure != kSuccess) throw CheckFailed(failure, why);
    return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Video immunization against latent-encoder based editing", "uvcg"};
    app.require_subcommand(1);

    ProtectFlags pf;
    auto* protect = app.add_subcommand("protect", "align a video's latents with a target video under an l-inf budget");
    protect->add_option("--input", pf.inputs, "frame directory to protect (repeatable)")->required();
    protect->add_option("--target", pf.target, "target frame directory")->required();
    protect->add_option("--out", pf.out, "output directory")->required();
    protect->add_option("--epsilon", pf.epsilon, "l-inf budget in 1/255 units")->capture_default_str();
    protect->add_option("--alpha", pf.alpha, "step size in 1/255 units")->capture_default_str();
    protect->add_option("--steps", pf.steps, "PGD steps per frame")->capture_default_str();
    protect->add_option("--seed", pf.enc.seed, "random seed")->capture_default_str();
    protect->add_flag("--no-warm-start", pf.no_warm_start, "initialize every frame from fresh noise");
    protect->add_flag("--last-iterate", pf.last_iterate, "keep the final iterate instead of the best one");
    protect->add_flag("--zero-init", pf.zero_init, "start from a zero perturbation instead of noise");
    protect->add_flag("--record-timing", pf.record_timing, "store wall-clock seconds in the report");
    protect->add_option("--jobs", pf.jobs, "videos protected concurrently")->capture_default_str();
    pf.enc.add(*protect);

    BaselineFlags bf;
    auto* baseline = app.add_subcommand("baseline", "uniform random noise with the same budget");
    baseline->add_option("--input", bf.input, "frame directory to perturb")->required();
    baseline->add_option("--out", bf.out, "output directory")->required();
    baseline->add_option("--epsilon", bf.epsilon, "l-inf budget in 1/255 units")->capture_default_str();
    baseline->add_option("--seed", bf.seed, "noise seed")->capture_default_str();

    EvaluateFlags ef;
    auto* evaluate = app.add_subcommand("evaluate", "PSNR, SSIM and consistency metrics");
    evaluate->add_option("--a", ef.a, "reference clip directory")->required();
    evaluate->add_option("--b", ef.b, "compared clip directory (consistency is measured on it)")->required();
    evaluate->add_option("--embedder", ef.embedder, "reference | sidecar:<command>")->capture_default_str();
    evaluate->add_option("--prompt", ef.prompt, "editing prompt for prompt consistency");
    evaluate->add_option("--seed", ef.seed, "reference embedder weight seed")->capture_default_str();
    evaluate->add_option("--out", ef.out, "report JSON path (stdout if omitted)");
    evaluate->add_option("--csv", ef.csv, "also write one CSV row per metric");

    SelectFlags sf;
    auto* select = app.add_subcommand("select-target", "rank candidate target videos");
    select->add_option("--input", sf.input, "frame directory to be protected")->required();
    select->add_option("--candidate", sf.candidates, "candidate frame directory (repeatable)");
    select->add_option("--w1", sf.w1, "proximity weight")->capture_default_str();
    select->add_option("--w2", sf.w2, "simplicity weight")->capture_default_str();
    select->add_option("--seed", sf.enc.seed, "encoder weight seed")->capture_default_str();
    select->add_option("--out", sf.out, "ranking JSON path");
    sf.enc.add(*select);

    CheckFlags cf;
    auto* check = app.add_subcommand("encode-check", "audit budgets and verify encoder gradients");
    check->add_option("--perturbation", cf.perturbation, "perturbation directory to audit");
    check->add_option("--original", cf.original, "original frame directory");
    check->add_option("--protected", cf.protected_dir, "protected frame directory");
    check->add_option("--epsilon", cf.epsilon, "budget in 1/255 units (default: from the index)");
    check->add_flag("--gradcheck", cf.gradcheck, "compare analytic and finite-difference gradients");
    check->add_option("--size", cf.size, "gradcheck frame side")->capture_default_str();
    check->add_option("--frames", cf.frames, "gradcheck random frames")->capture_default_str();
    check->add_option("--step", cf.step, "finite-difference step")->capture_default_str();
    check->add_option("--tolerance", cf.tolerance, "maximum relative error")->capture_default_str();
    check->add_option("--seed", cf.enc.seed, "encoder and frame seed")->capture_default_str();
    check->add_option("--out", cf.out, "also write the JSON result here");
    cf.enc.add(*check);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream usage;
        const int code = app.exit(e, out, usage);
        err << usage.str();
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (*protect) return cmd_protect(pf, out, err);
        if (*baseline) return cmd_baseline(bf, out);
        if (*evaluate) return cmd_evaluate(ef, out);
        if (*select) return cmd_select_target(sf, out);
        if (*check) return cmd_encode_check(cf, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const CapabilityError& e) {
        err << "capability error: " << e.what() << '\n';
        return kUsage;
    } catch (const CheckFailed& e) {
        err << "check failed: " << e.what() << '\n';
        return e.code();
    } catch (const SidecarError& e) {
        err << "sidecar error: " << e.what() << '\n';
        return kSidecar;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}

}  // namespace uvcg::cli
