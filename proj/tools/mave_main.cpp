// mave: embed, transport, attack and verify entangled audio-visual
// watermarks in toy rectified-flow latents.
//
// Exit codes: 0 success, 2 config/precondition error, 3 malformed file,
// 4 detection rejected. Failures print a machine-readable error JSON.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mave/attacks.hpp"
#include "mave/config.hpp"
#include "mave/detector.hpp"
#include "mave/flow.hpp"
#include "mave/normal.hpp"
#include "mave/pipeline.hpp"
#include "mave/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;
constexpr int kExitRejected = 4;

std::string file_sha256(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mave::FormatError("cannot open: " + path.string());
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return mave::to_hex(mave::sha256(data));
}

json file_entry(const fs::path& path) {
    return {{"path", path.string()}, {"sha256", file_sha256(path)}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw mave::Error("cannot write: " + path.string());
    out << j.dump(2) << "\n";
}

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw mave::FormatError("cannot open: " + path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw mave::FormatError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

struct CommonOpts {
    std::string config_path;
    std::optional<uint64_t> seed;

    mave::RunConfig load() const {
        mave::RunConfig cfg = config_path.empty() ? mave::RunConfig()
                                                  : mave::RunConfig::load(config_path);
        if (seed) cfg.master_seed = *seed;
        return cfg;
    }
};

// --- embed --------------------------------------------------------------------

int cmd_embed(const CommonOpts& common, uint32_t index, const std::string& prompt,
              const fs::path& out_dir, bool dump_grids) {
    mave::RunConfig cfg = common.load();
    fs::create_directories(out_dir);

    mave::Registry registry(cfg.registry_path);
    mave::EmbedOutput out = mave::embed_session(cfg, index, prompt);
    registry.register_session(index, out.secret, prompt);

    fs::path video_path = out_dir / "z_video.mave";
    fs::path audio_path = out_dir / "z_audio.mave";
    mave::write_latent(video_path, out.z_video);
    mave::write_latent(audio_path, out.z_audio);
    if (dump_grids) {
        mave::write_grid(out_dir / "video.grid", out.video_grid);
        mave::write_grid(out_dir / "audio.grid", out.audio_grid);
    }

    char index_hex[9];
    std::snprintf(index_hex, sizeof index_hex, "%08x", index);
    json manifest = {{"command", "embed"},
                     {"index_hex", index_hex},
                     {"prompt", prompt},
                     {"master_seed", cfg.master_seed},
                     {"config", cfg.to_json()},
                     {"outputs",
                      {{"z_video", file_entry(video_path)}, {"z_audio", file_entry(audio_path)}}}};
    write_json(out_dir / "manifest.json", manifest);
    std::cout << manifest.dump(2) << "\n";
    return kExitOk;
}

// --- generate / invert ------------------------------------------------------------

int cmd_generate(const CommonOpts& common, const std::string& video_in,
                 const std::string& audio_in, const fs::path& out_dir) {
    mave::RunConfig cfg = common.load();
    fs::create_directories(out_dir);
    json outputs, inputs;
    for (auto& [name, path] : {std::pair{"video", video_in}, {"audio", audio_in}}) {
        if (path.empty()) continue;
        mave::LatentTensor z = mave::read_latent(path);
        mave::LatentTensor x = mave::generate(z, cfg.toy_flow, cfg.trajectory);
        fs::path out_path = out_dir / (std::string("x_") + name + ".mave");
        mave::write_latent(out_path, x);
        inputs[name] = file_entry(path);
        outputs[name] = file_entry(out_path);
    }
    if (outputs.empty()) throw mave::ConfigError("generate needs --video and/or --audio");
    json manifest = {{"command", "generate"},
                     {"n_steps", cfg.trajectory.n_steps},
                     {"delta_t", cfg.trajectory.delta_t},
                     {"inputs", inputs},
                     {"outputs", outputs}};
    write_json(out_dir / "manifest.json", manifest);
    std::cout << manifest.dump(2) << "\n";
    return kExitOk;
}

int cmd_invert(const CommonOpts& common, const std::string& video_in, const std::string& audio_in,
               const fs::path& out_dir, bool separate) {
    mave::RunConfig cfg = common.load();
    fs::create_directories(out_dir);
    json outputs, inputs;
    mave::reset_velocity_pass_count();
    if (!video_in.empty() && !audio_in.empty()) {
        mave::LatentTensor xv = mave::read_latent(video_in);
        mave::LatentTensor xa = mave::read_latent(audio_in);
        auto [zv, za] = separate ? mave::invert_separate(xv, xa, cfg.toy_flow, cfg.trajectory)
                                 : mave::invert_joint(xv, xa, cfg.toy_flow, cfg.trajectory);
        mave::write_latent(out_dir / "zhat_video.mave", zv);
        mave::write_latent(out_dir / "zhat_audio.mave", za);
        inputs = {{"video", file_entry(video_in)}, {"audio", file_entry(audio_in)}};
        outputs = {{"video", file_entry(out_dir / "zhat_video.mave")},
                   {"audio", file_entry(out_dir / "zhat_audio.mave")}};
    } else if (!video_in.empty()) {
        mave::LatentTensor z =
            mave::invert(mave::read_latent(video_in), cfg.toy_flow, cfg.trajectory);
        mave::write_latent(out_dir / "zhat_video.mave", z);
        inputs = {{"video", file_entry(video_in)}};
        outputs = {{"video", file_entry(out_dir / "zhat_video.mave")}};
    } else {
        throw mave::ConfigError("invert needs --video (and usually --audio)");
    }
    json manifest = {{"command", "invert"},
                     {"mode", separate ? "separate" : "joint"},
                     {"model_passes", mave::velocity_pass_count()},
                     {"n_steps", cfg.trajectory.n_steps},
                     {"delta_t", cfg.trajectory.delta_t},
                     {"inputs", inputs},
                     {"outputs", outputs}};
    write_json(out_dir / "manifest.json", manifest);
    std::cout << manifest.dump(2) << "\n";
    return kExitOk;
}

// --- attack ------------------------------------------------------------------------

int cmd_attack_swap(const std::string& video_in, const std::string& audio_in,
                    const fs::path& out_dir) {
    if (video_in.empty() || audio_in.empty())
        throw mave::ConfigError("swap attack needs --video (session A) and --audio (session B)");
    fs::create_directories(out_dir);
    mave::LatentTensor xv = mave::read_latent(video_in);
    mave::LatentTensor xa = mave::read_latent(audio_in);
    mave::SwapResult swap = mave::swap_attack(xv, xa, video_in, audio_in);
    if (swap.degenerate)
        std::cerr << "warning: both tracks come from the same file; pair is authentic\n";
    mave::write_latent(out_dir / "x_video.mave", swap.video);
    mave::write_latent(out_dir / "x_audio.mave", swap.audio);
    json manifest = {{"command", "attack"},
                     {"attack", {{"kind", "swap"}, {"degenerate", swap.degenerate}}},
                     {"inputs",
                      {{"video_from", file_entry(video_in)}, {"audio_from", file_entry(audio_in)}}},
                     {"outputs",
                      {{"video", file_entry(out_dir / "x_video.mave")},
                       {"audio", file_entry(out_dir / "x_audio.mave")}}}};
    write_json(out_dir / "manifest.json", manifest);
    std::cout << manifest.dump(2) << "\n";
    return kExitOk;
}

int cmd_attack(mave::AttackSpec spec, const std::string& in_path, const std::string& out_path,
               const std::string& replay_path, const std::string& transcript_path) {
    if (!replay_path.empty()) spec = mave::AttackSpec::from_json(load_json(replay_path));
    mave::LatentTensor x = mave::read_latent(in_path);
    mave::LatentTensor attacked = mave::apply_attack(spec, x);
    mave::write_latent(out_path, attacked);
    if (!transcript_path.empty()) write_json(transcript_path, spec.to_json());
    json summary = {{"command", "attack"},
                    {"attack", spec.to_json()},
                    {"input", file_entry(in_path)},
                    {"output", file_entry(out_path)}};
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

// --- detect -------------------------------------------------------------------------

int cmd_detect(const CommonOpts& common, const std::string& video_in, const std::string& audio_in,
               const std::string& registry_override) {
    mave::RunConfig cfg = common.load();
    std::string registry_path =
        registry_override.empty() ? cfg.registry_path : registry_override;
    mave::Registry registry(registry_path);
    mave::LatentTensor zv = mave::read_latent(video_in);
    mave::LatentTensor za = mave::read_latent(audio_in);
    mave::DetectionReport report =
        mave::statistical_binding_decision(zv, za, registry, cfg.detection_context());
    std::cout << report.to_json().dump(2) << "\n";
    return report.verdict == mave::Verdict::Authentic ? kExitOk : kExitRejected;
}

// --- benches -------------------------------------------------------------------------

int cmd_bench_security(int bind_length, double tau, uint64_t trials, uint64_t seed, bool full,
                       const std::string& csv_path, int roc_samples,
                       const std::string& roc_csv_path) {
    mave::BoundQuery q{bind_length, tau};
    mave::TrialSummary mc = full ? mave::monte_carlo_swap_full(trials, q, seed)
                                 : mave::monte_carlo_swap_fast(trials, q, seed);
    double exact = mave::exact_swap_fp(q);
    double bound = mave::hoeffding_bound(q);
    json summary = {{"command", "bench-security"},
                    {"n", bind_length},
                    {"tau", tau},
                    {"mode", full ? "full" : "fast"},
                    {"seed", seed},
                    {"trials", mc.trials},
                    {"hits", mc.hits},
                    {"rate", mc.rate},
                    {"wilson_99", {mc.wilson_lo, mc.wilson_hi}},
                    {"exact", exact},
                    {"hoeffding", bound},
                    {"exact_within_wilson", exact >= mc.wilson_lo && exact <= mc.wilson_hi}};

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw mave::Error("cannot write: " + csv_path);
        csv << "n,tau,exact,hoeffding\n";
        for (int n : {16, 32, 64, 128, 256})
            for (double t : {0.6, 0.7, 0.8, 0.9})
                csv << n << "," << t << "," << mave::exact_swap_fp({n, t}) << ","
                    << mave::hoeffding_bound({n, t}) << "\n";
        summary["csv"] = csv_path;
    }

    if (roc_samples > 0) {
        std::vector<double> auth_scores, swap_scores;
        mave::Keystream secrets(mave::Key256{});
        mave::GridDims dims{2, 4, 8, 8};
        for (int i = 0; i < roc_samples; ++i) {
            mave::SecretPayload m_a = mave::SecretPayload::random(secrets);
            mave::SecretPayload m_b = mave::SecretPayload::random(secrets);
            auto keys_a = mave::derive_session_key(m_a, "roc prompt");
            auto keys_b = mave::derive_session_key(m_b, "roc prompt");
            auto video_layout = mave::build_layout(dims, 0, 1, nullptr);
            auto layout_a =
                mave::build_layout(dims, uint32_t(bind_length), 0, &keys_a.subkey_audio);
            auto layout_b =
                mave::build_layout(dims, uint32_t(bind_length), 0, &keys_b.subkey_audio);
            auto video_a = mave::build_video_grid(keys_a, 2 * i, video_layout);
            auto video_b = mave::build_video_grid(keys_b, 2 * i + 1, video_layout);
            auto audio_a = mave::build_audio_grid(keys_a, video_a, layout_a);
            auto audio_b = mave::build_audio_grid(keys_b, video_b, layout_b);
            auth_scores.push_back(
                mave::binding_score(audio_a.bits, mave::grid_digest(video_a), layout_a));
            swap_scores.push_back(
                mave::binding_score(audio_b.bits, mave::grid_digest(video_a), layout_a));
        }
        auto curve = mave::roc_curve(auth_scores, swap_scores);
        summary["roc_auc"] = mave::roc_auc(curve);
        if (!roc_csv_path.empty()) {
            std::ofstream csv(roc_csv_path);
            if (!csv) throw mave::Error("cannot write: " + roc_csv_path);
            csv << "fpr,tpr,threshold\n";
            for (const auto& pt : curve)
                csv << pt.fpr << "," << pt.tpr << "," << pt.threshold << "\n";
            summary["roc_csv"] = roc_csv_path;
        }
    }
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_bench_lossless(const CommonOpts& common, int runs, int coords, double delta,
                       uint64_t seed, const std::string& csv_path) {
    mave::RunConfig cfg = common.load();
    cfg.delta = delta;
    if (runs < 1 || coords < 100) throw mave::ConfigError("need runs >= 1 and coords >= 100");

    int rejections = 0, control_rejections = 0;
    std::vector<double> p_values, control_p_values;
    mave::Keystream control(mave::shared_stream_key({uint8_t(seed), 1, 2, 3, 4, 5, 6, 7}));
    for (int r = 0; r < runs; ++r) {
        cfg.master_seed = seed + 1000003ull * r;
        std::vector<double> pooled;
        pooled.reserve(coords);
        for (uint32_t session = 0; pooled.size() < size_t(coords); ++session) {
            auto out = mave::embed_session(cfg, mave::PlainIndex(r * 64 + session),
                                           "losslessness bench");
            for (float v : out.z_video.values) {
                if (pooled.size() >= size_t(coords)) break;
                pooled.push_back(v);
            }
            for (float v : out.z_audio.values) {
                if (pooled.size() >= size_t(coords)) break;
                pooled.push_back(v);
            }
        }
        std::function<double(double)> cdf = [delta](double z) {
            return mave::truncated_mixture_cdf(z, delta);
        };
        auto [stat, p] = delta == 0.0 ? mave::ks_normality(std::move(pooled))
                                      : mave::ks_test(std::move(pooled), cdf);
        (void)stat;
        p_values.push_back(p);
        if (p < 0.05) ++rejections;

        std::vector<double> direct(coords);
        for (auto& v : direct)
            v = mave::norm_ppf((double(control.next_u64() >> 11) + 0.5) * 0x1.0p-53);
        auto [cstat, cp] = mave::ks_normality(std::move(direct));
        (void)cstat;
        control_p_values.push_back(cp);
        if (cp < 0.05) ++control_rejections;
    }
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw mave::Error("cannot write: " + csv_path);
        csv << "run,p_watermarked,p_control\n";
        for (int r = 0; r < runs; ++r)
            csv << r << "," << p_values[r] << "," << control_p_values[r] << "\n";
    }
    json summary = {{"command", "bench-lossless"},
                    {"runs", runs},
                    {"coords_per_run", coords},
                    {"delta", delta},
                    {"alpha", 0.05},
                    {"rejections", rejections},
                    {"rejection_rate", double(rejections) / runs},
                    {"control_rejections", control_rejections},
                    {"control_rejection_rate", double(control_rejections) / runs}};
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entangled audio-visual watermarking toolkit"};
    app.require_subcommand(1);

    CommonOpts common;
    uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "run config JSON");
        sub->add_option("--seed", seed_value, "master seed override")
            ->each([&](const std::string&) { common.seed = seed_value; });
    };

    // embed
    auto* embed = app.add_subcommand("embed", "create an entangled watermarked latent pair");
    uint32_t index = 0;
    std::string prompt, out_dir = "out";
    bool dump_grids = false;
    add_common(embed);
    embed->add_option("--index", index, "32-bit plaintext session index")->required();
    embed->add_option("--prompt", prompt, "generation prompt")->required();
    embed->add_option("--out-dir", out_dir, "output directory");
    embed->add_flag("--dump-grids", dump_grids, "also write grid dump files");

    // generate / invert
    auto* generate = app.add_subcommand("generate", "run the toy flow forward");
    std::string video_in, audio_in;
    add_common(generate);
    generate->add_option("--video", video_in, "video latent (MAVE)");
    generate->add_option("--audio", audio_in, "audio latent (MAVE)");
    generate->add_option("--out-dir", out_dir, "output directory");

    auto* invert = app.add_subcommand("invert", "solve the toy flow backward");
    bool separate = false;
    add_common(invert);
    invert->add_option("--video", video_in, "video sample (MAVE)");
    invert->add_option("--audio", audio_in, "audio sample (MAVE)");
    invert->add_option("--out-dir", out_dir, "output directory");
    invert->add_flag("--separate", separate, "two modality-specific passes instead of one joint");

    // attack
    auto* attack = app.add_subcommand("attack", "apply a removal/swap/temporal attack");
    std::string kind = "additive_noise", attack_in, attack_out, replay_path, transcript_path;
    mave::AttackSpec spec;
    add_common(attack);
    attack->add_option("--kind", kind,
                       "swap | frame_average | frame_swap | frame_rate_adapter | "
                       "frame_interpolation | additive_noise | quantize");
    attack->add_option("--in", attack_in, "input tensor (non-swap kinds)");
    attack->add_option("--out", attack_out, "output tensor (non-swap kinds)");
    attack->add_option("--video", video_in, "swap: session A video");
    attack->add_option("--audio", audio_in, "swap: session B audio");
    attack->add_option("--out-dir", out_dir, "swap: output directory");
    attack->add_option("--n", spec.window, "frame_average window");
    attack->add_option("--p", spec.swap_prob, "frame_swap probability");
    attack->add_option("--attack-seed", spec.seed, "randomness seed");
    attack->add_option("--rate-src", spec.rate_src, "source fps");
    attack->add_option("--rate-dst", spec.rate_dst, "target fps");
    attack->add_option("--k", spec.insert_count, "frames inserted per gap");
    attack->add_option("--sigma", spec.noise_sigma, "additive noise std");
    attack->add_option("--bits", spec.quant_bits, "quantizer bits");
    attack->add_option("--replay", replay_path, "replay a recorded transcript JSON");
    attack->add_option("--transcript", transcript_path, "write the realized transcript here");

    // detect
    auto* detect = app.add_subcommand("detect", "run the full detection pipeline");
    std::string registry_override;
    add_common(detect);
    detect->add_option("--video", video_in, "recovered video latent")->required();
    detect->add_option("--audio", audio_in, "recovered audio latent")->required();
    detect->add_option("--registry", registry_override, "registry file override");

    // benches
    auto* bench_sec = app.add_subcommand("bench-security", "swap false-positive bounds and MC");
    int bind_length = 128, roc_samples = 0;
    double tau = 0.8;
    uint64_t trials = 1000000, bench_seed = 1;
    bool full = false;
    std::string csv_path, roc_csv_path;
    bench_sec->add_option("--N", bind_length, "binding length");
    bench_sec->add_option("--tau", tau, "binding threshold");
    bench_sec->add_option("--trials", trials, "Monte Carlo trials");
    bench_sec->add_option("--mc-seed", bench_seed, "Monte Carlo seed");
    bench_sec->add_flag("--full", full, "full grid pipeline per trial instead of fair bits");
    bench_sec->add_option("--csv", csv_path, "write the (N, tau) exact/bound lattice here");
    bench_sec->add_option("--roc-samples", roc_samples, "collect ROC scores over this many pairs");
    bench_sec->add_option("--roc-csv", roc_csv_path, "write ROC points here");

    auto* bench_loss = app.add_subcommand("bench-lossless", "KS calibration of watermarked latents");
    int runs = 200, coords = 100000;
    double delta = 0.0;
    add_common(bench_loss);
    bench_loss->add_option("--runs", runs, "independent keys");
    bench_loss->add_option("--coords", coords, "pooled coordinates per run");
    bench_loss->add_option("--delta", delta, "truncation used when sampling");
    bench_loss->add_option("--mc-seed", bench_seed, "bench seed");
    bench_loss->add_option("--csv", csv_path, "write per-run p-values here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (embed->parsed()) return cmd_embed(common, index, prompt, out_dir, dump_grids);
        if (generate->parsed()) return cmd_generate(common, video_in, audio_in, out_dir);
        if (invert->parsed()) return cmd_invert(common, video_in, audio_in, out_dir, separate);
        if (attack->parsed()) {
            spec.kind = mave::AttackSpec::kind_from_name(kind);
            if (spec.kind == mave::AttackSpec::Kind::Swap)
                return cmd_attack_swap(video_in, audio_in, out_dir);
            if (attack_in.empty() || attack_out.empty())
                throw mave::ConfigError("attack needs --in and --out");
            return cmd_attack(spec, attack_in, attack_out, replay_path, transcript_path);
        }
        if (detect->parsed()) return cmd_detect(common, video_in, audio_in, registry_override);
        if (bench_sec->parsed())
            return cmd_bench_security(bind_length, tau, trials, bench_seed, full, csv_path,
                                      roc_samples, roc_csv_path);
        if (bench_loss->parsed())
            return cmd_bench_lossless(common, runs, coords, delta, bench_seed, csv_path);
    } catch (const mave::FormatError& e) {
        std::cout << json{{"error", {{"type", "format"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitFormat;
    } catch (const mave::DuplicateIndexError& e) {
        std::cout << json{{"error", {{"type", "duplicate-index"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return kExitConfig;
    } catch (const mave::ConfigError& e) {
        std::cout << json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cout << json{{"error", {{"type", "internal"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
