#include "mave/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace mave {

namespace {

GridDims dims_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) throw ConfigError("dims must be a 4-element array");
    return {j[0].get<uint32_t>(), j[1].get<uint32_t>(), j[2].get<uint32_t>(),
            j[3].get<uint32_t>()};
}

RepetitionFactors factors_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) throw ConfigError("factors must be a 4-element array");
    return {j[0].get<uint32_t>(), j[1].get<uint32_t>(), j[2].get<uint32_t>(),
            j[3].get<uint32_t>()};
}

nlohmann::json dims_json(GridDims d) { return {d.c, d.t, d.h, d.w}; }
nlohmann::json factors_json(RepetitionFactors f) { return {f.c, f.t, f.h, f.w}; }

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig cfg;
    if (j.contains("video_grid")) cfg.video_grid = dims_from(j["video_grid"]);
    if (j.contains("audio_grid")) cfg.audio_grid = dims_from(j["audio_grid"]);
    if (j.contains("video_factors")) cfg.video_factors = factors_from(j["video_factors"]);
    if (j.contains("audio_factors")) cfg.audio_factors = factors_from(j["audio_factors"]);
    cfg.index_repetition = j.value("index_repetition", cfg.index_repetition);
    cfg.bind_length = j.value("bind_length", cfg.bind_length);
    cfg.bits_per_coord = j.value("bits_per_coord", cfg.bits_per_coord);
    cfg.delta = j.value("delta", cfg.delta);
    cfg.trajectory.n_steps = j.value("n_steps", cfg.trajectory.n_steps);
    cfg.trajectory.delta_t = j.value("delta_t", cfg.trajectory.delta_t);
    if (j.contains("tau_acc") || j.contains("tau_bind")) {
        cfg.thresholds.tau_acc = j.value("tau_acc", cfg.thresholds.tau_acc);
        cfg.thresholds.tau_bind = j.value("tau_bind", cfg.thresholds.tau_bind);
        cfg.thresholds.provenance = "config";
    }
    if (j.contains("toy_flow")) {
        const auto& tf = j["toy_flow"];
        if (tf.contains("video")) {
            cfg.toy_flow.video.mean = tf["video"].value("mean", cfg.toy_flow.video.mean);
            cfg.toy_flow.video.stddev = tf["video"].value("stddev", cfg.toy_flow.video.stddev);
        }
        if (tf.contains("audio")) {
            cfg.toy_flow.audio.mean = tf["audio"].value("mean", cfg.toy_flow.audio.mean);
            cfg.toy_flow.audio.stddev = tf["audio"].value("stddev", cfg.toy_flow.audio.stddev);
        }
    }
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.registry_path = j.value("registry", cfg.registry_path);
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["video_grid"] = dims_json(video_grid);
    j["audio_grid"] = dims_json(audio_grid);
    j["video_factors"] = factors_json(video_factors);
    j["audio_factors"] = factors_json(audio_factors);
    j["index_repetition"] = index_repetition;
    j["bind_length"] = bind_length;
    j["bits_per_coord"] = bits_per_coord;
    j["delta"] = delta;
    j["n_steps"] = trajectory.n_steps;
    j["delta_t"] = trajectory.delta_t;
    j["tau_acc"] = thresholds.tau_acc;
    j["tau_bind"] = thresholds.tau_bind;
    j["toy_flow"] = {{"video", {{"mean", toy_flow.video.mean}, {"stddev", toy_flow.video.stddev}}},
                     {"audio", {{"mean", toy_flow.audio.mean}, {"stddev", toy_flow.audio.stddev}}}};
    j["master_seed"] = master_seed;
    j["registry"] = registry_path;
    return j;
}

void RunConfig::validate() const {
    if (registry_path.empty()) throw ConfigError("registry path must be set");
    if (bits_per_coord < 1 || bits_per_coord > 16)
        throw ConfigError("bits_per_coord must be in [1, 16]");
    if (delta < 0.0 || delta * double(1u << bits_per_coord) >= 0.5)
        throw ConfigError("delta leaves no sampling interval");
    if (trajectory.n_steps < 1) throw ConfigError("n_steps must be >= 1");
    if (trajectory.delta_t < 0.0 || trajectory.delta_t >= 1.0)
        throw ConfigError("delta_t must be in [0, 1)");
    if (!(thresholds.tau_acc > 0.5 && thresholds.tau_acc < 1.0))
        throw ConfigError("tau_acc must be in (0.5, 1)");
    if (!(thresholds.tau_bind > 0.5 && thresholds.tau_bind < 1.0))
        throw ConfigError("tau_bind must be in (0.5, 1)");
    if (toy_flow.video.stddev <= 0.0 || toy_flow.audio.stddev <= 0.0)
        throw ConfigError("toy flow stddev must be > 0");
    // layout feasibility (throws LayoutOverflowError, a ConfigError)
    build_layout(video_grid, 0, index_repetition, nullptr);
    Key256 probe{};
    build_layout(audio_grid, bind_length, 0, &probe);
}

DetectionContext RunConfig::detection_context() const {
    DetectionContext ctx;
    ctx.video_grid = video_grid;
    ctx.audio_grid = audio_grid;
    ctx.video_factors = video_factors;
    ctx.audio_factors = audio_factors;
    ctx.index_repetition = index_repetition;
    ctx.bind_length = bind_length;
    ctx.thresholds = thresholds;
    return ctx;
}

}  // namespace mave
