// Run configuration: one JSON document collecting grid/latent geometry,
// embedding and channel parameters, thresholds and seeds.
#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "mave/detector.hpp"
#include "mave/flow.hpp"

namespace mave {

struct RunConfig {
    GridDims video_grid{2, 4, 8, 8};
    GridDims audio_grid{2, 4, 8, 8};
    RepetitionFactors video_factors{3, 1, 4, 4};
    RepetitionFactors audio_factors{3, 1, 4, 4};
    uint32_t index_repetition = 1;
    uint32_t bind_length = 128;
    uint32_t bits_per_coord = 1;
    double delta = 0.001;
    TrajectoryConfig trajectory{50, 0.05};
    DetectionThresholds thresholds;
    ToyFlowSpec toy_flow;
    uint64_t master_seed = 42;
    std::string registry_path = "registry.txt";

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    // cross-module precondition checks; throws ConfigError
    void validate() const;

    DetectionContext detection_context() const;
    LatentDims video_latent_dims() const { return latent_dims_for(video_grid, video_factors); }
    LatentDims audio_latent_dims() const { return latent_dims_for(audio_grid, audio_factors); }
};

}  // namespace mave
