// End-to-end embedding: secret generation, key derivation, grid
// construction, diffusion, randomization and inverse-transform sampling of
// the entangled initial-noise pair.
#pragma once

#include <string>

#include "mave/config.hpp"
#include "mave/keyring.hpp"

namespace mave {

struct EmbedOutput {
    SecretPayload secret;
    SessionKeyMaterial keys;
    BitGrid video_grid;
    BitGrid audio_grid;
    LatentTensor z_video;
    LatentTensor z_audio;
};

// Deterministic given (config, index, prompt): the secret and all sampling
// randomness derive from (master_seed, index).
EmbedOutput embed_session(const RunConfig& cfg, PlainIndex index, const std::string& prompt);

// Same, but with an explicit secret (used by detection-side regeneration and
// by tests that pin the secret).
EmbedOutput embed_session_with_secret(const RunConfig& cfg, PlainIndex index,
                                      const std::string& prompt, const SecretPayload& secret);

// sampling seed for one (master_seed, index, modality) triple
uint64_t session_sample_seed(uint64_t master_seed, PlainIndex index);

}  // namespace mave
