#include "mave/pipeline.hpp"

namespace mave {

namespace {

Key256 secret_gen_key(uint64_t master_seed, PlainIndex index) {
    Bytes material;
    const char* label = "session-secret";
    material.insert(material.end(), label, label + 14);
    for (int i = 0; i < 8; ++i) material.push_back((master_seed >> (8 * i)) & 0xff);
    for (int i = 0; i < 4; ++i) material.push_back((index >> (8 * i)) & 0xff);
    Bytes digest = sha256(material);
    Key256 key{};
    std::copy(digest.begin(), digest.end(), key.begin());
    return key;
}

}  // namespace

uint64_t session_sample_seed(uint64_t master_seed, PlainIndex index) {
    Bytes material;
    const char* label = "sample-seed";
    material.insert(material.end(), label, label + 11);
    for (int i = 0; i < 8; ++i) material.push_back((master_seed >> (8 * i)) & 0xff);
    for (int i = 0; i < 4; ++i) material.push_back((index >> (8 * i)) & 0xff);
    Bytes digest = sha256(material);
    uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed |= uint64_t(digest[i]) << (8 * i);
    return seed;
}

EmbedOutput embed_session(const RunConfig& cfg, PlainIndex index, const std::string& prompt) {
    Keystream rng(secret_gen_key(cfg.master_seed, index));
    return embed_session_with_secret(cfg, index, prompt, SecretPayload::random(rng));
}

EmbedOutput embed_session_with_secret(const RunConfig& cfg, PlainIndex index,
                                      const std::string& prompt, const SecretPayload& secret) {
    cfg.validate();
    EmbedOutput out;
    out.secret = secret;
    out.keys = derive_session_key(secret, prompt);

    GridLayout video_layout = build_layout(cfg.video_grid, 0, cfg.index_repetition, nullptr);
    GridLayout audio_layout =
        build_layout(cfg.audio_grid, cfg.bind_length, 0, &out.keys.subkey_audio);
    out.video_grid = build_video_grid(out.keys, index, video_layout);
    out.audio_grid = build_audio_grid(out.keys, out.video_grid, audio_layout);

    const uint64_t seed = session_sample_seed(cfg.master_seed, index);
    auto embed_one = [&](const BitGrid& grid, RepetitionFactors factors, Modality modality) {
        RandomizedMap map = diffuse(grid, factors, latent_dims_for(grid.layout.dims, factors));
        randomize(map, out.keys.session_key, grid.layout, factors);
        return sample_latent(map, cfg.delta, seed, modality);
    };
    out.z_video = embed_one(out.video_grid, cfg.video_factors, Modality::Video);
    out.z_audio = embed_one(out.audio_grid, cfg.audio_factors, Modality::Audio);
    return out;
}

}  // namespace mave
