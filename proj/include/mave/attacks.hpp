// Threat-model attacks as deterministic, transcript-recorded transforms over
// the toy channel's output tensors. Every attack can be replayed bit-exactly
// from its realized transcript.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mave/latent.hpp"

namespace mave {

// --- frame-level transforms ---------------------------------------------------

// f'_t = (1/(2n+1)) * sum_{tau=t-n..t+n} f_tau with zero padding at the
// boundaries; length unchanged. n >= 1.
LatentTensor frame_average(const LatentTensor& x, int n);

// Sequential scan t = 1..T-1: swap frames (t-1, t) with probability p, using
// the already-possibly-swapped predecessor (cascade semantics). Returns the
// realized permutation: output frame j is input frame perm[j].
std::pair<LatentTensor, std::vector<uint32_t>> frame_swap(const LatentTensor& x, double p,
                                                          uint64_t seed);
LatentTensor apply_frame_permutation(const LatentTensor& x, const std::vector<uint32_t>& perm);

// Linear-interpolation resampling r_s -> r_d fps: T' = floor(T * r_d / r_s),
// f'_{t'} = (1-a) f_floor(s) + a f_ceil(s), s = t' * r_s / r_d, indices
// clamped at T-1. Throws when T' == 0.
LatentTensor frame_rate_adapt(const LatentTensor& x, double rate_src, double rate_dst);

// Inserts k linear blends between every adjacent pair; T' = (k+1)(T-1)+1.
LatentTensor frame_interpolate(const LatentTensor& x, int k);

// --- signal-level transforms ------------------------------------------------------

LatentTensor additive_noise(const LatentTensor& x, double sigma, uint64_t seed);

// Uniform mid-rise quantization over [lo, hi]; when lo/hi are NaN the
// observed value range is used (and recorded in the transcript).
LatentTensor quantize(const LatentTensor& x, int bits, double lo, double hi);

// --- specs & transcripts --------------------------------------------------------------

struct AttackSpec {
    enum class Kind : uint8_t {
        Swap,
        FrameAverage,
        FrameSwap,
        FrameRateAdapter,
        FrameInterpolation,
        AdditiveNoise,
        Quantize,
    };

    Kind kind = Kind::AdditiveNoise;
    int window = 3;            // FrameAverage n
    double swap_prob = 0.25;   // FrameSwap p
    uint64_t seed = 0;         // FrameSwap / AdditiveNoise
    double rate_src = 30.0;    // FrameRateAdapter
    double rate_dst = 24.0;
    int insert_count = 1;      // FrameInterpolation k
    double noise_sigma = 0.1;  // AdditiveNoise
    int quant_bits = 8;        // Quantize

    // realized randomness / observed parameters; replaying with a filled
    // transcript reproduces the attacked sample bit-exactly
    nlohmann::json realized;

    static AttackSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static Kind kind_from_name(const std::string& name);
    static const char* kind_name(Kind k);
};

// Applies the attack, filling spec.realized (or honoring it when present).
LatentTensor apply_attack(AttackSpec& spec, const LatentTensor& x);

// Dominant source frame index for each output frame (-1 when the output
// frame is a blend with no majority source). Identity for alignment-
// preserving attacks; shifted/permuted otherwise.
std::vector<long> realized_frame_map(const AttackSpec& spec, uint32_t frames_in);

// --- swap attack -----------------------------------------------------------------------

struct SwapResult {
    LatentTensor video;  // from session A
    LatentTensor audio;  // from session B
    bool degenerate = false;  // A == B, authentic pair returned with a warning
};

// Pairs session A's video with session B's audio. session ids are recorded
// by the caller; identical ids degenerate to an authentic pair.
SwapResult swap_attack(const LatentTensor& video_a, const LatentTensor& audio_b,
                       const std::string& session_a, const std::string& session_b);

}  // namespace mave
