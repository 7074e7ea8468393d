// Detection pipeline: temporal synchronization against the public time
// template, zero/median decoding, majority voting, bit accuracy, keyless
// index extraction, binding score and the AND-gate verdict, plus the 4-step
// statistical binding decision (index -> registry -> ideal hash -> soft
// match).
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mave/flow.hpp"
#include "mave/grid.hpp"
#include "mave/latent.hpp"

namespace mave {

struct DetectionThresholds {
    double tau_acc = 0.7;
    double tau_bind = 0.8;
    std::string provenance = "default";
};

enum class Verdict : uint8_t { Authentic, Rejected };

enum class RejectReason : uint8_t { None, Binding, Video, Audio, Sync, UnknownIndex };

const char* to_string(Verdict v);
const char* to_string(RejectReason r);

struct DetectionReport {
    double ba_video = 0.0;
    double ba_audio = 0.0;
    double s_bind = 0.0;
    long sync_offset = 0;
    std::optional<PlainIndex> recovered_index;
    Verdict verdict = Verdict::Rejected;
    RejectReason reject_reason = RejectReason::None;
    DetectionThresholds thresholds;

    nlohmann::json to_json() const;
};

// --- decoding primitives ---------------------------------------------------

// b[i] = 1[z[i] > 0]
std::vector<uint8_t> decode_zero(const LatentTensor& z);

// 1 iff strictly more than half the copies are ones; exact ties decode to 0
uint8_t majority_bit(size_t ones, size_t total);

// per-grid-bit majority over the k_all diffused copies
std::vector<uint8_t> undiffuse_majority(const std::vector<uint8_t>& latent_bits, GridDims grid,
                                        RepetitionFactors factors);

// per-grid-bit median of the k_all copies, thresholded at zero
std::vector<uint8_t> decode_median(const LatentTensor& z, GridDims grid,
                                   RepetitionFactors factors);

// fraction of positions where the two bit arrays agree (throws on length mismatch)
double bit_accuracy(const std::vector<uint8_t>& decoded, const std::vector<uint8_t>& truth);

// --- synchronization ---------------------------------------------------------

// Decodes channel-0 bits per frame (majority within blocks) and scores them
// against the template's cyclic shifts for offsets in [-(T-1), T-1]. Ties
// break toward the smallest |offset|, negative first. Throws SyncFailedError
// when no offset reaches 0.55 agreement.
long synchronize(const LatentTensor& z, GridDims grid, RepetitionFactors factors);

// undo a temporal rotation found by synchronize: aligned frame j is observed
// frame (j - offset) mod T
LatentTensor align_frames(const LatentTensor& z, long offset);

// --- verification -------------------------------------------------------------

// keyless majority vote over all r x T_g copies of the 32 index bits
PlainIndex extract_index(const std::vector<uint8_t>& video_grid_bits, const GridLayout& layout);

// S = (1/N) sum_i 1[audio_bits[bind(i)] == hash_bit(ideal, i % 256)]
double binding_score(const std::vector<uint8_t>& audio_grid_bits, const Bytes& ideal_digest,
                     const GridLayout& layout);

// Eq.-style strict AND gate; reason priority binding, video, audio.
std::pair<Verdict, RejectReason> verdict(double ba_video, double ba_audio, double s_bind,
                                         const DetectionThresholds& th);

// --- end-to-end decision --------------------------------------------------------

// Everything the detector must know about the embedding geometry. The video
// layout is key-independent; the audio layout (keyed binding positions) is
// rebuilt after the registry lookup.
struct DetectionContext {
    GridDims video_grid{2, 4, 8, 8};
    GridDims audio_grid{2, 4, 8, 8};
    RepetitionFactors video_factors{3, 1, 4, 4};
    RepetitionFactors audio_factors{3, 1, 4, 4};
    uint32_t index_repetition = 1;
    uint32_t bind_length = 128;
    DetectionThresholds thresholds;
};

class Registry;

// Four steps: extract index; look up (m, prompt); re-derive keys, rebuild the
// ideal grids and the ideal hash; soft-match the binding region. The verdict
// additionally requires both bit accuracies to clear tau_acc.
DetectionReport statistical_binding_decision(const LatentTensor& recovered_video,
                                             const LatentTensor& recovered_audio,
                                             const Registry& registry,
                                             const DetectionContext& ctx);

}  // namespace mave
