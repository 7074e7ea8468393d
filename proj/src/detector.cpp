#include "mave/detector.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "mave/keyring.hpp"

namespace mave {

const char* to_string(Verdict v) {
    return v == Verdict::Authentic ? "authentic" : "rejected";
}

const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::None: return "none";
        case RejectReason::Binding: return "binding";
        case RejectReason::Video: return "video";
        case RejectReason::Audio: return "audio";
        case RejectReason::Sync: return "sync";
        case RejectReason::UnknownIndex: return "unknown-index";
    }
    return "?";
}

nlohmann::json DetectionReport::to_json() const {
    nlohmann::json j;
    j["ba_video"] = ba_video;
    j["ba_audio"] = ba_audio;
    j["s_bind"] = s_bind;
    j["sync_offset"] = sync_offset;
    if (recovered_index) {
        char buf[9];
        std::snprintf(buf, sizeof buf, "%08x", *recovered_index);
        j["index_hex"] = buf;
    } else {
        j["index_hex"] = nullptr;
    }
    j["verdict"] = to_string(verdict);
    j["reject_reason"] = to_string(reject_reason);
    j["thresholds"] = {{"tau_acc", thresholds.tau_acc},
                       {"tau_bind", thresholds.tau_bind},
                       {"provenance", thresholds.provenance}};
    return j;
}

// --- decoding ----------------------------------------------------------------

std::vector<uint8_t> decode_zero(const LatentTensor& z) {
    std::vector<uint8_t> bits(z.values.size());
    for (size_t i = 0; i < z.values.size(); ++i) bits[i] = z.values[i] > 0.0f ? 1 : 0;
    return bits;
}

uint8_t majority_bit(size_t ones, size_t total) { return 2 * ones > total ? 1 : 0; }

std::vector<uint8_t> undiffuse_majority(const std::vector<uint8_t>& latent_bits, GridDims grid,
                                        RepetitionFactors factors) {
    LatentDims ld = latent_dims_for(grid, factors);
    if (latent_bits.size() != ld.total())
        throw ConfigError("bit array does not match grid x factors");
    std::vector<size_t> ones(grid.total(), 0);
    size_t i = 0;
    for (uint32_t c = 0; c < ld.c; ++c)
        for (uint32_t t = 0; t < ld.t; ++t)
            for (uint32_t h = 0; h < ld.h; ++h)
                for (uint32_t w = 0; w < ld.w; ++w, ++i)
                    ones[grid.slot(c / factors.c, t / factors.t, h / factors.h, w / factors.w)] +=
                        latent_bits[i];
    std::vector<uint8_t> out(grid.total());
    const size_t k_all = factors.all();
    for (size_t s = 0; s < out.size(); ++s) out[s] = majority_bit(ones[s], k_all);
    return out;
}

std::vector<uint8_t> decode_median(const LatentTensor& z, GridDims grid,
                                   RepetitionFactors factors) {
    if (latent_dims_for(grid, factors) != z.dims)
        throw ConfigError("latent does not match grid x factors");
    std::vector<std::vector<float>> copies(grid.total());
    for (auto& c : copies) c.reserve(factors.all());
    size_t i = 0;
    for (uint32_t c = 0; c < z.dims.c; ++c)
        for (uint32_t t = 0; t < z.dims.t; ++t)
            for (uint32_t h = 0; h < z.dims.h; ++h)
                for (uint32_t w = 0; w < z.dims.w; ++w, ++i)
                    copies[grid.slot(c / factors.c, t / factors.t, h / factors.h, w / factors.w)]
                        .push_back(z.values[i]);
    std::vector<uint8_t> out(grid.total());
    for (size_t s = 0; s < out.size(); ++s) {
        auto& v = copies[s];
        size_t mid = v.size() / 2;
        std::nth_element(v.begin(), v.begin() + mid, v.end());
        double median = v[mid];
        if (v.size() % 2 == 0) {
            double lower = *std::max_element(v.begin(), v.begin() + mid);
            median = 0.5 * (median + lower);
        }
        out[s] = median > 0.0 ? 1 : 0;
    }
    return out;
}

double bit_accuracy(const std::vector<uint8_t>& decoded, const std::vector<uint8_t>& truth) {
    if (decoded.size() != truth.size() || decoded.empty())
        throw ConfigError("bit accuracy needs equal nonempty lengths");
    size_t match = 0;
    for (size_t i = 0; i < decoded.size(); ++i)
        if (decoded[i] == truth[i]) ++match;
    return double(match) / double(decoded.size());
}

// --- synchronization -------------------------------------------------------------

namespace {

// per-frame majority-decoded channel-0 bits (H_g * W_g per frame)
std::vector<std::vector<uint8_t>> decode_template_rows(const LatentTensor& z, GridDims grid,
                                                       RepetitionFactors factors) {
    const LatentDims& ld = z.dims;
    std::vector<std::vector<size_t>> ones(grid.t,
                                          std::vector<size_t>(grid.frame_channel0(), 0));
    const size_t copies = size_t(factors.c) * factors.t * factors.h * factors.w;
    for (uint32_t c = 0; c < factors.c; ++c)  // latent channels 0..k_c-1 hold grid channel 0
        for (uint32_t t = 0; t < ld.t; ++t)
            for (uint32_t h = 0; h < ld.h; ++h)
                for (uint32_t w = 0; w < ld.w; ++w) {
                    size_t slot = size_t(h / factors.h) * grid.w + (w / factors.w);
                    ones[t / factors.t][slot] += z.values[ld.coord(c, t, h, w)] > 0.0f ? 1 : 0;
                }
    std::vector<std::vector<uint8_t>> rows(grid.t);
    for (uint32_t t = 0; t < grid.t; ++t) {
        rows[t].resize(grid.frame_channel0());
        for (size_t s = 0; s < rows[t].size(); ++s)
            rows[t][s] = majority_bit(ones[t][s], copies);
    }
    return rows;
}

}  // namespace

long synchronize(const LatentTensor& z, GridDims grid, RepetitionFactors factors) {
    if (latent_dims_for(grid, factors) != z.dims)
        throw ConfigError("latent does not match grid x factors");
    if (grid.t < 1) throw ConfigError("need at least one frame");

    auto rows = decode_template_rows(z, grid, factors);
    TimeTemplate tpl = make_time_template(grid.frame_channel0());

    const long t_max = static_cast<long>(grid.t);
    long best_offset = 0;
    double best_score = -1.0;
    for (long abs_o = 0; abs_o < t_max; ++abs_o) {
        for (int sgn : {-1, +1}) {
            if (abs_o == 0 && sgn > 0) continue;  // visit offset 0 once
            long o = sgn * abs_o;
            size_t agree = 0, total = 0;
            for (long t = 0; t < t_max; ++t) {
                for (size_t s = 0; s < rows[t].size(); ++s) {
                    agree += rows[t][s] == tpl.bit(t + o, s) ? 1 : 0;
                    ++total;
                }
            }
            double score = double(agree) / double(total);
            if (score > best_score) {  // strict: earlier candidates win ties
                best_score = score;
                best_offset = o;
            }
        }
    }
    if (best_score < 0.55)
        throw SyncFailedError("no offset reached 0.55 template agreement (best " +
                              std::to_string(best_score) + ")");
    return best_offset;
}

LatentTensor align_frames(const LatentTensor& z, long offset) {
    if (offset == 0) return z;
    LatentTensor out = z;
    const LatentDims& d = z.dims;
    const long t_max = static_cast<long>(d.t);
    for (long j = 0; j < t_max; ++j) {
        long src = ((j - offset) % t_max + t_max) % t_max;
        for (uint32_t c = 0; c < d.c; ++c)
            for (uint32_t h = 0; h < d.h; ++h)
                for (uint32_t w = 0; w < d.w; ++w)
                    out.values[d.coord(c, static_cast<uint32_t>(j), h, w)] =
                        z.values[d.coord(c, static_cast<uint32_t>(src), h, w)];
    }
    return out;
}

// --- verification -------------------------------------------------------------------

PlainIndex extract_index(const std::vector<uint8_t>& video_grid_bits, const GridLayout& layout) {
    if (video_grid_bits.size() != layout.dims.total())
        throw ConfigError("grid bits do not match layout dims");
    const size_t per_frame = 32u * size_t(layout.index_repetition);
    if (per_frame == 0) throw ConfigError("layout has no index region");
    std::array<size_t, 32> ones{};
    for (size_t k = 0; k < layout.index_slots.size(); ++k)
        ones[(k % per_frame) % 32] += video_grid_bits[layout.index_slots[k]];
    const size_t copies = layout.index_slots.size() / 32;
    PlainIndex out = 0;
    for (size_t bit = 0; bit < 32; ++bit)
        if (majority_bit(ones[bit], copies)) out |= PlainIndex(1) << bit;
    return out;
}

double binding_score(const std::vector<uint8_t>& audio_grid_bits, const Bytes& ideal_digest,
                     const GridLayout& layout) {
    if (audio_grid_bits.size() != layout.dims.total())
        throw ConfigError("grid bits do not match layout dims");
    if (layout.bind_slots.empty()) throw ConfigError("layout has no binding region");
    size_t match = 0;
    for (size_t i = 0; i < layout.bind_slots.size(); ++i)
        if (audio_grid_bits[layout.bind_slots[i]] == hash_bit(ideal_digest, i % 256)) ++match;
    return double(match) / double(layout.bind_slots.size());
}

std::pair<Verdict, RejectReason> verdict(double ba_video, double ba_audio, double s_bind,
                                         const DetectionThresholds& th) {
    if (s_bind <= th.tau_bind) return {Verdict::Rejected, RejectReason::Binding};
    if (ba_video <= th.tau_acc) return {Verdict::Rejected, RejectReason::Video};
    if (ba_audio <= th.tau_acc) return {Verdict::Rejected, RejectReason::Audio};
    return {Verdict::Authentic, RejectReason::None};
}

// --- end-to-end -----------------------------------------------------------------------

DetectionReport statistical_binding_decision(const LatentTensor& recovered_video,
                                             const LatentTensor& recovered_audio,
                                             const Registry& registry,
                                             const DetectionContext& ctx) {
    DetectionReport report;
    report.thresholds = ctx.thresholds;

    GridLayout video_layout = build_layout(ctx.video_grid, 0, ctx.index_repetition, nullptr);

    // 0. temporal synchronization precedes everything (keyless)
    long offset;
    try {
        offset = synchronize(recovered_video, ctx.video_grid, ctx.video_factors);
    } catch (const SyncFailedError&) {
        report.verdict = Verdict::Rejected;
        report.reject_reason = RejectReason::Sync;
        return report;
    }
    report.sync_offset = offset;
    LatentTensor zv = align_frames(recovered_video, offset);
    LatentTensor za = align_frames(recovered_audio, offset);

    // 1. keyless index extraction (index slots are never keystream-masked)
    std::vector<uint8_t> raw_v = decode_zero(zv);
    std::vector<uint8_t> plain_grid_v =
        undiffuse_majority(raw_v, ctx.video_grid, ctx.video_factors);
    PlainIndex index = extract_index(plain_grid_v, video_layout);
    report.recovered_index = index;

    // 2. server lookup
    RegistryRecord record;
    try {
        record = registry.lookup(index);
    } catch (const NotFoundError&) {
        report.verdict = Verdict::Rejected;
        report.reject_reason = RejectReason::UnknownIndex;
        return report;
    }

    // 3. re-derive keys, regenerate the ideal grids and the ideal hash
    SessionKeyMaterial keys = derive_session_key(record.secret, record.prompt);
    GridLayout audio_layout =
        build_layout(ctx.audio_grid, ctx.bind_length, 0, &keys.subkey_audio);
    BitGrid ideal_video = build_video_grid(keys, index, video_layout);
    BitGrid ideal_audio = build_audio_grid(keys, ideal_video, audio_layout);
    Bytes ideal_hash = grid_digest(ideal_video);

    // 4. unmask with the session keystream, majority-vote, soft-match
    auto decode_grid = [&](const LatentTensor& z, const GridLayout& layout,
                           RepetitionFactors factors) {
        RandomizedMap m = extract_symbols(z, 1);
        randomize(m, keys.session_key, layout, factors);  // self-inverse unmask
        return undiffuse_majority(m.symbols, layout.dims, factors);
    };
    std::vector<uint8_t> grid_v = decode_grid(zv, video_layout, ctx.video_factors);
    std::vector<uint8_t> grid_a = decode_grid(za, audio_layout, ctx.audio_factors);

    report.ba_video = bit_accuracy(grid_v, ideal_video.bits);
    report.ba_audio = bit_accuracy(grid_a, ideal_audio.bits);
    report.s_bind = binding_score(grid_a, ideal_hash, audio_layout);
    std::tie(report.verdict, report.reject_reason) =
        verdict(report.ba_video, report.ba_audio, report.s_bind, ctx.thresholds);
    return report;
}

}  // namespace mave
