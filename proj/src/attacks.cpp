#include "mave/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mave/normal.hpp"

namespace mave {

namespace {

size_t frame_floats(const LatentDims& d) { return size_t(d.c) * d.h * d.w; }

// gather frame t into a contiguous buffer (C,H,W)
std::vector<float> get_frame(const LatentTensor& x, uint32_t t) {
    const LatentDims& d = x.dims;
    std::vector<float> f(frame_floats(d));
    size_t i = 0;
    for (uint32_t c = 0; c < d.c; ++c)
        for (uint32_t h = 0; h < d.h; ++h)
            for (uint32_t w = 0; w < d.w; ++w) f[i++] = x.values[d.coord(c, t, h, w)];
    return f;
}

void set_frame(LatentTensor& x, uint32_t t, const std::vector<float>& f) {
    const LatentDims& d = x.dims;
    size_t i = 0;
    for (uint32_t c = 0; c < d.c; ++c)
        for (uint32_t h = 0; h < d.h; ++h)
            for (uint32_t w = 0; w < d.w; ++w) x.values[d.coord(c, t, h, w)] = f[i++];
}

LatentTensor with_frames(const LatentTensor& like, uint32_t t_out) {
    LatentTensor out;
    out.dims = like.dims;
    out.dims.t = t_out;
    out.modality = like.modality;
    out.values.assign(out.dims.total(), 0.0f);
    return out;
}

Key256 attack_key(const char* label, uint64_t seed) {
    Bytes material(label, label + std::char_traits<char>::length(label));
    for (int i = 0; i < 8; ++i) material.push_back((seed >> (8 * i)) & 0xff);
    Bytes digest = sha256(material);
    Key256 key{};
    std::copy(digest.begin(), digest.end(), key.begin());
    return key;
}

}  // namespace

LatentTensor frame_average(const LatentTensor& x, int n) {
    if (n < 1) throw ConfigError("frame_average window must be >= 1");
    const long t_max = x.dims.t;
    LatentTensor out = x;
    std::vector<std::vector<float>> frames(t_max);
    for (long t = 0; t < t_max; ++t) frames[t] = get_frame(x, static_cast<uint32_t>(t));
    const double div = 2.0 * n + 1.0;
    std::vector<float> acc(frame_floats(x.dims));
    for (long t = 0; t < t_max; ++t) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        for (long tau = t - n; tau <= t + n; ++tau) {
            if (tau < 0 || tau >= t_max) continue;  // zero padding
            const auto& f = frames[tau];
            for (size_t i = 0; i < acc.size(); ++i) acc[i] += f[i];
        }
        for (auto& v : acc) v = static_cast<float>(v / div);
        set_frame(out, static_cast<uint32_t>(t), acc);
    }
    return out;
}

std::pair<LatentTensor, std::vector<uint32_t>> frame_swap(const LatentTensor& x, double p,
                                                          uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw ConfigError("swap probability must be in [0, 1]");
    const uint32_t t_max = x.dims.t;
    std::vector<uint32_t> perm(t_max);
    for (uint32_t t = 0; t < t_max; ++t) perm[t] = t;

    Keystream ks(attack_key("frame-swap", seed));
    for (uint32_t t = 1; t < t_max; ++t) {
        double u = (double(ks.next_u64() >> 11) + 0.5) * 0x1.0p-53;
        if (u < p) std::swap(perm[t - 1], perm[t]);
    }
    return {apply_frame_permutation(x, perm), perm};
}

LatentTensor apply_frame_permutation(const LatentTensor& x, const std::vector<uint32_t>& perm) {
    if (perm.size() != x.dims.t) throw ConfigError("permutation length must equal frame count");
    LatentTensor out = x;
    for (uint32_t t = 0; t < x.dims.t; ++t) set_frame(out, t, get_frame(x, perm[t]));
    return out;
}

LatentTensor frame_rate_adapt(const LatentTensor& x, double rate_src, double rate_dst) {
    if (rate_src <= 0.0 || rate_dst <= 0.0) throw ConfigError("frame rates must be > 0");
    const uint32_t t_in = x.dims.t;
    const uint32_t t_out = static_cast<uint32_t>(std::floor(t_in * rate_dst / rate_src));
    if (t_out == 0) throw ConfigError("frame rate adaptation yields zero frames");

    LatentTensor out = with_frames(x, t_out);
    std::vector<float> blend(frame_floats(x.dims));
    for (uint32_t tp = 0; tp < t_out; ++tp) {
        double sigma = tp * rate_src / rate_dst;
        uint32_t lo = std::min<uint32_t>(static_cast<uint32_t>(std::floor(sigma)), t_in - 1);
        uint32_t hi = std::min<uint32_t>(static_cast<uint32_t>(std::ceil(sigma)), t_in - 1);
        double alpha = sigma - std::floor(sigma);
        auto f_lo = get_frame(x, lo);
        auto f_hi = get_frame(x, hi);
        for (size_t i = 0; i < blend.size(); ++i)
            blend[i] = static_cast<float>((1.0 - alpha) * f_lo[i] + alpha * f_hi[i]);
        set_frame(out, tp, blend);
    }
    return out;
}

LatentTensor frame_interpolate(const LatentTensor& x, int k) {
    if (k < 1) throw ConfigError("interpolation count must be >= 1");
    if (x.dims.t < 2) throw ConfigError("interpolation needs at least two frames");
    const uint32_t t_in = x.dims.t;
    const uint32_t t_out = (k + 1) * (t_in - 1) + 1;

    LatentTensor out = with_frames(x, t_out);
    std::vector<float> blend(frame_floats(x.dims));
    uint32_t tp = 0;
    for (uint32_t t = 0; t + 1 < t_in; ++t) {
        auto f0 = get_frame(x, t);
        auto f1 = get_frame(x, t + 1);
        set_frame(out, tp++, f0);
        for (int j = 1; j <= k; ++j) {
            double a = double(j) / (k + 1);
            for (size_t i = 0; i < blend.size(); ++i)
                blend[i] = static_cast<float>((1.0 - a) * f0[i] + a * f1[i]);
            set_frame(out, tp++, blend);
        }
    }
    set_frame(out, tp, get_frame(x, t_in - 1));
    return out;
}

LatentTensor additive_noise(const LatentTensor& x, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
    LatentTensor out = x;
    if (sigma == 0.0) return out;
    Keystream ks(attack_key("additive-noise", seed));
    for (float& v : out.values) {
        double u = (double(ks.next_u64() >> 11) + 0.5) * 0x1.0p-53;
        v = static_cast<float>(v + sigma * norm_ppf(u));
    }
    return out;
}

LatentTensor quantize(const LatentTensor& x, int bits, double lo, double hi) {
    if (bits < 2 || bits > 16) throw ConfigError("quantizer bits must be in [2, 16]");
    if (std::isnan(lo) || std::isnan(hi)) {
        lo = std::numeric_limits<double>::infinity();
        hi = -std::numeric_limits<double>::infinity();
        for (float v : x.values) {
            lo = std::min(lo, double(v));
            hi = std::max(hi, double(v));
        }
    }
    if (!(hi > lo)) throw ConfigError("quantizer range is degenerate");
    const double levels = double(1u << bits);
    const double step = (hi - lo) / levels;
    LatentTensor out = x;
    for (float& v : out.values) {
        double bin = std::floor((v - lo) / step);
        bin = std::clamp(bin, 0.0, levels - 1.0);
        v = static_cast<float>(lo + (bin + 0.5) * step);
    }
    return out;
}

// --- specs ---------------------------------------------------------------------

const char* AttackSpec::kind_name(Kind k) {
    switch (k) {
        case Kind::Swap: return "swap";
        case Kind::FrameAverage: return "frame_average";
        case Kind::FrameSwap: return "frame_swap";
        case Kind::FrameRateAdapter: return "frame_rate_adapter";
        case Kind::FrameInterpolation: return "frame_interpolation";
        case Kind::AdditiveNoise: return "additive_noise";
        case Kind::Quantize: return "quantize";
    }
    return "?";
}

AttackSpec::Kind AttackSpec::kind_from_name(const std::string& name) {
    for (int k = 0; k <= int(Kind::Quantize); ++k)
        if (name == kind_name(Kind(k))) return Kind(k);
    throw ConfigError("unknown attack kind: " + name);
}

nlohmann::json AttackSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = kind_name(kind);
    switch (kind) {
        case Kind::Swap: break;
        case Kind::FrameAverage: j["n"] = window; break;
        case Kind::FrameSwap:
            j["p"] = swap_prob;
            j["seed"] = seed;
            break;
        case Kind::FrameRateAdapter:
            j["rate_src"] = rate_src;
            j["rate_dst"] = rate_dst;
            break;
        case Kind::FrameInterpolation: j["k"] = insert_count; break;
        case Kind::AdditiveNoise:
            j["sigma"] = noise_sigma;
            j["seed"] = seed;
            break;
        case Kind::Quantize: j["bits"] = quant_bits; break;
    }
    if (!realized.is_null()) j["realized"] = realized;
    return j;
}

AttackSpec AttackSpec::from_json(const nlohmann::json& j) {
    AttackSpec s;
    s.kind = kind_from_name(j.at("kind").get<std::string>());
    switch (s.kind) {
        case Kind::Swap: break;
        case Kind::FrameAverage: s.window = j.at("n").get<int>(); break;
        case Kind::FrameSwap:
            s.swap_prob = j.at("p").get<double>();
            s.seed = j.value("seed", uint64_t(0));
            break;
        case Kind::FrameRateAdapter:
            s.rate_src = j.at("rate_src").get<double>();
            s.rate_dst = j.at("rate_dst").get<double>();
            break;
        case Kind::FrameInterpolation: s.insert_count = j.at("k").get<int>(); break;
        case Kind::AdditiveNoise:
            s.noise_sigma = j.at("sigma").get<double>();
            s.seed = j.value("seed", uint64_t(0));
            break;
        case Kind::Quantize: s.quant_bits = j.at("bits").get<int>(); break;
    }
    if (j.contains("realized")) s.realized = j["realized"];
    return s;
}

LatentTensor apply_attack(AttackSpec& spec, const LatentTensor& x) {
    switch (spec.kind) {
        case AttackSpec::Kind::Swap:
            throw ConfigError("swap attacks pair two sessions; use swap_attack");
        case AttackSpec::Kind::FrameAverage:
            spec.realized = {{"n", spec.window}};
            return frame_average(x, spec.window);
        case AttackSpec::Kind::FrameSwap: {
            if (!spec.realized.is_null() && spec.realized.contains("permutation")) {
                auto perm = spec.realized["permutation"].get<std::vector<uint32_t>>();
                return apply_frame_permutation(x, perm);
            }
            auto [out, perm] = frame_swap(x, spec.swap_prob, spec.seed);
            spec.realized = {{"permutation", perm}};
            return out;
        }
        case AttackSpec::Kind::FrameRateAdapter:
            spec.realized = {{"rate_src", spec.rate_src}, {"rate_dst", spec.rate_dst}};
            return frame_rate_adapt(x, spec.rate_src, spec.rate_dst);
        case AttackSpec::Kind::FrameInterpolation:
            spec.realized = {{"k", spec.insert_count}};
            return frame_interpolate(x, spec.insert_count);
        case AttackSpec::Kind::AdditiveNoise:
            spec.realized = {{"sigma", spec.noise_sigma}, {"seed", spec.seed}};
            return additive_noise(x, spec.noise_sigma, spec.seed);
        case AttackSpec::Kind::Quantize: {
            double lo = std::numeric_limits<double>::quiet_NaN();
            double hi = lo;
            if (!spec.realized.is_null() && spec.realized.contains("lo")) {
                lo = spec.realized["lo"].get<double>();
                hi = spec.realized["hi"].get<double>();
            }
            if (std::isnan(lo)) {
                lo = *std::min_element(x.values.begin(), x.values.end());
                hi = *std::max_element(x.values.begin(), x.values.end());
            }
            spec.realized = {{"bits", spec.quant_bits}, {"lo", lo}, {"hi", hi}};
            return quantize(x, spec.quant_bits, lo, hi);
        }
    }
    throw ConfigError("unhandled attack kind");
}

std::vector<long> realized_frame_map(const AttackSpec& spec, uint32_t frames_in) {
    switch (spec.kind) {
        case AttackSpec::Kind::FrameAverage:
        case AttackSpec::Kind::AdditiveNoise:
        case AttackSpec::Kind::Quantize: {
            std::vector<long> map(frames_in);
            for (uint32_t t = 0; t < frames_in; ++t) map[t] = t;
            return map;
        }
        case AttackSpec::Kind::FrameSwap: {
            auto perm = spec.realized.at("permutation").get<std::vector<uint32_t>>();
            return std::vector<long>(perm.begin(), perm.end());
        }
        case AttackSpec::Kind::FrameRateAdapter: {
            uint32_t t_out =
                static_cast<uint32_t>(std::floor(frames_in * spec.rate_dst / spec.rate_src));
            std::vector<long> map(t_out);
            for (uint32_t tp = 0; tp < t_out; ++tp) {
                double sigma = tp * spec.rate_src / spec.rate_dst;
                double alpha = sigma - std::floor(sigma);
                long dominant = alpha < 0.5 ? long(std::floor(sigma)) : long(std::ceil(sigma));
                if (alpha == 0.5) dominant = -1;  // even blend, no majority source
                map[tp] = std::min<long>(dominant, frames_in - 1);
            }
            return map;
        }
        case AttackSpec::Kind::FrameInterpolation: {
            uint32_t t_out = (spec.insert_count + 1) * (frames_in - 1) + 1;
            std::vector<long> map(t_out);
            for (uint32_t tp = 0; tp < t_out; ++tp) {
                uint32_t pair = tp / (spec.insert_count + 1);
                uint32_t j = tp % (spec.insert_count + 1);
                double a = double(j) / (spec.insert_count + 1);
                map[tp] = a == 0.0 ? long(pair) : (a < 0.5 ? long(pair) : (a > 0.5 ? long(pair) + 1 : -1));
            }
            return map;
        }
        case AttackSpec::Kind::Swap: break;
    }
    throw ConfigError("no frame map for this attack kind");
}

SwapResult swap_attack(const LatentTensor& video_a, const LatentTensor& audio_b,
                       const std::string& session_a, const std::string& session_b) {
    SwapResult r;
    r.video = video_a;
    r.audio = audio_b;
    r.degenerate = session_a == session_b;
    return r;
}

}  // namespace mave
