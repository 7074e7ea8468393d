#include "mave/flow.hpp"

#include <atomic>
#include <cmath>

#include "mave/normal.hpp"

namespace mave {

namespace {

std::atomic<uint64_t> g_velocity_passes{0};

void check(const ToyFlowSpec& spec, const TrajectoryConfig& cfg) {
    if (spec.video.stddev <= 0.0 || spec.audio.stddev <= 0.0)
        throw ConfigError("toy flow stddev must be > 0");
    if (cfg.n_steps < 1) throw ConfigError("n_steps must be >= 1");
    if (cfg.delta_t < 0.0 || cfg.delta_t >= 1.0)
        throw ConfigError("delta_t must be in [0, 1)");
}

// One Euler sweep over a span of coordinates. Forward walks t_k = dt + k*h
// evaluating at the left endpoint; backward retraces the same grid from the
// right endpoint. Each step over the span counts as one model pass.
void euler_forward(std::vector<float>& values, const BlockParams& p, const TrajectoryConfig& cfg) {
    const double h = (1.0 - cfg.delta_t) / cfg.n_steps;
    for (int k = 0; k < cfg.n_steps; ++k) {
        const double t = cfg.delta_t + k * h;
        g_velocity_passes.fetch_add(1, std::memory_order_relaxed);
        for (float& vf : values) {
            double z = vf;
            vf = static_cast<float>(z + h * velocity(z, t, p));
        }
    }
}

void euler_backward_step(std::vector<float>& values, const BlockParams& p, double t, double h) {
    for (float& vf : values) {
        double z = vf;
        vf = static_cast<float>(z - h * velocity(z, t, p));
    }
}

Key256 drift_key(uint64_t seed, Modality modality) {
    Bytes material;
    const char* label = "drift-channel";
    material.insert(material.end(), label, label + 13);
    for (int i = 0; i < 8; ++i) material.push_back((seed >> (8 * i)) & 0xff);
    material.push_back(static_cast<uint8_t>(modality));
    Bytes digest = sha256(material);
    Key256 key{};
    std::copy(digest.begin(), digest.end(), key.begin());
    return key;
}

}  // namespace

double velocity(double z, double t, const BlockParams& p) {
    const double s2 = p.stddev * p.stddev;
    const double a = t * t * s2 + (1.0 - t) * (1.0 - t);
    const double centered = z - t * p.mean;
    const double e_x1 = p.mean + t * s2 * centered / a;
    const double e_z0 = (1.0 - t) * centered / a;
    return e_x1 - e_z0;
}

LatentTensor generate(const LatentTensor& z0, const ToyFlowSpec& spec,
                      const TrajectoryConfig& cfg) {
    check(spec, cfg);
    LatentTensor x = z0;
    euler_forward(x.values, spec.block(x.modality), cfg);
    return x;
}

LatentTensor invert(const LatentTensor& x, const ToyFlowSpec& spec, const TrajectoryConfig& cfg) {
    check(spec, cfg);
    LatentTensor z = x;
    const BlockParams& p = spec.block(z.modality);
    const double h = (1.0 - cfg.delta_t) / cfg.n_steps;
    for (int k = cfg.n_steps; k >= 1; --k) {
        g_velocity_passes.fetch_add(1, std::memory_order_relaxed);
        euler_backward_step(z.values, p, cfg.delta_t + k * h, h);
    }
    return z;
}

std::pair<LatentTensor, LatentTensor> invert_joint(const LatentTensor& xv,
                                                   const LatentTensor& xa,
                                                   const ToyFlowSpec& spec,
                                                   const TrajectoryConfig& cfg) {
    check(spec, cfg);
    LatentTensor zv = xv, za = xa;
    const double h = (1.0 - cfg.delta_t) / cfg.n_steps;
    for (int k = cfg.n_steps; k >= 1; --k) {
        const double t = cfg.delta_t + k * h;
        // one pass covers the concatenated coordinate set
        g_velocity_passes.fetch_add(1, std::memory_order_relaxed);
        euler_backward_step(zv.values, spec.block(zv.modality), t, h);
        euler_backward_step(za.values, spec.block(za.modality), t, h);
    }
    return {std::move(zv), std::move(za)};
}

std::pair<LatentTensor, LatentTensor> invert_separate(const LatentTensor& xv,
                                                      const LatentTensor& xa,
                                                      const ToyFlowSpec& spec,
                                                      const TrajectoryConfig& cfg) {
    return {invert(xv, spec, cfg), invert(xa, spec, cfg)};
}

LatentTensor drift_channel(const LatentTensor& z0, const DriftParams& params, uint64_t seed) {
    if (params.sigma < 0.0) throw ConfigError("drift sigma must be >= 0");
    if (params.flip_rate < 0.0 || params.flip_rate > 0.5)
        throw ConfigError("flip rate must be in [0, 0.5]");

    LatentTensor out = z0;
    Keystream ks(drift_key(seed, z0.modality));
    for (float& vf : out.values) {
        // two draws per coordinate, fixed order: gaussian noise then flip
        double u_noise = (double(ks.next_u64() >> 11) + 0.5) * 0x1.0p-53;
        double u_flip = (double(ks.next_u64() >> 11) + 0.5) * 0x1.0p-53;
        double z = vf;
        if (params.sigma > 0.0) z += params.sigma * norm_ppf(u_noise);
        if (u_flip < params.flip_rate) z = -z;
        vf = static_cast<float>(z);
    }
    return out;
}

uint64_t velocity_pass_count() { return g_velocity_passes.load(std::memory_order_relaxed); }
void reset_velocity_pass_count() { g_velocity_passes.store(0, std::memory_order_relaxed); }

}  // namespace mave
