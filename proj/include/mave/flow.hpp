// Closed-form toy joint rectified-flow channel. Each coordinate follows the
// straight interpolation z_t = t*x1 + (1-t)*z0 with x1 ~ N(mean, stddev^2)
// and z0 ~ N(0,1) independent, so the probability-flow velocity
// E[x1 - z0 | z_t = z] has a closed form and the Euler forward/backward pair
// is exactly analyzable. Cross-modal coupling is carried entirely by the
// cryptographic binding, never by the dynamics.
#pragma once

#include <cstdint>
#include <utility>

#include "mave/latent.hpp"

namespace mave {

struct BlockParams {
    double mean = 0.0;
    double stddev = 1.0;  // must be > 0
};

struct ToyFlowSpec {
    BlockParams video{0.4, 0.8};
    BlockParams audio{-0.2, 1.2};

    const BlockParams& block(Modality m) const {
        return m == Modality::Video ? video : audio;
    }
};

struct TrajectoryConfig {
    int n_steps = 50;
    double delta_t = 0.05;  // trajectory lives on [delta_t, 1], uniform schedule
};

struct DriftParams {
    double sigma = 0.0;      // additive Gaussian std
    double flip_rate = 0.0;  // per-coordinate sign-flip probability, in [0, 0.5]
};

// v(z,t) = E[x1 - z0 | z_t = z]; with a(t) = t^2 s^2 + (1-t)^2 this is
//   E[x1|z] = mean + t s^2 (z - t*mean) / a,  E[z0|z] = (1-t)(z - t*mean) / a.
// Well defined for all t in [0,1] when s > 0 (a(0) = 1, no singularity).
double velocity(double z, double t, const BlockParams& p);

// Euler integration of dz/dt = v from t = delta_t (where the watermarked z0
// is placed) up to t = 1. Deterministic; per-coordinate.
LatentTensor generate(const LatentTensor& z0, const ToyFlowSpec& spec,
                      const TrajectoryConfig& cfg);

// Euler integration backward from t = 1 to t = delta_t on the same grid.
LatentTensor invert(const LatentTensor& x, const ToyFlowSpec& spec, const TrajectoryConfig& cfg);

// One pass over the concatenated coordinate set vs. two separate passes.
// Outputs are bit-identical; the pass counter differs by exactly 2:1.
std::pair<LatentTensor, LatentTensor> invert_joint(const LatentTensor& xv,
                                                   const LatentTensor& xa,
                                                   const ToyFlowSpec& spec,
                                                   const TrajectoryConfig& cfg);
std::pair<LatentTensor, LatentTensor> invert_separate(const LatentTensor& xv,
                                                      const LatentTensor& xa,
                                                      const ToyFlowSpec& spec,
                                                      const TrajectoryConfig& cfg);

// z + N(0, sigma^2) per coordinate, then sign flip with probability flip_rate.
LatentTensor drift_channel(const LatentTensor& z0, const DriftParams& params, uint64_t seed);

// Number of whole-tensor velocity-field evaluations since the last reset.
uint64_t velocity_pass_count();
void reset_velocity_pass_count();

}  // namespace mave
