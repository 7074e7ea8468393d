// Standard normal CDF / quantile used by the inverse-transform embedder and
// the distribution tests. norm_ppf meets 1e-9 absolute error on
// [1e-9, 1 - 1e-9] (checked against a 40-digit oracle table in the tests).
#pragma once

namespace mave {

// Phi(z) = P(Z <= z) for Z ~ N(0,1).
double norm_cdf(double z);

// Inverse of norm_cdf. Throws std::domain_error unless 0 < p < 1.
double norm_ppf(double p);

// CDF of the delta-truncated half-Gaussian mixture produced by the l=1
// embedder: mass is uniform over Phi-probability [d, 0.5-d] U [0.5+d, 1-d].
double truncated_mixture_cdf(double z, double delta);

}  // namespace mave
