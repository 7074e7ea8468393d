// Analytical bounds, exact tails, Monte Carlo estimators and distributional
// tests for the binding-security and losslessness claims.
#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mave/grid.hpp"

namespace mave {

struct BoundQuery {
    int bind_length = 128;  // N
    double tau = 0.8;       // threshold in (0.5, 1)
};

// exp(-2 N (tau - 0.5)^2); throws for tau <= 0.5 (bound vacuous).
double hoeffding_bound(const BoundQuery& q);

// Exact P(S > tau) under S = Binomial(N, 1/2) / N, strict inequality,
// compensated summation of lgamma-based terms.
double exact_swap_fp(const BoundQuery& q);

struct TrialSummary {
    uint64_t trials = 0;
    uint64_t hits = 0;
    double rate = 0.0;
    double wilson_lo = 0.0;  // 99% Wilson interval
    double wilson_hi = 0.0;
};

// hits <= trials Wilson score interval at the given z (2.5758... = 99%).
TrialSummary summarize_trials(uint64_t trials, uint64_t hits, double z = 2.5758293035489008);

// iid fair-bit swap trials: per trial, N stream bits are matched against an
// independent fair target; hit when the match fraction strictly exceeds tau.
TrialSummary monte_carlo_swap_fast(uint64_t trials, const BoundQuery& q, uint64_t seed);

// full-pipeline trials: two independent sessions through grid construction,
// score = binding agreement of session B's audio grid against session A's
// ideal hash at session A's keyed binding positions.
TrialSummary monte_carlo_swap_full(uint64_t trials, const BoundQuery& q, uint64_t seed,
                                   GridDims video_dims = {2, 4, 8, 8},
                                   GridDims audio_dims = {2, 4, 8, 8});

// --- distribution tests -------------------------------------------------------

// One-sample Kolmogorov-Smirnov against a supplied CDF (or N(0,1)); returns
// (statistic, p); asymptotic p with the Stephens small-sample correction.
std::pair<double, double> ks_test(std::vector<double> samples,
                                  const std::function<double(double)>& cdf);
std::pair<double, double> ks_normality(std::vector<double> samples);
std::pair<double, double> ks_two_sample(std::vector<double> a, std::vector<double> b);

// Chi-square goodness of fit for fair-coin bits (1 dof).
std::pair<double, double> sign_balance_chi2(const std::vector<uint8_t>& bits);

// --- ROC ---------------------------------------------------------------------------

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

// Threshold sweep over pooled scores; higher score = more authentic.
std::vector<RocPoint> roc_curve(const std::vector<double>& authentic_scores,
                                const std::vector<double>& swap_scores);
double roc_auc(const std::vector<RocPoint>& curve);

// Two-proportion z-test that two hit rates are equal (returns p-value).
double two_proportion_p(uint64_t hits_a, uint64_t n_a, uint64_t hits_b, uint64_t n_b);

}  // namespace mave
