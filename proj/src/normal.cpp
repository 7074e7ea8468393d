#include "mave/normal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mave {
namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kSqrt2Pi = 2.5066282746310005024;

// Acklam's rational approximation, |relative error| < 1.15e-9 on (0,1).
double ppf_acklam(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // central region (callers guarantee p <= 0.5)
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// One Halley step against the exact CDF; for p <= 0.5 the residual
// norm_cdf(x) - p is free of cancellation.
double ppf_half(double p) {
    double x = ppf_acklam(p);
    double e = norm_cdf(x) - p;
    double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace

double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double norm_ppf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("norm_ppf: p must be in (0, 1)");
    if (p == 0.5) return 0.0;
    // 1 - p is exact for p in [0.5, 1], keeping the tail residual accurate.
    return p > 0.5 ? -ppf_half(1.0 - p) : ppf_half(p);
}

double truncated_mixture_cdf(double z, double delta) {
    if (delta < 0.0 || delta >= 0.25)
        throw std::domain_error("truncated_mixture_cdf: delta must be in [0, 0.25)");
    double c = norm_cdf(z);
    double lower = std::clamp(c, delta, 0.5 - delta) - delta;
    double upper = std::clamp(c, 0.5 + delta, 1.0 - delta) - (0.5 + delta);
    return (lower + upper) / (1.0 - 4.0 * delta);
}

}  // namespace mave
