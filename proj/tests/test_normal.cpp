#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mave/keyring.hpp"
#include "mave/normal.hpp"

using namespace mave;

namespace {

// 40-digit mpmath reference values, frozen
struct OraclePoint {
    double p;
    double z;
};
constexpr OraclePoint kOracle[] = {
    {1e-9, -5.9978070150076869},      {1e-6, -4.7534243088228989},
    {1e-4, -3.7190164854556806},      {0.001, -3.0902323061678135},
    {0.0013499, -2.9999995558583211}, {0.01, -2.3263478740408411},
    {0.025, -1.9599639845400542},     {0.05, -1.6448536269514727},
    {0.1, -1.2815515655446005},       {0.25, -0.67448975019608174},
    {0.4, -0.2533471031357998},       {0.5, 0.0},
    {0.5005, 0.0012533144654325545},  {0.6, 0.2533471031357998},
    {0.75, 0.67448975019608174},      {0.875, 1.1503493803760082},
    {0.9, 1.2815515655446005},        {0.975, 1.9599639845400542},
    {0.99, 2.3263478740408411},       {0.999, 3.0902323061678135},
    {0.9999, 3.7190164854556806},     {0.999999, 4.7534243088228989},
    {0.99999999, 5.6120012441747887}, {0.999999999, 5.9978070150076869},
};

// independent root finder on norm_cdf, used as a second oracle route
double ppf_bisect(double p) {
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (norm_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("norm_ppf matches the high-precision oracle table to 1e-9") {
    for (const auto& pt : kOracle) {
        CAPTURE(pt.p);
        CHECK(std::abs(norm_ppf(pt.p) - pt.z) < 1e-9);
    }
}

TEST_CASE("norm_ppf agrees with bisection on norm_cdf") {
    Keystream ks(Key256{});
    for (int i = 0; i < 200; ++i) {
        double p = ks.next_unit();
        if (p <= 1e-9 || p >= 1.0 - 1e-9) continue;
        CAPTURE(p);
        CHECK(std::abs(norm_ppf(p) - ppf_bisect(p)) < 1e-9);
    }
}

TEST_CASE("norm_ppf is monotone and inverts norm_cdf") {
    double prev = -1e300;
    for (double p = 0.001; p < 0.9995; p += 0.001) {
        double z = norm_ppf(p);
        CHECK(z > prev);
        prev = z;
        CHECK(std::abs(norm_cdf(z) - p) < 1e-12);
    }
}

TEST_CASE("norm_ppf rejects arguments outside (0, 1)") {
    CHECK_THROWS_AS(norm_ppf(0.0), std::domain_error);
    CHECK_THROWS_AS(norm_ppf(1.0), std::domain_error);
    CHECK_THROWS_AS(norm_ppf(-0.5), std::domain_error);
    CHECK_THROWS_AS(norm_ppf(1.5), std::domain_error);
}

TEST_CASE("norm_cdf basic values") {
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(norm_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(norm_cdf(-37.0) >= 0.0);
    CHECK(norm_cdf(37.0) <= 1.0);
}

TEST_CASE("truncated mixture CDF") {
    // delta = 0 degenerates to the plain normal CDF
    for (double z : {-2.0, -0.5, 0.0, 0.3, 1.7})
        CHECK(truncated_mixture_cdf(z, 0.0) == doctest::Approx(norm_cdf(z)).epsilon(1e-12));

    const double d = 0.001;
    CHECK(truncated_mixture_cdf(-10.0, d) == doctest::Approx(0.0));
    CHECK(truncated_mixture_cdf(10.0, d) == doctest::Approx(1.0));
    CHECK(truncated_mixture_cdf(0.0, d) == doctest::Approx(0.5).epsilon(1e-12));
    // no mass inside the truncated gap around zero
    double lo = norm_ppf(0.5 - d), hi = norm_ppf(0.5 + d);
    CHECK(truncated_mixture_cdf(lo, d) == doctest::Approx(truncated_mixture_cdf(hi, d)));
    CHECK_THROWS_AS(truncated_mixture_cdf(0.0, 0.3), std::domain_error);
}
