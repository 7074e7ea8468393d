#include "mave/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "mave/detector.hpp"
#include "mave/normal.hpp"

namespace mave {

namespace {

void check_query(const BoundQuery& q) {
    if (q.bind_length < 1) throw ConfigError("bind length must be >= 1");
    if (!(q.tau > 0.5)) throw ConfigError("threshold must exceed 0.5");
    if (!(q.tau < 1.0 + 1e-12)) throw ConfigError("threshold must be <= 1");
}

// smallest match count that strictly exceeds tau * N
inline uint64_t strict_hit_count(int n, double tau) {
    return static_cast<uint64_t>(std::floor(tau * n)) + 1;
}

Key256 trial_key(const char* label, uint64_t seed) {
    Bytes material(label, label + std::char_traits<char>::length(label));
    for (int i = 0; i < 8; ++i) material.push_back((seed >> (8 * i)) & 0xff);
    Bytes digest = sha256(material);
    Key256 key{};
    std::copy(digest.begin(), digest.end(), key.begin());
    return key;
}

// asymptotic Kolmogorov distribution Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 l^2}
double kolmogorov_q(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-14) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_p_value(double d, double effective_n) {
    double sn = std::sqrt(effective_n);
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

double hoeffding_bound(const BoundQuery& q) {
    check_query(q);
    double gap = q.tau - 0.5;
    return std::exp(-2.0 * q.bind_length * gap * gap);
}

double exact_swap_fp(const BoundQuery& q) {
    check_query(q);
    const int n = q.bind_length;
    const uint64_t k_min = strict_hit_count(n, q.tau);
    const double log_half_n = -n * std::log(2.0);
    double sum = 0.0, comp = 0.0;  // Kahan
    for (uint64_t k = k_min; k <= uint64_t(n); ++k) {
        double log_term = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                          std::lgamma(n - double(k) + 1.0) + log_half_n;
        double term = std::exp(log_term);
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

TrialSummary summarize_trials(uint64_t trials, uint64_t hits, double z) {
    if (trials == 0) throw ConfigError("trial count must be >= 1");
    TrialSummary s;
    s.trials = trials;
    s.hits = hits;
    s.rate = double(hits) / double(trials);
    const double n = double(trials), p = s.rate, z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    s.wilson_lo = std::max(0.0, center - half);
    s.wilson_hi = std::min(1.0, center + half);
    return s;
}

TrialSummary monte_carlo_swap_fast(uint64_t trials, const BoundQuery& q, uint64_t seed) {
    check_query(q);
    if (trials == 0) throw ConfigError("trial count must be >= 1");
    const int n = q.bind_length;
    const uint64_t k_min = strict_hit_count(n, q.tau);

    Keystream ks(trial_key("swap-mc-fast", seed));
    uint64_t hits = 0;
    if (n % 8 == 0) {
        const int bytes = n / 8;
        for (uint64_t t = 0; t < trials; ++t) {
            unsigned matches = 0;
            for (int b = 0; b < bytes; ++b)
                matches += std::popcount(static_cast<unsigned>(ks.next_byte()));
            if (matches >= k_min) ++hits;
        }
    } else {
        for (uint64_t t = 0; t < trials; ++t) {
            unsigned matches = 0;
            for (int b = 0; b < n; ++b) matches += ks.next_bit();
            if (matches >= k_min) ++hits;
        }
    }
    return summarize_trials(trials, hits);
}

TrialSummary monte_carlo_swap_full(uint64_t trials, const BoundQuery& q, uint64_t seed,
                                   GridDims video_dims, GridDims audio_dims) {
    check_query(q);
    if (trials == 0) throw ConfigError("trial count must be >= 1");

    Keystream secrets(trial_key("swap-mc-full", seed));
    uint64_t hits = 0;
    for (uint64_t t = 0; t < trials; ++t) {
        SecretPayload m_a = SecretPayload::random(secrets);
        SecretPayload m_b = SecretPayload::random(secrets);
        SessionKeyMaterial keys_a = derive_session_key(m_a, "bench prompt");
        SessionKeyMaterial keys_b = derive_session_key(m_b, "bench prompt");

        GridLayout video_layout = build_layout(video_dims, 0, 1, nullptr);
        GridLayout audio_layout_a =
            build_layout(audio_dims, uint32_t(q.bind_length), 0, &keys_a.subkey_audio);
        GridLayout audio_layout_b =
            build_layout(audio_dims, uint32_t(q.bind_length), 0, &keys_b.subkey_audio);

        BitGrid video_a = build_video_grid(keys_a, PlainIndex(2 * t), video_layout);
        BitGrid video_b = build_video_grid(keys_b, PlainIndex(2 * t + 1), video_layout);
        BitGrid audio_b = build_audio_grid(keys_b, video_b, audio_layout_b);

        // detector's view: session A's ideal hash and binding positions
        // against the swapped-in session B audio bits
        double score = binding_score(audio_b.bits, grid_digest(video_a), audio_layout_a);
        if (score > q.tau) ++hits;
    }
    return summarize_trials(trials, hits);
}

// --- distribution tests -----------------------------------------------------------

std::pair<double, double> ks_test(std::vector<double> samples,
                                  const std::function<double(double)>& cdf) {
    if (samples.size() < 100) throw ConfigError("KS test needs at least 100 samples");
    std::sort(samples.begin(), samples.end());
    const double n = double(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        d = std::max(d, std::abs((double(i) + 1.0) / n - f));
        d = std::max(d, std::abs(f - double(i) / n));
    }
    return {d, ks_p_value(d, n)};
}

std::pair<double, double> ks_normality(std::vector<double> samples) {
    return ks_test(std::move(samples), [](double z) { return norm_cdf(z); });
}

std::pair<double, double> ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.size() < 100 || b.size() < 100)
        throw ConfigError("two-sample KS needs at least 100 samples per side");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    double ne = double(a.size()) * b.size() / double(a.size() + b.size());
    return {d, ks_p_value(d, ne)};
}

std::pair<double, double> sign_balance_chi2(const std::vector<uint8_t>& bits) {
    if (bits.size() < 100) throw ConfigError("chi-square test needs at least 100 bits");
    double ones = 0;
    for (uint8_t b : bits) ones += b;
    const double n = double(bits.size());
    const double zeros = n - ones;
    double stat = (ones - n / 2) * (ones - n / 2) / (n / 2) +
                  (zeros - n / 2) * (zeros - n / 2) / (n / 2);
    double p = std::erfc(std::sqrt(stat / 2.0));  // chi2 with 1 dof
    return {stat, p};
}

// --- ROC ------------------------------------------------------------------------------

std::vector<RocPoint> roc_curve(const std::vector<double>& authentic_scores,
                                const std::vector<double>& swap_scores) {
    if (authentic_scores.empty() || swap_scores.empty())
        throw ConfigError("ROC needs scores from both populations");
    std::vector<double> thresholds;
    thresholds.reserve(authentic_scores.size() + swap_scores.size() + 2);
    thresholds.insert(thresholds.end(), authentic_scores.begin(), authentic_scores.end());
    thresholds.insert(thresholds.end(), swap_scores.begin(), swap_scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<RocPoint> curve;
    curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    for (double th : thresholds) {
        auto frac_at_least = [th](const std::vector<double>& v) {
            size_t c = 0;
            for (double s : v)
                if (s >= th) ++c;
            return double(c) / double(v.size());
        };
        curve.push_back({frac_at_least(swap_scores), frac_at_least(authentic_scores), th});
    }
    curve.push_back({1.0, 1.0, -std::numeric_limits<double>::infinity()});
    return curve;
}

double roc_auc(const std::vector<RocPoint>& curve) {
    double area = 0.0;
    for (size_t i = 1; i < curve.size(); ++i)
        area += 0.5 * (curve[i].tpr + curve[i - 1].tpr) * (curve[i].fpr - curve[i - 1].fpr);
    return area;
}

double two_proportion_p(uint64_t hits_a, uint64_t n_a, uint64_t hits_b, uint64_t n_b) {
    if (n_a == 0 || n_b == 0) throw ConfigError("empty sample in proportion test");
    double pa = double(hits_a) / n_a, pb = double(hits_b) / n_b;
    double pooled = double(hits_a + hits_b) / double(n_a + n_b);
    double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n_a + 1.0 / n_b));
    if (se == 0.0) return 1.0;
    double z = std::abs(pa - pb) / se;
    return std::erfc(z / std::sqrt(2.0));  // two-sided
}

}  // namespace mave
