#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "mave/detector.hpp"
#include "mave/latent.hpp"
#include "mave/normal.hpp"
#include "mave/pipeline.hpp"
#include "mave/stats.hpp"

using namespace mave;
namespace fs = std::filesystem;

namespace {

SessionKeyMaterial test_keys(uint8_t tag = 1) {
    SecretPayload m;
    m.bytes.assign(32, tag);
    return derive_session_key(m, "latent test prompt");
}

BitGrid tiny_grid(std::vector<uint8_t> bits, GridDims dims) {
    BitGrid g;
    g.layout = build_layout(dims, 0, 0, nullptr);
    g.bits = std::move(bits);
    return g;
}

}  // namespace

TEST_CASE("diffusion replicates block-wise") {
    BitGrid g = tiny_grid({1}, {1, 1, 1, 1});
    RandomizedMap m = diffuse(g, {2, 1, 2, 2}, {2, 1, 2, 2});
    CHECK(m.symbols.size() == 8);
    for (uint8_t s : m.symbols) CHECK(s == 1);

    // identity factors
    BitGrid g2 = tiny_grid({1, 0, 0, 1}, {1, 1, 2, 2});
    RandomizedMap m2 = diffuse(g2, {1, 1, 1, 1}, {1, 1, 2, 2});
    CHECK(m2.symbols == std::vector<uint8_t>{1, 0, 0, 1});

    CHECK_THROWS_AS(diffuse(g2, {1, 1, 1, 1}, {2, 1, 2, 2}), ConfigError);
}

TEST_CASE("default geometry: every grid bit gets 48 copies") {
    auto keys = test_keys();
    GridLayout layout = build_layout({2, 4, 8, 8}, 0, 1, nullptr);
    BitGrid grid = build_video_grid(keys, 77, layout);
    RepetitionFactors f{3, 1, 4, 4};
    LatentDims ld = latent_dims_for(layout.dims, f);
    CHECK(ld == LatentDims{6, 4, 32, 32});
    RandomizedMap m = diffuse(grid, f, ld);

    std::vector<size_t> counts(grid.bits.size(), 0);
    size_t i = 0;
    for (uint32_t c = 0; c < ld.c; ++c)
        for (uint32_t t = 0; t < ld.t; ++t)
            for (uint32_t h = 0; h < ld.h; ++h)
                for (uint32_t w = 0; w < ld.w; ++w, ++i) {
                    size_t slot = layout.dims.slot(c / 3, t, h / 4, w / 4);
                    CHECK(m.symbols[i] == grid.bits[slot]);
                    ++counts[slot];
                }
    for (size_t n : counts) CHECK(n == 48);
}

TEST_CASE("randomization is an involution and masks only keyed regions") {
    auto keys = test_keys(2);
    GridLayout layout = build_layout({2, 2, 8, 8}, 0, 1, nullptr);
    BitGrid grid = build_video_grid(keys, 3, layout);
    RepetitionFactors f{1, 1, 2, 2};
    RandomizedMap m = diffuse(grid, f, latent_dims_for(layout.dims, f));
    RandomizedMap original = m;

    randomize(m, keys.session_key, layout, f);
    // keyed coordinates flip against the stream, public ones never do
    auto stream = keystream_bits(keys.session_key, m.symbols.size());
    size_t i = 0;
    bool any_masked = false;
    for (uint32_t c = 0; c < m.dims.c; ++c)
        for (uint32_t t = 0; t < m.dims.t; ++t)
            for (uint32_t h = 0; h < m.dims.h; ++h)
                for (uint32_t w = 0; w < m.dims.w; ++w, ++i) {
                    Region r = layout.region[layout.dims.slot(c, t, h / 2, w / 2)];
                    if (r == Region::Time || r == Region::Index) {
                        CHECK(m.symbols[i] == original.symbols[i]);
                    } else {
                        CHECK(m.symbols[i] == (original.symbols[i] ^ stream[i]));
                        any_masked = true;
                    }
                }
    CHECK(any_masked);

    randomize(m, keys.session_key, layout, f);
    CHECK(m.symbols == original.symbols);
}

TEST_CASE("randomized map is balanced regardless of payload") {
    auto keys = test_keys(3);
    GridLayout layout = build_layout({2, 4, 32, 32}, 0, 1, nullptr);
    Keystream rng(Key256{});
    PlainIndex index = static_cast<PlainIndex>(rng.next_u64());
    BitGrid grid = build_video_grid(keys, index, layout);
    RepetitionFactors f{3, 1, 4, 4};
    RandomizedMap m = diffuse(grid, f, latent_dims_for(layout.dims, f));
    randomize(m, keys.session_key, layout, f);
    CHECK(m.symbols.size() >= 100000);

    auto [stat, p] = sign_balance_chi2(m.symbols);
    (void)stat;
    CHECK(p > 1e-4);
    double ones = 0;
    for (uint8_t b : m.symbols) ones += b;
    double frac = ones / m.symbols.size();
    CHECK(frac > 0.49);
    CHECK(frac < 0.51);
}

TEST_CASE("sampling formula reference values") {
    CHECK(symbol_to_latent(1, 0.5, 1) == doctest::Approx(0.6744897501960817).epsilon(1e-9));
    CHECK(symbol_to_latent(3, 0.5, 2) == doctest::Approx(1.1503493803760082).epsilon(1e-9));
    CHECK(symbol_to_latent(0, 0.5, 1) == doctest::Approx(-0.6744897501960817).epsilon(1e-9));
}

TEST_CASE("l = 1 sampling splits by sign and honors the truncation bounds") {
    RandomizedMap m;
    m.dims = {1, 1, 100, 100};
    m.bits_per_coord = 1;
    m.symbols.resize(10000);
    for (size_t i = 0; i < m.symbols.size(); ++i) m.symbols[i] = i % 2;

    const double delta = 0.001;
    LatentTensor z = sample_latent(m, delta, 7, Modality::Video);
    const double lo = norm_ppf(0.5 + delta);  // 0.0012533
    const double hi = norm_ppf(1.0 - delta);  // 3.0902
    CHECK(lo == doctest::Approx(0.0012533144654325545).epsilon(1e-9));
    CHECK(hi == doctest::Approx(3.0902323061678135).epsilon(1e-9));
    for (size_t i = 0; i < z.values.size(); ++i) {
        double v = z.values[i];
        if (m.symbols[i] == 1)
            CHECK(v > 0.0);
        else
            CHECK(v <= 0.0);
        CHECK(std::abs(v) >= lo - 1e-6);
        CHECK(std::abs(v) <= hi + 1e-6);
    }

    CHECK_THROWS_AS(sample_latent(m, -0.1, 7, Modality::Video), ConfigError);
    CHECK_THROWS_AS(sample_latent(m, 0.26, 7, Modality::Video), ConfigError);
}

TEST_CASE("extraction inverts the sampling map") {
    CHECK(latent_to_symbol(1.1503493803760082, 2) == 3);
    CHECK(latent_to_symbol(-0.3, 1) == 0);
    CHECK(latent_to_symbol(0.3, 1) == 1);
    CHECK(latent_to_symbol(0.0, 1) == 0);  // boundary decodes downward
    CHECK(latent_to_symbol(-50.0, 3) == 0);
    CHECK(latent_to_symbol(50.0, 3) == 7);
}

TEST_CASE("round-trip exactness across l, delta and seeds") {
    Keystream rng(Key256{});
    for (uint32_t l : {1u, 2u, 4u}) {
        RandomizedMap m;
        m.dims = {1, 1, 250, 400};
        m.bits_per_coord = l;
        m.symbols.resize(100000);
        for (auto& s : m.symbols) s = static_cast<uint8_t>(rng.next_below(1u << l));
        for (int rep = 0; rep < 3; ++rep) {
            double delta = 1e-4 + rng.next_unit() * (0.4 / (1u << l) - 1e-4);
            uint64_t seed = rng.next_u64();
            LatentTensor z = sample_latent(m, delta, seed, Modality::Audio);
            RandomizedMap back = extract_symbols(z, l);
            CHECK(back.symbols == m.symbols);
        }
    }
}

TEST_CASE("decode_zero equals 1-bit extraction coordinate-wise") {
    LatentTensor z;
    z.dims = {1, 1, 1, 7};
    z.values = {-1.0f, 0.0f, 1.0f, -0.25f, 0.25f, -3e-7f, 3e-7f};
    auto bits = decode_zero(z);
    RandomizedMap m = extract_symbols(z, 1);
    for (size_t i = 0; i < bits.size(); ++i) CHECK(bits[i] == m.symbols[i]);
    CHECK(bits == std::vector<uint8_t>{0, 0, 1, 0, 1, 0, 1});
}

TEST_CASE("watermarked coordinates stay standard normal (delta = 0)") {
    RandomizedMap m;
    m.dims = {1, 1, 200, 500};
    m.bits_per_coord = 1;
    m.symbols.resize(100000);
    Keystream rng(Key256{});
    for (auto& s : m.symbols) s = static_cast<uint8_t>(rng.next_bit());

    LatentTensor z = sample_latent(m, 0.0, 11, Modality::Video);
    std::vector<double> samples(z.values.begin(), z.values.end());
    auto [d, p] = ks_normality(std::move(samples));
    (void)d;
    CHECK(p > 0.01);
}

TEST_CASE("delta = 0.001 sampling matches the truncated mixture CDF") {
    RandomizedMap m;
    m.dims = {1, 1, 200, 500};
    m.bits_per_coord = 1;
    m.symbols.resize(100000);
    Keystream rng(shared_stream_key({9, 9, 9, 9, 9, 9, 9, 9}));
    for (auto& s : m.symbols) s = static_cast<uint8_t>(rng.next_bit());

    const double delta = 0.001;
    LatentTensor z = sample_latent(m, delta, 13, Modality::Video);
    std::vector<double> samples(z.values.begin(), z.values.end());
    auto [d, p] = ks_test(std::move(samples),
                          [delta](double x) { return truncated_mixture_cdf(x, delta); });
    (void)d;
    CHECK(p > 0.01);
}

TEST_CASE("half-interval sampling form induces the same conditional law") {
    // alternative parametrization: u ~ U(0.5, 1); bit 1 -> ppf(u),
    // bit 0 -> ppf(u - 0.5). Compare per bit value against our sampler.
    Keystream rng(Key256{});
    const size_t n = 40000;
    std::vector<double> alt0, alt1;
    for (size_t i = 0; i < n; ++i) {
        double u = 0.5 + 0.5 * ((double(rng.next_u64() >> 11) + 0.5) * 0x1.0p-53);
        alt1.push_back(norm_ppf(u));
        alt0.push_back(norm_ppf(u - 0.5));
    }
    RandomizedMap m;
    m.dims = {1, 1, 2, n / 2};
    m.bits_per_coord = 1;
    m.symbols.assign(n, 0);
    for (size_t i = n / 2; i < n; ++i) m.symbols[i] = 1;
    LatentTensor z = sample_latent(m, 0.0, 17, Modality::Audio);
    std::vector<double> ours0(z.values.begin(), z.values.begin() + n / 2);
    std::vector<double> ours1(z.values.begin() + n / 2, z.values.end());

    auto [d0, p0] = ks_two_sample(std::move(alt0), std::move(ours0));
    auto [d1, p1] = ks_two_sample(std::move(alt1), std::move(ours1));
    (void)d0;
    (void)d1;
    CHECK(p0 > 0.01);
    CHECK(p1 > 0.01);
}

TEST_CASE("majority voting survives any strict-minority corruption") {
    // flipping up to floor((k_all-1)/2) copies never changes the vote
    const size_t k_all = 48;
    for (size_t flipped = 0; flipped <= 23; ++flipped) {
        CHECK(majority_bit(k_all - flipped, k_all) == 1);  // true bit 1
        CHECK(majority_bit(flipped, k_all) == 0);          // true bit 0
    }
}

TEST_CASE("MAVE file round-trip and corruption detection") {
    LatentTensor z;
    z.dims = {2, 3, 4, 5};
    z.modality = Modality::Audio;
    z.values.resize(z.dims.total());
    Keystream rng(Key256{});
    for (auto& v : z.values)
        v = static_cast<float>(norm_ppf((double(rng.next_u64() >> 11) + 0.5) * 0x1.0p-53));
    z.values[0] = 0.0f;
    z.values[1] = -0.0f;

    fs::path path = fs::temp_directory_path() / "mave_test.mave";
    write_latent(path, z);
    LatentTensor back = read_latent(path);
    CHECK(back.dims == z.dims);
    CHECK(back.modality == Modality::Audio);
    REQUIRE(back.values.size() == z.values.size());
    for (size_t i = 0; i < z.values.size(); ++i)
        CHECK(std::memcmp(&back.values[i], &z.values[i], 4) == 0);  // bit-exact incl. -0

    // corrupt one payload byte
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(30);
        f.put('\x7f');
    }
    CHECK_THROWS_AS(read_latent(path), FormatError);

    // bad magic
    {
        write_latent(path, z);
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
    }
    CHECK_THROWS_AS(read_latent(path), FormatError);

    // truncation
    {
        write_latent(path, z);
        fs::resize_file(path, 10);
    }
    CHECK_THROWS_AS(read_latent(path), FormatError);
    fs::remove(path);
}
