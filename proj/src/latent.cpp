#include "mave/latent.hpp"

#include <algorithm>
#include <cmath>

#include "io_util.hpp"
#include "mave/normal.hpp"

namespace mave {

RandomizedMap diffuse(const BitGrid& grid, RepetitionFactors factors, LatentDims latent_dims) {
    const GridDims& g = grid.layout.dims;
    if (latent_dims_for(g, factors) != latent_dims)
        throw ConfigError("grid dims x repetition factors must equal latent dims");

    RandomizedMap map;
    map.dims = latent_dims;
    map.bits_per_coord = 1;
    map.symbols.resize(latent_dims.total());
    size_t i = 0;
    for (uint32_t c = 0; c < latent_dims.c; ++c)
        for (uint32_t t = 0; t < latent_dims.t; ++t)
            for (uint32_t h = 0; h < latent_dims.h; ++h)
                for (uint32_t w = 0; w < latent_dims.w; ++w)
                    map.symbols[i++] =
                        grid.bits[g.slot(c / factors.c, t / factors.t, h / factors.h,
                                         w / factors.w)];
    return map;
}

void randomize(RandomizedMap& map, const Key256& session_key, const GridLayout& layout,
               RepetitionFactors factors) {
    if (map.bits_per_coord != 1)
        throw ConfigError("randomize expects 1-bit symbols");
    if (latent_dims_for(layout.dims, factors) != map.dims)
        throw ConfigError("layout does not match randomized map dims");

    Keystream ks(session_key);
    const GridDims& g = layout.dims;
    size_t i = 0;
    for (uint32_t c = 0; c < map.dims.c; ++c)
        for (uint32_t t = 0; t < map.dims.t; ++t)
            for (uint32_t h = 0; h < map.dims.h; ++h)
                for (uint32_t w = 0; w < map.dims.w; ++w, ++i) {
                    uint8_t bit = ks.next_bit();
                    Region r = layout.region[g.slot(c / factors.c, t / factors.t, h / factors.h,
                                                    w / factors.w)];
                    if (r == Region::Base || r == Region::Bind) map.symbols[i] ^= bit;
                }
}

double symbol_to_latent(uint32_t symbol, double u, uint32_t bits_per_coord) {
    const double buckets = double(1u << bits_per_coord);
    return norm_ppf((u + symbol) / buckets);
}

namespace {

Key256 uniform_stream_key(uint64_t rng_seed, Modality modality) {
    Bytes material;
    const char* label = "latent-uniform";
    material.insert(material.end(), label, label + 14);
    for (int i = 0; i < 8; ++i) material.push_back((rng_seed >> (8 * i)) & 0xff);
    material.push_back(static_cast<uint8_t>(modality));
    Bytes digest = sha256(material);
    Key256 key{};
    std::copy(digest.begin(), digest.end(), key.begin());
    return key;
}

}  // namespace

LatentTensor sample_latent(const RandomizedMap& map, double delta, uint64_t rng_seed,
                           Modality modality) {
    const uint32_t l = map.bits_per_coord;
    if (l < 1 || l > 16) throw ConfigError("bits per coordinate must be in [1, 16]");
    const double d_scaled = delta * double(1u << l);
    if (delta < 0.0 || d_scaled >= 0.5)
        throw ConfigError("invalid delta: truncated interval is empty");

    LatentTensor z;
    z.dims = map.dims;
    z.modality = modality;
    z.values.resize(map.symbols.size());

    Keystream ks(uniform_stream_key(rng_seed, modality));
    const double span = 1.0 - 2.0 * d_scaled;
    for (size_t i = 0; i < map.symbols.size(); ++i) {
        // (v + 0.5) * 2^-53 keeps u strictly inside (0, 1) even at delta = 0
        double unit = (double(ks.next_u64() >> 11) + 0.5) * 0x1.0p-53;
        double u = d_scaled + unit * span;
        z.values[i] = static_cast<float>(symbol_to_latent(map.symbols[i], u, l));
    }
    return z;
}

uint32_t latent_to_symbol(double z, uint32_t bits_per_coord) {
    const double buckets = double(1u << bits_per_coord);
    double idx = std::ceil(norm_cdf(z) * buckets) - 1.0;
    long clamped = std::lround(std::max(0.0, std::min(idx, buckets - 1.0)));
    return static_cast<uint32_t>(clamped);
}

RandomizedMap extract_symbols(const LatentTensor& z, uint32_t bits_per_coord) {
    RandomizedMap map;
    map.dims = z.dims;
    map.bits_per_coord = bits_per_coord;
    map.symbols.resize(z.values.size());
    for (size_t i = 0; i < z.values.size(); ++i)
        map.symbols[i] = static_cast<uint8_t>(latent_to_symbol(z.values[i], bits_per_coord));
    return map;
}

void write_latent(const std::filesystem::path& path, const LatentTensor& z) {
    if (z.values.size() != z.dims.total())
        throw ConfigError("latent value count does not match dims");
    std::vector<uint8_t> out = {'M', 'A', 'V', 'E'};
    io::put_u16(out, 1);
    out.push_back(static_cast<uint8_t>(z.modality));
    io::put_u32(out, z.dims.c);
    io::put_u32(out, z.dims.t);
    io::put_u32(out, z.dims.h);
    io::put_u32(out, z.dims.w);
    out.reserve(out.size() + z.values.size() * 4 + 4);
    for (float v : z.values) io::put_f32(out, v);
    io::append_crc(out);
    io::write_file(path, out);
}

LatentTensor read_latent(const std::filesystem::path& path) {
    std::vector<uint8_t> data = io::check_crc(io::read_file(path), "latent file");
    io::Reader r{data};
    if (r.u8() != 'M' || r.u8() != 'A' || r.u8() != 'V' || r.u8() != 'E')
        throw FormatError("bad latent magic");
    if (r.u16() != 1) throw FormatError("unsupported latent version");
    LatentTensor z;
    uint8_t modality = r.u8();
    if (modality > 1) throw FormatError("unknown modality tag");
    z.modality = static_cast<Modality>(modality);
    z.dims = {r.u32(), r.u32(), r.u32(), r.u32()};
    size_t n = z.dims.total();
    r.need(n * 4);
    z.values.resize(n);
    for (size_t i = 0; i < n; ++i) z.values[i] = r.f32();
    if (r.pos != data.size()) throw FormatError("trailing bytes in latent file");
    return z;
}

}  // namespace mave
