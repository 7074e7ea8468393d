// Mapping between bit grids and continuous Gaussian initial latents:
// block-wise diffusion, keystream randomization and inverse transform
// sampling, plus the symbol-wise inverse and the MAVE latent file format.
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mave/grid.hpp"
#include "mave/keyring.hpp"

namespace mave {

struct RepetitionFactors {
    uint32_t c = 1, t = 1, h = 1, w = 1;
    size_t all() const { return size_t(c) * t * h * w; }
};

struct LatentDims {
    uint32_t c = 0, t = 0, h = 0, w = 0;
    size_t total() const { return size_t(c) * t * h * w; }
    size_t frame_size() const { return size_t(c) * h * w; }  // coords per time index
    size_t coord(uint32_t ci, uint32_t ti, uint32_t hi, uint32_t wi) const {
        return ((size_t(ci) * t + ti) * h + hi) * w + wi;
    }
    bool operator==(const LatentDims&) const = default;
};

inline LatentDims latent_dims_for(GridDims g, RepetitionFactors f) {
    return {g.c * f.c, g.t * f.t, g.h * f.h, g.w * f.w};
}

struct LatentTensor {
    LatentDims dims;
    Modality modality = Modality::Video;
    std::vector<float> values;  // row-major (C,T,H,W)
};

// l-bit symbols per latent coordinate; l = 1 directly after diffusion.
struct RandomizedMap {
    LatentDims dims;
    uint32_t bits_per_coord = 1;
    std::vector<uint8_t> symbols;
};

// B_diff[c,t,h,w] = grid[c/k_c, t/k_t, h/k_h, w/k_w]
RandomizedMap diffuse(const BitGrid& grid, RepetitionFactors factors, LatentDims latent_dims);

// XOR with the session keystream laid out row-major over the full tensor.
// Coordinates whose grid slot is in the time or index region are left
// unrandomized: synchronization and index extraction run before the registry
// lookup, so those regions cannot depend on the session key. Self-inverse.
void randomize(RandomizedMap& map, const Key256& session_key, const GridLayout& layout,
               RepetitionFactors factors);

// z = ppf((u + symbol) / 2^l) with u ~ Uniform(d', 1 - d'), d' = 2^l * delta;
// the u draws come from a ChaCha20 stream keyed by (rng_seed, modality), one
// u64 per coordinate in row-major order.
LatentTensor sample_latent(const RandomizedMap& map, double delta, uint64_t rng_seed,
                           Modality modality);

// The per-coordinate sampling core, exposed for oracle tests. u is the
// within-interval uniform in (0, 1).
double symbol_to_latent(uint32_t symbol, double u, uint32_t bits_per_coord);

// symbol = ceil(2^l * Phi(z)) - 1 clamped to [0, 2^l); for l = 1 this is
// zero-thresholding with z = 0 decoding to 0.
RandomizedMap extract_symbols(const LatentTensor& z, uint32_t bits_per_coord);
uint32_t latent_to_symbol(double z, uint32_t bits_per_coord);

// MAVE latent file: magic "MAVE", u16 version, u8 modality, 4x u32 dims,
// payload little-endian f32 row-major, trailing CRC-32.
void write_latent(const std::filesystem::path& path, const LatentTensor& z);
LatentTensor read_latent(const std::filesystem::path& path);

}  // namespace mave
