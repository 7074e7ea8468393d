// Entangled binary watermark grids. A grid is partitioned into four disjoint
// regions: a public time template on channel 0, a cleartext index region
// (repetition-coded, key-independent positions), a binding region carrying
// bits of SHA-256(video grid) at keyed pseudorandom positions (audio grids
// only) and a keyed base region.
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mave/keyring.hpp"

namespace mave {

enum class Modality : uint8_t { Video = 0, Audio = 1 };

enum class Region : uint8_t { Time = 0, Index = 1, Bind = 2, Base = 3 };

struct GridDims {
    uint32_t c = 0, t = 0, h = 0, w = 0;
    size_t total() const { return size_t(c) * t * h * w; }
    size_t frame_channel0() const { return size_t(h) * w; }
    size_t slot(uint32_t ci, uint32_t ti, uint32_t hi, uint32_t wi) const {
        return ((size_t(ci) * t + ti) * h + hi) * w + wi;
    }
    bool operator==(const GridDims&) const = default;
};

// Per-frame synchronization pattern: a fixed public m-sequence prefix, one
// cyclic shift per frame. Key-independent so detection can synchronize
// before any registry lookup.
struct TimeTemplate {
    std::vector<uint8_t> base;

    // base rotated left by `shift` (any integer, wraps over base length)
    std::vector<uint8_t> row(long shift) const;
    uint8_t bit(long shift, size_t pos) const;
};

TimeTemplate make_time_template(size_t per_frame_slots);

struct GridLayout {
    GridDims dims;
    uint32_t index_repetition = 0;  // r: per-frame copies of each index bit
    uint32_t bind_length = 0;       // N
    std::vector<Region> region;     // per slot, row-major (C,T,H,W)
    // absolute slot ids, frame-major; copy j within a frame carries index bit j % 32
    std::vector<size_t> index_slots;
    // ordered binding positions I_bind; entry i holds hash bit phi(i) = i % 256
    std::vector<size_t> bind_slots;

    size_t region_count(Region r) const;
};

// Video layouts pass bind_key = nullptr and N = 0; audio layouts key the
// binding-position permutation (Fisher-Yates driven by the subkey_audio
// stream) and use r = 0. Throws LayoutOverflowError when the regions do not
// fit.
GridLayout build_layout(GridDims dims, uint32_t bind_length, uint32_t index_repetition,
                        const Key256* bind_key);

struct BitGrid {
    GridLayout layout;
    Modality modality = Modality::Video;
    std::vector<uint8_t> bits;  // 0/1 per slot, row-major
};

// time template + cleartext index (bit i of I is (I >> i) & 1, LSB first)
// + keyed base bits (subkey_video stream XOR shared-seed stream).
BitGrid build_video_grid(const SessionKeyMaterial& keys, PlainIndex index,
                         const GridLayout& layout);

// time template + SHA-256(serialize(video)) bits at the binding positions
// + keyed base bits (subkey_audio stream XOR shared-seed stream).
BitGrid build_audio_grid(const SessionKeyMaterial& keys, const BitGrid& video,
                         const GridLayout& layout);

// Row-major bit packing, 8 bits per byte MSB first; trailing byte zero padded.
Bytes serialize_grid(const BitGrid& grid);
Bytes grid_digest(const BitGrid& grid);  // SHA-256 of serialize_grid

// bit j of a digest, MSB first within each byte
inline uint8_t hash_bit(const Bytes& digest, size_t j) {
    return (digest[j >> 3] >> (7 - (j & 7))) & 1;
}

// Grid dump: "MAVG", u16 version, u8 modality, u32 r, u32 N, 4x u32 dims,
// region map (1 byte/slot), packed bits, trailing CRC-32. Integers little
// endian.
void write_grid(const std::filesystem::path& path, const BitGrid& grid);
BitGrid read_grid(const std::filesystem::path& path);

}  // namespace mave
