#include "mave/grid.hpp"

#include <algorithm>

#include "io_util.hpp"

namespace mave {

// --- time template ------------------------------------------------------------

std::vector<uint8_t> TimeTemplate::row(long shift) const {
    const long n = static_cast<long>(base.size());
    std::vector<uint8_t> out(base.size());
    for (long j = 0; j < n; ++j) out[j] = base[((j + shift) % n + n) % n];
    return out;
}

uint8_t TimeTemplate::bit(long shift, size_t pos) const {
    const long n = static_cast<long>(base.size());
    return base[((static_cast<long>(pos) + shift) % n + n) % n];
}

TimeTemplate make_time_template(size_t per_frame_slots) {
    // Fibonacci LFSR, taps x^16 + x^14 + x^13 + x^11 + 1 (maximal, period 65535),
    // fixed public seed. Key-independent by construction.
    TimeTemplate tpl;
    tpl.base.resize(per_frame_slots);
    uint16_t lfsr = 0xACE1u;
    for (size_t i = 0; i < per_frame_slots; ++i) {
        uint16_t bit = (lfsr ^ (lfsr >> 2) ^ (lfsr >> 3) ^ (lfsr >> 5)) & 1u;
        tpl.base[i] = static_cast<uint8_t>(lfsr & 1u);
        lfsr = static_cast<uint16_t>((lfsr >> 1) | (bit << 15));
    }
    return tpl;
}

// --- layout ---------------------------------------------------------------------

size_t GridLayout::region_count(Region r) const {
    return static_cast<size_t>(std::count(region.begin(), region.end(), r));
}

GridLayout build_layout(GridDims dims, uint32_t bind_length, uint32_t index_repetition,
                        const Key256* bind_key) {
    if (dims.total() == 0) throw ConfigError("grid dims must be nonzero");
    if (dims.c < 1) throw ConfigError("grid needs at least one channel");
    if (bind_length > 0 && bind_key == nullptr)
        throw ConfigError("binding region requires a key");

    GridLayout layout;
    layout.dims = dims;
    layout.index_repetition = index_repetition;
    layout.bind_length = bind_length;
    layout.region.assign(dims.total(), Region::Base);

    // channel 0 is the time template
    for (uint32_t t = 0; t < dims.t; ++t)
        for (uint32_t h = 0; h < dims.h; ++h)
            for (uint32_t w = 0; w < dims.w; ++w)
                layout.region[dims.slot(0, t, h, w)] = Region::Time;

    // first 32*r non-channel-0 positions of a frame, row-major, same (c,h,w)
    // offsets in every frame; copy j carries index bit j % 32
    const size_t per_frame_index = 32u * size_t(index_repetition);
    const size_t per_frame_capacity = size_t(dims.c - 1) * dims.h * dims.w;
    if (per_frame_index > per_frame_capacity)
        throw LayoutOverflowError("index region does not fit: needs " +
                                  std::to_string(per_frame_index) + " of " +
                                  std::to_string(per_frame_capacity) + " slots per frame");
    layout.index_slots.reserve(per_frame_index * dims.t);
    for (uint32_t t = 0; t < dims.t; ++t) {
        size_t taken = 0;
        for (uint32_t c = 1; c < dims.c && taken < per_frame_index; ++c)
            for (uint32_t h = 0; h < dims.h && taken < per_frame_index; ++h)
                for (uint32_t w = 0; w < dims.w && taken < per_frame_index; ++w) {
                    size_t s = dims.slot(c, t, h, w);
                    layout.region[s] = Region::Index;
                    layout.index_slots.push_back(s);
                    ++taken;
                }
    }

    // keyed pseudorandom positions among the remaining slots
    if (bind_length > 0) {
        std::vector<size_t> remaining;
        for (size_t s = 0; s < layout.region.size(); ++s)
            if (layout.region[s] == Region::Base) remaining.push_back(s);
        if (bind_length > remaining.size())
            throw LayoutOverflowError("binding region does not fit: needs " +
                                      std::to_string(bind_length) + " of " +
                                      std::to_string(remaining.size()) + " free slots");
        Keystream ks(*bind_key);
        for (size_t i = remaining.size() - 1; i > 0; --i) {
            size_t j = ks.next_below(i + 1);
            std::swap(remaining[i], remaining[j]);
        }
        layout.bind_slots.assign(remaining.begin(), remaining.begin() + bind_length);
        for (size_t s : layout.bind_slots) layout.region[s] = Region::Bind;
    }
    return layout;
}

// --- grid construction -------------------------------------------------------------

namespace {

void fill_time_template(BitGrid& grid) {
    const GridDims& d = grid.layout.dims;
    TimeTemplate tpl = make_time_template(d.frame_channel0());
    for (uint32_t t = 0; t < d.t; ++t) {
        std::vector<uint8_t> row = tpl.row(t);
        for (uint32_t h = 0; h < d.h; ++h)
            for (uint32_t w = 0; w < d.w; ++w)
                grid.bits[d.slot(0, t, h, w)] = row[size_t(h) * d.w + w];
    }
}

void fill_base(BitGrid& grid, const Key256& subkey, const SessionKeyMaterial& keys) {
    Keystream keyed(subkey);
    Keystream shared(shared_stream_key(keys.shared_seed));
    for (size_t s = 0; s < grid.bits.size(); ++s)
        if (grid.layout.region[s] == Region::Base)
            grid.bits[s] = keyed.next_bit() ^ shared.next_bit();
}

}  // namespace

BitGrid build_video_grid(const SessionKeyMaterial& keys, PlainIndex index,
                         const GridLayout& layout) {
    if (layout.bind_length != 0)
        throw ConfigError("video grids carry no binding region");
    BitGrid grid;
    grid.layout = layout;
    grid.modality = Modality::Video;
    grid.bits.assign(layout.dims.total(), 0);

    fill_time_template(grid);
    const size_t per_frame = 32u * size_t(layout.index_repetition);
    for (size_t k = 0; k < layout.index_slots.size(); ++k) {
        size_t bit_pos = (k % per_frame) % 32;
        grid.bits[layout.index_slots[k]] = (index >> bit_pos) & 1u;
    }
    fill_base(grid, keys.subkey_video, keys);
    return grid;
}

BitGrid build_audio_grid(const SessionKeyMaterial& keys, const BitGrid& video,
                         const GridLayout& layout) {
    if (layout.index_repetition != 0)
        throw ConfigError("audio grids carry no index region");
    BitGrid grid;
    grid.layout = layout;
    grid.modality = Modality::Audio;
    grid.bits.assign(layout.dims.total(), 0);

    fill_time_template(grid);
    Bytes hv = grid_digest(video);
    for (size_t i = 0; i < layout.bind_slots.size(); ++i)
        grid.bits[layout.bind_slots[i]] = hash_bit(hv, i % 256);
    fill_base(grid, keys.subkey_audio, keys);
    return grid;
}

Bytes serialize_grid(const BitGrid& grid) {
    Bytes out((grid.bits.size() + 7) / 8, 0);
    for (size_t i = 0; i < grid.bits.size(); ++i)
        if (grid.bits[i]) out[i >> 3] |= static_cast<uint8_t>(0x80u >> (i & 7));
    return out;
}

Bytes grid_digest(const BitGrid& grid) { return sha256(serialize_grid(grid)); }

// --- dump format -------------------------------------------------------------------

void write_grid(const std::filesystem::path& path, const BitGrid& grid) {
    std::vector<uint8_t> out = {'M', 'A', 'V', 'G'};
    io::put_u16(out, 1);
    out.push_back(static_cast<uint8_t>(grid.modality));
    io::put_u32(out, grid.layout.index_repetition);
    io::put_u32(out, grid.layout.bind_length);
    const GridDims& d = grid.layout.dims;
    io::put_u32(out, d.c);
    io::put_u32(out, d.t);
    io::put_u32(out, d.h);
    io::put_u32(out, d.w);
    for (Region r : grid.layout.region) out.push_back(static_cast<uint8_t>(r));
    Bytes packed = serialize_grid(grid);
    out.insert(out.end(), packed.begin(), packed.end());
    io::append_crc(out);
    io::write_file(path, out);
}

BitGrid read_grid(const std::filesystem::path& path) {
    std::vector<uint8_t> data = io::check_crc(io::read_file(path), "grid file");
    io::Reader r{data};
    if (r.u8() != 'M' || r.u8() != 'A' || r.u8() != 'V' || r.u8() != 'G')
        throw FormatError("bad grid magic");
    if (r.u16() != 1) throw FormatError("unsupported grid version");
    BitGrid grid;
    grid.modality = static_cast<Modality>(r.u8());
    grid.layout.index_repetition = r.u32();
    grid.layout.bind_length = r.u32();
    GridDims d{r.u32(), r.u32(), r.u32(), r.u32()};
    grid.layout.dims = d;
    grid.layout.region.resize(d.total());
    for (auto& reg : grid.layout.region) reg = static_cast<Region>(r.u8());
    grid.bits.assign(d.total(), 0);
    r.need((d.total() + 7) / 8);
    for (size_t i = 0; i < d.total(); ++i)
        grid.bits[i] = (data[r.pos + (i >> 3)] >> (7 - (i & 7))) & 1;
    // slot lists are reconstructible from the region map where needed
    for (size_t s = 0; s < grid.layout.region.size(); ++s) {
        if (grid.layout.region[s] == Region::Index) grid.layout.index_slots.push_back(s);
        if (grid.layout.region[s] == Region::Bind) grid.layout.bind_slots.push_back(s);
    }
    return grid;
}

}  // namespace mave
