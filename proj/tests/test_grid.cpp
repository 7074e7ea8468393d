#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "mave/detector.hpp"
#include "mave/grid.hpp"

using namespace mave;
namespace fs = std::filesystem;

namespace {

SessionKeyMaterial test_keys(uint8_t tag = 1) {
    SecretPayload m;
    m.bytes.assign(32, tag);
    return derive_session_key(m, "grid test prompt");
}

}  // namespace

TEST_CASE("layout partitions the grid into the four regions") {
    auto keys = test_keys();
    // (6,4,8,8): time = 4*64, index = 32*8 per frame, bind = 128, base = rest
    GridDims dims{6, 4, 8, 8};
    GridLayout layout = build_layout(dims, 128, 8, &keys.subkey_audio);

    CHECK(layout.region_count(Region::Time) == 256);
    CHECK(layout.region_count(Region::Index) == 1024);  // 256 per frame
    CHECK(layout.region_count(Region::Bind) == 128);
    CHECK(layout.region_count(Region::Base) == dims.total() - 256 - 1024 - 128);
    CHECK(layout.index_slots.size() == 1024);
    CHECK(layout.bind_slots.size() == 128);

    // every slot carries exactly one region tag and the slot lists agree
    std::set<size_t> bind_set(layout.bind_slots.begin(), layout.bind_slots.end());
    CHECK(bind_set.size() == 128);
    for (size_t s : layout.bind_slots) {
        CHECK(layout.region[s] == Region::Bind);
        CHECK(s >= dims.t * dims.frame_channel0());  // never on channel 0
    }
    for (size_t s : layout.index_slots) CHECK(layout.region[s] == Region::Index);

    // index offsets replicate identically across frames
    for (size_t j = 0; j < 256; ++j) {
        size_t frame_span = size_t(dims.h) * dims.w;
        size_t base_off = layout.index_slots[j];
        for (uint32_t t = 1; t < dims.t; ++t)
            CHECK(layout.index_slots[t * 256 + j] == base_off + t * frame_span);
    }
}

TEST_CASE("layout overflow and degenerate cases") {
    auto keys = test_keys();
    // (2,4,8,8) has 64 non-channel-0 slots per frame; r=8 needs 256
    CHECK_THROWS_AS(build_layout({2, 4, 8, 8}, 0, 8, nullptr), LayoutOverflowError);
    // bind region larger than what remains
    CHECK_THROWS_AS(build_layout({2, 4, 8, 8}, 300, 0, &keys.subkey_audio),
                    LayoutOverflowError);
    // N = 0: no binding region at all
    GridLayout video = build_layout({2, 4, 8, 8}, 0, 1, nullptr);
    CHECK(video.bind_slots.empty());
    CHECK(video.region_count(Region::Bind) == 0);
    // binding requires a key
    CHECK_THROWS_AS(build_layout({2, 4, 8, 8}, 16, 0, nullptr), ConfigError);
}

TEST_CASE("time template rows are distinct cyclic shifts") {
    TimeTemplate tpl = make_time_template(64);
    CHECK(tpl.base.size() == 64);
    std::set<std::vector<uint8_t>> rows;
    for (long t = 0; t < 8; ++t) rows.insert(tpl.row(t));
    CHECK(rows.size() == 8);
    // wrap-around consistency
    CHECK(tpl.row(3) == tpl.row(3 + 64));
    CHECK(tpl.row(-1) == tpl.row(63));
    // roughly balanced
    size_t ones = 0;
    for (uint8_t b : tpl.base) ones += b;
    CHECK(ones > 20);
    CHECK(ones < 44);
}

TEST_CASE("video grid: template, cleartext index, keyed base") {
    auto keys = test_keys();
    GridLayout layout = build_layout({2, 4, 8, 8}, 0, 1, nullptr);
    PlainIndex index = 0xdeadbeef;
    BitGrid grid = build_video_grid(keys, index, layout);
    BitGrid again = build_video_grid(keys, index, layout);
    CHECK(grid.bits == again.bits);  // deterministic

    TimeTemplate tpl = make_time_template(64);
    for (uint32_t t = 0; t < 4; ++t) {
        auto row = tpl.row(t);
        for (uint32_t h = 0; h < 8; ++h)
            for (uint32_t w = 0; w < 8; ++w)
                CHECK(grid.bits[layout.dims.slot(0, t, h, w)] == row[h * 8 + w]);
    }

    // index region decodes with no key material
    CHECK(extract_index(grid.bits, layout) == index);

    // audio layout refused
    GridLayout audio_layout = build_layout({2, 4, 8, 8}, 128, 0, &keys.subkey_audio);
    CHECK_THROWS_AS(build_video_grid(keys, index, audio_layout), ConfigError);
}

TEST_CASE("video base region is balanced (chi-square scale check)") {
    auto keys = test_keys();
    GridLayout layout = build_layout({2, 4, 64, 64}, 0, 1, nullptr);
    CHECK(layout.region_count(Region::Base) >= 10000);
    BitGrid grid = build_video_grid(keys, 7, layout);
    size_t ones = 0, total = 0;
    for (size_t s = 0; s < grid.bits.size(); ++s)
        if (layout.region[s] == Region::Base) {
            ones += grid.bits[s];
            ++total;
        }
    double frac = double(ones) / double(total);
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);
}

TEST_CASE("audio grid embeds the video digest at the binding slots") {
    auto keys = test_keys();
    GridLayout vlayout = build_layout({2, 4, 8, 8}, 0, 1, nullptr);
    GridLayout alayout = build_layout({2, 4, 8, 8}, 128, 0, &keys.subkey_audio);
    BitGrid video = build_video_grid(keys, 42, vlayout);
    BitGrid audio = build_audio_grid(keys, video, alayout);

    Bytes hv = grid_digest(video);
    for (size_t i = 0; i < alayout.bind_slots.size(); ++i)
        CHECK(audio.bits[alayout.bind_slots[i]] == hash_bit(hv, i % 256));
    CHECK(binding_score(audio.bits, hv, alayout) == 1.0);

    // video layout refused
    CHECK_THROWS_AS(build_audio_grid(keys, video, vlayout), ConfigError);
}

TEST_CASE("one-bit perturbation of the video grid scrambles the binding region") {
    auto keys = test_keys(3);
    GridLayout vlayout = build_layout({2, 4, 8, 8}, 0, 1, nullptr);
    GridLayout alayout = build_layout({2, 4, 8, 8}, 128, 0, &keys.subkey_audio);
    BitGrid video = build_video_grid(keys, 9, vlayout);
    BitGrid audio = build_audio_grid(keys, video, alayout);

    Keystream rng(Key256{});
    double total_agreement = 0.0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        BitGrid tampered = video;
        tampered.bits[rng.next_below(tampered.bits.size())] ^= 1;
        BitGrid rebuilt = build_audio_grid(keys, tampered, alayout);
        size_t agree = 0;
        for (size_t s : alayout.bind_slots) agree += rebuilt.bits[s] == audio.bits[s];
        total_agreement += double(agree) / alayout.bind_slots.size();
    }
    double mean = total_agreement / trials;
    CHECK(mean > 0.45);
    CHECK(mean < 0.55);
}

TEST_CASE("N = 256 binding region carries the full digest") {
    auto keys = test_keys(4);
    GridLayout vlayout = build_layout({2, 4, 16, 16}, 0, 1, nullptr);
    GridLayout alayout = build_layout({2, 4, 16, 16}, 256, 0, &keys.subkey_audio);
    BitGrid video = build_video_grid(keys, 1, vlayout);
    BitGrid audio = build_audio_grid(keys, video, alayout);
    Bytes hv = grid_digest(video);
    for (size_t i = 0; i < 256; ++i)
        CHECK(audio.bits[alayout.bind_slots[i]] == hash_bit(hv, i));
}

TEST_CASE("grid serialization packs row-major MSB-first") {
    BitGrid grid;
    grid.layout = build_layout({1, 1, 2, 4}, 0, 0, nullptr);
    grid.bits = {1, 0, 1, 1, 0, 0, 0, 0};
    CHECK(serialize_grid(grid) == Bytes{0xb0});
}

TEST_CASE("grid dump round-trips and detects corruption") {
    auto keys = test_keys(5);
    GridLayout layout = build_layout({2, 4, 8, 8}, 0, 2, nullptr);
    BitGrid grid = build_video_grid(keys, 123456, layout);
    fs::path path = fs::temp_directory_path() / "mave_test.grid";
    write_grid(path, grid);
    BitGrid loaded = read_grid(path);
    CHECK(loaded.bits == grid.bits);
    CHECK(loaded.layout.dims == grid.layout.dims);
    CHECK(loaded.layout.index_repetition == 2);
    CHECK(loaded.modality == Modality::Video);

    // flip one byte: CRC must catch it
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    char c;
    f.seekg(20);
    f.get(c);
    f.seekp(20);
    f.put(static_cast<char>(c ^ 0x40));
    f.close();
    CHECK_THROWS_AS(read_grid(path), FormatError);
    fs::remove(path);
}
