#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "mave/keyring.hpp"

using namespace mave;
namespace fs = std::filesystem;

TEST_CASE("SHA-256 reference vectors") {
    CHECK(to_hex(sha256(std::string(""))) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(sha256(std::string("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("HMAC-SHA-256 RFC 4231 vectors") {
    // RFC 4231 keys are shorter than 32 bytes; zero-extending them into our
    // fixed key type matches HMAC's own zero padding into the block.
    Key256 k1{};
    for (int i = 0; i < 20; ++i) k1[i] = 0x0b;
    CHECK(to_hex(hmac_sha256(k1, "Hi There")) ==
          "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");

    Key256 k2{};
    const char* jefe = "Jefe";
    std::copy(jefe, jefe + 4, k2.begin());
    CHECK(to_hex(hmac_sha256(k2, "what do ya want for nothing?")) ==
          "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST_CASE("ChaCha20 RFC 8439 keystream vectors (zero key, zero nonce)") {
    Keystream ks(Key256{});
    Bytes first(16), second(16);
    for (auto& b : first) b = ks.next_byte();
    for (int i = 0; i < 48; ++i) ks.next_byte();
    for (auto& b : second) b = ks.next_byte();
    // A.1 test vector 1 (block counter 0) and 2 (block counter 1)
    CHECK(to_hex(first) == "76b8e0ada0f13d90405d6ae55386bd28");
    CHECK(to_hex(second) == "9f07e7be5551387a98ba977c732d080d");
}

TEST_CASE("keystream bits are served LSB-first") {
    // first keystream byte is 0x76 = 0111 0110
    auto bits = keystream_bits(Key256{}, 8);
    std::vector<uint8_t> expect = {0, 1, 1, 0, 1, 1, 1, 0};
    CHECK(bits == expect);
    CHECK(keystream_bits(Key256{}, 0).empty());
}

TEST_CASE("keystream prefix property") {
    Key256 key{};
    key[0] = 0x42;
    auto a = keystream_bits(key, 40);
    auto b = keystream_bits(key, 100);
    b.resize(40);
    CHECK(a == b);
}

TEST_CASE("prompt normalization") {
    CHECK(normalize_prompt("  Hello  World ") == "hello world");
    CHECK(normalize_prompt("") == "");
    CHECK(normalize_prompt("abc") == "abc");
    CHECK(normalize_prompt("A\t\ndog") == "a dog");
    // idempotence over assorted inputs
    for (const char* s : {"  MiXeD   CaSe  ", "tabs\t\tand\nnewlines", "solo", " ", "a  b c   d"})
        CHECK(normalize_prompt(normalize_prompt(s)) == normalize_prompt(s));
}

TEST_CASE("session key derivation is deterministic and prompt-normalized") {
    SecretPayload m;
    m.bytes = from_hex("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f");
    auto k1 = derive_session_key(m, "A dog");
    auto k2 = derive_session_key(m, "A dog");
    CHECK(k1.session_key == k2.session_key);
    CHECK(k1.subkey_video == k2.subkey_video);
    CHECK(k1.shared_seed == k2.shared_seed);

    auto k3 = derive_session_key(m, "a  DOG ");
    CHECK(k1.session_key == k3.session_key);

    // shared seed is the first 8 bytes of SHA-256(m)
    Bytes inner = sha256(m.bytes);
    for (int i = 0; i < 8; ++i) CHECK(k1.shared_seed[i] == inner[i]);

    // modality sub-keys are distinct
    CHECK(k1.subkey_video != k1.subkey_audio);
    CHECK(k1.subkey_video != k1.subkey_time);
    CHECK(k1.subkey_audio != k1.subkey_time);

    SecretPayload empty;
    CHECK_THROWS_AS(derive_session_key(empty, "x"), EmptySecretError);
}

TEST_CASE("key separation: different secrets give ~50% keystream hamming distance") {
    Keystream rng(Key256{});
    SecretPayload a = SecretPayload::random(rng);
    SecretPayload b = SecretPayload::random(rng);
    auto ka = derive_session_key(a, "prompt");
    auto kb = derive_session_key(b, "prompt");
    CHECK(ka.session_key != kb.session_key);

    auto sa = keystream_bits(ka.session_key, 10000);
    auto sb = keystream_bits(kb.session_key, 10000);
    size_t diff = 0;
    for (size_t i = 0; i < sa.size(); ++i) diff += sa[i] != sb[i];
    double frac = double(diff) / sa.size();
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);
}

TEST_CASE("registry round-trip, duplicates, persistence") {
    fs::path path = fs::temp_directory_path() / "mave_test_registry.txt";
    fs::remove(path);

    Keystream rng(Key256{});
    SecretPayload m = SecretPayload::random(rng);
    {
        Registry reg(path);
        CHECK(reg.size() == 0);
        reg.register_session(5, m, "Ein Prompt mit Umlauten äöü");
        auto rec = reg.lookup(5);
        CHECK(rec.secret.bytes == m.bytes);
        CHECK(rec.prompt == "Ein Prompt mit Umlauten äöü");
        CHECK_THROWS_AS(reg.register_session(5, m, "again"), DuplicateIndexError);
        CHECK_THROWS_AS(reg.lookup(99), NotFoundError);
        reg.register_session(6, m, "");  // empty prompt round-trips
        CHECK(reg.lookup(6).prompt == "");
    }
    {
        Registry reopened(path);  // records survive process restart
        CHECK(reopened.size() == 2);
        CHECK(reopened.lookup(5).secret.bytes == m.bytes);
        CHECK(reopened.contains(6));
    }
    // file format: 4 space-separated fields per line, 8-hex-digit index
    std::ifstream in(path);
    std::string idx, secret, prompt, ts;
    REQUIRE(in >> idx >> secret >> prompt >> ts);
    CHECK(idx == "00000005");
    CHECK(secret.size() == 64);
    fs::remove(path);
}

TEST_CASE("concurrent registration of one index succeeds exactly once") {
    fs::path path = fs::temp_directory_path() / "mave_test_registry_mt.txt";
    fs::remove(path);
    Registry reg(path);
    Keystream rng(Key256{});
    SecretPayload m = SecretPayload::random(rng);

    std::atomic<int> successes{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&] {
            try {
                reg.register_session(77, m, "race");
                ++successes;
            } catch (const DuplicateIndexError&) {
            }
        });
    for (auto& t : threads) t.join();
    CHECK(successes.load() == 1);
    CHECK(Registry(path).size() == 1);
    fs::remove(path);
}

TEST_CASE("hex helpers") {
    CHECK(to_hex(from_hex("00ff10ab")) == "00ff10ab");
    CHECK_THROWS_AS(from_hex("abc"), FormatError);
    CHECK_THROWS_AS(from_hex("zz"), FormatError);
}
