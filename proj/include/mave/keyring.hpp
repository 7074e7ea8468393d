// Payload structure, deterministic key derivation, ChaCha20 keystream
// generation and the persistent server-side key registry.
//
// All derivation is a pure function of (secret, prompt): the session key is
//   K_sess = SHA-256( first-128-bits(SHA-256(m)) || SHA-256(Norm(prompt)) )
// with modality sub-keys HMAC-SHA-256(K_sess, label) and a 64-bit shared
// seed taken from the first 8 bytes of SHA-256(m).
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mave/errors.hpp"

namespace mave {

using Bytes = std::vector<uint8_t>;
using Key256 = std::array<uint8_t, 32>;

// --- primitives (OpenSSL-backed) -------------------------------------------

Bytes sha256(const uint8_t* data, size_t len);
Bytes sha256(const Bytes& data);
Bytes sha256(const std::string& data);
Bytes hmac_sha256(const Key256& key, const std::string& msg);

std::string to_hex(const uint8_t* data, size_t len);
std::string to_hex(const Bytes& data);
Bytes from_hex(const std::string& hex);

// Incremental ChaCha20 keystream: 256-bit key, 96-bit all-zero nonce, block
// counter starting at 0 (RFC 8439 layout). Bits are served from each byte
// least-significant-bit first.
class Keystream {
public:
    explicit Keystream(const Key256& key);
    ~Keystream();
    Keystream(Keystream&&) noexcept;
    Keystream& operator=(Keystream&&) noexcept;
    Keystream(const Keystream&) = delete;
    Keystream& operator=(const Keystream&) = delete;

    uint8_t next_bit();
    uint8_t next_byte();    // discards any partially consumed bit byte
    uint64_t next_u64();    // little-endian
    uint64_t next_below(uint64_t n);  // uniform in [0, n); rejection sampled
    double next_unit();     // 53-bit uniform in [0, 1)
    void fill_bits(std::vector<uint8_t>& out, size_t n_bits);

private:
    void refill();
    struct Ctx;
    std::unique_ptr<Ctx> ctx_;
    std::array<uint8_t, 4096> buf_;
    size_t pos_ = 0;
    size_t avail_ = 0;
    uint8_t cur_byte_ = 0;
    int bit_pos_ = 8;  // 8 = no partial byte outstanding
};

// First n_bits of the ChaCha20 stream under `key`, one 0/1 value per entry.
std::vector<uint8_t> keystream_bits(const Key256& key, size_t n_bits);

// --- payload & session keys -------------------------------------------------

// High-entropy server-side secret (never embedded anywhere). Default 256 bits.
struct SecretPayload {
    Bytes bytes;

    static SecretPayload random(Keystream& rng, size_t n_bits = 256);
    size_t bit_length() const { return bytes.size() * 8; }
};

// Public 32-bit session identifier, embedded in cleartext.
using PlainIndex = uint32_t;

struct SessionKeyMaterial {
    Key256 session_key{};
    Key256 subkey_video{};
    Key256 subkey_audio{};
    Key256 subkey_time{};
    std::array<uint8_t, 8> shared_seed{};
    Key256 prompt_digest{};
};

// Lowercases ASCII letters, trims leading/trailing whitespace and collapses
// internal whitespace runs to a single space. Idempotent.
std::string normalize_prompt(const std::string& prompt);

// Throws EmptySecretError if m is empty.
SessionKeyMaterial derive_session_key(const SecretPayload& m, const std::string& prompt);

// Key for the shared-seed-driven base stream (SHA-256 of the 8 seed bytes).
Key256 shared_stream_key(const std::array<uint8_t, 8>& seed);

// --- registry ----------------------------------------------------------------

struct RegistryRecord {
    PlainIndex index = 0;
    SecretPayload secret;
    std::string prompt;
    std::string created_at;  // ISO-8601 UTC
};

// Append-only file, one record per line:
//   <hex index> <hex secret> <base64 prompt or "-"> <timestamp>
// Single-writer/multi-reader; registration takes an exclusive file lock and
// re-reads the tail, so concurrent registration of one index succeeds once.
class Registry {
public:
    explicit Registry(std::filesystem::path path);

    void register_session(PlainIndex index, const SecretPayload& m, const std::string& prompt);
    RegistryRecord lookup(PlainIndex index) const;  // throws NotFoundError
    bool contains(PlainIndex index) const;
    size_t size() const;
    const std::filesystem::path& path() const { return path_; }

private:
    void load_locked();

    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::map<PlainIndex, RegistryRecord> records_;
};

}  // namespace mave
