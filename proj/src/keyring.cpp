#include "mave/keyring.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

namespace mave {

// --- hashing -----------------------------------------------------------------

Bytes sha256(const uint8_t* data, size_t len) {
    Bytes out(32);
    unsigned int n = 0;
    if (EVP_Digest(data, len, out.data(), &n, EVP_sha256(), nullptr) != 1 || n != 32)
        throw Error("SHA-256 failed");
    return out;
}

Bytes sha256(const Bytes& data) { return sha256(data.data(), data.size()); }

Bytes sha256(const std::string& data) {
    return sha256(reinterpret_cast<const uint8_t*>(data.data()), data.size());
}

Bytes hmac_sha256(const Key256& key, const std::string& msg) {
    // RFC 2104 with SHA-256, built on EVP_Digest; OpenSSL's one-shot HMAC is
    // deprecated in 3.0 and EVP_MAC drags in fetch machinery.
    std::array<uint8_t, 64> block{};
    std::memcpy(block.data(), key.data(), key.size());  // 32-byte key < 64-byte block
    std::array<uint8_t, 64> ipad, opad;
    for (size_t i = 0; i < 64; ++i) {
        ipad[i] = block[i] ^ 0x36;
        opad[i] = block[i] ^ 0x5c;
    }
    Bytes inner(ipad.begin(), ipad.end());
    inner.insert(inner.end(), msg.begin(), msg.end());
    Bytes inner_hash = sha256(inner);
    Bytes outer(opad.begin(), opad.end());
    outer.insert(outer.end(), inner_hash.begin(), inner_hash.end());
    return sha256(outer);
}

std::string to_hex(const uint8_t* data, size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

std::string to_hex(const Bytes& data) { return to_hex(data.data(), data.size()); }

Bytes from_hex(const std::string& hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) throw FormatError("odd-length hex string");
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw FormatError("invalid hex digit");
        out[i] = static_cast<uint8_t>(hi << 4 | lo);
    }
    return out;
}

// --- ChaCha20 keystream --------------------------------------------------------

struct Keystream::Ctx {
    EVP_CIPHER_CTX* c = nullptr;
    ~Ctx() {
        if (c) EVP_CIPHER_CTX_free(c);
    }
};

Keystream::Keystream(const Key256& key) : ctx_(std::make_unique<Ctx>()) {
    ctx_->c = EVP_CIPHER_CTX_new();
    // 16-byte IV = 32-bit little-endian block counter (0) || 96-bit zero nonce.
    std::array<uint8_t, 16> iv{};
    if (!ctx_->c ||
        EVP_EncryptInit_ex(ctx_->c, EVP_chacha20(), nullptr, key.data(), iv.data()) != 1)
        throw Error("ChaCha20 init failed");
}

Keystream::~Keystream() = default;
Keystream::Keystream(Keystream&&) noexcept = default;
Keystream& Keystream::operator=(Keystream&&) noexcept = default;

void Keystream::refill() {
    static const std::array<uint8_t, 4096> zeros{};
    int out_len = 0;
    if (EVP_EncryptUpdate(ctx_->c, buf_.data(), &out_len, zeros.data(), zeros.size()) != 1 ||
        out_len != static_cast<int>(buf_.size()))
        throw Error("ChaCha20 update failed");
    pos_ = 0;
    avail_ = buf_.size();
}

uint8_t Keystream::next_byte() {
    bit_pos_ = 8;
    if (pos_ >= avail_) refill();
    return buf_[pos_++];
}

uint8_t Keystream::next_bit() {
    if (bit_pos_ >= 8) {
        bit_pos_ = 0;  // claim a fresh byte without resetting the bit cursor
        if (pos_ >= avail_) refill();
        cur_byte_ = buf_[pos_++];
    }
    return (cur_byte_ >> bit_pos_++) & 1;
}

uint64_t Keystream::next_u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(next_byte()) << (8 * i);
    return v;
}

uint64_t Keystream::next_below(uint64_t n) {
    if (n == 0) throw Error("next_below(0)");
    if (n == 1) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
        uint64_t v = next_u64();
        if (v < limit) return v % n;
    }
}

double Keystream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

void Keystream::fill_bits(std::vector<uint8_t>& out, size_t n_bits) {
    out.resize(n_bits);
    for (size_t i = 0; i < n_bits; ++i) out[i] = next_bit();
}

std::vector<uint8_t> keystream_bits(const Key256& key, size_t n_bits) {
    Keystream ks(key);
    std::vector<uint8_t> out;
    ks.fill_bits(out, n_bits);
    return out;
}

// --- payload & derivation -------------------------------------------------------

SecretPayload SecretPayload::random(Keystream& rng, size_t n_bits) {
    if (n_bits < 128 || n_bits % 8 != 0)
        throw ConfigError("secret payload length must be >= 128 bits and byte-aligned");
    SecretPayload m;
    m.bytes.resize(n_bits / 8);
    for (auto& b : m.bytes) b = rng.next_byte();
    return m;
}

std::string normalize_prompt(const std::string& prompt) {
    std::string out;
    out.reserve(prompt.size());
    bool pending_space = false;
    for (unsigned char c : prompt) {
        if (std::isspace(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    return out;
}

static Key256 to_key(const Bytes& b) {
    Key256 k{};
    std::memcpy(k.data(), b.data(), std::min<size_t>(32, b.size()));
    return k;
}

SessionKeyMaterial derive_session_key(const SecretPayload& m, const std::string& prompt) {
    if (m.bytes.empty()) throw EmptySecretError();

    Bytes inner = sha256(m.bytes);
    Bytes prefix(inner.begin(), inner.begin() + 16);  // first 128 bits
    Bytes prompt_digest = sha256(normalize_prompt(prompt));

    Bytes material = prefix;
    material.insert(material.end(), prompt_digest.begin(), prompt_digest.end());

    SessionKeyMaterial keys;
    keys.session_key = to_key(sha256(material));
    keys.subkey_video = to_key(hmac_sha256(keys.session_key, "video"));
    keys.subkey_audio = to_key(hmac_sha256(keys.session_key, "audio"));
    keys.subkey_time = to_key(hmac_sha256(keys.session_key, "time"));
    std::memcpy(keys.shared_seed.data(), inner.data(), 8);
    keys.prompt_digest = to_key(prompt_digest);
    return keys;
}

Key256 shared_stream_key(const std::array<uint8_t, 8>& seed) {
    return to_key(sha256(seed.data(), seed.size()));
}

// --- registry ---------------------------------------------------------------------

namespace {

std::string iso8601_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", &tm);
    return buf;
}

std::string b64_encode(const std::string& s) {
    if (s.empty()) return "-";
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((s.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= s.size(); i += 3) {
        uint32_t v = uint8_t(s[i]) << 16 | uint8_t(s[i + 1]) << 8 | uint8_t(s[i + 2]);
        out.push_back(tbl[v >> 18]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(tbl[(v >> 6) & 63]);
        out.push_back(tbl[v & 63]);
    }
    size_t rem = s.size() - i;
    if (rem == 1) {
        uint32_t v = uint8_t(s[i]) << 16;
        out.push_back(tbl[v >> 18]);
        out.push_back(tbl[(v >> 12) & 63]);
        out += "==";
    } else if (rem == 2) {
        uint32_t v = uint8_t(s[i]) << 16 | uint8_t(s[i + 1]) << 8;
        out.push_back(tbl[v >> 18]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(tbl[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::string b64_decode(const std::string& s) {
    if (s == "-") return "";
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::string out;
    uint32_t acc = 0;
    int nbits = 0;
    for (char c : s) {
        if (c == '=') break;
        int v = val(c);
        if (v < 0) throw FormatError("invalid base64 in registry");
        acc = acc << 6 | v;
        nbits += 6;
        if (nbits >= 8) {
            nbits -= 8;
            out.push_back(static_cast<char>((acc >> nbits) & 0xff));
        }
    }
    return out;
}

// RAII advisory lock over the whole registry file.
struct FileLock {
    int fd = -1;
    explicit FileLock(const std::filesystem::path& p) {
        fd = ::open(p.c_str(), O_CREAT | O_RDWR | O_APPEND, 0644);
        if (fd < 0) throw Error("cannot open registry file: " + p.string());
        if (::flock(fd, LOCK_EX) != 0) {
            ::close(fd);
            throw Error("cannot lock registry file: " + p.string());
        }
    }
    ~FileLock() {
        if (fd >= 0) {
            ::flock(fd, LOCK_UN);
            ::close(fd);
        }
    }
};

}  // namespace

Registry::Registry(std::filesystem::path path) : path_(std::move(path)) {
    std::lock_guard<std::mutex> g(mu_);
    load_locked();
}

void Registry::load_locked() {
    records_.clear();
    std::ifstream in(path_);
    if (!in) return;  // not yet created
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string idx_hex, secret_hex, prompt_b64, ts;
        if (!(ls >> idx_hex >> secret_hex >> prompt_b64 >> ts))
            throw FormatError("registry line " + std::to_string(lineno) + " malformed");
        RegistryRecord rec;
        Bytes idx = from_hex(idx_hex);
        if (idx.size() != 4) throw FormatError("registry index must be 32-bit");
        rec.index = uint32_t(idx[0]) << 24 | uint32_t(idx[1]) << 16 | uint32_t(idx[2]) << 8 |
                    uint32_t(idx[3]);
        rec.secret.bytes = from_hex(secret_hex);
        rec.prompt = b64_decode(prompt_b64);
        rec.created_at = ts;
        records_[rec.index] = std::move(rec);
    }
}

void Registry::register_session(PlainIndex index, const SecretPayload& m,
                                const std::string& prompt) {
    if (m.bytes.empty()) throw EmptySecretError();
    std::lock_guard<std::mutex> g(mu_);
    FileLock lock(path_);
    load_locked();  // pick up appends from other writers
    if (records_.count(index))
        throw DuplicateIndexError("index " + std::to_string(index) + " already registered");

    char idx_hex[9];
    std::snprintf(idx_hex, sizeof idx_hex, "%08x", index);
    std::string line = std::string(idx_hex) + " " + to_hex(m.bytes.data(), m.bytes.size()) + " " +
                       b64_encode(prompt) + " " + iso8601_now() + "\n";
    if (::write(lock.fd, line.data(), line.size()) != static_cast<ssize_t>(line.size()))
        throw Error("registry append failed");
    ::fsync(lock.fd);

    RegistryRecord rec{index, m, prompt, iso8601_now()};
    records_[index] = std::move(rec);
}

RegistryRecord Registry::lookup(PlainIndex index) const {
    std::lock_guard<std::mutex> g(mu_);
    auto it = records_.find(index);
    if (it == records_.end())
        throw NotFoundError("index " + std::to_string(index) + " not in registry");
    return it->second;
}

bool Registry::contains(PlainIndex index) const {
    std::lock_guard<std::mutex> g(mu_);
    return records_.count(index) != 0;
}

size_t Registry::size() const {
    std::lock_guard<std::mutex> g(mu_);
    return records_.size();
}

}  // namespace mave
