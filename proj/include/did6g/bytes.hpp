#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace did6g {

using Bytes = std::vector<uint8_t>;

/// 256-bit digest. Zero-initialized value doubles as the genesis prev-hash.
using Digest = std::array<uint8_t, 32>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

std::string hex_encode(const uint8_t* data, size_t len);
std::string hex_encode(const Bytes& b);
std::string hex_encode(const Digest& d);
std::optional<Bytes> hex_decode(std::string_view hex);
std::optional<Digest> hex_decode_digest(std::string_view hex);

/// RFC 4648 base32, lowercase, no padding. Used for self-certified DID
/// identifiers and multibase ('b' prefix) public keys.
std::string base32_encode(const uint8_t* data, size_t len);
std::string base32_encode(const Bytes& b);
std::optional<Bytes> base32_decode(std::string_view s);

std::string base64_encode(const Bytes& b);
std::optional<Bytes> base64_decode(std::string_view s);

/// "b" + base32(key) — the multibase form DID documents carry on the wire.
std::string multibase_encode(const Bytes& key);
std::optional<Bytes> multibase_decode(std::string_view s);

/// Length-prefixed, domain-tagged concatenation. Every internally hashed or
/// signed composite goes through this so no two message types can collide.
Bytes tagged_concat(std::string_view tag, std::initializer_list<Bytes> parts);

}  // namespace did6g
