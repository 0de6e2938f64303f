#include "did6g/bytes.hpp"

#include <sodium.h>

#include <cstring>

namespace did6g {

std::string hex_encode(const uint8_t* data, size_t len) {
    std::string out(len * 2 + 1, '\0');
    sodium_bin2hex(out.data(), out.size(), data, len);
    out.resize(len * 2);
    return out;
}

std::string hex_encode(const Bytes& b) {
    return hex_encode(b.data(), b.size());
}

std::string hex_encode(const Digest& d) {
    return hex_encode(d.data(), d.size());
}

std::optional<Bytes> hex_decode(std::string_view hex) {
    // Strict lowercase: exactly one spelling per byte string, so any byte
    // change in a hex field changes (or invalidates) the decoded value.
    if (hex.size() % 2 != 0) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return out;
}

std::optional<Digest> hex_decode_digest(std::string_view hex) {
    auto raw = hex_decode(hex);
    if (!raw || raw->size() != 32) return std::nullopt;
    Digest d;
    std::memcpy(d.data(), raw->data(), 32);
    return d;
}

namespace {
constexpr char kBase32Alphabet[] = "abcdefghijklmnopqrstuvwxyz234567";
}

std::string base32_encode(const uint8_t* data, size_t len) {
    std::string out;
    out.reserve((len * 8 + 4) / 5);
    uint32_t buffer = 0;
    int bits = 0;
    for (size_t i = 0; i < len; ++i) {
        buffer = (buffer << 8) | data[i];
        bits += 8;
        while (bits >= 5) {
            bits -= 5;
            out.push_back(kBase32Alphabet[(buffer >> bits) & 0x1f]);
        }
    }
    if (bits > 0) {
        out.push_back(kBase32Alphabet[(buffer << (5 - bits)) & 0x1f]);
    }
    return out;
}

std::string base32_encode(const Bytes& b) {
    return base32_encode(b.data(), b.size());
}

std::optional<Bytes> base32_decode(std::string_view s) {
    Bytes out;
    out.reserve(s.size() * 5 / 8);
    uint32_t buffer = 0;
    int bits = 0;
    for (char c : s) {
        int v;
        if (c >= 'a' && c <= 'z') {
            v = c - 'a';
        } else if (c >= '2' && c <= '7') {
            v = c - '2' + 26;
        } else {
            return std::nullopt;
        }
        buffer = (buffer << 5) | static_cast<uint32_t>(v);
        bits += 5;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<uint8_t>((buffer >> bits) & 0xff));
        }
    }
    // leftover bits must be zero padding
    if (bits > 0 && (buffer & ((1u << bits) - 1)) != 0) return std::nullopt;
    return out;
}

std::string base64_encode(const Bytes& b) {
    std::string out(sodium_base64_encoded_len(b.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), b.data(), b.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::strlen(out.c_str()));
    return out;
}

std::optional<Bytes> base64_decode(std::string_view s) {
    Bytes out(s.size());
    size_t bin_len = 0;
    if (sodium_base642bin(out.data(), out.size(), s.data(), s.size(), nullptr, &bin_len, nullptr,
                          sodium_base64_VARIANT_ORIGINAL) != 0) {
        return std::nullopt;
    }
    out.resize(bin_len);
    return out;
}

std::string multibase_encode(const Bytes& key) {
    return "b" + base32_encode(key);
}

std::optional<Bytes> multibase_decode(std::string_view s) {
    if (s.empty() || s[0] != 'b') return std::nullopt;
    return base32_decode(s.substr(1));
}

Bytes tagged_concat(std::string_view tag, std::initializer_list<Bytes> parts) {
    Bytes out;
    size_t total = tag.size() + 8;
    for (const auto& p : parts) total += p.size() + 8;
    out.reserve(total);

    auto put_len = [&out](uint64_t n) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((n >> (8 * i)) & 0xff));
    };
    put_len(tag.size());
    out.insert(out.end(), tag.begin(), tag.end());
    for (const auto& p : parts) {
        put_len(p.size());
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

}  // namespace did6g
