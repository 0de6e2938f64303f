#pragma once

#include "did6g/bytes.hpp"

#include <cstdint>
#include <string>

namespace did6g::crypto {

inline constexpr size_t kSeedLen = 32;
inline constexpr size_t kPublicKeyLen = 32;
inline constexpr size_t kNonceLen = 16;
inline constexpr size_t kSessionKeyLen = 32;

/// Idempotent libsodium init; called lazily by every entry point.
void init();

Digest sha256(const Bytes& data);
Digest sha256(const uint8_t* data, size_t len);

/// BLAKE2b-based derivation: out = H(tag-framed inputs), 32 bytes.
/// Deterministic, domain-separated; the only KDF used in the project.
Bytes derive_key(std::string_view tag, std::initializer_list<Bytes> inputs);

struct SigningKey {
    Bytes public_key;   // 32 bytes
    Bytes private_key;  // 64 bytes (libsodium ed25519 secret key)
};

struct AgreementKey {
    Bytes public_key;   // 32 bytes
    Bytes private_key;  // 32 bytes (x25519 scalar)
};

/// Ed25519 keypair from a 32-byte seed. Same seed, same keys.
SigningKey ed25519_from_seed(const Bytes& seed);

/// X25519 keypair from a 32-byte seed.
AgreementKey x25519_from_seed(const Bytes& seed);

Bytes ed25519_sign(const Bytes& private_key, const Bytes& message);
bool ed25519_verify(const Bytes& public_key, const Bytes& message, const Bytes& signature);

/// X25519 shared secret; empty on a degenerate point.
Bytes x25519_shared(const Bytes& own_private, const Bytes& peer_public);

/// XSalsa20-Poly1305 with a nonce derived from `nonce_context`.
Bytes secretbox_seal(const Bytes& key, const Bytes& nonce_context, const Bytes& plaintext);
std::optional<Bytes> secretbox_open(const Bytes& key, const Bytes& nonce_context,
                                    const Bytes& ciphertext);

}  // namespace did6g::crypto
