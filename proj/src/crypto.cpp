#include "did6g/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace did6g::crypto {

void init() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

Digest sha256(const uint8_t* data, size_t len) {
    init();
    Digest out;
    crypto_hash_sha256(out.data(), data, len);
    return out;
}

Digest sha256(const Bytes& data) {
    return sha256(data.data(), data.size());
}

Bytes derive_key(std::string_view tag, std::initializer_list<Bytes> inputs) {
    init();
    Bytes framed = tagged_concat(tag, inputs);
    Bytes out(32);
    crypto_generichash(out.data(), out.size(), framed.data(), framed.size(), nullptr, 0);
    return out;
}

SigningKey ed25519_from_seed(const Bytes& seed) {
    init();
    SigningKey key;
    key.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    key.private_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(key.public_key.data(), key.private_key.data(), seed.data());
    return key;
}

AgreementKey x25519_from_seed(const Bytes& seed) {
    init();
    AgreementKey key;
    key.public_key.resize(crypto_box_PUBLICKEYBYTES);
    key.private_key.resize(crypto_box_SECRETKEYBYTES);
    crypto_box_seed_keypair(key.public_key.data(), key.private_key.data(), seed.data());
    return key;
}

Bytes ed25519_sign(const Bytes& private_key, const Bytes& message) {
    init();
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), private_key.data());
    return sig;
}

bool ed25519_verify(const Bytes& public_key, const Bytes& message, const Bytes& signature) {
    init();
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES || signature.size() != crypto_sign_BYTES) {
        return false;
    }
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

Bytes x25519_shared(const Bytes& own_private, const Bytes& peer_public) {
    init();
    Bytes shared(crypto_scalarmult_BYTES);
    if (own_private.size() != crypto_scalarmult_SCALARBYTES ||
        peer_public.size() != crypto_scalarmult_BYTES ||
        crypto_scalarmult(shared.data(), own_private.data(), peer_public.data()) != 0) {
        return {};
    }
    return shared;
}

namespace {
void derive_box_nonce(uint8_t out[crypto_secretbox_NONCEBYTES], const Bytes& nonce_context) {
    crypto_generichash(out, crypto_secretbox_NONCEBYTES, nonce_context.data(),
                       nonce_context.size(), nullptr, 0);
}
}  // namespace

Bytes secretbox_seal(const Bytes& key, const Bytes& nonce_context, const Bytes& plaintext) {
    init();
    uint8_t nonce[crypto_secretbox_NONCEBYTES];
    derive_box_nonce(nonce, nonce_context);
    Bytes out(plaintext.size() + crypto_secretbox_MACBYTES);
    crypto_secretbox_easy(out.data(), plaintext.data(), plaintext.size(), nonce, key.data());
    return out;
}

std::optional<Bytes> secretbox_open(const Bytes& key, const Bytes& nonce_context,
                                    const Bytes& ciphertext) {
    init();
    if (ciphertext.size() < crypto_secretbox_MACBYTES || key.size() != crypto_secretbox_KEYBYTES) {
        return std::nullopt;
    }
    uint8_t nonce[crypto_secretbox_NONCEBYTES];
    derive_box_nonce(nonce, nonce_context);
    Bytes out(ciphertext.size() - crypto_secretbox_MACBYTES);
    if (crypto_secretbox_open_easy(out.data(), ciphertext.data(), ciphertext.size(), nonce,
                                   key.data()) != 0) {
        return std::nullopt;
    }
    return out;
}

}  // namespace did6g::crypto
