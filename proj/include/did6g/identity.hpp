#pragma once

#include "did6g/bytes.hpp"
#include "did6g/result.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace did6g {

enum class KeyPurpose { Authentication, Assertion, KeyAgreement };

std::string_view purpose_name(KeyPurpose p);
std::optional<KeyPurpose> purpose_from_name(std::string_view s);

struct KeyPair {
    Bytes public_key;
    Bytes private_key;
    KeyPurpose purpose = KeyPurpose::Authentication;

    bool can_sign() const { return purpose != KeyPurpose::KeyAgreement; }
};

enum class DidMethod { Registry, SelfCertified };

/// did:reg:<id> / did:self:<id>. Self-certified identifiers are the
/// base32-lowercase SHA-256 of the initial Authentication public key,
/// so the identifier itself binds the key.
struct Did {
    DidMethod method = DidMethod::SelfCertified;
    std::string identifier;

    std::string str() const;
    static std::optional<Did> parse(std::string_view s);

    auto operator<=>(const Did&) const = default;
};

struct VerificationMethod {
    std::string method_id;
    KeyPurpose purpose = KeyPurpose::Authentication;
    Bytes public_key;

    bool operator==(const VerificationMethod&) const = default;
};

struct DidDocument {
    Did id;
    Did controller;  // defaults to id
    std::vector<VerificationMethod> verification_methods;
    uint64_t version = 0;
    std::optional<Digest> prev_version_hash;

    const VerificationMethod* find_method(std::string_view method_id) const;
    const VerificationMethod* first_method(KeyPurpose purpose) const;

    bool operator==(const DidDocument&) const = default;
};

struct Signature {
    std::string scheme_id;  // "ed25519"
    Bytes bytes;
    std::string method_id;

    /// "<scheme>:<method>:<base64>" — the single-field wire rendering.
    std::string compact() const;
    static std::optional<Signature> from_compact(std::string_view s);

    bool operator==(const Signature&) const = default;
};

/// Canonical serialization: key-sorted, whitespace-free dump. Total even
/// when in-memory strings hold invalid UTF-8 (corrupted storage): bad bytes
/// are replaced rather than thrown on, so integrity checks that recompute
/// hashes always terminate with a verdict. Valid input is dumped unchanged.
Bytes canonical_json_bytes(const nlohmann::json& j);

/// Wire form: {"id","controller","verificationMethod":[...],"version",
/// "prevVersionHash"}; canonical bytes are the key-sorted, whitespace-free
/// dump of exactly that shape.
nlohmann::json doc_to_json(const DidDocument& doc);
Result<DidDocument> doc_from_json(const nlohmann::json& j);
Bytes doc_canonical_bytes(const DidDocument& doc);
Digest doc_digest(const DidDocument& doc);

std::string self_certified_identifier(const Bytes& auth_public_key);

Result<KeyPair> generate_keypair(KeyPurpose purpose, const Bytes& seed);

struct DidBundle {
    Did did;
    DidDocument document;
};

Result<DidBundle> create_did_document(DidMethod method, const KeyPair& auth_key,
                                      const std::vector<KeyPair>& extra_keys = {});

struct PairwiseDid {
    Did did;
    DidDocument document;
    KeyPair key;
};

/// KDF(root_seed, peer_context) under a fixed domain tag; distinct contexts
/// yield unlinkable self-certified DIDs, same inputs replay exactly.
Result<PairwiseDid> derive_pairwise_did(const Bytes& root_seed, std::string_view peer_context);

Result<Signature> sign(const KeyPair& key, const Bytes& message, std::string method_id = "key-0");
bool verify(const Bytes& public_key, const Bytes& message, const Signature& sig);

/// Next-version builder: bumps version, chains prev_version_hash, installs
/// new_method and drops the old Authentication methods unless retained.
DidDocument next_version(const DidDocument& current, const VerificationMethod& new_method,
                         bool retain_old_auth);

/// Accepts `proposed` only when controller_sig is a valid signature over its
/// canonical bytes by one of `current`'s Authentication keys and the
/// version/prev-hash chain is intact.
Result<DidDocument> rotate_key(const DidDocument& current, const DidDocument& proposed,
                               const Signature& controller_sig);

}  // namespace did6g
