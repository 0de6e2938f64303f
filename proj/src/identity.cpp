#include "did6g/identity.hpp"

#include "did6g/crypto.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace did6g {

using nlohmann::json;

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::InvalidSeed: return "InvalidSeed";
        case Errc::PurposeMismatch: return "PurposeMismatch";
        case Errc::InvalidContext: return "InvalidContext";
        case Errc::NotController: return "NotController";
        case Errc::WriteDenied: return "WriteDenied";
        case Errc::ReadDenied: return "ReadDenied";
        case Errc::BadSignature: return "BadSignature";
        case Errc::VersionGap: return "VersionGap";
        case Errc::NotFound: return "NotFound";
        case Errc::EmptyPending: return "EmptyPending";
        case Errc::UnknownActor: return "UnknownActor";
        case Errc::TooFewReplicas: return "TooFewReplicas";
        case Errc::AuthFailed: return "AuthFailed";
        case Errc::ResolveFailed: return "ResolveFailed";
        case Errc::StaleDocument: return "StaleDocument";
        case Errc::DecryptFailed: return "DecryptFailed";
        case Errc::UnknownChannel: return "UnknownChannel";
        case Errc::NoRegistryAccess: return "NoRegistryAccess";
        case Errc::NoAssertionKey: return "NoAssertionKey";
        case Errc::EmptyClaims: return "EmptyClaims";
        case Errc::NotHolder: return "NotHolder";
        case Errc::NotIssuer: return "NotIssuer";
        case Errc::BadConfig: return "BadConfig";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

std::string_view purpose_name(KeyPurpose p) {
    switch (p) {
        case KeyPurpose::Authentication: return "authentication";
        case KeyPurpose::Assertion: return "assertion";
        case KeyPurpose::KeyAgreement: return "keyAgreement";
    }
    return "unknown";
}

std::optional<KeyPurpose> purpose_from_name(std::string_view s) {
    if (s == "authentication") return KeyPurpose::Authentication;
    if (s == "assertion") return KeyPurpose::Assertion;
    if (s == "keyAgreement") return KeyPurpose::KeyAgreement;
    return std::nullopt;
}

namespace {
constexpr std::string_view kRegistryPrefix = "did:reg:";
constexpr std::string_view kSelfPrefix = "did:self:";
constexpr std::string_view kPairwiseTag = "did6g/pairwise/v1";
}  // namespace

std::string Did::str() const {
    std::string out(method == DidMethod::Registry ? kRegistryPrefix : kSelfPrefix);
    out += identifier;
    return out;
}

std::optional<Did> Did::parse(std::string_view s) {
    if (s.substr(0, kRegistryPrefix.size()) == kRegistryPrefix) {
        std::string id(s.substr(kRegistryPrefix.size()));
        if (id.empty()) return std::nullopt;
        return Did{DidMethod::Registry, std::move(id)};
    }
    if (s.substr(0, kSelfPrefix.size()) == kSelfPrefix) {
        std::string id(s.substr(kSelfPrefix.size()));
        if (id.empty()) return std::nullopt;
        return Did{DidMethod::SelfCertified, std::move(id)};
    }
    return std::nullopt;
}

const VerificationMethod* DidDocument::find_method(std::string_view method_id) const {
    for (const auto& m : verification_methods) {
        if (m.method_id == method_id) return &m;
    }
    return nullptr;
}

const VerificationMethod* DidDocument::first_method(KeyPurpose purpose) const {
    for (const auto& m : verification_methods) {
        if (m.purpose == purpose) return &m;
    }
    return nullptr;
}

std::string Signature::compact() const {
    return scheme_id + ":" + method_id + ":" + base64_encode(bytes);
}

std::optional<Signature> Signature::from_compact(std::string_view s) {
    auto first = s.find(':');
    if (first == std::string_view::npos) return std::nullopt;
    auto second = s.find(':', first + 1);
    if (second == std::string_view::npos) return std::nullopt;
    auto bytes = base64_decode(s.substr(second + 1));
    if (!bytes) return std::nullopt;
    Signature sig;
    sig.scheme_id = std::string(s.substr(0, first));
    sig.method_id = std::string(s.substr(first + 1, second - first - 1));
    sig.bytes = std::move(*bytes);
    return sig;
}

json doc_to_json(const DidDocument& doc) {
    json methods = json::array();
    for (const auto& m : doc.verification_methods) {
        methods.push_back({{"id", m.method_id},
                           {"purpose", std::string(purpose_name(m.purpose))},
                           {"publicKeyMultibase", multibase_encode(m.public_key)}});
    }
    json j{{"id", doc.id.str()},
           {"controller", doc.controller.str()},
           {"verificationMethod", std::move(methods)},
           {"version", doc.version}};
    if (doc.prev_version_hash) {
        j["prevVersionHash"] = hex_encode(*doc.prev_version_hash);
    }
    return j;
}

Result<DidDocument> doc_from_json(const json& j) {
    auto bad = [](std::string why) { return make_error(Errc::BadConfig, std::move(why)); };
    if (!j.is_object()) return bad("document is not an object");
    DidDocument doc;
    if (!j.contains("id") || !j["id"].is_string()) return bad("missing id");
    auto id = Did::parse(j["id"].get<std::string>());
    if (!id) return bad("unparseable id");
    doc.id = *id;
    if (!j.contains("controller") || !j["controller"].is_string()) return bad("missing controller");
    auto controller = Did::parse(j["controller"].get<std::string>());
    if (!controller) return bad("unparseable controller");
    doc.controller = *controller;
    if (!j.contains("version") || !j["version"].is_number_unsigned()) return bad("missing version");
    doc.version = j["version"].get<uint64_t>();
    if (j.contains("prevVersionHash")) {
        auto digest = hex_decode_digest(j["prevVersionHash"].get<std::string>());
        if (!digest) return bad("bad prevVersionHash");
        doc.prev_version_hash = *digest;
    }
    if (!j.contains("verificationMethod") || !j["verificationMethod"].is_array()) {
        return bad("missing verificationMethod");
    }
    for (const auto& m : j["verificationMethod"]) {
        VerificationMethod vm;
        if (!m.contains("id") || !m.contains("purpose") || !m.contains("publicKeyMultibase")) {
            return bad("malformed verification method");
        }
        vm.method_id = m["id"].get<std::string>();
        auto purpose = purpose_from_name(m["purpose"].get<std::string>());
        if (!purpose) return bad("unknown purpose");
        vm.purpose = *purpose;
        auto key = multibase_decode(m["publicKeyMultibase"].get<std::string>());
        if (!key) return bad("bad publicKeyMultibase");
        vm.public_key = std::move(*key);
        doc.verification_methods.push_back(std::move(vm));
    }
    if (!doc.first_method(KeyPurpose::Authentication)) {
        return bad("document lacks an Authentication method");
    }
    return doc;
}

Bytes canonical_json_bytes(const nlohmann::json& j) {
    return to_bytes(j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

Bytes doc_canonical_bytes(const DidDocument& doc) {
    return canonical_json_bytes(doc_to_json(doc));
}

Digest doc_digest(const DidDocument& doc) {
    return crypto::sha256(doc_canonical_bytes(doc));
}

std::string self_certified_identifier(const Bytes& auth_public_key) {
    Digest h = crypto::sha256(auth_public_key);
    return base32_encode(h.data(), h.size());
}

Result<KeyPair> generate_keypair(KeyPurpose purpose, const Bytes& seed) {
    if (seed.size() != crypto::kSeedLen) {
        return make_error(Errc::InvalidSeed, "seed must be exactly 32 bytes");
    }
    KeyPair kp;
    kp.purpose = purpose;
    if (purpose == KeyPurpose::KeyAgreement) {
        auto key = crypto::x25519_from_seed(seed);
        kp.public_key = std::move(key.public_key);
        kp.private_key = std::move(key.private_key);
    } else {
        auto key = crypto::ed25519_from_seed(seed);
        kp.public_key = std::move(key.public_key);
        kp.private_key = std::move(key.private_key);
    }
    return kp;
}

Result<DidBundle> create_did_document(DidMethod method, const KeyPair& auth_key,
                                      const std::vector<KeyPair>& extra_keys) {
    if (auth_key.purpose != KeyPurpose::Authentication) {
        return make_error(Errc::PurposeMismatch, "initial key must have Authentication purpose");
    }
    Did did{method, self_certified_identifier(auth_key.public_key)};

    DidDocument doc;
    doc.id = did;
    doc.controller = did;
    doc.version = 0;
    doc.verification_methods.push_back({"key-0", auth_key.purpose, auth_key.public_key});
    size_t n = 1;
    for (const auto& k : extra_keys) {
        doc.verification_methods.push_back({"key-" + std::to_string(n++), k.purpose, k.public_key});
    }
    return DidBundle{std::move(did), std::move(doc)};
}

Result<PairwiseDid> derive_pairwise_did(const Bytes& root_seed, std::string_view peer_context) {
    if (peer_context.empty()) {
        return make_error(Errc::InvalidContext, "peer context must be non-empty");
    }
    Bytes seed = crypto::derive_key(kPairwiseTag, {root_seed, to_bytes(peer_context)});
    auto key = generate_keypair(KeyPurpose::Authentication, seed);
    if (!key) return key.error();
    auto bundle = create_did_document(DidMethod::SelfCertified, key.value());
    if (!bundle) return bundle.error();
    return PairwiseDid{bundle.value().did, std::move(bundle.value().document),
                       std::move(key.value())};
}

Result<Signature> sign(const KeyPair& key, const Bytes& message, std::string method_id) {
    if (!key.can_sign()) {
        return make_error(Errc::PurposeMismatch, "KeyAgreement keys cannot sign");
    }
    Signature sig;
    sig.scheme_id = "ed25519";
    sig.bytes = crypto::ed25519_sign(key.private_key, message);
    sig.method_id = std::move(method_id);
    return sig;
}

bool verify(const Bytes& public_key, const Bytes& message, const Signature& sig) {
    if (sig.scheme_id != "ed25519") return false;
    return crypto::ed25519_verify(public_key, message, sig.bytes);
}

DidDocument next_version(const DidDocument& current, const VerificationMethod& new_method,
                         bool retain_old_auth) {
    DidDocument proposed = current;
    proposed.version = current.version + 1;
    proposed.prev_version_hash = doc_digest(current);
    if (!retain_old_auth && new_method.purpose == KeyPurpose::Authentication) {
        auto& methods = proposed.verification_methods;
        methods.erase(std::remove_if(methods.begin(), methods.end(),
                                     [](const VerificationMethod& m) {
                                         return m.purpose == KeyPurpose::Authentication;
                                     }),
                      methods.end());
    }
    proposed.verification_methods.push_back(new_method);
    return proposed;
}

Result<DidDocument> rotate_key(const DidDocument& current, const DidDocument& proposed,
                               const Signature& controller_sig) {
    Bytes canon = doc_canonical_bytes(proposed);
    const VerificationMethod* signer = current.find_method(controller_sig.method_id);
    bool authorized = signer != nullptr && signer->purpose == KeyPurpose::Authentication &&
                      verify(signer->public_key, canon, controller_sig);
    if (!authorized) {
        return make_error(Errc::NotController,
                          "signature is not by the current controller's Authentication key");
    }
    if (proposed.version != current.version + 1) {
        return make_error(Errc::VersionGap, "version must increase by exactly 1");
    }
    if (!proposed.prev_version_hash || *proposed.prev_version_hash != doc_digest(current)) {
        return make_error(Errc::VersionGap, "prev_version_hash does not match prior version");
    }
    if (!proposed.first_method(KeyPurpose::Authentication)) {
        return make_error(Errc::PurposeMismatch, "rotated document lacks an Authentication method");
    }
    return proposed;
}

}  // namespace did6g
