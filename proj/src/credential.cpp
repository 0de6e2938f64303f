#include "did6g/credential.hpp"

#include "did6g/crypto.hpp"

namespace did6g {

using nlohmann::json;

// ── Subjects ──────────────────────────────────────────────────────────────

std::string subject_to_string(const SubjectId& subject) {
    if (const auto* did = std::get_if<Did>(&subject)) return did->str();
    const auto& legacy = std::get<LegacyKey>(subject);
    return "legacy:" + legacy.label + ":" + multibase_encode(legacy.public_key);
}

std::optional<SubjectId> subject_from_string(std::string_view s) {
    constexpr std::string_view kLegacyPrefix = "legacy:";
    if (s.substr(0, kLegacyPrefix.size()) == kLegacyPrefix) {
        std::string_view rest = s.substr(kLegacyPrefix.size());
        auto last = rest.rfind(':');
        if (last == std::string_view::npos) return std::nullopt;
        auto key = multibase_decode(rest.substr(last + 1));
        if (!key) return std::nullopt;
        return SubjectId{LegacyKey{std::move(*key), std::string(rest.substr(0, last))}};
    }
    auto did = Did::parse(s);
    if (!did) return std::nullopt;
    return SubjectId{*did};
}

std::string legacy_key_ref(const Bytes& public_key) {
    return "legacy:" + multibase_encode(public_key) + "#key";
}

// ── Canonical forms ───────────────────────────────────────────────────────

namespace {

json metadata_core_json(const CredentialMetadata& m) {
    // Everything but the id, which is derived from this.
    return json{{"issuedAt", m.issued_at},
                {"issuer", m.issuer.str()},
                {"subject", subject_to_string(m.subject)},
                {"type", m.credential_type}};
}

json metadata_wire_json(const CredentialMetadata& m) {
    json j = metadata_core_json(m);
    j["id"] = hex_encode(m.credential_id);
    return j;
}

json vc_content_json(const VerifiableCredential& vc) {
    return json{{"claims", vc.claims}, {"metadata", metadata_wire_json(vc.metadata)}};
}

}  // namespace

Digest credential_id_for(const CredentialMetadata& metadata,
                         const std::map<std::string, std::string>& claims) {
    return crypto::sha256(tagged_concat(
        "did6g/vc-id/v1", {canonical_json_bytes(metadata_core_json(metadata)),
                           canonical_json_bytes(json(claims))}));
}

Bytes vc_signing_bytes(const VerifiableCredential& vc) {
    return tagged_concat("did6g/vc/v1", {canonical_json_bytes(vc_content_json(vc))});
}

json vc_to_json(const VerifiableCredential& vc) {
    json j = vc_content_json(vc);
    j["proof"] = json{{"created", vc.proof.created},
                      {"method", vc.proof.sig.method_id},
                      {"sig", base64_encode(vc.proof.sig.bytes)}};
    return j;
}

Result<VerifiableCredential> vc_from_json(const json& j) {
    auto bad = [](std::string why) { return make_error(Errc::BadConfig, std::move(why)); };
    if (!j.is_object() || !j.contains("metadata") || !j.contains("claims") ||
        !j.contains("proof")) {
        return bad("credential shape is wrong");
    }
    const json& m = j["metadata"];
    VerifiableCredential vc;
    auto issuer = Did::parse(m.value("issuer", ""));
    if (!issuer) return bad("bad issuer");
    vc.metadata.issuer = *issuer;
    auto subject = subject_from_string(m.value("subject", ""));
    if (!subject) return bad("bad subject");
    vc.metadata.subject = std::move(*subject);
    if (!m.contains("type") || !m["type"].is_string()) return bad("bad type");
    vc.metadata.credential_type = m["type"].get<std::string>();
    if (!m.contains("issuedAt") || !m["issuedAt"].is_number_unsigned()) return bad("bad issuedAt");
    vc.metadata.issued_at = m["issuedAt"].get<uint64_t>();
    auto id = hex_decode_digest(m.value("id", ""));
    if (!id) return bad("bad credential id");
    vc.metadata.credential_id = *id;

    if (!j["claims"].is_object()) return bad("bad claims");
    for (const auto& [key, value] : j["claims"].items()) {
        if (!value.is_string()) return bad("claims must be flat string pairs");
        vc.claims[key] = value.get<std::string>();
    }

    const json& p = j["proof"];
    auto sig_bytes = base64_decode(p.value("sig", ""));
    if (!sig_bytes) return bad("bad proof signature");
    vc.proof.sig = Signature{"ed25519", std::move(*sig_bytes), p.value("method", "")};
    if (!p.contains("created") || !p["created"].is_number_unsigned()) return bad("bad created");
    vc.proof.created = p["created"].get<uint64_t>();
    return vc;
}

Bytes vp_signing_bytes(const VerifiableCredential& vc, const Bytes& nonce, const Did& audience) {
    return tagged_concat("did6g/vp/v1", {canonical_json_bytes(vc_to_json(vc)), nonce,
                                         to_bytes(audience.str())});
}

json vp_to_json(const VerifiablePresentation& vp) {
    json holder{{"method", vp.holder_proof.sig.method_id},
                {"sig", base64_encode(vp.holder_proof.sig.bytes)}};
    if (vp.holder_proof.subject_key) {
        holder["key"] = multibase_encode(*vp.holder_proof.subject_key);
    }
    return json{{"audience", vp.audience.str()},
                {"holderProof", std::move(holder)},
                {"nonce", hex_encode(vp.nonce)},
                {"vc", vc_to_json(vp.vc)}};
}

Result<VerifiablePresentation> vp_from_json(const json& j) {
    auto bad = [](std::string why) { return make_error(Errc::BadConfig, std::move(why)); };
    if (!j.is_object() || !j.contains("vc") || !j.contains("holderProof")) {
        return bad("presentation shape is wrong");
    }
    VerifiablePresentation vp;
    auto vc = vc_from_json(j["vc"]);
    if (!vc.ok()) return vc.error();
    vp.vc = std::move(vc.value());
    auto nonce = hex_decode(j.value("nonce", ""));
    if (!nonce || nonce->size() != crypto::kNonceLen) return bad("bad nonce");
    vp.nonce = std::move(*nonce);
    auto audience = Did::parse(j.value("audience", ""));
    if (!audience) return bad("bad audience");
    vp.audience = *audience;
    const json& h = j["holderProof"];
    auto sig_bytes = base64_decode(h.value("sig", ""));
    if (!sig_bytes) return bad("bad holder signature");
    vp.holder_proof.sig = Signature{"ed25519", std::move(*sig_bytes), h.value("method", "")};
    if (h.contains("key")) {
        auto key = multibase_decode(h.value("key", ""));
        if (!key) return bad("bad embedded subject key");
        vp.holder_proof.subject_key = std::move(*key);
    }
    return vp;
}

// ── Nonce registry ────────────────────────────────────────────────────────

bool NonceRegistry::seen(const Bytes& nonce, const Digest& credential_id) const {
    return consumed_.count({hex_encode(nonce), hex_encode(credential_id)}) > 0;
}

void NonceRegistry::consume(const Bytes& nonce, const Digest& credential_id) {
    consumed_.insert({hex_encode(nonce), hex_encode(credential_id)});
}

// ── Verdict names ─────────────────────────────────────────────────────────

std::string_view vc_reason_name(VcReason r) {
    switch (r) {
        case VcReason::None: return "None";
        case VcReason::BadProof: return "BadProof";
        case VcReason::IssuerUnresolvable: return "IssuerUnresolvable";
        case VcReason::Revoked: return "Revoked";
    }
    return "unknown";
}

std::string_view vp_reason_name(VpReason r) {
    switch (r) {
        case VpReason::None: return "None";
        case VpReason::BadIssuerProof: return "BadIssuerProof";
        case VpReason::BadOwnershipProof: return "BadOwnershipProof";
        case VpReason::NonceMismatch: return "NonceMismatch";
        case VpReason::Replayed: return "Replayed";
        case VpReason::WrongAudience: return "WrongAudience";
        case VpReason::Revoked: return "Revoked";
    }
    return "unknown";
}

// ── Issuance and verification ─────────────────────────────────────────────

Result<VerifiableCredential> issue_vc(Agent& issuer, const SubjectId& subject,
                                      std::string credential_type,
                                      std::map<std::string, std::string> claims) {
    if (claims.empty()) {
        return make_error(Errc::EmptyClaims, "credentials carry at least one claim");
    }
    if (!issuer.primary_did()) {
        return make_error(Errc::NoAssertionKey, issuer.name() + " has no identity");
    }
    const Did issuer_did = *issuer.primary_did();
    const DidDocument* doc = issuer.own_document(issuer_did);
    const VerificationMethod* method =
        doc != nullptr ? doc->first_method(KeyPurpose::Assertion) : nullptr;
    const KeyPair* key = method != nullptr ? issuer.key_for(issuer_did, method->method_id) : nullptr;
    if (key == nullptr) {
        return make_error(Errc::NoAssertionKey,
                          issuer_did.str() + " has no usable Assertion key");
    }

    VerifiableCredential vc;
    vc.metadata.issuer = issuer_did;
    vc.metadata.subject = subject;
    vc.metadata.credential_type = std::move(credential_type);
    vc.metadata.issued_at = issuer.next_timestamp();
    vc.claims = std::move(claims);
    vc.metadata.credential_id = credential_id_for(vc.metadata, vc.claims);
    vc.proof.created = vc.metadata.issued_at;
    auto sig = sign(*key, vc_signing_bytes(vc), method->method_id);
    if (!sig.ok()) return sig.error();
    vc.proof.sig = std::move(sig.value());

    if (issuer.sink() != nullptr) {
        issuer.sink()->record("issue_vc", vc.metadata.credential_type, issuer_did.str(),
                              subject_to_string(subject));
    }
    return vc;
}

namespace {

bool proof_verifies(const VerifiableCredential& vc, const DidDocument& issuer_doc) {
    if (vc.metadata.credential_id != credential_id_for(vc.metadata, vc.claims)) return false;
    const VerificationMethod* method = issuer_doc.find_method(vc.proof.sig.method_id);
    return method != nullptr && method->purpose == KeyPurpose::Assertion &&
           verify(method->public_key, vc_signing_bytes(vc), vc.proof.sig);
}

}  // namespace

VcVerdict verify_vc(const VerifiableCredential& vc, const Registry& registry,
                    const std::optional<Did>& caller, std::optional<uint64_t> as_of_height) {
    auto doc = registry.resolve(vc.metadata.issuer, caller, as_of_height);
    if (!doc.ok()) return {false, VcReason::IssuerUnresolvable};
    if (!proof_verifies(vc, doc.value())) return {false, VcReason::BadProof};
    if (registry.is_revoked(vc.metadata.credential_id, as_of_height)) {
        return {false, VcReason::Revoked};
    }
    return {true, VcReason::None};
}

VcVerdict verify_vc(const VerifiableCredential& vc, const DidDocument& issuer_doc) {
    if (vc.metadata.issuer != issuer_doc.id) return {false, VcReason::IssuerUnresolvable};
    if (!proof_verifies(vc, issuer_doc)) return {false, VcReason::BadProof};
    return {true, VcReason::None};
}

// ── Presentation ──────────────────────────────────────────────────────────

VerifiablePresentation make_vp(const VerifiableCredential& vc, const Bytes& nonce,
                               const Did& audience, const KeyPair& presenting_key,
                               std::string method_id, std::optional<Bytes> embedded_subject_key) {
    VerifiablePresentation vp;
    vp.vc = vc;
    vp.nonce = nonce;
    vp.audience = audience;
    auto sig = sign(presenting_key, vp_signing_bytes(vc, nonce, audience), std::move(method_id));
    vp.holder_proof.sig = sig.ok() ? sig.value() : Signature{"ed25519", {}, "key-0"};
    vp.holder_proof.subject_key = std::move(embedded_subject_key);
    return vp;
}

Result<VerifiablePresentation> create_vp(Agent& holder, const VerifiableCredential& vc,
                                         const Bytes& nonce, const Did& audience) {
    if (const auto* did = std::get_if<Did>(&vc.metadata.subject)) {
        auto key = holder.auth_key_for(*did);
        if (!key) {
            return make_error(Errc::NotHolder,
                              holder.name() + " holds no key for subject " + did->str());
        }
        // Self-certified subjects carry their key in the proof so ownership
        // verifies with no registry involved.
        std::optional<Bytes> embedded;
        if (did->method == DidMethod::SelfCertified) embedded = key->first.public_key;
        return make_vp(vc, nonce, audience, key->first, key->second, std::move(embedded));
    }
    const auto& legacy = std::get<LegacyKey>(vc.metadata.subject);
    const KeyPair* key = holder.wallet().keys.count(legacy_key_ref(legacy.public_key)) > 0
                             ? &holder.wallet().keys.at(legacy_key_ref(legacy.public_key))
                             : nullptr;
    if (key == nullptr || key->public_key != legacy.public_key) {
        return make_error(Errc::NotHolder,
                          holder.name() + " holds no private key for the legacy subject");
    }
    return make_vp(vc, nonce, audience, *key, "legacy", legacy.public_key);
}

// ── Acceptance ────────────────────────────────────────────────────────────

namespace {

/// The public key the holder must have proven. DID subjects resolve through
/// the registry when anchored; self-certified ones validate the embedded key
/// against the identifier. Legacy subjects carry the key in the metadata.
std::optional<Bytes> subject_public_key(Agent& verifier, const VerifiablePresentation& vp) {
    const SubjectId& subject = vp.vc.metadata.subject;
    if (const auto* legacy = std::get_if<LegacyKey>(&subject)) {
        return legacy->public_key;
    }
    const Did& did = std::get<Did>(subject);
    if (did.method == DidMethod::SelfCertified) {
        if (!vp.holder_proof.subject_key) return std::nullopt;
        if (self_certified_identifier(*vp.holder_proof.subject_key) != did.identifier) {
            return std::nullopt;
        }
        return vp.holder_proof.subject_key;
    }
    auto doc = verifier.resolve_peer(did);
    if (!doc.ok()) return std::nullopt;
    const VerificationMethod* method = doc.value().find_method(vp.holder_proof.sig.method_id);
    if (method == nullptr || method->purpose != KeyPurpose::Authentication) return std::nullopt;
    return method->public_key;
}

}  // namespace

VpVerdict verify_vp(Agent& verifier, const VerifiablePresentation& vp, const Bytes& expected_nonce,
                    NonceRegistry& nonces) {
    VpVerdict verdict;

    VcVerdict vc_verdict;
    if (verifier.registry() != nullptr) {
        vc_verdict = verify_vc(vp.vc, *verifier.registry(), verifier.primary_did());
    } else {
        vc_verdict = {false, VcReason::IssuerUnresolvable};
    }
    verdict.vc_reason = vc_verdict.reason;
    if (!vc_verdict.valid) {
        verdict.reason = vc_verdict.reason == VcReason::Revoked ? VpReason::Revoked
                                                                : VpReason::BadIssuerProof;
        return verdict;
    }

    auto subject_key = subject_public_key(verifier, vp);
    if (!subject_key ||
        !verify(*subject_key, vp_signing_bytes(vp.vc, vp.nonce, vp.audience),
                vp.holder_proof.sig)) {
        verdict.reason = VpReason::BadOwnershipProof;
        return verdict;
    }

    if (vp.nonce != expected_nonce) {
        verdict.reason = VpReason::NonceMismatch;
        return verdict;
    }
    if (!verifier.primary_did() || vp.audience != *verifier.primary_did()) {
        verdict.reason = VpReason::WrongAudience;
        return verdict;
    }
    if (nonces.seen(vp.nonce, vp.vc.metadata.credential_id)) {
        verdict.reason = VpReason::Replayed;
        return verdict;
    }
    nonces.consume(vp.nonce, vp.vc.metadata.credential_id);
    verdict.accepted = true;
    if (verifier.sink() != nullptr) {
        verifier.sink()->record("accept_vp", vp.vc.metadata.credential_type,
                                subject_to_string(vp.vc.metadata.subject),
                                vp.audience.str());
    }
    return verdict;
}

// ── Revocation ────────────────────────────────────────────────────────────

Result<void> revoke_vc(Agent& issuer, const VerifiableCredential& vc, Registry& registry) {
    if (!issuer.primary_did() || *issuer.primary_did() != vc.metadata.issuer) {
        return make_error(Errc::NotIssuer, "only the credential's issuer may revoke it");
    }
    auto key = issuer.auth_key_for(vc.metadata.issuer);
    if (!key) {
        return make_error(Errc::NotIssuer, issuer.name() + " holds no key for the issuer DID");
    }
    auto tx = make_revocation_tx(vc.metadata.credential_id, vc.metadata.issuer, key->first,
                                 key->second);
    if (auto submitted = registry.submit(tx); !submitted.ok()) return submitted.error();
    auto outcome = registry.run_consensus_round();
    if (!outcome.ok()) return outcome.error();
    if (!outcome.value().committed) {
        return make_error(Errc::WriteDenied, "consensus did not commit the revocation");
    }
    if (issuer.sink() != nullptr) {
        issuer.sink()->record("revoke_vc", hex_encode(vc.metadata.credential_id),
                              vc.metadata.issuer.str(), subject_to_string(vc.metadata.subject));
    }
    return {};
}

// ── Wallet plumbing ───────────────────────────────────────────────────────

void wallet_store_vc(Wallet& wallet, const VerifiableCredential& vc) {
    wallet.credentials.push_back(vc_to_json(vc));
}

std::vector<VerifiableCredential> wallet_credentials(const Wallet& wallet) {
    std::vector<VerifiableCredential> out;
    for (const auto& j : wallet.credentials) {
        auto vc = vc_from_json(j);
        if (vc.ok()) out.push_back(std::move(vc.value()));
    }
    return out;
}

}  // namespace did6g
