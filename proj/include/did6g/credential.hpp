#pragma once

#include "did6g/agent.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <variant>

namespace did6g {

// ── Subjects ──────────────────────────────────────────────────────────────

/// Non-DID identifier carrying a raw public key, so ownership stays provable
/// for legacy systems bridged into the credential flow.
struct LegacyKey {
    Bytes public_key;
    std::string label;  // no ':' characters

    bool operator==(const LegacyKey&) const = default;
};

using SubjectId = std::variant<Did, LegacyKey>;

/// Wire rendering: the DID string, or "legacy:<label>:<multibase-key>".
std::string subject_to_string(const SubjectId& subject);
std::optional<SubjectId> subject_from_string(std::string_view s);

/// Wallet slot for a legacy key's private half.
std::string legacy_key_ref(const Bytes& public_key);

// ── Credentials ───────────────────────────────────────────────────────────

struct CredentialMetadata {
    Did issuer;
    SubjectId subject;
    std::string credential_type;
    uint64_t issued_at = 0;
    Digest credential_id{};  // hash of canonical(metadata-sans-id ∥ claims)
};

struct CredentialProof {
    Signature sig;  // by the issuer's Assertion key
    uint64_t created = 0;
};

struct VerifiableCredential {
    CredentialMetadata metadata;
    std::map<std::string, std::string> claims;
    CredentialProof proof;
};

/// Recomputes what metadata.credential_id must equal.
Digest credential_id_for(const CredentialMetadata& metadata,
                         const std::map<std::string, std::string>& claims);

/// Bytes the issuer proof covers: the wire form without "proof".
Bytes vc_signing_bytes(const VerifiableCredential& vc);

/// Wire: {"metadata":{"issuer","subject","type","issuedAt","id"},
///        "claims":{...},"proof":{"sig","method","created"}}.
nlohmann::json vc_to_json(const VerifiableCredential& vc);
Result<VerifiableCredential> vc_from_json(const nlohmann::json& j);

// ── Presentations ─────────────────────────────────────────────────────────

struct HolderProof {
    Signature sig;
    /// Embedded subject public key, present for self-certified and legacy
    /// subjects so the verifier needs no registry lookup for ownership: the
    /// key re-hashes to the subject identifier, which makes it self-valid.
    std::optional<Bytes> subject_key;
};

struct VerifiablePresentation {
    VerifiableCredential vc;
    Bytes nonce;  // verifier-minted challenge, echoed verbatim
    Did audience;
    HolderProof holder_proof;
};

/// Bytes the holder proof covers: credential ∥ nonce ∥ audience.
Bytes vp_signing_bytes(const VerifiableCredential& vc, const Bytes& nonce, const Did& audience);

/// Wire: {"vc",...,"nonce","audience","holderProof":{"sig","method"[,"key"]}}.
nlohmann::json vp_to_json(const VerifiablePresentation& vp);
Result<VerifiablePresentation> vp_from_json(const nlohmann::json& j);

/// Verifier-side record of consumed (nonce, credential_id) pairs.
class NonceRegistry {
public:
    bool seen(const Bytes& nonce, const Digest& credential_id) const;
    void consume(const Bytes& nonce, const Digest& credential_id);
    size_t size() const { return consumed_.size(); }

private:
    std::set<std::pair<std::string, std::string>> consumed_;
};

// ── Verdicts ──────────────────────────────────────────────────────────────

enum class VcReason { None, BadProof, IssuerUnresolvable, Revoked };
std::string_view vc_reason_name(VcReason r);

struct VcVerdict {
    bool valid = false;
    VcReason reason = VcReason::None;
};

enum class VpReason {
    None,
    BadIssuerProof,
    BadOwnershipProof,
    NonceMismatch,
    Replayed,
    WrongAudience,
    Revoked,
};
std::string_view vp_reason_name(VpReason r);

struct VpVerdict {
    bool accepted = false;
    VpReason reason = VpReason::None;
    VcReason vc_reason = VcReason::None;  // underlying credential verdict
};

// ── Operations ────────────────────────────────────────────────────────────

/// Issues a credential signed with the issuer's Assertion key. Delivery to
/// the holder's wallet is a channel send; issuance itself is pure.
Result<VerifiableCredential> issue_vc(Agent& issuer, const SubjectId& subject,
                                      std::string credential_type,
                                      std::map<std::string, std::string> claims);

/// Registry-backed verification: resolves the issuer (optionally at a
/// height) and consults revocation status.
VcVerdict verify_vc(const VerifiableCredential& vc, const Registry& registry,
                    const std::optional<Did>& caller = std::nullopt,
                    std::optional<uint64_t> as_of_height = std::nullopt);

/// Registry-less verification against a supplied issuer document. Carries no
/// revocation knowledge by design: validity status lives in the registry.
VcVerdict verify_vc(const VerifiableCredential& vc, const DidDocument& issuer_doc);

/// Holder-checked presentation: the holder's wallet must contain the
/// subject's private key.
Result<VerifiablePresentation> create_vp(Agent& holder, const VerifiableCredential& vc,
                                         const Bytes& nonce, const Did& audience);

/// Unchecked constructor — signs with whatever key is supplied. This is the
/// adversary/test hook behind create_vp; verification is what must hold.
VerifiablePresentation make_vp(const VerifiableCredential& vc, const Bytes& nonce,
                               const Did& audience, const KeyPair& presenting_key,
                               std::string method_id, std::optional<Bytes> embedded_subject_key);

/// Full acceptance check, in order: issuer proof, ownership proof, nonce,
/// audience, one-time use. Accepting consumes (nonce, credential_id).
VpVerdict verify_vp(Agent& verifier, const VerifiablePresentation& vp, const Bytes& expected_nonce,
                    NonceRegistry& nonces);

/// Writes a revocation entry through the registry's transaction path and
/// commits it. Only the credential's issuer may revoke.
Result<void> revoke_vc(Agent& issuer, const VerifiableCredential& vc, Registry& registry);

// ── Wallet plumbing ───────────────────────────────────────────────────────

void wallet_store_vc(Wallet& wallet, const VerifiableCredential& vc);
std::vector<VerifiableCredential> wallet_credentials(const Wallet& wallet);

}  // namespace did6g
