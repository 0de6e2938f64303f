#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "did6g/credential.hpp"
#include "did6g/crypto.hpp"

#include <nlohmann/json.hpp>

#include <set>

using namespace did6g;
using nlohmann::json;

namespace {

Bytes seed_of(uint8_t fill) {
    return Bytes(crypto::kSeedLen, fill);
}

/// Issuer (registered, with an Assertion key), self-certified holder, and a
/// registered verifier, all sharing one permissionless registry.
struct Stage {
    Registry registry;
    Agent issuer;
    Agent holder;
    Agent verifier;
    Did issuer_did;
    Did holder_did;
    Did verifier_did;

    Stage()
        : registry(GovernancePolicy::public_permissionless(), ConsensusConfig{BftQuorum{4, {}}, 1.0}),
          issuer("issuer", seed_of(1), &registry),
          holder("holder", seed_of(1), &registry),
          verifier("verifier", seed_of(1), &registry) {
        auto i = issuer.create_identity(DidMethod::Registry, /*with_assertion=*/true);
        auto h = holder.create_identity(DidMethod::SelfCertified, /*with_assertion=*/false);
        auto v = verifier.create_identity(DidMethod::Registry, /*with_assertion=*/false);
        REQUIRE(i.ok());
        REQUIRE(h.ok());
        REQUIRE(v.ok());
        issuer_did = i.value().did;
        holder_did = h.value().did;
        verifier_did = v.value().did;
        for (Agent* a : {&issuer, &verifier}) {
            const Did& did = *a->primary_did();
            auto key = a->auth_key_for(did);
            REQUIRE(key.has_value());
            REQUIRE(registry.submit(make_create_tx(*a->own_document(did), key->first,
                                                   key->second)).ok());
        }
        auto round = registry.run_consensus_round();
        REQUIRE(round.ok());
        REQUIRE(round.value().committed);
    }

    VerifiableCredential issue(std::map<std::string, std::string> claims = {
                                   {"customerStatus", "valid"}}) {
        auto vc = issue_vc(issuer, SubjectId{holder_did}, "ValidCustomer", std::move(claims));
        REQUIRE(vc.ok());
        return vc.value();
    }
};

}  // namespace

TEST_CASE("subject identifiers render and parse in both families") {
    Did did{DidMethod::SelfCertified, "abc123"};
    CHECK(subject_to_string(SubjectId{did}) == "did:self:abc123");
    auto parsed = subject_from_string("did:self:abc123");
    REQUIRE(parsed.has_value());
    CHECK(std::get<Did>(*parsed) == did);

    auto key = generate_keypair(KeyPurpose::Authentication, seed_of(2));
    REQUIRE(key.ok());
    LegacyKey legacy{key.value().public_key, "imsi-device"};
    const std::string wire = subject_to_string(SubjectId{legacy});
    CHECK(wire == "legacy:imsi-device:" + multibase_encode(key.value().public_key));
    auto back = subject_from_string(wire);
    REQUIRE(back.has_value());
    CHECK(std::get<LegacyKey>(*back) == legacy);

    CHECK_FALSE(subject_from_string("").has_value());
    CHECK_FALSE(subject_from_string("legacy:no-key-part").has_value());
    CHECK_FALSE(subject_from_string("legacy:label:!!notbase32").has_value());
    CHECK_FALSE(subject_from_string("unknown:scheme:thing").has_value());
}

TEST_CASE("issue and verify a credential against the registry") {
    Stage s;
    auto vc = s.issue();
    CHECK(vc.metadata.issuer == s.issuer_did);
    CHECK(subject_to_string(vc.metadata.subject) == s.holder_did.str());
    CHECK(vc.metadata.credential_type == "ValidCustomer");
    CHECK(vc.proof.sig.scheme_id == "ed25519");

    auto verdict = verify_vc(vc, s.registry);
    CHECK(verdict.valid);
    CHECK(verdict.reason == VcReason::None);
}

TEST_CASE("credential id is the tagged hash of core metadata and claims") {
    Stage s;
    auto vc = s.issue({{"a", "1"}, {"b", "2"}});

    // Recomputed from the stated construction, not via credential_id_for.
    json core{{"issuedAt", vc.metadata.issued_at},
              {"issuer", vc.metadata.issuer.str()},
              {"subject", subject_to_string(vc.metadata.subject)},
              {"type", vc.metadata.credential_type}};
    json claims(vc.claims);
    Digest expected = crypto::sha256(
        tagged_concat("did6g/vc-id/v1", {to_bytes(core.dump()), to_bytes(claims.dump())}));
    CHECK(vc.metadata.credential_id == expected);
    CHECK(credential_id_for(vc.metadata, vc.claims) == expected);

    // Any claim change moves the id.
    auto other = s.issue({{"a", "1"}, {"b", "3"}});
    CHECK(other.metadata.credential_id != vc.metadata.credential_id);
}

TEST_CASE("issuance refuses empty claims and assertion-less issuers") {
    Stage s;
    auto empty = issue_vc(s.issuer, SubjectId{s.holder_did}, "ValidCustomer", {});
    REQUIRE_FALSE(empty.ok());
    CHECK(empty.code() == Errc::EmptyClaims);

    // the verifier identity was created without an Assertion key
    auto no_assert = issue_vc(s.verifier, SubjectId{s.holder_did}, "ValidCustomer",
                              {{"k", "v"}});
    REQUIRE_FALSE(no_assert.ok());
    CHECK(no_assert.code() == Errc::NoAssertionKey);
}

TEST_CASE("credential tampering and issuer problems map to distinct reasons") {
    Stage s;
    auto vc = s.issue();

    SUBCASE("a mutated claim breaks the proof") {
        VerifiableCredential bad = vc;
        bad.claims["customerStatus"] = "platinum";
        auto verdict = verify_vc(bad, s.registry);
        CHECK_FALSE(verdict.valid);
        CHECK(verdict.reason == VcReason::BadProof);
    }

    SUBCASE("a mutated signature byte breaks the proof") {
        VerifiableCredential bad = vc;
        bad.proof.sig.bytes[5] ^= 0x04;
        auto verdict = verify_vc(bad, s.registry);
        CHECK_FALSE(verdict.valid);
        CHECK(verdict.reason == VcReason::BadProof);
    }

    SUBCASE("a doctored credential id breaks the proof") {
        VerifiableCredential bad = vc;
        bad.metadata.credential_id[0] ^= 0x01;
        auto verdict = verify_vc(bad, s.registry);
        CHECK_FALSE(verdict.valid);
        CHECK(verdict.reason == VcReason::BadProof);
    }

    SUBCASE("an unregistered issuer is unresolvable") {
        Agent rogue("rogue", seed_of(3), &s.registry);
        auto r = rogue.create_identity(DidMethod::Registry, true);
        REQUIRE(r.ok());
        auto vc2 = issue_vc(rogue, SubjectId{s.holder_did}, "ValidCustomer", {{"k", "v"}});
        REQUIRE(vc2.ok());
        auto verdict = verify_vc(vc2.value(), s.registry);
        CHECK_FALSE(verdict.valid);
        CHECK(verdict.reason == VcReason::IssuerUnresolvable);
    }
}

TEST_CASE("registry-less verification agrees with the registry on proof validity") {
    Stage s;
    auto vc = s.issue();
    auto issuer_doc = s.registry.resolve(s.issuer_did, std::nullopt);
    REQUIRE(issuer_doc.ok());

    SUBCASE("same verdict for a valid credential") {
        CHECK(verify_vc(vc, issuer_doc.value()).valid);
        CHECK(verify_vc(vc, s.registry).valid);
    }

    SUBCASE("same verdict for a tampered credential") {
        VerifiableCredential bad = vc;
        bad.claims["customerStatus"] = "forged";
        CHECK(verify_vc(bad, issuer_doc.value()).reason == VcReason::BadProof);
        CHECK(verify_vc(bad, s.registry).reason == VcReason::BadProof);
    }

    SUBCASE("a document for the wrong DID cannot vouch for the issuer") {
        auto verifier_doc = s.registry.resolve(s.verifier_did, std::nullopt);
        REQUIRE(verifier_doc.ok());
        auto verdict = verify_vc(vc, verifier_doc.value());
        CHECK_FALSE(verdict.valid);
        CHECK(verdict.reason == VcReason::IssuerUnresolvable);
    }

    SUBCASE("revocation is visible only through the registry") {
        REQUIRE(revoke_vc(s.issuer, vc, s.registry).ok());
        CHECK(verify_vc(vc, s.registry).reason == VcReason::Revoked);
        // The supplied-document path has no status source, by design.
        CHECK(verify_vc(vc, issuer_doc.value()).valid);
    }
}

TEST_CASE("presentation round trip: create, verify, consume") {
    Stage s;
    auto vc = s.issue();
    const Bytes nonce = s.verifier.random_bytes(crypto::kNonceLen);

    auto vp = create_vp(s.holder, vc, nonce, s.verifier_did);
    REQUIRE(vp.ok());
    // self-certified subject: the key rides along and re-hashes to the id
    REQUIRE(vp.value().holder_proof.subject_key.has_value());
    CHECK(self_certified_identifier(*vp.value().holder_proof.subject_key) ==
          s.holder_did.identifier);

    NonceRegistry nonces;
    auto verdict = verify_vp(s.verifier, vp.value(), nonce, nonces);
    CHECK(verdict.accepted);
    CHECK(verdict.reason == VpReason::None);
    CHECK(verdict.vc_reason == VcReason::None);
    CHECK(nonces.size() == 1);

    // One-time use: the same presentation replays as Replayed.
    auto again = verify_vp(s.verifier, vp.value(), nonce, nonces);
    CHECK_FALSE(again.accepted);
    CHECK(again.reason == VpReason::Replayed);
}

TEST_CASE("create_vp requires the subject's private key") {
    Stage s;
    auto vc = s.issue();
    const Bytes nonce = s.verifier.random_bytes(crypto::kNonceLen);
    // the verifier's wallet has no key for the holder's DID
    auto vp = create_vp(s.verifier, vc, nonce, s.verifier_did);
    REQUIRE_FALSE(vp.ok());
    CHECK(vp.code() == Errc::NotHolder);
}

TEST_CASE("legacy-key subjects prove ownership through the embedded key") {
    Stage s;
    auto key = generate_keypair(KeyPurpose::Authentication, seed_of(4));
    REQUIRE(key.ok());
    LegacyKey legacy{key.value().public_key, "legacy-sensor"};
    s.holder.wallet().keys[legacy_key_ref(key.value().public_key)] = key.value();

    auto vc = issue_vc(s.issuer, SubjectId{legacy}, "DeviceAttestation",
                       {{"attested", "true"}});
    REQUIRE(vc.ok());

    const Bytes nonce = s.verifier.random_bytes(crypto::kNonceLen);
    auto vp = create_vp(s.holder, vc.value(), nonce, s.verifier_did);
    REQUIRE(vp.ok());
    REQUIRE(vp.value().holder_proof.subject_key.has_value());
    CHECK(*vp.value().holder_proof.subject_key == key.value().public_key);
    CHECK(vp.value().holder_proof.sig.method_id == "legacy");

    NonceRegistry nonces;
    auto verdict = verify_vp(s.verifier, vp.value(), nonce, nonces);
    CHECK(verdict.accepted);

    // Without the private key in the wallet, the same subject cannot present.
    Agent thief("thief", seed_of(5), &s.registry);
    REQUIRE(thief.create_identity(DidMethod::SelfCertified, false).ok());
    auto stolen = create_vp(thief, vc.value(), nonce, s.verifier_did);
    REQUIRE_FALSE(stolen.ok());
    CHECK(stolen.code() == Errc::NotHolder);
}

TEST_CASE("verify_vp walks its checks in the stated order") {
    Stage s;
    auto vc = s.issue();
    const Bytes nonce = s.verifier.random_bytes(crypto::kNonceLen);
    NonceRegistry nonces;

    SUBCASE("issuer proof first: a tampered credential fails before ownership") {
        VerifiableCredential bad = vc;
        bad.claims["customerStatus"] = "forged";
        // holder signs the doctored credential correctly — ownership would pass
        auto vp = create_vp(s.holder, bad, nonce, s.verifier_did);
        REQUIRE(vp.ok());
        auto verdict = verify_vp(s.verifier, vp.value(), nonce, nonces);
        CHECK_FALSE(verdict.accepted);
        CHECK(verdict.reason == VpReason::BadIssuerProof);
        CHECK(verdict.vc_reason == VcReason::BadProof);
    }

    SUBCASE("an unresolvable issuer surfaces through vc_reason") {
        Agent rogue("rogue", seed_of(6), &s.registry);
        REQUIRE(rogue.create_identity(DidMethod::Registry, true).ok());
        auto vc2 = issue_vc(rogue, SubjectId{s.holder_did}, "ValidCustomer", {{"k", "v"}});
        REQUIRE(vc2.ok());
        auto vp = create_vp(s.holder, vc2.value(), nonce, s.verifier_did);
        REQUIRE(vp.ok());
        auto verdict = verify_vp(s.verifier, vp.value(), nonce, nonces);
        CHECK_FALSE(verdict.accepted);
        CHECK(verdict.reason == VpReason::BadIssuerProof);
        CHECK(verdict.vc_reason == VcReason::IssuerUnresolvable);
    }

    SUBCASE("ownership second: a stranger's signature fails even with everything else wrong") {
        auto stranger = generate_keypair(KeyPurpose::Authentication, seed_of(7));
        REQUIRE(stranger.ok());
        // wrong key, wrong audience AND a consumed nonce — ownership wins
        nonces.consume(nonce, vc.metadata.credential_id);
        auto vp = make_vp(vc, nonce, s.issuer_did, stranger.value(), "key-0",
                          stranger.value().public_key);
        auto verdict = verify_vp(s.verifier, vp, nonce, nonces);
        CHECK_FALSE(verdict.accepted);
        CHECK(verdict.reason == VpReason::BadOwnershipProof);
    }

    SUBCASE("nonce third: a wrong nonce beats audience and replay") {
        Bytes other_nonce = s.verifier.random_bytes(crypto::kNonceLen);
        auto vp = create_vp(s.holder, vc, other_nonce, s.issuer_did);  // also wrong audience
        REQUIRE(vp.ok());
        auto verdict = verify_vp(s.verifier, vp.value(), nonce, nonces);
        CHECK_FALSE(verdict.accepted);
        CHECK(verdict.reason == VpReason::NonceMismatch);
    }

    SUBCASE("audience fourth: a valid but misdirected presentation") {
        auto vp = create_vp(s.holder, vc, nonce, s.issuer_did);
        REQUIRE(vp.ok());
        auto verdict = verify_vp(s.verifier, vp.value(), nonce, nonces);
        CHECK_FALSE(verdict.accepted);
        CHECK(verdict.reason == VpReason::WrongAudience);
    }

    SUBCASE("revocation surfaces as Revoked, not a generic failure") {
        REQUIRE(revoke_vc(s.issuer, vc, s.registry).ok());
        auto vp = create_vp(s.holder, vc, nonce, s.verifier_did);
        REQUIRE(vp.ok());
        auto verdict = verify_vp(s.verifier, vp.value(), nonce, nonces);
        CHECK_FALSE(verdict.accepted);
        CHECK(verdict.reason == VpReason::Revoked);
        CHECK(verdict.vc_reason == VcReason::Revoked);
    }
}

TEST_CASE("distinct nonces allow distinct presentations of the same credential") {
    Stage s;
    auto vc = s.issue();
    NonceRegistry nonces;
    for (int i = 0; i < 3; ++i) {
        Bytes nonce = s.verifier.random_bytes(crypto::kNonceLen);
        auto vp = create_vp(s.holder, vc, nonce, s.verifier_did);
        REQUIRE(vp.ok());
        auto verdict = verify_vp(s.verifier, vp.value(), nonce, nonces);
        CHECK(verdict.accepted);
    }
    CHECK(nonces.size() == 3);
}

TEST_CASE("revocation is issuer-gated and height-snapshotted") {
    Stage s;
    auto vc = s.issue();

    auto not_issuer = revoke_vc(s.verifier, vc, s.registry);
    REQUIRE_FALSE(not_issuer.ok());
    CHECK(not_issuer.code() == Errc::NotIssuer);

    const uint64_t before = s.registry.tip_height();
    REQUIRE(revoke_vc(s.issuer, vc, s.registry).ok());

    CHECK(verify_vc(vc, s.registry).reason == VcReason::Revoked);
    // At the pre-revocation snapshot the credential was still good.
    auto back_then = verify_vc(vc, s.registry, std::nullopt, before);
    CHECK(back_then.valid);
}

TEST_CASE("credential and presentation wire forms pin their key sets") {
    Stage s;
    auto vc = s.issue();
    json jvc = vc_to_json(vc);

    auto keys_of = [](const json& j) {
        std::set<std::string> keys;
        for (const auto& [k, _] : j.items()) keys.insert(k);
        return keys;
    };
    CHECK(keys_of(jvc) == std::set<std::string>{"claims", "metadata", "proof"});
    CHECK(keys_of(jvc["metadata"]) ==
          std::set<std::string>{"id", "issuedAt", "issuer", "subject", "type"});
    CHECK(keys_of(jvc["proof"]) == std::set<std::string>{"created", "method", "sig"});

    auto vc_back = vc_from_json(jvc);
    REQUIRE(vc_back.ok());
    CHECK(vc_to_json(vc_back.value()).dump() == jvc.dump());
    CHECK(verify_vc(vc_back.value(), s.registry).valid);

    const Bytes nonce = s.verifier.random_bytes(crypto::kNonceLen);
    auto vp = create_vp(s.holder, vc, nonce, s.verifier_did);
    REQUIRE(vp.ok());
    json jvp = vp_to_json(vp.value());
    CHECK(keys_of(jvp) == std::set<std::string>{"audience", "holderProof", "nonce", "vc"});
    CHECK(keys_of(jvp["holderProof"]) == std::set<std::string>{"key", "method", "sig"});

    auto vp_back = vp_from_json(jvp);
    REQUIRE(vp_back.ok());
    NonceRegistry nonces;
    CHECK(verify_vp(s.verifier, vp_back.value(), nonce, nonces).accepted);

    CHECK_FALSE(vc_from_json(json::array()).ok());
    CHECK_FALSE(vp_from_json(json{{"vc", 1}}).ok());
}

TEST_CASE("wallet stores and returns credentials in wire form") {
    Stage s;
    auto vc = s.issue();
    wallet_store_vc(s.holder.wallet(), vc);
    auto creds = wallet_credentials(s.holder.wallet());
    REQUIRE(creds.size() == 1);
    CHECK(vc_to_json(creds[0]).dump() == vc_to_json(vc).dump());
    CHECK(verify_vc(creds[0], s.registry).valid);
}
