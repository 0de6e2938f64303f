#include "did6g/agent.hpp"

#include "did6g/crypto.hpp"

#include <utility>

namespace did6g {

using nlohmann::json;

// ── Wallet ────────────────────────────────────────────────────────────────

nlohmann::json wallet_to_json(const Wallet& wallet) {
    json keys = json::object();
    for (const auto& [ref, kp] : wallet.keys) {
        keys[ref] = multibase_encode(kp.public_key);
    }
    return json{{"binding",
                 wallet.binding == WalletBinding::HardwareBound ? "hardwareBound" : "software"},
                {"credentials", wallet.credentials},
                {"publicKeys", std::move(keys)}};
}

// ── Envelopes ─────────────────────────────────────────────────────────────

json envelope_to_json(const Envelope& env) {
    return json{{"body", base64_encode(env.body)},
                {"enc", env.encryption == EncryptionMode::SessionKey ? "sessionKey" : "none"},
                {"from", env.from.str()},
                {"nonce", hex_encode(env.nonce)},
                {"sentAt", env.sent_at},
                {"sig", env.signature.compact()},
                {"to", env.to.str()}};
}

Result<Envelope> envelope_from_json(const json& j) {
    auto bad = [](std::string why) { return make_error(Errc::BadConfig, std::move(why)); };
    if (!j.is_object()) return bad("envelope is not an object");
    Envelope env;
    auto body = base64_decode(j.value("body", std::string{}));
    if (!body) return bad("bad body encoding");
    env.body = std::move(*body);
    const std::string enc = j.value("enc", "");
    if (enc == "none") {
        env.encryption = EncryptionMode::None;
    } else if (enc == "sessionKey") {
        env.encryption = EncryptionMode::SessionKey;
    } else {
        return bad("unknown encryption mode");
    }
    auto from = Did::parse(j.value("from", ""));
    auto to = Did::parse(j.value("to", ""));
    if (!from || !to) return bad("bad endpoint DIDs");
    env.from = *from;
    env.to = *to;
    auto nonce = hex_decode(j.value("nonce", ""));
    if (!nonce || nonce->size() != crypto::kNonceLen) return bad("bad nonce");
    env.nonce = std::move(*nonce);
    if (!j.contains("sentAt") || !j["sentAt"].is_number_unsigned()) return bad("bad sentAt");
    env.sent_at = j["sentAt"].get<uint64_t>();
    auto sig = Signature::from_compact(j.value("sig", ""));
    if (!sig) return bad("bad signature encoding");
    env.signature = std::move(*sig);
    return env;
}

Bytes envelope_signing_bytes(const Envelope& env) {
    json j = envelope_to_json(env);
    j.erase("sig");
    return tagged_concat("did6g/envelope/v1", {to_bytes(j.dump())});
}

// ── Agent ─────────────────────────────────────────────────────────────────

Agent::Agent(std::string name, const Bytes& scenario_seed, const Registry* registry,
             MetricsSink* sink, uint64_t* clock)
    : name_(std::move(name)), registry_(registry), sink_(sink), clock_(clock) {
    root_seed_ = crypto::derive_key("did6g/agent/v1", {scenario_seed, to_bytes(name_)});
    Bytes rng_seed = crypto::derive_key("did6g/agent-rng/v1", {root_seed_});
    uint64_t s = 0;
    for (int i = 0; i < 8; ++i) s |= static_cast<uint64_t>(rng_seed[i]) << (8 * i);
    rng_.seed(s);
}

Result<DidBundle> Agent::create_identity(DidMethod method, bool with_assertion) {
    const std::string slot = std::to_string(key_counter_++);
    Bytes auth_seed = crypto::derive_key("did6g/agent-key/v1", {root_seed_, to_bytes("auth:" + slot)});
    auto auth = generate_keypair(KeyPurpose::Authentication, auth_seed);
    if (!auth.ok()) return auth.error();

    std::vector<KeyPair> extras;
    if (with_assertion) {
        Bytes assert_seed =
            crypto::derive_key("did6g/agent-key/v1", {root_seed_, to_bytes("assert:" + slot)});
        auto assertion = generate_keypair(KeyPurpose::Assertion, assert_seed);
        if (!assertion.ok()) return assertion.error();
        extras.push_back(std::move(assertion.value()));
    }

    auto bundle = create_did_document(method, auth.value(), extras);
    if (!bundle.ok()) return bundle.error();
    const std::string did_str = bundle.value().did.str();
    wallet_.keys[did_str + "#key-0"] = auth.value();
    if (!extras.empty()) wallet_.keys[did_str + "#key-1"] = extras.front();
    own_docs_[did_str] = bundle.value().document;
    if (!primary_did_) primary_did_ = bundle.value().did;
    return bundle;
}

Result<PairwiseDid> Agent::pairwise_identity(std::string_view peer_context) {
    auto pw = derive_pairwise_did(root_seed_, peer_context);
    if (!pw.ok()) return pw;
    const std::string did_str = pw.value().did.str();
    wallet_.keys[did_str + "#key-0"] = pw.value().key;
    own_docs_[did_str] = pw.value().document;
    return pw;
}

void Agent::adopt_document(const DidDocument& doc) {
    own_docs_[doc.id.str()] = doc;
}

const DidDocument* Agent::own_document(const Did& did) const {
    auto it = own_docs_.find(did.str());
    return it == own_docs_.end() ? nullptr : &it->second;
}

const KeyPair* Agent::key_for(const Did& did, const std::string& method_id) const {
    auto it = wallet_.keys.find(did.str() + "#" + method_id);
    return it == wallet_.keys.end() ? nullptr : &it->second;
}

std::optional<std::pair<KeyPair, std::string>> Agent::auth_key_for(const Did& did) const {
    if (const DidDocument* doc = own_document(did)) {
        for (const auto& m : doc->verification_methods) {
            if (m.purpose != KeyPurpose::Authentication) continue;
            const KeyPair* kp = key_for(did, m.method_id);
            if (kp != nullptr && kp->public_key == m.public_key) {
                return std::make_pair(*kp, m.method_id);
            }
        }
    }
    if (const KeyPair* kp = key_for(did, "key-0")) return std::make_pair(*kp, "key-0");
    return std::nullopt;
}

Result<DidDocument> Agent::resolve_peer(const Did& did) {
    if (registry_ == nullptr) {
        return make_error(Errc::NoRegistryAccess, name_ + " has no registry view");
    }
    auto cached = resolve_cache_.find(did.str());
    if (cached != resolve_cache_.end()) return cached->second;
    auto doc = registry_->resolve(did, primary_did_);
    if (!doc.ok()) return doc;
    resolve_cache_[did.str()] = doc.value();
    return doc;
}

Bytes Agent::random_bytes(size_t n) {
    Bytes out(n);
    size_t i = 0;
    while (i < n) {
        uint64_t word = rng_();
        for (int b = 0; b < 8 && i < n; ++b, ++i) {
            out[i] = static_cast<uint8_t>((word >> (8 * b)) & 0xff);
        }
    }
    return out;
}

uint64_t Agent::next_timestamp() {
    return clock_ != nullptr ? (*clock_)++ : own_clock_++;
}

// ── Handshake ─────────────────────────────────────────────────────────────

std::string_view trust_level_name(TrustLevel t) {
    return t == TrustLevel::RegistryAnchored ? "registryAnchored" : "selfAsserted";
}

namespace {

constexpr std::string_view kHsTag = "did6g/hs/v1";
constexpr std::string_view kTranscriptTag = "did6g/hs-transcript/v1";

Bytes digest_bytes(const Digest& d) {
    return Bytes(d.begin(), d.end());
}

/// Strict parse: object of the expected type, nothing else assumed.
std::optional<json> parse_msg(const Bytes& wire, std::string_view expected_type) {
    json j = json::parse(to_string(wire), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    if (!j.contains("type") || !j["type"].is_string() ||
        j["type"].get<std::string>() != expected_type) {
        return std::nullopt;
    }
    return j;
}

std::optional<std::string> str_field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
    return j[key].get<std::string>();
}

std::optional<Bytes> hex_field(const json& j, const char* key) {
    auto s = str_field(j, key);
    return s ? hex_decode(*s) : std::nullopt;
}

std::optional<Bytes> multibase_field(const json& j, const char* key) {
    auto s = str_field(j, key);
    return s ? multibase_decode(*s) : std::nullopt;
}

std::optional<Signature> sig_field(const json& j, const char* key) {
    auto s = str_field(j, key);
    return s ? Signature::from_compact(*s) : std::nullopt;
}

struct Signer {
    KeyPair key;
    std::string method_id;
};

Result<Signer> pick_signer(const Agent& agent, const Did& did,
                           const std::optional<KeyPair>& key_override,
                           const std::optional<std::string>& method_override) {
    if (key_override) {
        return Signer{*key_override, method_override.value_or("key-0")};
    }
    auto found = agent.auth_key_for(did);
    if (!found) {
        return make_error(Errc::AuthFailed,
                          agent.name() + " holds no Authentication key for " + did.str());
    }
    return Signer{found->first, method_override.value_or(found->second)};
}

/// Distinguishes a rotated-away key (verifies against some earlier committed
/// version) from an outright forgery.
Error classify_bad_signature(const Agent& verifier, const Did& peer, PeerDocSource source,
                             const Signature& sig, const Bytes& message) {
    if (source == PeerDocSource::RegistryResolved && verifier.registry() != nullptr) {
        auto history = verifier.registry()->document_history(peer);
        for (size_t i = 0; i + 1 < history.size(); ++i) {
            const VerificationMethod* m = history[i].find_method(sig.method_id);
            if (m != nullptr && m->purpose == KeyPurpose::Authentication &&
                verify(m->public_key, message, sig)) {
                return make_error(Errc::StaleDocument,
                                  "signature matches the rotated-away key of version " +
                                      std::to_string(history[i].version));
            }
        }
    }
    return make_error(Errc::AuthFailed, "handshake signature does not verify");
}

/// The peer document each side uses, per mode. Self-certified version-0
/// documents delivered out-of-band are re-validated against their identifier.
Result<DidDocument> peer_document_for(Agent& self, const Did& peer_did, const ChannelMode& mode,
                                      const std::optional<DidDocument>& supplied) {
    if (mode.source == PeerDocSource::RegistryResolved) {
        auto doc = self.resolve_peer(peer_did);
        if (!doc.ok()) {
            return make_error(Errc::ResolveFailed, self.name() + " cannot resolve " +
                                                       peer_did.str() + ": " + doc.error().detail);
        }
        return doc.value();
    }
    if (!supplied) {
        return make_error(Errc::ResolveFailed, "out-of-band mode without a peer document");
    }
    if (supplied->id != peer_did) {
        return make_error(Errc::ResolveFailed, "out-of-band document names a different DID");
    }
    if (supplied->id.method == DidMethod::SelfCertified && supplied->version == 0) {
        const VerificationMethod* auth = supplied->first_method(KeyPurpose::Authentication);
        if (auth == nullptr ||
            self_certified_identifier(auth->public_key) != supplied->id.identifier) {
            return make_error(Errc::AuthFailed,
                              "self-certified identifier does not match the document key");
        }
    }
    return *supplied;
}

void record_hs(Agent& sender, const char* detail, const Did& from, const Did& to) {
    if (sender.sink() != nullptr) {
        sender.sink()->record("handshake", detail, from.str(), to.str());
    }
}

}  // namespace

Result<ChannelPair> establish_channel(Agent& initiator, Agent& responder, const Did& initiator_did,
                                      const Did& responder_did, const ChannelMode& mode,
                                      const HandshakeOptions& options) {
    // Documents each verifier will check signatures against.
    auto responder_doc = peer_document_for(initiator, responder_did, mode, mode.responder_doc);
    if (!responder_doc.ok()) return responder_doc.error();
    auto initiator_doc = peer_document_for(responder, initiator_did, mode, mode.initiator_doc);
    if (!initiator_doc.ok()) return initiator_doc.error();

    auto i_signer = pick_signer(initiator, initiator_did, options.initiator_sign_key,
                                options.initiator_method_id);
    if (!i_signer.ok()) return i_signer.error();
    auto r_signer = pick_signer(responder, responder_did, options.responder_sign_key,
                                options.responder_method_id);
    if (!r_signer.ok()) return r_signer.error();

    auto tamper = [&options](size_t index, Bytes wire) {
        return options.tamper ? options.tamper(index, std::move(wire)) : wire;
    };
    auto auth_fail = [](std::string why) {
        return make_error(Errc::AuthFailed, std::move(why));
    };

    // m1  I → R: fresh nonce and ephemeral key share.
    const Bytes nonce_i = initiator.random_bytes(crypto::kNonceLen);
    const crypto::AgreementKey eph_i =
        crypto::x25519_from_seed(initiator.random_bytes(crypto::kSeedLen));
    const json m1{{"eph", multibase_encode(eph_i.public_key)},
                  {"from", initiator_did.str()},
                  {"nonce", hex_encode(nonce_i)},
                  {"to", responder_did.str()},
                  {"type", "m1"}};
    const Bytes m1_sent = to_bytes(m1.dump());
    record_hs(initiator, "m1", initiator_did, responder_did);
    const Bytes m1_recv = tamper(0, m1_sent);

    // Responder side of m1.
    auto m1j = parse_msg(m1_recv, "m1");
    if (!m1j) return auth_fail("malformed m1");
    if (str_field(*m1j, "from") != std::optional<std::string>(initiator_did.str()) ||
        str_field(*m1j, "to") != std::optional<std::string>(responder_did.str())) {
        return auth_fail("m1 names unexpected endpoints");
    }
    auto nonce_i_recv = hex_field(*m1j, "nonce");
    if (!nonce_i_recv || nonce_i_recv->size() != crypto::kNonceLen) {
        return auth_fail("m1 nonce invalid");
    }
    auto eph_i_recv = multibase_field(*m1j, "eph");
    if (!eph_i_recv || eph_i_recv->size() != crypto::kPublicKeyLen) {
        return auth_fail("m1 key share invalid");
    }

    // m2  R → I: own nonce + key share, signature over the transcript so far
    // (covers the initiator's nonce).
    const Bytes nonce_r = responder.random_bytes(crypto::kNonceLen);
    const crypto::AgreementKey eph_r =
        crypto::x25519_from_seed(responder.random_bytes(crypto::kSeedLen));
    json m2_core{{"eph", multibase_encode(eph_r.public_key)},
                 {"from", responder_did.str()},
                 {"nonce", hex_encode(nonce_r)},
                 {"to", initiator_did.str()},
                 {"type", "m2"}};
    const Bytes t2_at_r = tagged_concat(kHsTag, {m1_recv, to_bytes(m2_core.dump())});
    auto sig_r = sign(r_signer.value().key, t2_at_r, r_signer.value().method_id);
    if (!sig_r.ok()) return sig_r.error();
    json m2 = m2_core;
    m2["sig"] = sig_r.value().compact();
    const Bytes m2_sent = to_bytes(m2.dump());
    record_hs(responder, "m2", responder_did, initiator_did);
    const Bytes m2_recv = tamper(1, m2_sent);

    // Initiator side of m2: verify the responder's signature against the
    // responder's document.
    auto m2j = parse_msg(m2_recv, "m2");
    if (!m2j) return auth_fail("malformed m2");
    if (str_field(*m2j, "from") != std::optional<std::string>(responder_did.str()) ||
        str_field(*m2j, "to") != std::optional<std::string>(initiator_did.str())) {
        return auth_fail("m2 names unexpected endpoints");
    }
    auto nonce_r_recv = hex_field(*m2j, "nonce");
    if (!nonce_r_recv || nonce_r_recv->size() != crypto::kNonceLen) {
        return auth_fail("m2 nonce invalid");
    }
    auto eph_r_recv = multibase_field(*m2j, "eph");
    if (!eph_r_recv || eph_r_recv->size() != crypto::kPublicKeyLen) {
        return auth_fail("m2 key share invalid");
    }
    auto sig_r_recv = sig_field(*m2j, "sig");
    if (!sig_r_recv) return auth_fail("m2 signature unparseable");
    json m2_core_recv = *m2j;
    m2_core_recv.erase("sig");
    const Bytes t2_at_i = tagged_concat(kHsTag, {m1_sent, to_bytes(m2_core_recv.dump())});
    {
        const VerificationMethod* m = responder_doc.value().find_method(sig_r_recv->method_id);
        if (m == nullptr || m->purpose != KeyPurpose::Authentication ||
            !verify(m->public_key, t2_at_i, *sig_r_recv)) {
            return classify_bad_signature(initiator, responder_did, mode.source, *sig_r_recv,
                                          t2_at_i);
        }
    }
    const Bytes shared_i = crypto::x25519_shared(eph_i.private_key, *eph_r_recv);
    if (shared_i.empty()) return auth_fail("degenerate key share in m2");

    // m3  I → R: signature over the full transcript (covers the responder's
    // nonce and the responder's signature).
    json m3_core{{"from", initiator_did.str()}, {"to", responder_did.str()}, {"type", "m3"}};
    const Bytes t3_at_i = tagged_concat(kHsTag, {m1_sent, m2_recv, to_bytes(m3_core.dump())});
    auto sig_i = sign(i_signer.value().key, t3_at_i, i_signer.value().method_id);
    if (!sig_i.ok()) return sig_i.error();
    json m3 = m3_core;
    m3["sig"] = sig_i.value().compact();
    const Bytes m3_sent = to_bytes(m3.dump());
    record_hs(initiator, "m3", initiator_did, responder_did);
    const Bytes m3_recv = tamper(2, m3_sent);

    // Responder side of m3.
    auto m3j = parse_msg(m3_recv, "m3");
    if (!m3j) return auth_fail("malformed m3");
    if (str_field(*m3j, "from") != std::optional<std::string>(initiator_did.str()) ||
        str_field(*m3j, "to") != std::optional<std::string>(responder_did.str())) {
        return auth_fail("m3 names unexpected endpoints");
    }
    auto sig_i_recv = sig_field(*m3j, "sig");
    if (!sig_i_recv) return auth_fail("m3 signature unparseable");
    json m3_core_recv = *m3j;
    m3_core_recv.erase("sig");
    const Bytes t3_at_r = tagged_concat(kHsTag, {m1_recv, m2_sent, to_bytes(m3_core_recv.dump())});
    {
        const VerificationMethod* m = initiator_doc.value().find_method(sig_i_recv->method_id);
        if (m == nullptr || m->purpose != KeyPurpose::Authentication ||
            !verify(m->public_key, t3_at_r, *sig_i_recv)) {
            return classify_bad_signature(responder, initiator_did, mode.source, *sig_i_recv,
                                          t3_at_r);
        }
    }
    const Bytes shared_r = crypto::x25519_shared(eph_r.private_key, *eph_i_recv);
    if (shared_r.empty()) return auth_fail("degenerate key share in m1");

    // Both sides derive the session key from their own view of the
    // transcript; only matching views confirm.
    const Digest transcript_r =
        crypto::sha256(tagged_concat(kTranscriptTag, {m1_recv, m2_sent, m3_recv}));
    const Bytes session_r =
        crypto::derive_key("did6g/session/v1", {shared_r, digest_bytes(transcript_r)});

    // m4  R → I: key confirmation.
    const Bytes confirm_r =
        crypto::derive_key("did6g/hs-confirm/v1", {session_r, digest_bytes(transcript_r)});
    const json m4{{"confirm", hex_encode(confirm_r)},
                  {"from", responder_did.str()},
                  {"to", initiator_did.str()},
                  {"type", "m4"}};
    record_hs(responder, "m4", responder_did, initiator_did);
    const Bytes m4_recv = tamper(3, to_bytes(m4.dump()));

    // Initiator side of m4.
    auto m4j = parse_msg(m4_recv, "m4");
    if (!m4j) return auth_fail("malformed m4");
    if (str_field(*m4j, "from") != std::optional<std::string>(responder_did.str()) ||
        str_field(*m4j, "to") != std::optional<std::string>(initiator_did.str())) {
        return auth_fail("m4 names unexpected endpoints");
    }
    const Digest transcript_i =
        crypto::sha256(tagged_concat(kTranscriptTag, {m1_sent, m2_recv, m3_sent}));
    const Bytes session_i =
        crypto::derive_key("did6g/session/v1", {shared_i, digest_bytes(transcript_i)});
    const Bytes confirm_i =
        crypto::derive_key("did6g/hs-confirm/v1", {session_i, digest_bytes(transcript_i)});
    if (str_field(*m4j, "confirm") != std::optional<std::string>(hex_encode(confirm_i))) {
        return auth_fail("key confirmation mismatch");
    }

    const TrustLevel trust = mode.source == PeerDocSource::OutOfBand ? TrustLevel::SelfAsserted
                                                                     : TrustLevel::RegistryAnchored;
    const EncryptionMode enc =
        options.encrypt ? EncryptionMode::SessionKey : EncryptionMode::None;

    ChannelPair pair;
    pair.initiator = SecureChannel{transcript_i,
                                   initiator_did,
                                   responder_did,
                                   mode.source,
                                   trust,
                                   session_i,
                                   true,
                                   enc,
                                   responder_doc.value(),
                                   i_signer.value().method_id};
    pair.responder = SecureChannel{transcript_r,
                                   responder_did,
                                   initiator_did,
                                   mode.source,
                                   trust,
                                   session_r,
                                   true,
                                   enc,
                                   initiator_doc.value(),
                                   r_signer.value().method_id};
    return pair;
}

// ── Channel traffic ───────────────────────────────────────────────────────

namespace {

Bytes envelope_nonce_context(const SecureChannel& channel, const Bytes& nonce) {
    return tagged_concat("did6g/env-nonce/v1",
                         {Bytes(channel.channel_id.begin(), channel.channel_id.end()), nonce});
}

}  // namespace

Result<Envelope> send(SecureChannel& channel, Agent& sender, const Bytes& body) {
    if (!channel.established) {
        return make_error(Errc::UnknownChannel, "channel not established");
    }
    const KeyPair* key = sender.key_for(channel.local, channel.local_method_id);
    if (key == nullptr) {
        return make_error(Errc::UnknownChannel,
                          sender.name() + " holds no key for this channel endpoint");
    }
    Envelope env;
    env.from = channel.local;
    env.to = channel.peer;
    env.nonce = sender.random_bytes(crypto::kNonceLen);
    env.sent_at = sender.next_timestamp();
    env.encryption = channel.encryption;
    if (channel.encryption == EncryptionMode::SessionKey) {
        env.body = crypto::secretbox_seal(channel.session_key,
                                          envelope_nonce_context(channel, env.nonce), body);
    } else {
        env.body = body;
    }
    auto sig = sign(*key, envelope_signing_bytes(env), channel.local_method_id);
    if (!sig.ok()) return sig.error();
    env.signature = std::move(sig.value());
    if (sender.sink() != nullptr) {
        sender.sink()->envelopes_sent++;
        sender.sink()->record("send", "", env.from.str(), env.to.str());
    }
    return env;
}

Result<Bytes> receive(SecureChannel& channel, Agent& receiver, const Envelope& env) {
    if (!channel.established) {
        return make_error(Errc::UnknownChannel, "channel not established");
    }
    if (env.from != channel.peer || env.to != channel.local) {
        return make_error(Errc::UnknownChannel, "envelope belongs to a different channel");
    }
    const VerificationMethod* method = channel.peer_document.find_method(env.signature.method_id);
    if (method == nullptr || method->purpose != KeyPurpose::Authentication ||
        !verify(method->public_key, envelope_signing_bytes(env), env.signature)) {
        return make_error(Errc::BadSignature, "envelope signature does not verify");
    }
    Bytes body = env.body;
    if (env.encryption == EncryptionMode::SessionKey) {
        auto opened = crypto::secretbox_open(channel.session_key,
                                             envelope_nonce_context(channel, env.nonce), env.body);
        if (!opened) return make_error(Errc::DecryptFailed, "session-key decryption failed");
        body = std::move(*opened);
    }
    if (receiver.sink() != nullptr) {
        receiver.sink()->record("receive", "", env.from.str(), env.to.str());
    }
    return body;
}

}  // namespace did6g
