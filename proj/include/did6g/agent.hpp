#pragma once

#include "did6g/registry.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace did6g {

// ── Wallet ────────────────────────────────────────────────────────────────

enum class WalletBinding { Software, HardwareBound };

/// Key and credential store behind an agent. Keys are addressed as
/// "<did>#<method_id>". Credentials are held in their wire form; the typed
/// accessors live with the credential layer.
struct Wallet {
    std::map<std::string, KeyPair> keys;
    std::vector<nlohmann::json> credentials;
    WalletBinding binding = WalletBinding::Software;
};

/// Public view only: bindings, credential list and *public* keys. No code
/// path serializes private key material.
nlohmann::json wallet_to_json(const Wallet& wallet);

// ── Envelopes ─────────────────────────────────────────────────────────────

enum class EncryptionMode { None, SessionKey };

/// One-way signed message. When encryption is SessionKey, `body` is the
/// ciphertext and the signature covers the ciphertext.
struct Envelope {
    Did from;
    Did to;
    Bytes nonce;  // 16 bytes
    uint64_t sent_at = 0;
    Bytes body;
    Signature signature;
    EncryptionMode encryption = EncryptionMode::None;
};

/// Wire form: {"body"(base64),"enc","from","nonce"(hex),"sentAt","sig","to"}.
nlohmann::json envelope_to_json(const Envelope& env);
Result<Envelope> envelope_from_json(const nlohmann::json& j);

/// Canonical bytes the signature covers: the wire object without "sig".
Bytes envelope_signing_bytes(const Envelope& env);

// ── Agents ────────────────────────────────────────────────────────────────

/// A network entity's process: holds the wallet, derives all of its
/// randomness from one per-agent seed, and talks to the registry through an
/// optional read handle (absent for DL-less devices).
class Agent {
public:
    Agent(std::string name, const Bytes& scenario_seed, const Registry* registry = nullptr,
          MetricsSink* sink = nullptr, uint64_t* clock = nullptr);

    const std::string& name() const { return name_; }
    const Registry* registry() const { return registry_; }
    /// Registries are usually built after the agents whose DIDs govern them.
    void attach_registry(const Registry* registry) { registry_ = registry; }
    MetricsSink* sink() const { return sink_; }
    Wallet& wallet() { return wallet_; }
    const Wallet& wallet() const { return wallet_; }
    const std::optional<Did>& primary_did() const { return primary_did_; }

    /// Fresh identity from this agent's seed stream: an Authentication key
    /// ("key-0") plus, if requested, an Assertion key ("key-1"). The document
    /// is tracked as an own document and the keys land in the wallet.
    Result<DidBundle> create_identity(DidMethod method, bool with_assertion = true);

    /// Pairwise identity for one peer: same context, same DID; different
    /// contexts, unlinkable DIDs.
    Result<PairwiseDid> pairwise_identity(std::string_view peer_context);

    /// Replaces the tracked own document (after key rotation) and records
    /// any new keys.
    void adopt_document(const DidDocument& doc);

    const DidDocument* own_document(const Did& did) const;
    const KeyPair* key_for(const Did& did, const std::string& method_id) const;

    /// The Authentication method of `did` whose private key this wallet
    /// holds; nullopt when the agent does not control `did`.
    std::optional<std::pair<KeyPair, std::string>> auth_key_for(const Did& did) const;

    /// Registry resolution with a per-step cache.
    Result<DidDocument> resolve_peer(const Did& did);
    void begin_step() { resolve_cache_.clear(); }

    Bytes random_bytes(size_t n);
    uint64_t next_timestamp();
    const Bytes& root_seed() const { return root_seed_; }

private:
    std::string name_;
    Bytes root_seed_;
    const Registry* registry_ = nullptr;
    MetricsSink* sink_ = nullptr;
    uint64_t* clock_ = nullptr;
    uint64_t own_clock_ = 0;
    std::mt19937_64 rng_;
    uint64_t key_counter_ = 0;
    Wallet wallet_;
    std::optional<Did> primary_did_;
    std::map<std::string, DidDocument> own_docs_;
    std::map<std::string, DidDocument> resolve_cache_;
};

// ── Secure channels ───────────────────────────────────────────────────────

enum class PeerDocSource { RegistryResolved, OutOfBand };
enum class TrustLevel { RegistryAnchored, SelfAsserted };

std::string_view trust_level_name(TrustLevel t);

/// One endpoint of an established channel. The peer document is pinned at
/// handshake time; envelope signatures verify against it.
struct SecureChannel {
    Digest channel_id{};
    Did local;
    Did peer;
    PeerDocSource peer_doc_source = PeerDocSource::RegistryResolved;
    TrustLevel trust_level = TrustLevel::RegistryAnchored;
    Bytes session_key;
    bool established = false;
    EncryptionMode encryption = EncryptionMode::None;
    DidDocument peer_document;
    std::string local_method_id;
};

/// How each side obtains the other's document. RegistryResolved consults the
/// registry on both ends; OutOfBand carries both documents directly (the
/// self-certified flow) and yields a SelfAsserted channel.
struct ChannelMode {
    PeerDocSource source = PeerDocSource::RegistryResolved;
    std::optional<DidDocument> initiator_doc;  // handed to the responder
    std::optional<DidDocument> responder_doc;  // handed to the initiator

    static ChannelMode registry_resolved() { return {}; }
    static ChannelMode out_of_band(DidDocument initiator_doc, DidDocument responder_doc) {
        return {PeerDocSource::OutOfBand, std::move(initiator_doc), std::move(responder_doc)};
    }
};

/// Test and adversary hooks. `tamper` sees each serialized handshake message
/// (index 0..3) in transit and may rewrite it. The sign-key overrides let a
/// party sign with a key of the test's choosing (forgery, stale rotation).
struct HandshakeOptions {
    bool encrypt = true;
    std::function<Bytes(size_t, Bytes)> tamper;
    std::optional<KeyPair> initiator_sign_key;
    std::optional<std::string> initiator_method_id;
    std::optional<KeyPair> responder_sign_key;
    std::optional<std::string> responder_method_id;
};

struct ChannelPair {
    SecureChannel initiator;
    SecureChannel responder;
};

/// Four-message mutual authentication:
///   m1 I→R: nonce_i, ephemeral key share
///   m2 R→I: nonce_r, ephemeral key share, signature over (m1 ∥ m2)
///   m3 I→R: signature over (m1 ∥ m2 ∥ m3)
///   m4 R→I: key-confirmation tag over the session key and transcript
/// Each side verifies the peer's signature against the peer's document, so
/// the channel establishes only when both hold their claimed private keys.
/// The session key is derived from the ephemeral agreement bound into the
/// signed transcript.
Result<ChannelPair> establish_channel(Agent& initiator, Agent& responder, const Did& initiator_did,
                                      const Did& responder_did, const ChannelMode& mode,
                                      const HandshakeOptions& options = {});

/// Simplex message ops over an established channel.
Result<Envelope> send(SecureChannel& channel, Agent& sender, const Bytes& body);
Result<Bytes> receive(SecureChannel& channel, Agent& receiver, const Envelope& env);

}  // namespace did6g
