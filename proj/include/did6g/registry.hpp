#pragma once

#include "did6g/identity.hpp"
#include "did6g/metrics.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace did6g {

// ── Governance ────────────────────────────────────────────────────────────

struct Acl {
    bool all_entities = false;
    std::set<std::string> members;  // Did strings

    bool permits(const std::optional<Did>& who) const;
    static Acl everyone() { return Acl{true, {}}; }
    static Acl only(std::set<std::string> dids) { return Acl{false, std::move(dids)}; }
};

enum class GovernanceKind { PublicPermissionless, PublicPermissioned, PrivatePermissioned };

std::string_view governance_name(GovernanceKind k);
std::optional<GovernanceKind> governance_from_name(std::string_view s);

/// Who can read the ledger, who can write, and who may amend the ACLs.
/// Construct through the factories; they pin the per-kind ACL shapes.
struct GovernancePolicy {
    GovernanceKind kind = GovernanceKind::PublicPermissioned;
    Acl readers;
    Acl writers;
    std::set<std::string> admins;

    static GovernancePolicy public_permissionless();
    static GovernancePolicy public_permissioned(std::set<std::string> writers,
                                                std::set<std::string> admins);
    static GovernancePolicy private_permissioned(std::set<std::string> readers,
                                                 std::set<std::string> writers,
                                                 std::set<std::string> admins);

    bool valid() const;

    /// ACL amendment is an off-ledger admin action, permissioned kinds only.
    Result<void> amend_writers(const Did& admin, Acl writers);
    Result<void> amend_readers(const Did& admin, Acl readers);
};

// ── Transactions and blocks ───────────────────────────────────────────────

enum class TxKind { CreateDoc, UpdateDoc, RevokeCredential };

std::string_view tx_kind_name(TxKind k);

/// Credential status entry; rides the same transaction path as documents so
/// revocations share the ledger's tamper evidence and snapshot semantics.
struct RevocationEntry {
    Digest credential_id{};
    Did issuer;

    bool operator==(const RevocationEntry&) const = default;
};

struct RegistryTransaction {
    TxKind kind = TxKind::CreateDoc;
    std::variant<DidDocument, RevocationEntry> payload;
    Did author;
    Signature author_signature;
    Digest tx_id{};

    const DidDocument* document() const { return std::get_if<DidDocument>(&payload); }
    const RevocationEntry* revocation() const { return std::get_if<RevocationEntry>(&payload); }
};

Bytes tx_signing_bytes(const RegistryTransaction& tx);
Digest tx_digest(const RegistryTransaction& tx);

RegistryTransaction make_create_tx(const DidDocument& doc, const KeyPair& doc_auth_key,
                                   const std::string& method_id = "key-0");
RegistryTransaction make_update_tx(const DidDocument& new_doc, const Did& author,
                                   const KeyPair& author_key, const std::string& method_id);
RegistryTransaction make_revocation_tx(const Digest& credential_id, const Did& issuer,
                                       const KeyPair& issuer_key, const std::string& method_id);

struct LedgerBlock {
    uint64_t height = 0;
    Digest prev_hash{};  // all-zero for genesis
    std::vector<RegistryTransaction> tx_list;
    Digest block_hash{};
};

Digest compute_block_hash(uint64_t height, const Digest& prev_hash,
                          const std::vector<RegistryTransaction>& tx_list);

using Ledger = std::vector<LedgerBlock>;

// ── Consensus model ───────────────────────────────────────────────────────
//
// Consensus is modeled, not executed: message counts and latency follow
// closed-form expressions so assertions can be exact. PoW is deliberately
// not constructible.

struct BftQuorum {
    uint32_t node_count = 4;
    std::set<uint32_t> faulty;  // node indices, must be < node_count
};

struct StakeLottery {
    std::map<std::string, uint64_t> stakes;  // Did string → stake
    uint64_t rng_seed = 0;
};

struct ConsensusConfig {
    std::variant<BftQuorum, StakeLottery> kind;
    double per_message_latency_ms = 1.0;

    bool valid() const;
};

struct ConsensusOutcome {
    bool committed = false;
    uint32_t rounds = 0;
    uint64_t messages_sent = 0;
    double simulated_latency_ms = 0.0;
    std::optional<Did> leader;
};

/// BFT: (n−1) pre-prepares + 2·n·(n−1) prepare/commit messages; liveness
/// holds while |faulty| < ceil(n/3). Lottery: 2·(n−1).
uint64_t model_message_count(const ConsensusConfig& cfg);
uint64_t bft_message_count(uint32_t n);
uint64_t lottery_message_count(uint32_t n);
double model_round_latency_ms(const ConsensusConfig& cfg);

struct MetricsRow {
    uint32_t node_count = 0;
    std::optional<double> tps;  // nullopt = unbounded (zero-latency edge)
    double latency_ms = 0.0;
    uint64_t messages = 0;
};

/// Per-n table for the configured consensus kind; batch = tx_count.
std::vector<MetricsRow> estimate_metrics(const ConsensusConfig& cfg, uint64_t tx_count,
                                         const std::vector<uint32_t>& node_counts);

// ── Chain inspection (pure functions over ledgers) ────────────────────────

struct ChainCheck {
    bool ok = true;
    std::optional<uint64_t> broken_at;
};

/// Recomputes every block hash and prev-hash link.
ChainCheck verify_chain(const Ledger& ledger);

struct ReplicaCheck {
    bool consistent = true;
    std::optional<uint64_t> diverged_at;
    std::vector<size_t> diverged_replicas;
};

/// Byte-exact prefix comparison of block hashes across replicas; replicas
/// disagreeing with the majority at the first divergent height are named.
Result<ReplicaCheck> compare_replicas(const std::vector<Ledger>& replicas);

struct TamperReport {
    bool can_rewrite = false;
    uint64_t attacker_stake = 0;
    uint64_t total_stake = 0;
    std::optional<uint64_t> forked_height;
    std::optional<LedgerBlock> forged_block;
    uint32_t leadership_draws = 0;
};

// ── The registry ──────────────────────────────────────────────────────────

/// Governed, append-only, replicated verifiable data registry. Deterministic
/// single-threaded state machine; share const references across threads only.
class Registry {
public:
    Registry(GovernancePolicy policy, ConsensusConfig consensus, MetricsSink* sink = nullptr);

    /// Validates ACL, signature and version chain; queues on success.
    Result<void> submit(const RegistryTransaction& tx);

    /// Runs one modeled round over the pending queue; commits a block when
    /// the model reaches consensus.
    Result<ConsensusOutcome> run_consensus_round();
    const LedgerBlock* last_block() const;

    Result<DidDocument> resolve(const Did& did, const std::optional<Did>& caller,
                                std::optional<uint64_t> as_of_height = std::nullopt) const;

    /// All committed versions (ascending) up to as_of_height; empty if none.
    std::vector<DidDocument> document_history(const Did& did,
                                              std::optional<uint64_t> as_of_height = std::nullopt) const;

    bool is_revoked(const Digest& credential_id,
                    std::optional<uint64_t> as_of_height = std::nullopt) const;

    Result<TamperReport> inject_stake_takeover(const Did& attacker);

    const Ledger& ledger() const { return blocks_; }
    uint64_t tip_height() const { return blocks_.empty() ? 0 : blocks_.back().height; }
    bool empty() const { return blocks_.empty(); }
    size_t pending_count() const { return pending_.size(); }
    const GovernancePolicy& policy() const { return policy_; }
    GovernancePolicy& policy() { return policy_; }
    const ConsensusConfig& consensus_config() const { return consensus_; }

private:
    struct CommittedVersion {
        uint64_t height;
        DidDocument doc;
    };

    Result<void> check_author_signature(const RegistryTransaction& tx) const;
    const DidDocument* latest_committed(const std::string& did_str) const;
    void index_block(const LedgerBlock& block);
    Did draw_leader(const StakeLottery& lottery);

    GovernancePolicy policy_;
    ConsensusConfig consensus_;
    MetricsSink* sink_ = nullptr;
    Ledger blocks_;
    std::vector<RegistryTransaction> pending_;
    std::set<std::string> pending_creates_;
    std::map<std::string, std::vector<CommittedVersion>> documents_;
    std::map<std::string, uint64_t> revocations_;  // credential_id hex → height
    std::mt19937_64 lottery_rng_;
};

// ── State file + inspect rendering (CLI plumbing) ─────────────────────────

nlohmann::json tx_to_json(const RegistryTransaction& tx);
Result<RegistryTransaction> tx_from_json(const nlohmann::json& j);
nlohmann::json ledger_to_json(const Ledger& ledger);
Result<Ledger> ledger_from_json(const nlohmann::json& j);

/// One JSON line per block: {height, prevHash, blockHash, txIds}.
std::string ledger_inspect_lines(const Ledger& ledger);

}  // namespace did6g
