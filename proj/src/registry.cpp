#include "did6g/registry.hpp"

#include "did6g/crypto.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace did6g {

using nlohmann::json;

// ── Governance ────────────────────────────────────────────────────────────

bool Acl::permits(const std::optional<Did>& who) const {
    if (all_entities) return true;
    if (!who) return false;
    return members.count(who->str()) > 0;
}

std::string_view governance_name(GovernanceKind k) {
    switch (k) {
        case GovernanceKind::PublicPermissionless: return "PublicPermissionless";
        case GovernanceKind::PublicPermissioned: return "PublicPermissioned";
        case GovernanceKind::PrivatePermissioned: return "PrivatePermissioned";
    }
    return "unknown";
}

std::optional<GovernanceKind> governance_from_name(std::string_view s) {
    if (s == "PublicPermissionless") return GovernanceKind::PublicPermissionless;
    if (s == "PublicPermissioned") return GovernanceKind::PublicPermissioned;
    if (s == "PrivatePermissioned") return GovernanceKind::PrivatePermissioned;
    return std::nullopt;
}

GovernancePolicy GovernancePolicy::public_permissionless() {
    GovernancePolicy p;
    p.kind = GovernanceKind::PublicPermissionless;
    p.readers = Acl::everyone();
    p.writers = Acl::everyone();
    return p;
}

GovernancePolicy GovernancePolicy::public_permissioned(std::set<std::string> writers,
                                                       std::set<std::string> admins) {
    GovernancePolicy p;
    p.kind = GovernanceKind::PublicPermissioned;
    p.readers = Acl::everyone();
    p.writers = Acl::only(std::move(writers));
    p.admins = std::move(admins);
    return p;
}

GovernancePolicy GovernancePolicy::private_permissioned(std::set<std::string> readers,
                                                        std::set<std::string> writers,
                                                        std::set<std::string> admins) {
    GovernancePolicy p;
    p.kind = GovernanceKind::PrivatePermissioned;
    p.readers = Acl::only(std::move(readers));
    p.writers = Acl::only(std::move(writers));
    p.admins = std::move(admins);
    return p;
}

bool GovernancePolicy::valid() const {
    switch (kind) {
        case GovernanceKind::PublicPermissionless:
            return readers.all_entities && writers.all_entities;
        case GovernanceKind::PublicPermissioned:
            return readers.all_entities && !writers.all_entities;
        case GovernanceKind::PrivatePermissioned:
            return !readers.all_entities && !writers.all_entities;
    }
    return false;
}

Result<void> GovernancePolicy::amend_writers(const Did& admin, Acl new_writers) {
    if (kind == GovernanceKind::PublicPermissionless) {
        return make_error(Errc::WriteDenied, "permissionless registries have no writer ACL");
    }
    if (admins.count(admin.str()) == 0) {
        return make_error(Errc::WriteDenied, "only admins amend ACLs");
    }
    if (new_writers.all_entities) {
        return make_error(Errc::WriteDenied, "permissioned registries need an explicit writer set");
    }
    writers = std::move(new_writers);
    return {};
}

Result<void> GovernancePolicy::amend_readers(const Did& admin, Acl new_readers) {
    if (kind != GovernanceKind::PrivatePermissioned) {
        return make_error(Errc::WriteDenied, "reader ACL is fixed for public registries");
    }
    if (admins.count(admin.str()) == 0) {
        return make_error(Errc::WriteDenied, "only admins amend ACLs");
    }
    if (new_readers.all_entities) {
        return make_error(Errc::WriteDenied, "private registries need an explicit reader set");
    }
    readers = std::move(new_readers);
    return {};
}

// ── Transactions ──────────────────────────────────────────────────────────

std::string_view tx_kind_name(TxKind k) {
    switch (k) {
        case TxKind::CreateDoc: return "createDoc";
        case TxKind::UpdateDoc: return "updateDoc";
        case TxKind::RevokeCredential: return "revokeCredential";
    }
    return "unknown";
}

namespace {

json revocation_to_json(const RevocationEntry& r) {
    return json{{"credentialId", hex_encode(r.credential_id)}, {"issuer", r.issuer.str()}};
}

Bytes payload_canonical_bytes(const RegistryTransaction& tx) {
    if (const auto* doc = tx.document()) return doc_canonical_bytes(*doc);
    return canonical_json_bytes(revocation_to_json(*tx.revocation()));
}

}  // namespace

Bytes tx_signing_bytes(const RegistryTransaction& tx) {
    Bytes kind_byte{static_cast<uint8_t>(tx.kind)};
    return tagged_concat("did6g/tx/v1",
                         {kind_byte, payload_canonical_bytes(tx), to_bytes(tx.author.str())});
}

Digest tx_digest(const RegistryTransaction& tx) {
    return crypto::sha256(
        tagged_concat("did6g/txid/v1", {tx_signing_bytes(tx), tx.author_signature.bytes}));
}

namespace {

RegistryTransaction finish_tx(RegistryTransaction tx, const KeyPair& key,
                              const std::string& method_id) {
    auto sig = sign(key, tx_signing_bytes(tx), method_id);
    tx.author_signature = sig.ok() ? sig.value() : Signature{"ed25519", {}, method_id};
    tx.tx_id = tx_digest(tx);
    return tx;
}

}  // namespace

RegistryTransaction make_create_tx(const DidDocument& doc, const KeyPair& doc_auth_key,
                                   const std::string& method_id) {
    RegistryTransaction tx;
    tx.kind = TxKind::CreateDoc;
    tx.payload = doc;
    tx.author = doc.id;
    return finish_tx(std::move(tx), doc_auth_key, method_id);
}

RegistryTransaction make_update_tx(const DidDocument& new_doc, const Did& author,
                                   const KeyPair& author_key, const std::string& method_id) {
    RegistryTransaction tx;
    tx.kind = TxKind::UpdateDoc;
    tx.payload = new_doc;
    tx.author = author;
    return finish_tx(std::move(tx), author_key, method_id);
}

RegistryTransaction make_revocation_tx(const Digest& credential_id, const Did& issuer,
                                       const KeyPair& issuer_key, const std::string& method_id) {
    RegistryTransaction tx;
    tx.kind = TxKind::RevokeCredential;
    tx.payload = RevocationEntry{credential_id, issuer};
    tx.author = issuer;
    return finish_tx(std::move(tx), issuer_key, method_id);
}

Digest compute_block_hash(uint64_t height, const Digest& prev_hash,
                          const std::vector<RegistryTransaction>& tx_list) {
    Bytes height_bytes(8);
    for (int i = 0; i < 8; ++i) height_bytes[i] = static_cast<uint8_t>((height >> (8 * i)) & 0xff);
    Bytes prev(prev_hash.begin(), prev_hash.end());
    Bytes txs;
    for (const auto& tx : tx_list) {
        // The compact rendering covers scheme and method ids too, so every
        // byte the ledger persists for a transaction feeds the block hash.
        Bytes one = tagged_concat("did6g/txentry/v1",
                                  {tx_signing_bytes(tx), to_bytes(tx.author_signature.compact()),
                                   Bytes(tx.tx_id.begin(), tx.tx_id.end())});
        txs.insert(txs.end(), one.begin(), one.end());
    }
    return crypto::sha256(tagged_concat("did6g/block/v1", {height_bytes, prev, txs}));
}

// ── Consensus model ───────────────────────────────────────────────────────

bool ConsensusConfig::valid() const {
    if (const auto* bft = std::get_if<BftQuorum>(&kind)) {
        if (bft->node_count == 0) return false;
        for (uint32_t f : bft->faulty) {
            if (f >= bft->node_count) return false;
        }
        return true;
    }
    const auto& lottery = std::get<StakeLottery>(kind);
    uint64_t total = 0;
    for (const auto& [_, stake] : lottery.stakes) total += stake;
    return total > 0;
}

uint64_t bft_message_count(uint32_t n) {
    uint64_t m = n;
    return (m - 1) + 2 * m * (m - 1);
}

uint64_t lottery_message_count(uint32_t n) {
    return 2 * (static_cast<uint64_t>(n) - 1);
}

uint64_t model_message_count(const ConsensusConfig& cfg) {
    if (const auto* bft = std::get_if<BftQuorum>(&cfg.kind)) {
        return bft_message_count(bft->node_count);
    }
    return lottery_message_count(
        static_cast<uint32_t>(std::get<StakeLottery>(cfg.kind).stakes.size()));
}

double model_round_latency_ms(const ConsensusConfig& cfg) {
    // Three one-way phases for BFT, two for the lottery.
    const double phases = std::holds_alternative<BftQuorum>(cfg.kind) ? 3.0 : 2.0;
    return phases * cfg.per_message_latency_ms;
}

std::vector<MetricsRow> estimate_metrics(const ConsensusConfig& cfg, uint64_t tx_count,
                                         const std::vector<uint32_t>& node_counts) {
    std::vector<MetricsRow> table;
    const bool is_bft = std::holds_alternative<BftQuorum>(cfg.kind);
    for (uint32_t n : node_counts) {
        MetricsRow row;
        row.node_count = n;
        row.messages = is_bft ? bft_message_count(n) : lottery_message_count(n);
        row.latency_ms = (is_bft ? 3.0 : 2.0) * cfg.per_message_latency_ms;
        if (row.latency_ms > 0.0) {
            row.tps = static_cast<double>(tx_count) * 1000.0 / row.latency_ms;
        }
        table.push_back(row);
    }
    return table;
}

// ── Chain inspection ──────────────────────────────────────────────────────

ChainCheck verify_chain(const Ledger& ledger) {
    Digest expected_prev{};  // genesis links to all-zero
    for (size_t i = 0; i < ledger.size(); ++i) {
        const LedgerBlock& b = ledger[i];
        const bool linked = b.height == i && b.prev_hash == expected_prev;
        const bool hash_ok = compute_block_hash(b.height, b.prev_hash, b.tx_list) == b.block_hash;
        if (!linked || !hash_ok) {
            return ChainCheck{false, static_cast<uint64_t>(i)};
        }
        expected_prev = b.block_hash;
    }
    return ChainCheck{};
}

Result<ReplicaCheck> compare_replicas(const std::vector<Ledger>& replicas) {
    if (replicas.size() < 2) {
        return make_error(Errc::TooFewReplicas, "replica comparison needs at least 2 ledgers");
    }
    size_t max_len = 0;
    for (const auto& r : replicas) max_len = std::max(max_len, r.size());

    for (size_t h = 0; h < max_len; ++h) {
        // hash hex per replica, "" for a missing block
        std::vector<std::string> values(replicas.size());
        for (size_t i = 0; i < replicas.size(); ++i) {
            values[i] = h < replicas[i].size() ? hex_encode(replicas[i][h].block_hash) : "";
        }
        std::map<std::string, size_t> counts;
        for (const auto& v : values) counts[v]++;
        std::string majority = values[0];
        for (const auto& [v, c] : counts) {
            if (c > counts[majority]) majority = v;
        }
        ReplicaCheck check;
        for (size_t i = 0; i < replicas.size(); ++i) {
            if (values[i] != majority) check.diverged_replicas.push_back(i);
        }
        if (!check.diverged_replicas.empty()) {
            check.consistent = false;
            check.diverged_at = static_cast<uint64_t>(h);
            return check;
        }
    }
    return ReplicaCheck{};
}

// ── Registry ──────────────────────────────────────────────────────────────

Registry::Registry(GovernancePolicy policy, ConsensusConfig consensus, MetricsSink* sink)
    : policy_(std::move(policy)), consensus_(std::move(consensus)), sink_(sink) {
    uint64_t seed = 0;
    if (const auto* lottery = std::get_if<StakeLottery>(&consensus_.kind)) {
        seed = lottery->rng_seed;
    }
    lottery_rng_.seed(seed);
}

const DidDocument* Registry::latest_committed(const std::string& did_str) const {
    auto it = documents_.find(did_str);
    if (it == documents_.end() || it->second.empty()) return nullptr;
    return &it->second.back().doc;
}

Result<void> Registry::check_author_signature(const RegistryTransaction& tx) const {
    // The key the author must prove: its current registered Authentication
    // key, or the document's own version-0 key for a first CreateDoc.
    const DidDocument* author_doc = latest_committed(tx.author.str());
    if (author_doc == nullptr && tx.kind == TxKind::CreateDoc) {
        author_doc = tx.document();
    }
    if (author_doc == nullptr) {
        return make_error(Errc::BadSignature, "author has no registered verification key");
    }
    const VerificationMethod* method = author_doc->find_method(tx.author_signature.method_id);
    if (method == nullptr || method->purpose == KeyPurpose::KeyAgreement) {
        return make_error(Errc::BadSignature, "signature names no usable verification method");
    }
    if (!verify(method->public_key, tx_signing_bytes(tx), tx.author_signature)) {
        return make_error(Errc::BadSignature, "author signature does not verify");
    }
    return {};
}

Result<void> Registry::submit(const RegistryTransaction& tx) {
    if (!policy_.writers.permits(tx.author)) {
        return make_error(Errc::WriteDenied, tx.author.str() + " is not a registered writer");
    }
    if (auto sig = check_author_signature(tx); !sig.ok()) return sig.error();

    switch (tx.kind) {
        case TxKind::CreateDoc: {
            const DidDocument* doc = tx.document();
            if (doc == nullptr) return make_error(Errc::VersionGap, "create without a document");
            if (tx.author != doc->id) {
                return make_error(Errc::NotController, "documents are created by their subject");
            }
            if (doc->version != 0 || doc->prev_version_hash.has_value()) {
                return make_error(Errc::VersionGap, "new documents start at version 0");
            }
            if (!doc->first_method(KeyPurpose::Authentication)) {
                return make_error(Errc::BadSignature, "document lacks an Authentication method");
            }
            if (latest_committed(doc->id.str()) != nullptr ||
                pending_creates_.count(doc->id.str()) > 0) {
                return make_error(Errc::VersionGap, "identifier already registered");
            }
            pending_creates_.insert(doc->id.str());
            break;
        }
        case TxKind::UpdateDoc: {
            const DidDocument* doc = tx.document();
            if (doc == nullptr) return make_error(Errc::VersionGap, "update without a document");
            const DidDocument* current = latest_committed(doc->id.str());
            if (current == nullptr) {
                return make_error(Errc::VersionGap, "no committed version to update");
            }
            if (tx.author != current->controller) {
                return make_error(Errc::NotController, "only the controller updates a document");
            }
            if (doc->version != current->version + 1) {
                return make_error(Errc::VersionGap, "version must increase by exactly 1");
            }
            if (!doc->prev_version_hash || *doc->prev_version_hash != doc_digest(*current)) {
                return make_error(Errc::VersionGap, "prev-hash does not chain to current version");
            }
            if (!doc->first_method(KeyPurpose::Authentication)) {
                return make_error(Errc::BadSignature, "document lacks an Authentication method");
            }
            break;
        }
        case TxKind::RevokeCredential: {
            const RevocationEntry* entry = tx.revocation();
            if (entry == nullptr) return make_error(Errc::VersionGap, "revocation without entry");
            if (tx.author != entry->issuer) {
                return make_error(Errc::NotController, "revocations are authored by the issuer");
            }
            break;
        }
    }
    pending_.push_back(tx);
    if (sink_ != nullptr) sink_->registry_writes++;
    return {};
}

Did Registry::draw_leader(const StakeLottery& lottery) {
    uint64_t total = 0;
    for (const auto& [_, stake] : lottery.stakes) total += stake;
    uint64_t ticket = lottery_rng_() % total;
    for (const auto& [did_str, stake] : lottery.stakes) {
        if (ticket < stake) {
            auto did = Did::parse(did_str);
            return did ? *did : Did{DidMethod::Registry, did_str};
        }
        ticket -= stake;
    }
    return Did{};
}

Result<ConsensusOutcome> Registry::run_consensus_round() {
    if (pending_.empty()) {
        return make_error(Errc::EmptyPending, "no accepted transactions to commit");
    }
    ConsensusOutcome outcome;
    outcome.rounds = 1;
    outcome.messages_sent = model_message_count(consensus_);
    outcome.simulated_latency_ms = model_round_latency_ms(consensus_);

    if (const auto* bft = std::get_if<BftQuorum>(&consensus_.kind)) {
        // Liveness is lost as soon as a third of the nodes are attacked.
        const uint32_t threshold = (bft->node_count + 2) / 3;  // ceil(n/3)
        outcome.committed = bft->faulty.size() < threshold;
    } else {
        const auto& lottery = std::get<StakeLottery>(consensus_.kind);
        outcome.leader = draw_leader(lottery);
        outcome.committed = true;
    }

    if (sink_ != nullptr) {
        sink_->consensus_rounds++;
        sink_->consensus_messages += outcome.messages_sent;
    }

    if (outcome.committed) {
        LedgerBlock block;
        block.height = blocks_.size();
        block.prev_hash = blocks_.empty() ? Digest{} : blocks_.back().block_hash;
        block.tx_list = std::move(pending_);
        block.block_hash = compute_block_hash(block.height, block.prev_hash, block.tx_list);
        pending_.clear();
        pending_creates_.clear();
        index_block(block);
        blocks_.push_back(std::move(block));
    }
    return outcome;
}

const LedgerBlock* Registry::last_block() const {
    return blocks_.empty() ? nullptr : &blocks_.back();
}

void Registry::index_block(const LedgerBlock& block) {
    for (const auto& tx : block.tx_list) {
        if (const auto* doc = tx.document()) {
            documents_[doc->id.str()].push_back({block.height, *doc});
        } else if (const auto* entry = tx.revocation()) {
            auto key = hex_encode(entry->credential_id);
            if (revocations_.count(key) == 0) revocations_[key] = block.height;
        }
    }
}

Result<DidDocument> Registry::resolve(const Did& did, const std::optional<Did>& caller,
                                      std::optional<uint64_t> as_of_height) const {
    if (!policy_.readers.permits(caller)) {
        return make_error(Errc::ReadDenied, "caller is not a permitted reader");
    }
    if (sink_ != nullptr) sink_->registry_reads++;
    auto it = documents_.find(did.str());
    if (it == documents_.end()) {
        return make_error(Errc::NotFound, "no committed document for " + did.str());
    }
    const DidDocument* best = nullptr;
    for (const auto& v : it->second) {
        if (as_of_height && v.height > *as_of_height) continue;
        best = &v.doc;
    }
    if (best == nullptr) {
        return make_error(Errc::NotFound, "document not yet created at that height");
    }
    return *best;
}

std::vector<DidDocument> Registry::document_history(const Did& did,
                                                    std::optional<uint64_t> as_of_height) const {
    std::vector<DidDocument> out;
    auto it = documents_.find(did.str());
    if (it == documents_.end()) return out;
    for (const auto& v : it->second) {
        if (as_of_height && v.height > *as_of_height) continue;
        out.push_back(v.doc);
    }
    return out;
}

bool Registry::is_revoked(const Digest& credential_id,
                          std::optional<uint64_t> as_of_height) const {
    auto it = revocations_.find(hex_encode(credential_id));
    if (it == revocations_.end()) return false;
    if (as_of_height && it->second > *as_of_height) return false;
    return true;
}

Result<TamperReport> Registry::inject_stake_takeover(const Did& attacker) {
    const auto* lottery = std::get_if<StakeLottery>(&consensus_.kind);
    if (lottery == nullptr) {
        return make_error(Errc::BadConfig, "stake takeover applies to StakeLottery only");
    }
    auto it = lottery->stakes.find(attacker.str());
    if (it == lottery->stakes.end()) {
        return make_error(Errc::UnknownActor, attacker.str() + " holds no stake entry");
    }
    TamperReport report;
    report.attacker_stake = it->second;
    for (const auto& [_, stake] : lottery->stakes) report.total_stake += stake;
    // ≥ 2/3 of total stake, in exact integer arithmetic.
    report.can_rewrite = 3 * report.attacker_stake >= 2 * report.total_stake;

    if (report.can_rewrite && !blocks_.empty()) {
        // Demonstration fork: an attacker-authored empty block at the tip
        // height, plus the lottery draws it takes the attacker to win
        // leadership for it.
        const LedgerBlock& tip = blocks_.back();
        LedgerBlock forged;
        forged.height = tip.height;
        forged.prev_hash = tip.prev_hash;
        forged.block_hash = compute_block_hash(forged.height, forged.prev_hash, forged.tx_list);
        report.forked_height = tip.height;
        report.forged_block = std::move(forged);
        for (uint32_t draws = 1; draws <= 100000; ++draws) {
            if (draw_leader(*lottery).str() == attacker.str()) {
                report.leadership_draws = draws;
                break;
            }
        }
    }
    return report;
}

// ── State file + inspect rendering ────────────────────────────────────────

json tx_to_json(const RegistryTransaction& tx) {
    json payload;
    if (const auto* doc = tx.document()) {
        payload = doc_to_json(*doc);
    } else {
        payload = revocation_to_json(*tx.revocation());
    }
    return json{{"author", tx.author.str()},
                {"kind", std::string(tx_kind_name(tx.kind))},
                {"payload", std::move(payload)},
                {"sig", tx.author_signature.compact()},
                {"txId", hex_encode(tx.tx_id)}};
}

Result<RegistryTransaction> tx_from_json(const json& j) {
    auto bad = [](std::string why) { return make_error(Errc::BadConfig, std::move(why)); };
    RegistryTransaction tx;
    std::string kind = j.value("kind", "");
    if (kind == "createDoc") {
        tx.kind = TxKind::CreateDoc;
    } else if (kind == "updateDoc") {
        tx.kind = TxKind::UpdateDoc;
    } else if (kind == "revokeCredential") {
        tx.kind = TxKind::RevokeCredential;
    } else {
        return bad("unknown transaction kind");
    }
    if (tx.kind == TxKind::RevokeCredential) {
        auto digest = hex_decode_digest(j["payload"].value("credentialId", ""));
        auto issuer = Did::parse(j["payload"].value("issuer", ""));
        if (!digest || !issuer) return bad("malformed revocation payload");
        tx.payload = RevocationEntry{*digest, *issuer};
    } else {
        auto doc = doc_from_json(j["payload"]);
        if (!doc.ok()) return doc.error();
        tx.payload = std::move(doc.value());
    }
    auto author = Did::parse(j.value("author", ""));
    if (!author) return bad("malformed author");
    tx.author = *author;
    auto sig = Signature::from_compact(j.value("sig", ""));
    if (!sig) return bad("malformed signature");
    tx.author_signature = std::move(*sig);
    auto tx_id = hex_decode_digest(j.value("txId", ""));
    if (!tx_id) return bad("malformed txId");
    tx.tx_id = *tx_id;
    return tx;
}

json ledger_to_json(const Ledger& ledger) {
    json blocks = json::array();
    for (const auto& b : ledger) {
        json txs = json::array();
        for (const auto& tx : b.tx_list) txs.push_back(tx_to_json(tx));
        blocks.push_back({{"blockHash", hex_encode(b.block_hash)},
                          {"height", b.height},
                          {"prevHash", hex_encode(b.prev_hash)},
                          {"txs", std::move(txs)}});
    }
    return json{{"blocks", std::move(blocks)}};
}

Result<Ledger> ledger_from_json(const json& j) {
    if (!j.is_object() || !j.contains("blocks") || !j["blocks"].is_array()) {
        return make_error(Errc::BadConfig, "state file lacks a blocks array");
    }
    Ledger ledger;
    for (const auto& jb : j["blocks"]) {
        LedgerBlock b;
        b.height = jb.value("height", uint64_t{0});
        auto prev = hex_decode_digest(jb.value("prevHash", ""));
        auto hash = hex_decode_digest(jb.value("blockHash", ""));
        if (!prev || !hash) return make_error(Errc::BadConfig, "malformed block hashes");
        b.prev_hash = *prev;
        b.block_hash = *hash;
        for (const auto& jt : jb["txs"]) {
            auto tx = tx_from_json(jt);
            if (!tx.ok()) return tx.error();
            b.tx_list.push_back(std::move(tx.value()));
        }
        ledger.push_back(std::move(b));
    }
    return ledger;
}

std::string ledger_inspect_lines(const Ledger& ledger) {
    std::ostringstream out;
    for (const auto& b : ledger) {
        json tx_ids = json::array();
        for (const auto& tx : b.tx_list) tx_ids.push_back(hex_encode(tx.tx_id));
        json line{{"height", b.height},
                  {"prevHash", hex_encode(b.prev_hash)},
                  {"blockHash", hex_encode(b.block_hash)},
                  {"txIds", std::move(tx_ids)}};
        out << line.dump() << "\n";
    }
    return out.str();
}

}  // namespace did6g
