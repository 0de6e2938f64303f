#pragma once

#include "did6g/credential.hpp"

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace did6g {

// ── Domain model ──────────────────────────────────────────────────────────

enum class EntityKind {
    HomeMno,
    VisitedMno,
    Subscriber,
    NetworkFunction,
    IotDevice,
    IotOperator,
    CloudProvider,
};

std::string_view entity_kind_name(EntityKind k);
std::optional<EntityKind> entity_kind_from_name(std::string_view s);

/// An enclosed administrative space; entities may appear in several domains
/// only by explicit cross-listing.
struct TrustDomain {
    std::string name;
    std::set<std::string> entities;  // NetworkEntity ids
};

/// A named participant: its agent plus ledger reachability. Constrained IoT
/// devices run without any registry view, so their handle never attaches.
struct NetworkEntity {
    std::string id;
    EntityKind kind;
    Agent agent;
    bool registry_access;

    NetworkEntity(std::string id_, EntityKind kind_, Agent agent_)
        : id(std::move(id_)),
          kind(kind_),
          agent(std::move(agent_)),
          registry_access(kind_ != EntityKind::IotDevice) {}

    /// No-op for entities without registry access.
    void grant_registry(const Registry* registry) {
        if (registry_access) agent.attach_registry(registry);
    }
};

// ── Trust relationships ───────────────────────────────────────────────────

enum class TrustStrength { None, Authenticated, CredentialBacked };

std::string_view strength_name(TrustStrength s);

/// "from trusts to with respect to subject_of_matter", graded.
struct TrustRelationship {
    std::string from;
    std::string to;
    std::string subject_of_matter;
    TrustStrength strength = TrustStrength::None;
};

/// Keyed (from, to, subject); strength only ever increases within a run.
class RelationshipTable {
public:
    void upgrade(const std::string& from, const std::string& to, const std::string& subject,
                 TrustStrength strength);
    /// Symmetric upgrade for mutual steps (both channel ends authenticate).
    void upgrade_mutual(const std::string& a, const std::string& b, const std::string& subject,
                        TrustStrength strength);
    std::vector<TrustRelationship> rows() const;  // key-sorted, deterministic

private:
    std::map<std::tuple<std::string, std::string, std::string>, TrustStrength> table_;
};

// ── Reports ───────────────────────────────────────────────────────────────

struct ScenarioOutcome {
    bool success = true;
    std::string failed_step;
    std::string reason;

    static ScenarioOutcome ok() { return {}; }
    static ScenarioOutcome fail(std::string step, std::string reason) {
        return {false, std::move(step), std::move(reason)};
    }
};

struct ScenarioReport {
    std::string scenario;
    uint64_t seed = 0;
    ScenarioOutcome outcome;
    MetricsSink metrics;
    uint64_t home_network_queries_during_attach = 0;
    std::vector<TrustRelationship> final_relationships;
    /// Scenario-specific findings merged into the report's top level.
    nlohmann::json extra = nlohmann::json::object();
    /// Final registry state; written separately, never part of the report.
    Ledger ledger;
};

/// Key-sorted JSON; identical (scenario, config, seed) runs dump
/// byte-identically.
nlohmann::json report_to_json(const ScenarioReport& report);

// ── Configuration ─────────────────────────────────────────────────────────

struct ScenarioConfig {
    std::string scenario;  // roaming | nf-access | iot-onboarding | consensus-sweep
    nlohmann::json raw;

    static Result<ScenarioConfig> from_json(const nlohmann::json& j);
    static Result<ScenarioConfig> load(const std::string& path);
};

/// {"kind":"bft","nodeCount":n,"faulty":[...],"perMessageLatencyMs":x} or
/// {"kind":"stakeLottery","stakes":{...},"rngSeed":n,...}. Stake keys naming
/// configured entities are replaced by those entities' DIDs.
Result<ConsensusConfig> consensus_from_json(
    const nlohmann::json& j, const std::map<std::string, std::string>& entity_dids = {});

// ── Runners ───────────────────────────────────────────────────────────────
//
// A returned error means the configuration itself is unusable. In-scenario
// protocol failures come back as ok() reports with a Failure outcome naming
// the first failing step.

Result<ScenarioReport> run_roaming_scenario(const ScenarioConfig& config, uint64_t seed);
Result<ScenarioReport> run_nf_access_scenario(const ScenarioConfig& config, uint64_t seed);
Result<ScenarioReport> run_iot_onboarding_scenario(const ScenarioConfig& config, uint64_t seed);
Result<ScenarioReport> run_consensus_sweep(const ScenarioConfig& config, uint64_t seed);

/// Dispatch on config.scenario.
Result<ScenarioReport> run_scenario(const ScenarioConfig& config, uint64_t seed);

}  // namespace did6g
