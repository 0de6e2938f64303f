#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "did6g/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <set>

using namespace did6g;
using nlohmann::json;

namespace {

json bft_consensus(uint32_t n = 4) {
    return json{{"kind", "bft"}, {"nodeCount", n}, {"faulty", json::array()},
                {"perMessageLatencyMs", 1.0}};
}

ScenarioConfig roaming_config(json adversary = json::object()) {
    json j{{"scenario", "roaming"},
           {"entities", {{"homeMno", "home-mno"},
                         {"visitedMno", "visited-mno"},
                         {"subscriber", "subscriber-ue"}}},
           {"domains", json::array({json{{"name", "home-plmn"},
                                         {"entities", {"home-mno", "subscriber-ue"}}},
                                    json{{"name", "visited-plmn"},
                                         {"entities", {"visited-mno"}}}})},
           {"consensus", bft_consensus()},
           {"adversary", std::move(adversary)}};
    auto cfg = ScenarioConfig::from_json(j);
    REQUIRE(cfg.ok());
    return cfg.value();
}

ScenarioConfig nf_config(json adversary = json::object(), bool probe_denial = true) {
    json j{{"scenario", "nf-access"},
           {"entities", {{"authorizer", "nrf-authorizer"},
                         {"consumer", "amf-consumer"},
                         {"producer", "smf-producer"}}},
           {"targetService", "session-management"},
           {"scope", "invoke"},
           {"probeDenial", probe_denial},
           {"consensus", bft_consensus()},
           {"adversary", std::move(adversary)}};
    auto cfg = ScenarioConfig::from_json(j);
    REQUIRE(cfg.ok());
    return cfg.value();
}

ScenarioConfig iot_config(json adversary = json::object()) {
    json j{{"scenario", "iot-onboarding"},
           {"entities", {{"device", "sensor-node"},
                         {"operator", "device-operator"},
                         {"mno", "serving-mno"}}},
           {"deviceClass", "iot-sensor"},
           {"consensus", bft_consensus()},
           {"adversary", std::move(adversary)}};
    auto cfg = ScenarioConfig::from_json(j);
    REQUIRE(cfg.ok());
    return cfg.value();
}

ScenarioConfig sweep_config() {
    json j{{"scenario", "consensus-sweep"},
           {"nodeCounts", {4, 8, 16, 32}},
           {"txCount", 100},
           {"bftBoundaryMax", 13},
           {"stakeFractions", {0.5, 0.66, 0.666, 0.667, 0.7}},
           {"consensus", bft_consensus()}};
    auto cfg = ScenarioConfig::from_json(j);
    REQUIRE(cfg.ok());
    return cfg.value();
}

ScenarioReport run_ok(const ScenarioConfig& cfg, uint64_t seed) {
    auto report = run_scenario(cfg, seed);
    REQUIRE(report.ok());
    return std::move(report.value());
}

std::set<std::string> steps_of(const ScenarioReport& report) {
    std::set<std::string> steps;
    for (const auto& e : report.metrics.events) steps.insert(e.step);
    return steps;
}

const TrustRelationship* find_rel(const ScenarioReport& report, const std::string& from,
                                  const std::string& to) {
    for (const auto& r : report.final_relationships) {
        if (r.from == from && r.to == to) return &r;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("roaming: pairwise attach succeeds without consulting the home network") {
    ScenarioReport report = run_ok(roaming_config(), 42);
    CHECK(report.outcome.success);
    CHECK(report.scenario == "roaming");
    CHECK(report.seed == 42);

    // The privacy claim, counted from the event log itself.
    CHECK(report.home_network_queries_during_attach == 0);

    // The visited network never sees the subscriber's long-term DID.
    const std::string channel_did = report.extra.at("pairwiseChannelDid");
    const std::string subject_did = report.extra.at("vcSubjectDid");
    CHECK(channel_did != subject_did);
    CHECK(channel_did.rfind("did:self:", 0) == 0);

    // Attach ends credential-backed in both directions.
    const auto* v2s = find_rel(report, "visited-mno", "subscriber-ue");
    REQUIRE(v2s != nullptr);
    CHECK(v2s->strength == TrustStrength::CredentialBacked);
    CHECK(v2s->subject_of_matter == "roaming-attach");
    const auto* s2v = find_rel(report, "subscriber-ue", "visited-mno");
    REQUIRE(s2v != nullptr);
    CHECK(s2v->strength == TrustStrength::CredentialBacked);
    // Onboarding trust stays at authenticated: no credential flowed that way.
    const auto* h2s = find_rel(report, "home-mno", "subscriber-ue");
    REQUIRE(h2s != nullptr);
    CHECK(h2s->strength == TrustStrength::Authenticated);

    auto steps = steps_of(report);
    for (const char* expected : {"register_document", "handshake", "derive_pairwise",
                                 "issue_vc", "send", "receive", "accept_vp"}) {
        CAPTURE(expected);
        CHECK(steps.count(expected) == 1);
    }

    CHECK(report.metrics.consensus_messages > 0);
    CHECK(report.metrics.envelopes_sent > 0);
    CHECK_FALSE(report.ledger.empty());
    CHECK(verify_chain(report.ledger).ok);
}

TEST_CASE("roaming: identical runs dump byte-identical reports") {
    ScenarioReport a = run_ok(roaming_config(), 7);
    ScenarioReport b = run_ok(roaming_config(), 7);
    CHECK(report_to_json(a).dump(2) == report_to_json(b).dump(2));

    ScenarioReport c = run_ok(roaming_config(), 8);
    CHECK(report_to_json(a).dump() != report_to_json(c).dump());
    // different seed, different pairwise identity
    CHECK(a.extra.at("pairwiseChannelDid") != c.extra.at("pairwiseChannelDid"));
}

TEST_CASE("roaming adversaries fail at the verification step that catches them") {
    SUBCASE("wrong holder key") {
        ScenarioReport report = run_ok(roaming_config({{"wrongHolderKey", true}}), 42);
        CHECK_FALSE(report.outcome.success);
        CHECK(report.outcome.failed_step == "verify_vp");
        CHECK(report.outcome.reason == "BadOwnershipProof");
    }
    SUBCASE("replayed presentation") {
        ScenarioReport report = run_ok(roaming_config({{"replayPresentation", true}}), 42);
        CHECK_FALSE(report.outcome.success);
        CHECK(report.outcome.failed_step == "verify_vp");
        CHECK(report.outcome.reason == "Replayed");
    }
}

TEST_CASE("nf-access: grant precedes service, bare requests are denied") {
    ScenarioReport report = run_ok(nf_config(), 42);
    CHECK(report.outcome.success);
    CHECK(report.extra.at("producerServed").get<int>() == 1);
    CHECK(report.extra.at("denialsRecorded").get<int>() == 1);
    CHECK(report.extra.at("targetService").get<std::string>() == "session-management");

    auto steps = steps_of(report);
    CHECK(steps.count("deny") == 1);
    CHECK(steps.count("serve") == 1);

    const auto* p2c = find_rel(report, "smf-producer", "amf-consumer");
    REQUIRE(p2c != nullptr);
    CHECK(p2c->strength == TrustStrength::CredentialBacked);
    CHECK(p2c->subject_of_matter == "nf-access");

    SUBCASE("without the probe, no denial is recorded") {
        ScenarioReport quiet = run_ok(nf_config(json::object(), /*probe_denial=*/false), 42);
        CHECK(quiet.outcome.success);
        CHECK(quiet.extra.at("denialsRecorded").get<int>() == 0);
        CHECK(steps_of(quiet).count("deny") == 0);
    }
}

TEST_CASE("nf-access adversaries: scope mismatch and revoked grant") {
    SUBCASE("grant for an unrelated service fails the claims check") {
        ScenarioReport report = run_ok(nf_config({{"scopeMismatch", true}}), 42);
        CHECK_FALSE(report.outcome.success);
        CHECK(report.outcome.failed_step == "claims_check");
        CHECK(report.outcome.reason == "ScopeMismatch");
        CHECK(report.extra.at("producerServed").get<int>() == 0);
    }
    SUBCASE("a revoked grant is rejected at presentation time") {
        ScenarioReport report = run_ok(nf_config({{"revokeGrant", true}}), 42);
        CHECK_FALSE(report.outcome.success);
        CHECK(report.outcome.failed_step == "verify_vp");
        CHECK(report.outcome.reason == "Revoked");
        CHECK(steps_of(report).count("revoke_vc") == 1);
    }
}

TEST_CASE("iot-onboarding: a ledgerless device onboards over self-asserted channels") {
    ScenarioReport report = run_ok(iot_config(), 42);
    CHECK(report.outcome.success);
    CHECK(report.extra.at("channelTrustLevel").get<std::string>() == "selfAsserted");

    const std::string subject = report.extra.at("subjectDid");
    CHECK(subject.rfind("did:self:", 0) == 0);

    const auto* m2d = find_rel(report, "serving-mno", "sensor-node");
    REQUIRE(m2d != nullptr);
    CHECK(m2d->strength == TrustStrength::CredentialBacked);
    CHECK(m2d->subject_of_matter == "iot-onboarding");
    const auto* o2d = find_rel(report, "device-operator", "sensor-node");
    REQUIRE(o2d != nullptr);
    CHECK(o2d->strength == TrustStrength::Authenticated);
}

TEST_CASE("iot-onboarding adversaries: stolen credential and unknown issuer") {
    SUBCASE("a credential about someone else fails ownership") {
        ScenarioReport report = run_ok(iot_config({{"subjectMismatch", true}}), 42);
        CHECK_FALSE(report.outcome.success);
        CHECK(report.outcome.failed_step == "verify_vp");
        CHECK(report.outcome.reason == "BadOwnershipProof");
    }
    SUBCASE("an attestation from an unregistered operator cannot be verified") {
        ScenarioReport report = run_ok(iot_config({{"operatorUnregistered", true}}), 42);
        CHECK_FALSE(report.outcome.success);
        CHECK(report.outcome.failed_step == "verify_vc");
        CHECK(report.outcome.reason == "IssuerUnresolvable");
    }
}

TEST_CASE("consensus-sweep: the model table, the liveness boundary and the stake cliff") {
    ScenarioReport report = run_ok(sweep_config(), 42);
    CHECK(report.outcome.success);

    const json& table = report.extra.at("metricsTable");
    REQUIRE(table.size() == 4);
    const std::vector<uint64_t> expected_msgs{27, 119, 495, 2015};
    for (size_t i = 0; i < 4; ++i) {
        CHECK(table[i].at("messages").get<uint64_t>() == expected_msgs[i]);
        if (i > 0) {
            CHECK(table[i].at("messages").get<uint64_t>() >
                  table[i - 1].at("messages").get<uint64_t>());
        }
    }

    const json& boundary = report.extra.at("bftHaltingBoundary");
    REQUIRE(boundary.size() == 13);
    for (const auto& row : boundary) {
        const uint32_t n = row.at("nodeCount").get<uint32_t>();
        CHECK(row.at("ceilNOver3").get<uint32_t>() == (n + 2) / 3);
        CHECK(row.at("haltsAtFaulty").get<uint32_t>() == (n + 2) / 3);
        CHECK(row.at("matchesModel").get<bool>());
    }

    const json& takeover = report.extra.at("stakeTakeover");
    REQUIRE(takeover.size() == 5);
    const std::vector<bool> expected_rewrite{false, false, false, true, true};
    for (size_t i = 0; i < 5; ++i) {
        CHECK(takeover[i].at("canRewrite").get<bool>() == expected_rewrite[i]);
        CHECK(takeover[i].at("totalStake").get<uint64_t>() == 1000);
    }
    CHECK(report.extra.at("thresholds").at("rewritePossibleFromFraction").get<double>() ==
          doctest::Approx(0.667));
    CHECK(report.extra.at("thresholds").at("bftFaultyFraction").get<std::string>() == "1/3");
}

TEST_CASE("relationship strengths only ever increase") {
    RelationshipTable table;
    table.upgrade("a", "b", "s", TrustStrength::CredentialBacked);
    table.upgrade("a", "b", "s", TrustStrength::Authenticated);  // no downgrade
    auto rows = table.rows();
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].strength == TrustStrength::CredentialBacked);

    table.upgrade_mutual("a", "b", "mutual", TrustStrength::Authenticated);
    rows = table.rows();
    REQUIRE(rows.size() == 3);
    // key-sorted: (a,b,mutual) < (a,b,s) < (b,a,mutual)
    CHECK(rows[0].subject_of_matter == "mutual");
    CHECK(rows[1].subject_of_matter == "s");
    CHECK(rows[2].from == "b");

    CHECK(strength_name(TrustStrength::None) == "none");
    CHECK(strength_name(TrustStrength::Authenticated) == "authenticated");
    CHECK(strength_name(TrustStrength::CredentialBacked) == "credentialBacked");
}

TEST_CASE("report JSON: outcome shape differs between success and failure") {
    ScenarioReport ok_report = run_ok(roaming_config(), 1);
    json ok_json = report_to_json(ok_report);
    CHECK(ok_json.at("outcome").at("status") == "Success");
    CHECK_FALSE(ok_json.at("outcome").contains("step"));
    CHECK_FALSE(ok_json.at("outcome").contains("reason"));
    CHECK(ok_json.at("seed").get<uint64_t>() == 1);
    for (const char* key : {"counters", "eventLog", "finalRelationships", "scenario"}) {
        CAPTURE(key);
        CHECK(ok_json.contains(key));
    }
    // the ledger is written separately, never inlined into the report
    CHECK_FALSE(ok_json.contains("ledger"));

    ScenarioReport bad = run_ok(roaming_config({{"wrongHolderKey", true}}), 1);
    json bad_json = report_to_json(bad);
    CHECK(bad_json.at("outcome").at("status") == "Failure");
    CHECK(bad_json.at("outcome").at("step") == "verify_vp");
    CHECK(bad_json.at("outcome").at("reason") == "BadOwnershipProof");

    // counters mirror the sink
    CHECK(ok_json.at("counters").at("consensusMessages").get<uint64_t>() ==
          ok_report.metrics.consensus_messages);
    CHECK(ok_json.at("counters").at("homeNetworkQueriesDuringAttach").get<uint64_t>() == 0);
}

TEST_CASE("configuration loading rejects what it cannot trust") {
    SUBCASE("a missing file is an IO error") {
        auto r = ScenarioConfig::load("/nonexistent/nowhere.json");
        REQUIRE_FALSE(r.ok());
        CHECK(r.code() == Errc::IoError);
    }

    SUBCASE("invalid JSON is a config error") {
        const char* path = "/tmp/did6g_bad_config.json";
        {
            std::ofstream out(path);
            out << "{ not json";
        }
        auto r = ScenarioConfig::load(path);
        REQUIRE_FALSE(r.ok());
        CHECK(r.code() == Errc::BadConfig);
        std::remove(path);
    }

    SUBCASE("an unknown scenario name is rejected") {
        auto r = ScenarioConfig::from_json(json{{"scenario", "teleportation"}});
        REQUIRE_FALSE(r.ok());
        CHECK(r.code() == Errc::BadConfig);
    }

    SUBCASE("a config without a scenario is rejected") {
        auto r = ScenarioConfig::from_json(json{{"entities", json::object()}});
        REQUIRE_FALSE(r.ok());
        CHECK(r.code() == Errc::BadConfig);
    }

    SUBCASE("run_scenario refuses a mismatched dispatch") {
        auto cfg = roaming_config();
        auto report = run_nf_access_scenario(cfg, 1);
        REQUIRE_FALSE(report.ok());
        CHECK(report.code() == Errc::BadConfig);
    }
}

TEST_CASE("consensus configuration parses both kinds and maps entity stakes") {
    auto bft_cfg = consensus_from_json(bft_consensus(8));
    REQUIRE(bft_cfg.ok());
    const auto* bft = std::get_if<BftQuorum>(&bft_cfg.value().kind);
    REQUIRE(bft != nullptr);
    CHECK(bft->node_count == 8);

    json lottery_json{{"kind", "stakeLottery"},
                      {"stakes", {{"home-mno", 60}, {"did:reg:direct", 40}}},
                      {"rngSeed", 5},
                      {"perMessageLatencyMs", 2.0}};
    auto lottery_cfg = consensus_from_json(lottery_json, {{"home-mno", "did:reg:mapped"}});
    REQUIRE(lottery_cfg.ok());
    const auto* lottery = std::get_if<StakeLottery>(&lottery_cfg.value().kind);
    REQUIRE(lottery != nullptr);
    CHECK(lottery->stakes.at("did:reg:mapped") == 60);  // entity name → DID
    CHECK(lottery->stakes.at("did:reg:direct") == 40);  // passthrough
    CHECK(lottery->rng_seed == 5);
    CHECK(lottery_cfg.value().per_message_latency_ms == doctest::Approx(2.0));

    auto unknown = consensus_from_json(json{{"kind", "proofOfWork"}});
    REQUIRE_FALSE(unknown.ok());
    CHECK(unknown.code() == Errc::BadConfig);
}

TEST_CASE("every scenario under a stake lottery still completes") {
    // swap the consensus block; everything else stays the default
    json j{{"scenario", "roaming"},
           {"entities", {{"homeMno", "home-mno"},
                         {"visitedMno", "visited-mno"},
                         {"subscriber", "subscriber-ue"}}},
           {"consensus", {{"kind", "stakeLottery"},
                          {"stakes", {{"home-mno", 50}, {"visited-mno", 50}}},
                          {"rngSeed", 3},
                          {"perMessageLatencyMs", 1.0}}},
           {"adversary", json::object()}};
    auto cfg = ScenarioConfig::from_json(j);
    REQUIRE(cfg.ok());
    ScenarioReport report = run_ok(cfg.value(), 42);
    CHECK(report.outcome.success);
    CHECK(report.home_network_queries_during_attach == 0);
}
