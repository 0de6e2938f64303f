#include "did6g/scenario.hpp"

#include "did6g/crypto.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace did6g {

using nlohmann::json;

// ── Domain model ──────────────────────────────────────────────────────────

std::string_view entity_kind_name(EntityKind k) {
    switch (k) {
        case EntityKind::HomeMno: return "homeMno";
        case EntityKind::VisitedMno: return "visitedMno";
        case EntityKind::Subscriber: return "subscriber";
        case EntityKind::NetworkFunction: return "networkFunction";
        case EntityKind::IotDevice: return "iotDevice";
        case EntityKind::IotOperator: return "iotOperator";
        case EntityKind::CloudProvider: return "cloudProvider";
    }
    return "unknown";
}

std::optional<EntityKind> entity_kind_from_name(std::string_view s) {
    for (EntityKind k :
         {EntityKind::HomeMno, EntityKind::VisitedMno, EntityKind::Subscriber,
          EntityKind::NetworkFunction, EntityKind::IotDevice, EntityKind::IotOperator,
          EntityKind::CloudProvider}) {
        if (entity_kind_name(k) == s) return k;
    }
    return std::nullopt;
}

std::string_view strength_name(TrustStrength s) {
    switch (s) {
        case TrustStrength::None: return "none";
        case TrustStrength::Authenticated: return "authenticated";
        case TrustStrength::CredentialBacked: return "credentialBacked";
    }
    return "unknown";
}

void RelationshipTable::upgrade(const std::string& from, const std::string& to,
                                const std::string& subject, TrustStrength strength) {
    TrustStrength& cell = table_[{from, to, subject}];
    if (strength > cell) cell = strength;
}

void RelationshipTable::upgrade_mutual(const std::string& a, const std::string& b,
                                       const std::string& subject, TrustStrength strength) {
    upgrade(a, b, subject, strength);
    upgrade(b, a, subject, strength);
}

std::vector<TrustRelationship> RelationshipTable::rows() const {
    std::vector<TrustRelationship> out;
    for (const auto& [key, strength] : table_) {
        out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), strength});
    }
    return out;
}

// ── Reports ───────────────────────────────────────────────────────────────

json report_to_json(const ScenarioReport& report) {
    json outcome;
    if (report.outcome.success) {
        outcome = json{{"status", "Success"}};
    } else {
        outcome = json{{"reason", report.outcome.reason},
                       {"status", "Failure"},
                       {"step", report.outcome.failed_step}};
    }
    json events = json::array();
    for (const auto& e : report.metrics.events) {
        events.push_back(json{{"detail", e.detail},
                              {"from", e.from},
                              {"phase", e.phase},
                              {"step", e.step},
                              {"to", e.to}});
    }
    json rels = json::array();
    for (const auto& r : report.final_relationships) {
        rels.push_back(json{{"from", r.from},
                            {"strength", std::string(strength_name(r.strength))},
                            {"subjectOfMatter", r.subject_of_matter},
                            {"to", r.to}});
    }
    json out{
        {"counters",
         json{{"consensusMessages", report.metrics.consensus_messages},
              {"consensusRounds", report.metrics.consensus_rounds},
              {"envelopesSent", report.metrics.envelopes_sent},
              {"homeNetworkQueriesDuringAttach", report.home_network_queries_during_attach},
              {"registryReads", report.metrics.registry_reads},
              {"registryWrites", report.metrics.registry_writes}}},
        {"eventLog", std::move(events)},
        {"finalRelationships", std::move(rels)},
        {"outcome", std::move(outcome)},
        {"scenario", report.scenario},
        {"seed", report.seed},
    };
    for (const auto& [key, value] : report.extra.items()) out[key] = value;
    return out;
}

// ── Configuration ─────────────────────────────────────────────────────────

Result<ScenarioConfig> ScenarioConfig::from_json(const json& j) {
    if (!j.is_object() || !j.contains("scenario") || !j["scenario"].is_string()) {
        return make_error(Errc::BadConfig, "config needs a \"scenario\" string");
    }
    ScenarioConfig cfg;
    cfg.scenario = j["scenario"].get<std::string>();
    if (cfg.scenario != "roaming" && cfg.scenario != "nf-access" &&
        cfg.scenario != "iot-onboarding" && cfg.scenario != "consensus-sweep") {
        return make_error(Errc::BadConfig, "unknown scenario \"" + cfg.scenario + "\"");
    }
    cfg.raw = j;
    return cfg;
}

Result<ScenarioConfig> ScenarioConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) return make_error(Errc::IoError, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) return make_error(Errc::BadConfig, path + " is not valid JSON");
    return from_json(j);
}

Result<ConsensusConfig> consensus_from_json(const json& j,
                                            const std::map<std::string, std::string>& entity_dids) {
    ConsensusConfig cfg;
    cfg.kind = BftQuorum{4, {}};
    if (j.is_null()) return cfg;  // absent section → default quorum
    if (!j.is_object()) return make_error(Errc::BadConfig, "consensus section must be an object");
    cfg.per_message_latency_ms = j.value("perMessageLatencyMs", 1.0);
    const std::string kind = j.value("kind", "bft");
    if (kind == "bft") {
        BftQuorum bft;
        bft.node_count = j.value("nodeCount", 4u);
        if (j.contains("faulty")) {
            if (!j["faulty"].is_array()) {
                return make_error(Errc::BadConfig, "faulty must be an index array");
            }
            for (const auto& f : j["faulty"]) {
                if (!f.is_number_unsigned()) {
                    return make_error(Errc::BadConfig, "faulty indices must be unsigned");
                }
                bft.faulty.insert(f.get<uint32_t>());
            }
        }
        cfg.kind = bft;
    } else if (kind == "stakeLottery") {
        StakeLottery lottery;
        lottery.rng_seed = j.value("rngSeed", uint64_t{0});
        if (!j.contains("stakes") || !j["stakes"].is_object()) {
            return make_error(Errc::BadConfig, "stakeLottery needs a stakes object");
        }
        for (const auto& [name, stake] : j["stakes"].items()) {
            // Accept any non-negative integer no matter how the JSON value
            // is stored; hand-built documents often store small ints signed.
            if (!stake.is_number_integer() ||
                (!stake.is_number_unsigned() && stake.get<int64_t>() < 0)) {
                return make_error(Errc::BadConfig, "stakes must be non-negative integers");
            }
            auto mapped = entity_dids.find(name);
            const std::string key = mapped != entity_dids.end() ? mapped->second : name;
            lottery.stakes[key] = stake.get<uint64_t>();
        }
        cfg.kind = std::move(lottery);
    } else {
        return make_error(Errc::BadConfig, "unknown consensus kind \"" + kind + "\"");
    }
    if (!cfg.valid()) return make_error(Errc::BadConfig, "consensus parameters are invalid");
    return cfg;
}

// ── Shared runner scaffolding ─────────────────────────────────────────────

namespace {

Bytes scenario_seed_bytes(uint64_t seed, std::string_view scenario) {
    Bytes seed_le(8);
    for (int i = 0; i < 8; ++i) seed_le[i] = static_cast<uint8_t>((seed >> (8 * i)) & 0xff);
    return crypto::derive_key("did6g/scenario/v1", {seed_le, to_bytes(scenario)});
}

/// Per-run state every scenario shares: the report under construction, the
/// scenario-wide logical clock, and the trust-relationship table.
struct Harness {
    ScenarioReport report;
    uint64_t clock = 0;
    RelationshipTable relationships;
    Bytes seed_bytes;

    Harness(std::string scenario, uint64_t seed) {
        report.scenario = std::move(scenario);
        report.seed = seed;
        seed_bytes = scenario_seed_bytes(seed, report.scenario);
    }

    Agent make_agent(const std::string& name) {
        return Agent(name, seed_bytes, nullptr, &report.metrics, &clock);
    }

    void phase(std::string p) { report.metrics.phase = std::move(p); }

    ScenarioReport take(ScenarioOutcome outcome, const Registry* registry) {
        report.outcome = std::move(outcome);
        report.final_relationships = relationships.rows();
        if (registry != nullptr) report.ledger = registry->ledger();
        return std::move(report);
    }
};

std::string entity_name(const json& raw, const char* role, const char* fallback) {
    if (raw.contains("entities") && raw["entities"].is_object()) {
        return raw["entities"].value(role, fallback);
    }
    return fallback;
}

bool adversary_flag(const json& raw, const char* name) {
    return raw.contains("adversary") && raw["adversary"].is_object() &&
           raw["adversary"].value(name, false);
}

/// Registers an entity's own document on the ledger (submit only; callers
/// batch the consensus round).
Result<void> submit_create(Registry& registry, Agent& owner, const Did& did) {
    const DidDocument* doc = owner.own_document(did);
    const KeyPair* key = owner.key_for(did, "key-0");
    if (doc == nullptr || key == nullptr) {
        return make_error(Errc::NotFound, owner.name() + " does not control " + did.str());
    }
    auto result = registry.submit(make_create_tx(*doc, *key));
    if (result.ok() && owner.sink() != nullptr) {
        owner.sink()->record("register_document", did.str());
    }
    return result;
}

/// One-hop delivery: seal at the sender's end, open at the receiver's.
Result<Bytes> transfer(SecureChannel& out_end, Agent& sender, SecureChannel& in_end,
                       Agent& receiver, const Bytes& body) {
    auto env = send(out_end, sender, body);
    if (!env.ok()) return env.error();
    return receive(in_end, receiver, env.value());
}

Result<VerifiableCredential> parse_vc_bytes(const Bytes& wire) {
    json j = json::parse(to_string(wire), nullptr, false);
    if (j.is_discarded()) return make_error(Errc::BadConfig, "credential payload is not JSON");
    return vc_from_json(j);
}

Result<VerifiablePresentation> parse_vp_bytes(const Bytes& wire) {
    json j = json::parse(to_string(wire), nullptr, false);
    if (j.is_discarded()) return make_error(Errc::BadConfig, "presentation payload is not JSON");
    return vp_from_json(j);
}

std::string errc_str(const Error& e) {
    return std::string(errc_name(e.code));
}

/// First failing step for a rejected presentation: an unresolvable issuer is
/// a credential-verification failure; everything else fails the presentation
/// check itself.
ScenarioOutcome vp_failure(const VpVerdict& verdict) {
    if (verdict.vc_reason == VcReason::IssuerUnresolvable) {
        return ScenarioOutcome::fail("verify_vc", std::string(vc_reason_name(verdict.vc_reason)));
    }
    if (verdict.reason == VpReason::BadIssuerProof && verdict.vc_reason != VcReason::None) {
        return ScenarioOutcome::fail("verify_vc", std::string(vc_reason_name(verdict.vc_reason)));
    }
    return ScenarioOutcome::fail("verify_vp", std::string(vp_reason_name(verdict.reason)));
}

uint64_t count_home_queries(const std::vector<ScenarioEvent>& events,
                            const std::string& home_did) {
    uint64_t n = 0;
    for (const auto& e : events) {
        const bool attach_window = e.phase == "attach" || e.phase == "verify";
        const bool query = e.step == "handshake" || e.step == "send";
        if (attach_window && query && e.to == home_did) n++;
    }
    return n;
}

/// Each runner insists on its own scenario name so a mis-routed config is a
/// loud configuration error rather than a run on fallback entity names.
Result<void> expect_scenario(const ScenarioConfig& config, std::string_view name) {
    if (config.scenario != name) {
        return make_error(Errc::BadConfig, "config declares scenario \"" + config.scenario +
                                               "\", not \"" + std::string(name) + "\"");
    }
    return {};
}

}  // namespace

// ── Roaming ───────────────────────────────────────────────────────────────

Result<ScenarioReport> run_roaming_scenario(const ScenarioConfig& config, uint64_t seed) {
    if (auto named = expect_scenario(config, "roaming"); !named.ok()) return named.error();
    const json& raw = config.raw;
    const std::string h_name = entity_name(raw, "homeMno", "hMNO");
    const std::string v_name = entity_name(raw, "visitedMno", "vMNO");
    const std::string s_name = entity_name(raw, "subscriber", "subscriber");
    const bool adv_wrong_key = adversary_flag(raw, "wrongHolderKey");
    const bool adv_replay = adversary_flag(raw, "replayPresentation");

    Harness hx("roaming", seed);
    NetworkEntity home(h_name, EntityKind::HomeMno, hx.make_agent(h_name));
    NetworkEntity visited(v_name, EntityKind::VisitedMno, hx.make_agent(v_name));
    NetworkEntity subscriber(s_name, EntityKind::Subscriber, hx.make_agent(s_name));

    hx.phase("setup");
    auto h_id = home.agent.create_identity(DidMethod::Registry, true);
    auto v_id = visited.agent.create_identity(DidMethod::Registry, true);
    auto s_id = subscriber.agent.create_identity(DidMethod::SelfCertified, false);
    if (!h_id.ok() || !v_id.ok() || !s_id.ok()) {
        return make_error(Errc::BadConfig, "identity setup failed");
    }
    const Did h_did = h_id.value().did;
    const Did v_did = v_id.value().did;
    const Did s_did = s_id.value().did;

    auto consensus = consensus_from_json(raw.value("consensus", json()),
                                         {{h_name, h_did.str()}, {v_name, v_did.str()}});
    if (!consensus.ok()) return consensus.error();
    Registry registry(
        GovernancePolicy::public_permissioned({h_did.str(), v_did.str()}, {h_did.str()}),
        consensus.value(), &hx.report.metrics);
    home.grant_registry(&registry);
    visited.grant_registry(&registry);
    subscriber.grant_registry(&registry);

    auto fail = [&](std::string step, std::string reason) {
        hx.report.home_network_queries_during_attach =
            count_home_queries(hx.report.metrics.events, h_did.str());
        return hx.take(ScenarioOutcome::fail(std::move(step), std::move(reason)), &registry);
    };

    if (auto r = submit_create(registry, home.agent, h_did); !r.ok()) {
        return fail("register_document", errc_str(r.error()));
    }
    if (auto r = submit_create(registry, visited.agent, v_did); !r.ok()) {
        return fail("register_document", errc_str(r.error()));
    }
    auto round = registry.run_consensus_round();
    if (!round.ok()) return fail("consensus", errc_str(round.error()));
    if (!round.value().committed) return fail("consensus", "round did not commit");

    // Phase 1 — onboarding: the home operator attests its subscriber.
    hx.phase("onboarding");
    subscriber.agent.begin_step();
    auto h_doc = subscriber.agent.resolve_peer(h_did);
    if (!h_doc.ok()) return fail("resolve", errc_str(h_doc.error()));
    auto onboarding = establish_channel(
        subscriber.agent, home.agent, s_did, h_did,
        ChannelMode::out_of_band(s_id.value().document, h_doc.value()));
    if (!onboarding.ok()) return fail("handshake", errc_str(onboarding.error()));
    hx.relationships.upgrade_mutual(s_name, h_name, "customer-onboarding",
                                    TrustStrength::Authenticated);

    auto vc = issue_vc(home.agent, SubjectId{s_did}, "ValidCustomer",
                       {{"customerStatus", "valid"}});
    if (!vc.ok()) return fail("issue_vc", errc_str(vc.error()));
    auto vc_wire = transfer(onboarding.value().responder, home.agent,
                            onboarding.value().initiator, subscriber.agent,
                            to_bytes(vc_to_json(vc.value()).dump()));
    if (!vc_wire.ok()) return fail("deliver_vc", errc_str(vc_wire.error()));
    auto held = parse_vc_bytes(vc_wire.value());
    if (!held.ok()) return fail("deliver_vc", errc_str(held.error()));
    wallet_store_vc(subscriber.agent.wallet(), held.value());

    // Phase 2 — attach: a pairwise DID toward the visited network, with no
    // traffic back home.
    hx.phase("attach");
    subscriber.agent.begin_step();
    auto pairwise = subscriber.agent.pairwise_identity(v_did.str());
    if (!pairwise.ok()) return fail("derive_pairwise", errc_str(pairwise.error()));
    const Did channel_did = pairwise.value().did;
    hx.report.metrics.record("derive_pairwise", channel_did.str(), s_did.str(), v_did.str());

    auto v_doc = subscriber.agent.resolve_peer(v_did);
    if (!v_doc.ok()) return fail("resolve", errc_str(v_doc.error()));
    auto attach = establish_channel(
        subscriber.agent, visited.agent, channel_did, v_did,
        ChannelMode::out_of_band(pairwise.value().document, v_doc.value()));
    if (!attach.ok()) return fail("handshake", errc_str(attach.error()));
    hx.relationships.upgrade_mutual(s_name, v_name, "roaming-attach",
                                    TrustStrength::Authenticated);

    Bytes challenge = visited.agent.random_bytes(crypto::kNonceLen);
    auto challenge_wire = transfer(attach.value().responder, visited.agent,
                                   attach.value().initiator, subscriber.agent, challenge);
    if (!challenge_wire.ok()) return fail("challenge", errc_str(challenge_wire.error()));

    auto stored = wallet_credentials(subscriber.agent.wallet());
    if (stored.empty()) return fail("create_vp", "wallet holds no credential");
    VerifiablePresentation vp;
    if (adv_wrong_key) {
        // A stranger presents the subscriber's credential under its own key.
        Bytes stranger_seed = crypto::derive_key("did6g/scenario/v1",
                                                 {hx.seed_bytes, to_bytes("stranger")});
        auto stranger = generate_keypair(KeyPurpose::Authentication, stranger_seed);
        if (!stranger.ok()) return fail("create_vp", errc_str(stranger.error()));
        vp = make_vp(stored.front(), challenge_wire.value(), v_did, stranger.value(), "key-0",
                     stranger.value().public_key);
    } else {
        auto honest = create_vp(subscriber.agent, stored.front(), challenge_wire.value(), v_did);
        if (!honest.ok()) return fail("create_vp", errc_str(honest.error()));
        vp = std::move(honest.value());
    }
    auto vp_wire = transfer(attach.value().initiator, subscriber.agent,
                            attach.value().responder, visited.agent,
                            to_bytes(vp_to_json(vp).dump()));
    if (!vp_wire.ok()) return fail("present_vp", errc_str(vp_wire.error()));

    // Phase 3 — verify: issuer proof via the shared registry, ownership
    // proof locally; the home network is never contacted.
    hx.phase("verify");
    visited.agent.begin_step();
    auto received_vp = parse_vp_bytes(vp_wire.value());
    if (!received_vp.ok()) return fail("present_vp", errc_str(received_vp.error()));
    NonceRegistry nonces;
    VpVerdict verdict = verify_vp(visited.agent, received_vp.value(), challenge, nonces);
    if (!verdict.accepted) {
        auto outcome = vp_failure(verdict);
        return fail(outcome.failed_step, outcome.reason);
    }
    hx.relationships.upgrade_mutual(s_name, v_name, "roaming-attach",
                                    TrustStrength::CredentialBacked);

    if (adv_replay) {
        auto replay_wire = transfer(attach.value().initiator, subscriber.agent,
                                    attach.value().responder, visited.agent,
                                    to_bytes(vp_to_json(vp).dump()));
        if (!replay_wire.ok()) return fail("present_vp", errc_str(replay_wire.error()));
        auto replayed = parse_vp_bytes(replay_wire.value());
        if (!replayed.ok()) return fail("present_vp", errc_str(replayed.error()));
        VpVerdict second = verify_vp(visited.agent, replayed.value(), challenge, nonces);
        if (!second.accepted) {
            auto outcome = vp_failure(second);
            return fail(outcome.failed_step, outcome.reason);
        }
    }

    hx.report.home_network_queries_during_attach =
        count_home_queries(hx.report.metrics.events, h_did.str());
    hx.report.extra["pairwiseChannelDid"] = channel_did.str();
    hx.report.extra["vcSubjectDid"] = s_did.str();
    return hx.take(ScenarioOutcome::ok(), &registry);
}

// ── NF access ─────────────────────────────────────────────────────────────

Result<ScenarioReport> run_nf_access_scenario(const ScenarioConfig& config, uint64_t seed) {
    if (auto named = expect_scenario(config, "nf-access"); !named.ok()) return named.error();
    const json& raw = config.raw;
    const std::string a_name = entity_name(raw, "authorizer", "nrf");
    const std::string c_name = entity_name(raw, "consumer", "consumer-nf");
    const std::string p_name = entity_name(raw, "producer", "producer-nf");
    const std::string target = raw.value("targetService", "session-management");
    const std::string scope = raw.value("scope", "invoke");
    const bool probe_denial = raw.value("probeDenial", true);
    const bool adv_scope = adversary_flag(raw, "scopeMismatch");
    const bool adv_revoke = adversary_flag(raw, "revokeGrant");

    Harness hx("nf-access", seed);
    // Present on every exit: a failed run reports zero service, not silence.
    hx.report.extra["targetService"] = target;
    hx.report.extra["producerServed"] = 0;
    hx.report.extra["denialsRecorded"] = 0;
    NetworkEntity authorizer(a_name, EntityKind::NetworkFunction, hx.make_agent(a_name));
    NetworkEntity consumer(c_name, EntityKind::NetworkFunction, hx.make_agent(c_name));
    NetworkEntity producer(p_name, EntityKind::NetworkFunction, hx.make_agent(p_name));

    hx.phase("setup");
    auto a_id = authorizer.agent.create_identity(DidMethod::Registry, true);
    auto c_id = consumer.agent.create_identity(DidMethod::Registry, false);
    auto p_id = producer.agent.create_identity(DidMethod::Registry, false);
    if (!a_id.ok() || !c_id.ok() || !p_id.ok()) {
        return make_error(Errc::BadConfig, "identity setup failed");
    }
    const Did a_did = a_id.value().did;
    const Did c_did = c_id.value().did;
    const Did p_did = p_id.value().did;
    const std::set<std::string> members{a_did.str(), c_did.str(), p_did.str()};

    auto consensus = consensus_from_json(
        raw.value("consensus", json()),
        {{a_name, a_did.str()}, {c_name, c_did.str()}, {p_name, p_did.str()}});
    if (!consensus.ok()) return consensus.error();
    Registry registry(GovernancePolicy::private_permissioned(members, members, {a_did.str()}),
                      consensus.value(), &hx.report.metrics);
    authorizer.grant_registry(&registry);
    consumer.grant_registry(&registry);
    producer.grant_registry(&registry);

    auto fail = [&](std::string step, std::string reason) {
        return hx.take(ScenarioOutcome::fail(std::move(step), std::move(reason)), &registry);
    };

    for (auto* member : {&authorizer, &consumer, &producer}) {
        auto did = member->agent.primary_did();
        if (auto r = submit_create(registry, member->agent, *did); !r.ok()) {
            return fail("register_document", errc_str(r.error()));
        }
    }
    auto round = registry.run_consensus_round();
    if (!round.ok()) return fail("consensus", errc_str(round.error()));
    if (!round.value().committed) return fail("consensus", "round did not commit");

    // Phase 1 — grant: the authorizer hands the consumer a scoped capability.
    hx.phase("grant");
    consumer.agent.begin_step();
    authorizer.agent.begin_step();
    auto grant_channel = establish_channel(consumer.agent, authorizer.agent, c_did, a_did,
                                           ChannelMode::registry_resolved());
    if (!grant_channel.ok()) return fail("handshake", errc_str(grant_channel.error()));
    hx.relationships.upgrade_mutual(c_name, a_name, "access-grant",
                                    TrustStrength::Authenticated);

    json request{{"requestedScope", scope}, {"requestedService", target}};
    auto request_wire = transfer(grant_channel.value().initiator, consumer.agent,
                                 grant_channel.value().responder, authorizer.agent,
                                 to_bytes(request.dump()));
    if (!request_wire.ok()) return fail("access_request", errc_str(request_wire.error()));

    const std::string granted_target = adv_scope ? "unrelated-service" : target;
    auto vc = issue_vc(authorizer.agent, SubjectId{c_did}, "NfAccessGrant",
                       {{"scope", scope}, {"target", granted_target}});
    if (!vc.ok()) return fail("issue_vc", errc_str(vc.error()));
    auto vc_wire = transfer(grant_channel.value().responder, authorizer.agent,
                            grant_channel.value().initiator, consumer.agent,
                            to_bytes(vc_to_json(vc.value()).dump()));
    if (!vc_wire.ok()) return fail("deliver_vc", errc_str(vc_wire.error()));
    auto held = parse_vc_bytes(vc_wire.value());
    if (!held.ok()) return fail("deliver_vc", errc_str(held.error()));
    wallet_store_vc(consumer.agent.wallet(), held.value());

    // Phase 2 — serve: the producer admits only an accepted presentation.
    hx.phase("serve");
    consumer.agent.begin_step();
    producer.agent.begin_step();
    auto serve_channel = establish_channel(consumer.agent, producer.agent, c_did, p_did,
                                           ChannelMode::registry_resolved());
    if (!serve_channel.ok()) return fail("handshake", errc_str(serve_channel.error()));
    hx.relationships.upgrade_mutual(c_name, p_name, "nf-access", TrustStrength::Authenticated);

    uint64_t denials = 0;
    if (probe_denial) {
        json bare{{"presentation", nullptr}, {"service", target}};
        auto bare_wire = transfer(serve_channel.value().initiator, consumer.agent,
                                  serve_channel.value().responder, producer.agent,
                                  to_bytes(bare.dump()));
        if (!bare_wire.ok()) return fail("serve_request", errc_str(bare_wire.error()));
        denials++;
        hx.report.metrics.record("deny", "no accepted presentation", p_did.str(), c_did.str());
        hx.report.extra["denialsRecorded"] = denials;
    }

    if (adv_revoke) {
        if (auto r = revoke_vc(authorizer.agent, vc.value(), registry); !r.ok()) {
            return fail("revoke_vc", errc_str(r.error()));
        }
    }

    Bytes challenge = producer.agent.random_bytes(crypto::kNonceLen);
    auto challenge_wire = transfer(serve_channel.value().responder, producer.agent,
                                   serve_channel.value().initiator, consumer.agent, challenge);
    if (!challenge_wire.ok()) return fail("challenge", errc_str(challenge_wire.error()));

    auto stored = wallet_credentials(consumer.agent.wallet());
    if (stored.empty()) return fail("create_vp", "wallet holds no credential");
    auto vp = create_vp(consumer.agent, stored.front(), challenge_wire.value(), p_did);
    if (!vp.ok()) return fail("create_vp", errc_str(vp.error()));
    auto vp_wire = transfer(serve_channel.value().initiator, consumer.agent,
                            serve_channel.value().responder, producer.agent,
                            to_bytes(vp_to_json(vp.value()).dump()));
    if (!vp_wire.ok()) return fail("present_vp", errc_str(vp_wire.error()));

    // Phase 3 — verify, then authorize against the granted claims.
    hx.phase("verify");
    producer.agent.begin_step();
    auto received_vp = parse_vp_bytes(vp_wire.value());
    if (!received_vp.ok()) return fail("present_vp", errc_str(received_vp.error()));
    NonceRegistry nonces;
    VpVerdict verdict = verify_vp(producer.agent, received_vp.value(), challenge, nonces);
    if (!verdict.accepted) {
        auto outcome = vp_failure(verdict);
        return fail(outcome.failed_step, outcome.reason);
    }

    const auto& claims = received_vp.value().vc.claims;
    auto target_claim = claims.find("target");
    if (target_claim == claims.end() || target_claim->second != target) {
        return fail("claims_check", "ScopeMismatch");
    }

    hx.report.metrics.record("serve", target, p_did.str(), c_did.str());
    hx.relationships.upgrade_mutual(c_name, p_name, "nf-access",
                                    TrustStrength::CredentialBacked);
    hx.report.extra["producerServed"] = 1;
    return hx.take(ScenarioOutcome::ok(), &registry);
}

// ── IoT onboarding ────────────────────────────────────────────────────────

Result<ScenarioReport> run_iot_onboarding_scenario(const ScenarioConfig& config, uint64_t seed) {
    if (auto named = expect_scenario(config, "iot-onboarding"); !named.ok()) return named.error();
    const json& raw = config.raw;
    const std::string d_name = entity_name(raw, "device", "sensor");
    const std::string o_name = entity_name(raw, "operator", "device-operator");
    const std::string m_name = entity_name(raw, "mno", "mno");
    const std::string device_class = raw.value("deviceClass", "iot-sensor");
    const bool adv_subject = adversary_flag(raw, "subjectMismatch");
    const bool adv_unregistered = adversary_flag(raw, "operatorUnregistered");

    Harness hx("iot-onboarding", seed);
    NetworkEntity device(d_name, EntityKind::IotDevice, hx.make_agent(d_name));
    NetworkEntity oper(o_name, EntityKind::IotOperator, hx.make_agent(o_name));
    NetworkEntity mno(m_name, EntityKind::HomeMno, hx.make_agent(m_name));

    hx.phase("setup");
    auto d_id = device.agent.create_identity(DidMethod::SelfCertified, false);
    auto o_id = oper.agent.create_identity(DidMethod::Registry, true);
    auto m_id = mno.agent.create_identity(DidMethod::Registry, false);
    if (!d_id.ok() || !o_id.ok() || !m_id.ok()) {
        return make_error(Errc::BadConfig, "identity setup failed");
    }
    const Did d_did = d_id.value().did;
    const Did o_did = o_id.value().did;
    const Did m_did = m_id.value().did;

    auto consensus = consensus_from_json(raw.value("consensus", json()),
                                         {{o_name, o_did.str()}, {m_name, m_did.str()}});
    if (!consensus.ok()) return consensus.error();
    Registry registry(
        GovernancePolicy::public_permissioned({o_did.str(), m_did.str()}, {m_did.str()}),
        consensus.value(), &hx.report.metrics);
    device.grant_registry(&registry);  // no-op: constrained device, no DL view
    oper.grant_registry(&registry);
    mno.grant_registry(&registry);

    auto fail = [&](std::string step, std::string reason) {
        return hx.take(ScenarioOutcome::fail(std::move(step), std::move(reason)), &registry);
    };

    if (!adv_unregistered) {
        if (auto r = submit_create(registry, oper.agent, o_did); !r.ok()) {
            return fail("register_document", errc_str(r.error()));
        }
    }
    if (auto r = submit_create(registry, mno.agent, m_did); !r.ok()) {
        return fail("register_document", errc_str(r.error()));
    }
    auto round = registry.run_consensus_round();
    if (!round.ok()) return fail("consensus", errc_str(round.error()));
    if (!round.value().committed) return fail("consensus", "round did not commit");

    // Phase 1 — attest: the operator vouches for its device's DID.
    hx.phase("attest");
    auto attest_channel = establish_channel(
        device.agent, oper.agent, d_did, o_did,
        ChannelMode::out_of_band(d_id.value().document, o_id.value().document));
    if (!attest_channel.ok()) return fail("handshake", errc_str(attest_channel.error()));
    hx.relationships.upgrade_mutual(d_name, o_name, "device-attestation",
                                    TrustStrength::Authenticated);

    SubjectId subject{d_did};
    if (adv_subject) {
        // The operator attests some other device's DID; the presenting
        // device cannot prove ownership of it.
        Agent ghost = hx.make_agent("ghost-device");
        auto ghost_id = ghost.create_identity(DidMethod::SelfCertified, false);
        if (!ghost_id.ok()) return fail("issue_vc", errc_str(ghost_id.error()));
        subject = SubjectId{ghost_id.value().did};
    }
    auto vc = issue_vc(oper.agent, subject, "DeviceAttestation",
                       {{"attested", "true"}, {"deviceClass", device_class}});
    if (!vc.ok()) return fail("issue_vc", errc_str(vc.error()));
    auto vc_wire = transfer(attest_channel.value().responder, oper.agent,
                            attest_channel.value().initiator, device.agent,
                            to_bytes(vc_to_json(vc.value()).dump()));
    if (!vc_wire.ok()) return fail("deliver_vc", errc_str(vc_wire.error()));
    auto held = parse_vc_bytes(vc_wire.value());
    if (!held.ok()) return fail("deliver_vc", errc_str(held.error()));
    wallet_store_vc(device.agent.wallet(), held.value());

    // Phase 2 — onboard: out-of-band channel to the MNO; the channel alone
    // earns only self-asserted trust.
    hx.phase("onboard");
    auto onboard_channel = establish_channel(
        device.agent, mno.agent, d_did, m_did,
        ChannelMode::out_of_band(d_id.value().document, m_id.value().document));
    if (!onboard_channel.ok()) return fail("handshake", errc_str(onboard_channel.error()));
    hx.relationships.upgrade_mutual(d_name, m_name, "iot-onboarding",
                                    TrustStrength::Authenticated);

    Bytes challenge = mno.agent.random_bytes(crypto::kNonceLen);
    auto challenge_wire = transfer(onboard_channel.value().responder, mno.agent,
                                   onboard_channel.value().initiator, device.agent, challenge);
    if (!challenge_wire.ok()) return fail("challenge", errc_str(challenge_wire.error()));

    auto stored = wallet_credentials(device.agent.wallet());
    if (stored.empty()) return fail("create_vp", "wallet holds no credential");
    VerifiablePresentation vp;
    if (adv_subject) {
        // Present anyway, under the device's own key: ownership must fail.
        auto key = device.agent.auth_key_for(d_did);
        if (!key) return fail("create_vp", "device key missing");
        vp = make_vp(stored.front(), challenge_wire.value(), m_did, key->first, key->second,
                     key->first.public_key);
    } else {
        auto honest = create_vp(device.agent, stored.front(), challenge_wire.value(), m_did);
        if (!honest.ok()) return fail("create_vp", errc_str(honest.error()));
        vp = std::move(honest.value());
    }
    auto vp_wire = transfer(onboard_channel.value().initiator, device.agent,
                            onboard_channel.value().responder, mno.agent,
                            to_bytes(vp_to_json(vp).dump()));
    if (!vp_wire.ok()) return fail("present_vp", errc_str(vp_wire.error()));

    // Phase 3 — verify: issuer proof through the operator's registry
    // document; ownership through the self-certified key itself.
    hx.phase("verify");
    mno.agent.begin_step();
    auto received_vp = parse_vp_bytes(vp_wire.value());
    if (!received_vp.ok()) return fail("present_vp", errc_str(received_vp.error()));
    NonceRegistry nonces;
    VpVerdict verdict = verify_vp(mno.agent, received_vp.value(), challenge, nonces);
    if (!verdict.accepted) {
        auto outcome = vp_failure(verdict);
        return fail(outcome.failed_step, outcome.reason);
    }
    hx.relationships.upgrade_mutual(d_name, m_name, "iot-onboarding",
                                    TrustStrength::CredentialBacked);

    hx.report.extra["channelTrustLevel"] =
        std::string(trust_level_name(onboard_channel.value().responder.trust_level));
    hx.report.extra["subjectDid"] = subject_to_string(SubjectId{d_did});
    return hx.take(ScenarioOutcome::ok(), &registry);
}

// ── Consensus sweep ───────────────────────────────────────────────────────

Result<ScenarioReport> run_consensus_sweep(const ScenarioConfig& config, uint64_t seed) {
    if (auto named = expect_scenario(config, "consensus-sweep"); !named.ok()) return named.error();
    const json& raw = config.raw;
    std::vector<uint32_t> node_counts{4, 8, 16, 32};
    if (raw.contains("nodeCounts")) {
        if (!raw["nodeCounts"].is_array()) {
            return make_error(Errc::BadConfig, "nodeCounts must be an array");
        }
        node_counts.clear();
        for (const auto& n : raw["nodeCounts"]) {
            const bool positive = n.is_number_unsigned()
                                      ? n.get<uint64_t>() > 0
                                      : n.is_number_integer() && n.get<int64_t>() > 0;
            if (!positive) {
                return make_error(Errc::BadConfig, "node counts must be positive integers");
            }
            node_counts.push_back(n.get<uint32_t>());
        }
    }
    const uint64_t tx_count = raw.value("txCount", uint64_t{100});
    const uint32_t boundary_max = raw.value("bftBoundaryMax", 13u);
    json fractions = raw.contains("stakeFractions") && raw["stakeFractions"].is_array()
                         ? raw["stakeFractions"]
                         : json::array({0.50, 0.66, 0.666, 0.667, 0.70});

    Harness hx("consensus-sweep", seed);
    auto consensus = consensus_from_json(raw.value("consensus", json()));
    if (!consensus.ok()) return consensus.error();
    const double latency = consensus.value().per_message_latency_ms;

    // Modeled throughput/latency/message table for the configured kind.
    json table = json::array();
    for (const MetricsRow& row : estimate_metrics(consensus.value(), tx_count, node_counts)) {
        table.push_back(json{{"latencyMs", row.latency_ms},
                             {"messages", row.messages},
                             {"nodeCount", row.node_count},
                             {"tps", row.tps ? json(*row.tps) : json("unbounded")}});
    }

    // One writer identity reused across the sweep registries.
    Agent writer = hx.make_agent("sweep-writer");
    auto w_id = writer.create_identity(DidMethod::Registry, false);
    if (!w_id.ok()) return make_error(Errc::BadConfig, "identity setup failed");
    const KeyPair* w_key = writer.key_for(w_id.value().did, "key-0");
    RegistryTransaction create_tx = make_create_tx(w_id.value().document, *w_key);

    // Exhaustive liveness probe: real rounds, every faulty-set size.
    hx.phase("bft-sweep");
    json boundary = json::array();
    for (uint32_t n = 1; n <= boundary_max; ++n) {
        std::optional<uint32_t> halts_at;
        bool consistent = true;
        for (uint32_t f = 0; f <= n; ++f) {
            BftQuorum quorum;
            quorum.node_count = n;
            for (uint32_t i = 0; i < f; ++i) quorum.faulty.insert(i);
            Registry probe(GovernancePolicy::public_permissionless(),
                           ConsensusConfig{quorum, latency}, &hx.report.metrics);
            if (auto r = probe.submit(create_tx); !r.ok()) {
                return make_error(Errc::BadConfig, "sweep submit failed: " + r.error().detail);
            }
            auto outcome = probe.run_consensus_round();
            if (!outcome.ok()) {
                return make_error(Errc::BadConfig, "sweep round failed");
            }
            const bool committed = outcome.value().committed;
            if (!committed && !halts_at) halts_at = f;
            if (committed != (f < (n + 2) / 3)) consistent = false;
        }
        boundary.push_back(json{{"ceilNOver3", (n + 2) / 3},
                                {"haltsAtFaulty", halts_at ? json(*halts_at) : json()},
                                {"matchesModel", consistent},
                                {"nodeCount", n}});
    }

    // Stake-takeover probe across the configured attacker fractions.
    hx.phase("stake-sweep");
    constexpr uint64_t kTotalStake = 1000;
    Agent attacker = hx.make_agent("attacker");
    Agent honest = hx.make_agent("honest-validator");
    auto atk_id = attacker.create_identity(DidMethod::Registry, false);
    auto hon_id = honest.create_identity(DidMethod::Registry, false);
    if (!atk_id.ok() || !hon_id.ok()) return make_error(Errc::BadConfig, "identity setup failed");
    const KeyPair* atk_key = attacker.key_for(atk_id.value().did, "key-0");
    RegistryTransaction atk_create = make_create_tx(atk_id.value().document, *atk_key);

    json takeover = json::array();
    json rewrite_from;  // first fraction that can rewrite
    for (const auto& fraction : fractions) {
        if (!fraction.is_number()) {
            return make_error(Errc::BadConfig, "stakeFractions must be numbers");
        }
        const uint64_t atk_stake =
            static_cast<uint64_t>(std::llround(fraction.get<double>() * kTotalStake));
        StakeLottery lottery;
        lottery.stakes[atk_id.value().did.str()] = atk_stake;
        lottery.stakes[hon_id.value().did.str()] = kTotalStake - atk_stake;
        lottery.rng_seed = seed;
        Registry probe(GovernancePolicy::public_permissionless(),
                       ConsensusConfig{lottery, latency}, &hx.report.metrics);
        if (auto r = probe.submit(atk_create); !r.ok()) {
            return make_error(Errc::BadConfig, "sweep submit failed: " + r.error().detail);
        }
        if (auto r = probe.run_consensus_round(); !r.ok() || !r.value().committed) {
            return make_error(Errc::BadConfig, "lottery round failed to commit");
        }
        auto tamper = probe.inject_stake_takeover(atk_id.value().did);
        if (!tamper.ok()) return make_error(Errc::BadConfig, "takeover probe failed");
        if (tamper.value().can_rewrite && rewrite_from.is_null()) rewrite_from = fraction;
        takeover.push_back(json{{"attackerStake", tamper.value().attacker_stake},
                                {"canRewrite", tamper.value().can_rewrite},
                                {"fraction", fraction},
                                {"leadershipDraws", tamper.value().leadership_draws},
                                {"totalStake", tamper.value().total_stake}});
    }

    hx.report.extra["bftHaltingBoundary"] = std::move(boundary);
    hx.report.extra["metricsTable"] = std::move(table);
    hx.report.extra["stakeTakeover"] = std::move(takeover);
    hx.report.extra["thresholds"] = json{{"bftFaultyFraction", "1/3"},
                                         {"rewritePossibleFromFraction", rewrite_from},
                                         {"stakeRewriteFraction", "2/3"}};
    return hx.take(ScenarioOutcome::ok(), nullptr);
}

// ── Dispatch ──────────────────────────────────────────────────────────────

Result<ScenarioReport> run_scenario(const ScenarioConfig& config, uint64_t seed) {
    if (config.scenario == "roaming") return run_roaming_scenario(config, seed);
    if (config.scenario == "nf-access") return run_nf_access_scenario(config, seed);
    if (config.scenario == "iot-onboarding") return run_iot_onboarding_scenario(config, seed);
    if (config.scenario == "consensus-sweep") return run_consensus_sweep(config, seed);
    return make_error(Errc::BadConfig, "unknown scenario \"" + config.scenario + "\"");
}

}  // namespace did6g
