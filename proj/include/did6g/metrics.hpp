#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace did6g {

/// One entry in a scenario's ordered event log. `from`/`to` are DID strings,
/// populated for envelope traffic so reports stay independently auditable.
struct ScenarioEvent {
    std::string step;
    std::string phase;
    std::string detail;
    std::string from;
    std::string to;
};

/// Counters and event log shared by the registry, agents and the harness.
/// Optional everywhere; a null sink disables collection.
struct MetricsSink {
    uint64_t envelopes_sent = 0;
    uint64_t registry_reads = 0;
    uint64_t registry_writes = 0;
    uint64_t consensus_rounds = 0;
    uint64_t consensus_messages = 0;

    std::string phase;
    std::vector<ScenarioEvent> events;

    void record(std::string step, std::string detail = {}, std::string from = {},
                std::string to = {}) {
        events.push_back({std::move(step), phase, std::move(detail), std::move(from),
                          std::move(to)});
    }
};

}  // namespace did6g
