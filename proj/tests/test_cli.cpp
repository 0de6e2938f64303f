#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

using nlohmann::json;

namespace {

struct CmdResult {
    int exit_code;
    std::string output;  // stdout and stderr combined
};

CmdResult run_cmd(const std::string& args) {
    const std::string cmd = std::string(DID6G_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
    const int status = pclose(pipe);
    REQUIRE(status != -1);
    return CmdResult{WIFEXITED(status) ? WEXITSTATUS(status) : -1, std::move(output)};
}

std::string config_path(const char* name) {
    return std::string(DID6G_CONFIG_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

json load_json(const std::string& path) {
    return json::parse(slurp(path));
}

std::string tmp_path(const char* name) {
    return std::string("/tmp/did6g_cli_") + name;
}

}  // namespace

TEST_CASE("every shipped configuration runs to Success") {
    const struct {
        const char* scenario;
        const char* config;
    } runs[] = {
        {"roaming", "roaming.json"},
        {"nf-access", "nf_access.json"},
        {"iot-onboarding", "iot_onboarding.json"},
        {"consensus-sweep", "consensus_sweep.json"},
    };
    for (const auto& r : runs) {
        CAPTURE(r.scenario);
        const std::string out = tmp_path(r.scenario) + ".json";
        auto result = run_cmd(std::string("run ") + r.scenario + " --config " +
                              config_path(r.config) + " --seed 42 --output " + out);
        CHECK(result.exit_code == 0);
        json report = load_json(out);
        CHECK(report.at("scenario").get<std::string>() == r.scenario);
        CHECK(report.at("seed").get<uint64_t>() == 42);
        CHECK(report.at("outcome").at("status").get<std::string>() == "Success");
        CHECK(report.at("eventLog").is_array());
        CHECK(report.at("counters").at("consensusRounds").get<uint64_t>() > 0);
        std::remove(out.c_str());
    }
}

TEST_CASE("same seed, same bytes; different seed, different report") {
    const std::string out1 = tmp_path("det1.json");
    const std::string out2 = tmp_path("det2.json");
    const std::string out3 = tmp_path("det3.json");
    const std::string base = "run roaming --config " + config_path("roaming.json");
    CHECK(run_cmd(base + " --seed 7 --output " + out1).exit_code == 0);
    CHECK(run_cmd(base + " --seed 7 --output " + out2).exit_code == 0);
    CHECK(run_cmd(base + " --seed 8 --output " + out3).exit_code == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(slurp(out1) != slurp(out3));
    for (const auto& p : {out1, out2, out3}) std::remove(p.c_str());
}

TEST_CASE("a failing scenario exits 2 and still writes the report") {
    const std::string cfg = tmp_path("adversary.json");
    {
        json j = json::parse(slurp(config_path("roaming.json")));
        j["adversary"]["wrongHolderKey"] = true;
        std::ofstream(cfg) << j.dump(2);
    }
    const std::string out = tmp_path("adversary_report.json");
    auto result = run_cmd("run roaming --config " + cfg + " --seed 42 --output " + out);
    CHECK(result.exit_code == 2);
    json report = load_json(out);
    CHECK(report.at("outcome").at("status").get<std::string>() == "Failure");
    CHECK(report.at("outcome").at("step").get<std::string>() == "verify_vp");
    CHECK(report.at("outcome").at("reason").get<std::string>() == "BadOwnershipProof");
    std::remove(cfg.c_str());
    std::remove(out.c_str());
}

TEST_CASE("usage errors exit 1") {
    CHECK(run_cmd("").exit_code == 1);
    CHECK(run_cmd("frobnicate").exit_code == 1);
    CHECK(run_cmd("run").exit_code == 1);  // missing scenario and options
    CHECK(run_cmd("run roaming").exit_code == 1);  // missing required options
    CHECK(run_cmd("run teleport --config " + config_path("roaming.json") +
                  " --seed 1 --output /tmp/did6g_cli_x.json").exit_code == 1);
    CHECK(run_cmd("run roaming --config /nonexistent.json --seed 1 --output "
                  "/tmp/did6g_cli_x.json").exit_code == 1);
    // config and scenario must agree
    CHECK(run_cmd("run roaming --config " + config_path("nf_access.json") +
                  " --seed 1 --output /tmp/did6g_cli_x.json").exit_code == 1);
    CHECK(run_cmd("ledger inspect --state /nonexistent_state.json").exit_code == 1);
    CHECK(run_cmd("--help").exit_code == 0);  // help is not an error
}

TEST_CASE("ledger export and inspect") {
    const std::string out = tmp_path("ledger_report.json");
    const std::string state = tmp_path("ledger_state.json");
    auto result = run_cmd("run roaming --config " + config_path("roaming.json") +
                          " --seed 42 --output " + out + " --ledger-out " + state);
    REQUIRE(result.exit_code == 0);

    auto inspect = run_cmd("ledger inspect --state " + state);
    REQUIRE(inspect.exit_code == 0);

    std::istringstream lines(inspect.output);
    std::string line;
    uint64_t height = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        CHECK(j.at("height").get<uint64_t>() == height);
        CHECK(j.at("blockHash").get<std::string>().size() == 64);
        CHECK(j.at("txIds").is_array());
        if (height == 0) {
            CHECK(j.at("prevHash").get<std::string>() == std::string(64, '0'));
        } else {
            CHECK(j.at("prevHash").get<std::string>() != std::string(64, '0'));
        }
        ++height;
    }
    CHECK(height > 0);

    // The state file itself is the full ledger wire form.
    json state_json = load_json(state);
    CHECK(state_json.at("blocks").is_array());
    CHECK(state_json.at("blocks").size() == height);

    std::remove(out.c_str());
    std::remove(state.c_str());
}
