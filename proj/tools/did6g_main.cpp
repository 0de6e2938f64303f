#include "did6g/scenario.hpp"

#include "did6g/crypto.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitUsage = 1;
constexpr int kExitScenarioFailure = 2;

int run_command(const std::string& scenario, const std::string& config_path, uint64_t seed,
                const std::string& output_path, const std::string& ledger_out) {
    auto config = did6g::ScenarioConfig::load(config_path);
    if (!config.ok()) {
        std::cerr << "error: " << config.error().detail << "\n";
        return kExitUsage;
    }
    if (config.value().scenario != scenario) {
        std::cerr << "error: config file is for scenario \"" << config.value().scenario
                  << "\", not \"" << scenario << "\"\n";
        return kExitUsage;
    }

    auto report = did6g::run_scenario(config.value(), seed);
    if (!report.ok()) {
        std::cerr << "error: " << did6g::errc_name(report.error().code) << ": "
                  << report.error().detail << "\n";
        return kExitUsage;
    }

    const nlohmann::json rendered = did6g::report_to_json(report.value());
    std::ofstream out(output_path);
    if (!out) {
        std::cerr << "error: cannot write " << output_path << "\n";
        return kExitUsage;
    }
    out << rendered.dump(2) << "\n";

    if (!ledger_out.empty()) {
        std::ofstream ledger_file(ledger_out);
        if (!ledger_file) {
            std::cerr << "error: cannot write " << ledger_out << "\n";
            return kExitUsage;
        }
        ledger_file << did6g::ledger_to_json(report.value().ledger).dump(2) << "\n";
    }

    const auto& outcome = report.value().outcome;
    if (outcome.success) {
        std::cout << "Success\n";
        return kExitSuccess;
    }
    std::cout << "Failure(" << outcome.failed_step << ", " << outcome.reason << ")\n";
    return kExitScenarioFailure;
}

int inspect_command(const std::string& state_path) {
    std::ifstream in(state_path);
    if (!in) {
        std::cerr << "error: cannot open " << state_path << "\n";
        return kExitUsage;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) {
        std::cerr << "error: " << state_path << " is not valid JSON\n";
        return kExitUsage;
    }
    auto ledger = did6g::ledger_from_json(j);
    if (!ledger.ok()) {
        std::cerr << "error: " << ledger.error().detail << "\n";
        return kExitUsage;
    }
    std::cout << did6g::ledger_inspect_lines(ledger.value());
    return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
    did6g::crypto::init();

    CLI::App app{"Decentralized identity scenarios for multi-stakeholder networks"};
    app.require_subcommand(1);

    // did6g run <scenario> --config <path> --seed <u64> --output <path.json>
    auto* run = app.add_subcommand("run", "Run a deterministic scenario");
    std::string scenario;
    run->add_option("scenario", scenario, "roaming | nf-access | iot-onboarding | consensus-sweep")
        ->required()
        ->check(CLI::IsMember({"roaming", "nf-access", "iot-onboarding", "consensus-sweep"}));
    std::string config_path;
    run->add_option("--config", config_path, "Scenario configuration (JSON)")->required();
    uint64_t seed = 0;
    run->add_option("--seed", seed, "Deterministic run seed")->required();
    std::string output_path;
    run->add_option("--output", output_path, "Report destination (JSON)")->required();
    std::string ledger_out;
    run->add_option("--ledger-out", ledger_out, "Also write the final ledger state (JSON)");

    // did6g ledger inspect --state <path>
    auto* ledger_cmd = app.add_subcommand("ledger", "Ledger state utilities");
    ledger_cmd->require_subcommand(1);
    auto* inspect = ledger_cmd->add_subcommand("inspect", "Print one JSON line per block");
    std::string state_path;
    inspect->add_option("--state", state_path, "Ledger state file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // help text, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints CLI11's message
        return kExitUsage;
    }

    if (run->parsed()) {
        return run_command(scenario, config_path, seed, output_path, ledger_out);
    }
    return inspect_command(state_path);
}
