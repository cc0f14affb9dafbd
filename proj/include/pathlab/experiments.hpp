#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pathlab/config.hpp"

namespace pathlab {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumerical = 3, kExitBudget = 4 };

struct RunContext {
    std::filesystem::path out;
    int threads = 1;
    std::optional<std::uint64_t> seed;  // overrides the config seed
};

struct CommandResult {
    std::vector<nlohmann::json> records;
    int exit_code = kExitOk;
};

enum class VerdictKind { NonAbsolutelyContinuous, ConsistentWithAC, Inconclusive };
const char* to_string(VerdictKind v);

struct Verdict {
    std::vector<int> foliation;  // 1-based
    double chi = 0.0;
    std::string chi_provenance;
    ExponentReport lambda;
    double gap = 0.0;
    double sigma = 3.0;
    double floor = 0.0;
    VerdictKind verdict = VerdictKind::Inconclusive;
    std::string failed_stage;  // empty when every preflight passed
    nlohmann::json preflight = nlohmann::json::object();
    nlohmann::json cross_check;  // null unless requested
};

/// Full detector pipeline on `map`. Never throws NumericalError: failures become
/// INCONCLUSIVE with the stage named.
Verdict detect(const TorusMap& map, const DetectSpec& spec, const std::vector<int>& splitting,
               const AlignmentOptions& alignment, std::uint64_t seed, int threads);

nlohmann::json to_json(const Verdict& v);

/// Sub-seed for an independent purpose, so diagnostics never share streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

CommandResult cmd_analyze(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_growth(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_cycle(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_exponents(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_detect(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_sweep(const ExperimentConfig& cfg, const RunContext& ctx);

/// Loads the config, runs `command`, writes `<out>/<command>.jsonl` and maps errors to
/// exit codes. Messages go to `log`.
int run_command(const std::string& command, const std::string& config_path, const RunContext& ctx,
                std::ostream& log);

} // namespace pathlab
