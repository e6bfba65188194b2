#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acpsbc/sim.hpp"

namespace acpsbc {

/// Command exit codes: 0 success, 2 validation error, 3 solver abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

struct RunConfig {
    std::string scenario_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;  // overrides the scenario seed
    std::string method = "acp_sbc";     // acp_sbc | cbf_baseline
    bool plots = true;
};

enum class SweepParameter { horizon, gamma, alpha };
std::optional<SweepParameter> parse_sweep_parameter(const std::string& name);

int cmd_run(const RunConfig& config);
int cmd_sweep(const RunConfig& config, SweepParameter parameter, const std::vector<double>& values);
int cmd_compare(const RunConfig& config);
int cmd_batch(const RunConfig& config, int n_seeds);

}  // namespace acpsbc
