#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acpsbc/sim.hpp"

namespace acpsbc {

/// One CSV record under the stable schema
///   k,type,id_a,id_b,tau,h,b_hat,quantile,alpha,breached,min_rr,min_ro,slack,status
/// Row types: rr/ro (per-pair h and observed certificate), lag (coverage
/// event; the score is carried in the b_hat column), step (per-step
/// aggregates). Absent fields serialize as empty.
struct TrajectoryRow {
    int k = 0;
    std::string type;
    std::optional<int> id_a;
    std::optional<int> id_b;
    std::optional<int> tau;
    std::optional<double> h;
    std::optional<double> b_hat;
    std::optional<double> quantile;
    std::optional<double> alpha;
    std::optional<int> breached;
    std::optional<double> min_rr;
    std::optional<double> min_ro;
    std::optional<double> slack;
    std::optional<std::string> status;
};

std::vector<TrajectoryRow> trajectory_rows(const TrajectoryLog& log);
std::string serialize_trajectory_csv(const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text);

void write_trajectory_csv(const TrajectoryLog& log, const std::string& path);

std::string metrics_to_json(const Metrics& metrics);
void write_metrics_json(const Metrics& metrics, const std::string& path);

/// Sidecar run metadata (seed, config hash, toolkit version).
void write_run_sidecar(const TrajectoryLog& log, const std::string& path);

/// Full-precision decimal formatting used across all CSV output.
std::string format_double(double value);

}  // namespace acpsbc
