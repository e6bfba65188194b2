#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acpsbc/acp.hpp"
#include "acpsbc/mpc.hpp"

namespace acpsbc {

struct RobotSpec {
    RobotState start;
    Eigen::Vector2d goal{0.0, 0.0};
};

struct Scenario {
    std::string name = "scenario";
    DynamicsModel model;
    int steps = 100;
    std::uint64_t seed = 1;
    std::vector<RobotSpec> robots;
    std::vector<ObstacleSpec> obstacles;
    NoiseSpec noise = NoiseSpec::none();  // instantiated per robot through named streams
    MpcParams mpc;
    double gamma = 1.0;
    AcpConfig acp;
    TightenMode tighten_mode = TightenMode::barrier;
    double lipschitz_l = 0.0;             // only used in state_lipschitz mode
    double unicycle_offset = 0.05;        // [m]
    double goal_tolerance = 0.05;         // [m]
    double workspace_half_extent = 2.5;   // [m], plot frame
    bool baseline = false;                // cbf_baseline: tightening margin forced to 0

    /// Throws ConfigError naming the offending field. Rejects unsafe starts
    /// (some pair with h <= 0).
    void validate() const;
};

/// Per-(group, lag) breach bookkeeping for one step.
struct LagRecord {
    int group = 0;
    int tau = 0;
    double score = 0.0;
    double quantile = 0.0;  // quantile the score was checked against
    double alpha = 0.0;     // level in force at the check
    bool breached = false;
};

struct PairRecord {
    double h = 0.0;      // true-center barrier value at the observed state
    double b_hat = 0.0;  // observed certificate with the last applied control
};

struct StepRecord {
    int k = 0;
    std::vector<RobotState> states;     // observed joint state at step k
    std::vector<ControlInput> applied;  // controls applied at step k
    std::vector<PairRecord> pairs;
    std::vector<LagRecord> lags;
    double min_rr = 0.0;  // min over robot pairs of (distance - combined radius); NaN if no pairs
    double min_ro = 0.0;
    double max_slack = 0.0;
    SolveStatus status = SolveStatus::optimal;
    bool braked = false;
    int iterations = 0;
    double solve_ms = 0.0;  // wall time; excluded from determinism comparisons
};

struct TrajectoryLog {
    std::string scenario_name;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    int n_robots = 0;
    int horizon = 0;
    int n_groups = 0;
    std::vector<BarrierPair> pair_list;
    std::vector<int> group_of_pair;
    std::vector<StepRecord> steps;
};

struct Metrics {
    double min_h = 0.0;  // +inf when no pairs exist
    bool collided = false;
    std::optional<int> goal_reach_step;  // first k by which every robot has touched its goal
    std::vector<std::optional<double>> coverage_per_lag;  // index tau-1
    double mean_solve_ms = 0.0;
    double min_clearance_rr = 0.0;  // NaN when absent
    double min_clearance_ro = 0.0;
    int steps_run = 0;
};

/// Closed-loop execution: observe, score, adapt, tighten, solve, act.
/// Deterministic under a fixed seed.
TrajectoryLog run(const Scenario& scenario);

/// Fraction of lag-tau coverage events (all groups) with breached = false.
/// Empty when the log holds no events at that lag.
std::optional<double> coverage_rate(const TrajectoryLog& log, int tau);

struct MinDistanceSeries {
    std::vector<double> robot_robot;     // per step; empty when no such pairs
    std::vector<double> robot_obstacle;
};
MinDistanceSeries min_distance_series(const TrajectoryLog& log);

Metrics compute_metrics(const TrajectoryLog& log, const Scenario& scenario);

/// Independent runs over distinct seeds; executed concurrently, results
/// ordered by seed index.
std::vector<Metrics> batch_run(const Scenario& scenario, const std::vector<std::uint64_t>& seeds);

/// Stable hash of the scenario's canonical serialization (see scenario_io).
std::uint64_t config_hash(const Scenario& scenario);

}  // namespace acpsbc
