#pragma once

#include <Eigen/Dense>
#include <vector>

#include "acpsbc/acp.hpp"
#include "acpsbc/cbf.hpp"
#include "acpsbc/dynamics.hpp"
#include "acpsbc/qp.hpp"

namespace acpsbc {

enum class SolveStatus { optimal, relaxed, max_iter };

const char* to_string(SolveStatus status);

struct MpcParams {
    int horizon = 8;
    double q_weight = 1.0;    // stage position error
    double r_weight = 0.1;    // control effort
    double p_weight = 10.0;   // terminal position error
    Eigen::Vector2d u_min{-1.0, -1.0};
    Eigen::Vector2d u_max{1.0, 1.0};
    double slack_penalty = 1e4;
    double eps_tol = 1e-8;    // solver residual tolerance; also SQP step tolerance
    int max_iter = 4000;
    int sqp_max_iter = 10;
    double sqp_step = 0.5;
    bool decoupled = false;   // per-robot solves with others frozen at current velocity

    void validate(const std::string& field_prefix = "mpc") const;
};

/// Finite-horizon tracking problem with tightened barrier constraints.
/// `controlled` lists the robots whose controls are decision variables; all
/// other robots advance at `frozen_velocity`. Robots flagged `pinned` have
/// their controls fixed to zero (goal-reached override).
struct MpcProblem {
    DynamicsModel model;
    std::vector<RobotState> states;        // joint state at solve time
    std::vector<Eigen::Vector2d> goals;
    std::vector<ObstacleSpec> obstacles;
    std::vector<BarrierPair> pairs;
    Eigen::MatrixXd quantiles;             // (n_pairs, H) conformal quantiles per lag
    TightenMode tighten_mode = TightenMode::barrier;
    double lipschitz_l = 0.0;
    MpcParams params;
    double gamma = 1.0;
    double unicycle_offset = 0.05;
    std::vector<int> controlled;
    std::vector<ControlInput> frozen_velocity;               // per robot
    std::vector<char> pinned;                                 // per robot
    std::vector<std::vector<ControlInput>> reference;         // [tau][robot] warm start / rollout
    std::vector<std::vector<LinearConstraint>> constraints;   // [tau-1], built at the reference rollout
};

struct MpcSolution {
    std::vector<std::vector<ControlInput>> controls;       // [tau][robot]; frozen robots keep their velocity
    std::vector<std::vector<RobotState>> states;           // nominal rollout, [tau 0..H][robot]
    /// (pair, tau-1): predicted barrier observation for time k+tau -- the
    /// certificate at the nominal state of step tau with the control of step
    /// tau-1. NaN for pairs not owned by this solve (decoupled mode).
    Eigen::MatrixXd predicted_barriers;
    std::vector<double> slack;                              // per constraint row
    double max_slack = 0.0;
    SolveStatus status = SolveStatus::optimal;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;                                 // true rollout cost of controlled robots
};

/// Assemble the horizon problem: constraints are built from barrier terms at
/// the nominal predicted state of step tau-1 (reference rollout, zero noise)
/// and tightened by the lag-tau quantile.
MpcProblem build_problem(const std::vector<RobotState>& joint_state,
                         const std::vector<Eigen::Vector2d>& goals,
                         const std::vector<ObstacleSpec>& obstacles,
                         const std::vector<BarrierPair>& pairs, const Eigen::MatrixXd& quantiles,
                         const MpcParams& params, const DynamicsModel& model, double gamma,
                         double unicycle_offset = 0.05,
                         TightenMode tighten_mode = TightenMode::barrier, double lipschitz_l = 0.0,
                         const std::vector<int>* controlled = nullptr,
                         const std::vector<ControlInput>* frozen_velocity = nullptr,
                         const std::vector<char>* pinned = nullptr,
                         const std::vector<std::vector<ControlInput>>* reference = nullptr);

/// Single-integrator solve: one QP (constraints affine in controls). Falls
/// back to slack-relaxed constraints when the hard problem is infeasible.
MpcSolution solve_qp(const MpcProblem& problem);

/// Unicycle solve: damped SQP -- roll out, linearize dynamics and barrier
/// terms at the rollout, solve the QP, step, repeat.
MpcSolution solve_sqp(const MpcProblem& problem);

/// Zero command (integrator: u=0; unicycle: v=0, omega=0).
ControlInput apply_brake(const DynamicsModel& model);

}  // namespace acpsbc
