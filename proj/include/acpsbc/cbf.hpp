#pragma once

#include <Eigen/Dense>
#include <vector>

#include "acpsbc/dynamics.hpp"

namespace acpsbc {

enum class PairKind { robot_robot, robot_obstacle };

struct ObstacleSpec {
    Eigen::Vector2d center{0.0, 0.0};  // [m]
    double radius = 0.0;               // [m]
};

/// One safety relation: robot i vs robot j, or robot i vs obstacle j.
struct BarrierPair {
    PairKind kind = PairKind::robot_robot;
    int i = 0;                    // robot index
    int j = 0;                    // robot index or obstacle index (per kind)
    double combined_radius = 0.0; // R_i + R_j or R_i + R_obstacle
};

/// Affine-in-control barrier certificate B(u) = a_i . u_i + a_j . u_j + c.
/// a_j is zero (and j_in_control false) for obstacles and for robots whose
/// motion is frozen into the drift term.
struct BarrierTerms {
    PairKind kind = PairKind::robot_robot;
    int i = 0;
    int j = 0;
    Eigen::Vector2d a_i{0.0, 0.0};
    Eigen::Vector2d a_j{0.0, 0.0};
    bool j_in_control = false;
    double c = 0.0;      // drift + class-K part
    double h_val = 0.0;  // barrier value at the evaluated state

    double value(const ControlInput& u_i, const ControlInput& u_j = ControlInput::Zero()) const {
        return a_i.dot(u_i) + (j_in_control ? a_j.dot(u_j) : 0.0) + c;
    }
};

/// B(u) - margin >= 0, as handed to the optimizer. Endpoints whose motion is
/// not a decision variable get folded into c and their *_in_control cleared.
struct LinearConstraint {
    PairKind kind = PairKind::robot_robot;
    int i = 0;
    int j = 0;
    Eigen::Vector2d a_i{0.0, 0.0};
    Eigen::Vector2d a_j{0.0, 0.0};
    bool i_in_control = true;
    bool j_in_control = false;
    double c = 0.0;
    double margin = 0.0;
};

enum class TightenMode { barrier, state_lipschitz };

/// Enumerate all robot-robot and robot-obstacle pairs for a scene.
std::vector<BarrierPair> make_pairs(const std::vector<RobotState>& robots,
                                    const std::vector<ObstacleSpec>& obstacles);

/// Squared separation minus squared combined radius, on true centers.
/// Positive iff the pair is safely separated.
double h_value(const BarrierPair& pair, const std::vector<RobotState>& robots,
               const std::vector<ObstacleSpec>& obstacles);

/// Barrier-certificate terms at the given states.
///
/// Integrator: a_i = 2(x_i - x_j), a_j = -a_i, c = gamma*h. Unicycle: the
/// barrier is evaluated at an offset point d ahead of each robot so both
/// controls enter the constraint; the certificate radius is inflated by d per
/// unicycle endpoint so that certified offset separation implies true center
/// separation.
///
/// When `frozen_u_j` is non-null (robot j treated as a moving obstacle), its
/// contribution folds into the drift term c and j_in_control is false.
BarrierTerms barrier_terms(const BarrierPair& pair, const std::vector<RobotState>& robots,
                           const std::vector<ObstacleSpec>& obstacles, const DynamicsModel& model,
                           double gamma, double unicycle_offset = 0.05,
                           const ControlInput* frozen_u_j = nullptr);

/// Conformal tightening: margin = e_r (barrier mode) or lip * e_r
/// (state_lipschitz mode).
LinearConstraint tighten(const BarrierTerms& terms, double e_r,
                         TightenMode mode = TightenMode::barrier, double lip = 0.0);

/// Composite Lipschitz constant L_Lfh + L_Lgh*||u|| + L_Kh.
double lipschitz_bound(double lip_lfh, double lip_lgh, double u_norm, double lip_kh);

}  // namespace acpsbc
