#include "acpsbc/cbf.hpp"

#include <cmath>
#include <string>

namespace acpsbc {

namespace {

constexpr double kDegenerateDistance = 1e-9;

const RobotState& robot_at(const std::vector<RobotState>& robots, int idx, const char* role) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= robots.size())
        throw ConfigError(std::string("barrier pair references missing robot index (") + role + "=" +
                          std::to_string(idx) + ")");
    return robots[static_cast<std::size_t>(idx)];
}

const ObstacleSpec& obstacle_at(const std::vector<ObstacleSpec>& obstacles, int idx) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= obstacles.size())
        throw ConfigError("barrier pair references missing obstacle index (" + std::to_string(idx) + ")");
    return obstacles[static_cast<std::size_t>(idx)];
}

// Control-to-velocity map of the offset point p + d*(cos t, sin t):
// pdot = G(theta) * (v, omega).
Eigen::Matrix2d offset_velocity_map(double theta, double d) {
    Eigen::Matrix2d g;
    g << std::cos(theta), -d * std::sin(theta), std::sin(theta), d * std::cos(theta);
    return g;
}

}  // namespace

std::vector<BarrierPair> make_pairs(const std::vector<RobotState>& robots,
                                    const std::vector<ObstacleSpec>& obstacles) {
    std::vector<BarrierPair> pairs;
    const int n = static_cast<int>(robots.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            pairs.push_back({PairKind::robot_robot, i, j,
                             robots[static_cast<std::size_t>(i)].radius + robots[static_cast<std::size_t>(j)].radius});
    for (int i = 0; i < n; ++i)
        for (int o = 0; o < static_cast<int>(obstacles.size()); ++o)
            pairs.push_back({PairKind::robot_obstacle, i, o,
                             robots[static_cast<std::size_t>(i)].radius +
                                 obstacles[static_cast<std::size_t>(o)].radius});
    return pairs;
}

double h_value(const BarrierPair& pair, const std::vector<RobotState>& robots,
               const std::vector<ObstacleSpec>& obstacles) {
    const Eigen::Vector2d xi = robot_at(robots, pair.i, "i").position;
    const Eigen::Vector2d xj = pair.kind == PairKind::robot_robot
                                   ? robot_at(robots, pair.j, "j").position
                                   : obstacle_at(obstacles, pair.j).center;
    return (xi - xj).squaredNorm() - pair.combined_radius * pair.combined_radius;
}

BarrierTerms barrier_terms(const BarrierPair& pair, const std::vector<RobotState>& robots,
                           const std::vector<ObstacleSpec>& obstacles, const DynamicsModel& model,
                           double gamma, double unicycle_offset, const ControlInput* frozen_u_j) {
    const bool unicycle = model.kind == ModelKind::unicycle;
    const double d = unicycle ? unicycle_offset : 0.0;

    const RobotState& ri = robot_at(robots, pair.i, "i");
    Eigen::Vector2d pi = ri.position;
    double cert_radius = pair.combined_radius;
    if (unicycle) {
        const double ti = ri.heading.value_or(0.0);
        pi += d * Eigen::Vector2d(std::cos(ti), std::sin(ti));
        cert_radius += d;
    }

    Eigen::Vector2d pj;
    bool j_is_robot = pair.kind == PairKind::robot_robot;
    if (j_is_robot) {
        const RobotState& rj = robot_at(robots, pair.j, "j");
        pj = rj.position;
        if (unicycle) {
            const double tj = rj.heading.value_or(0.0);
            pj += d * Eigen::Vector2d(std::cos(tj), std::sin(tj));
            cert_radius += d;
        }
    } else {
        pj = obstacle_at(obstacles, pair.j).center;
    }

    const Eigen::Vector2d delta = pi - pj;
    if (delta.norm() < kDegenerateDistance)
        throw DegenerateGradientError("coincident centers for pair (" + std::to_string(pair.i) + "," +
                                      std::to_string(pair.j) + "): barrier gradient vanishes");

    BarrierTerms terms;
    terms.kind = pair.kind;
    terms.i = pair.i;
    terms.j = pair.j;
    terms.h_val = delta.squaredNorm() - cert_radius * cert_radius;
    terms.c = gamma * terms.h_val;

    const Eigen::Vector2d grad = 2.0 * delta;
    if (unicycle) {
        terms.a_i = offset_velocity_map(*robot_at(robots, pair.i, "i").heading, d).transpose() * grad;
    } else {
        terms.a_i = grad;
    }

    if (j_is_robot) {
        Eigen::Vector2d a_j;
        if (unicycle) {
            a_j = -(offset_velocity_map(*robot_at(robots, pair.j, "j").heading, d).transpose() * grad);
        } else {
            a_j = -grad;
        }
        if (frozen_u_j != nullptr) {
            terms.c += a_j.dot(*frozen_u_j);
            terms.j_in_control = false;
        } else {
            terms.a_j = a_j;
            terms.j_in_control = true;
        }
    }
    return terms;
}

LinearConstraint tighten(const BarrierTerms& terms, double e_r, TightenMode mode, double lip) {
    if (e_r < 0.0) throw ConfigError("tighten: quantile e_r must be >= 0");
    if (mode == TightenMode::state_lipschitz && lip < 0.0)
        throw ConfigError("tighten: lipschitz constant must be >= 0 in state_lipschitz mode");
    LinearConstraint out;
    out.kind = terms.kind;
    out.i = terms.i;
    out.j = terms.j;
    out.a_i = terms.a_i;
    out.a_j = terms.a_j;
    out.j_in_control = terms.j_in_control;
    out.c = terms.c;
    out.margin = mode == TightenMode::barrier ? e_r : lip * e_r;
    return out;
}

double lipschitz_bound(double lip_lfh, double lip_lgh, double u_norm, double lip_kh) {
    if (lip_lfh < 0.0 || lip_lgh < 0.0 || u_norm < 0.0 || lip_kh < 0.0)
        throw ConfigError("lipschitz_bound: all inputs must be >= 0");
    return lip_lfh + lip_lgh * u_norm + lip_kh;
}

}  // namespace acpsbc
