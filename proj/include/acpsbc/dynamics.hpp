#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "acpsbc/errors.hpp"
#include "acpsbc/rng.hpp"

namespace acpsbc {

enum class ModelKind { single_integrator, unicycle };

struct DynamicsModel {
    ModelKind kind = ModelKind::single_integrator;
    double dt = 0.05;  // [s]
};

/// Continuous robot state. heading is present iff the robot follows unicycle
/// dynamics and is kept normalized to (-pi, pi].
struct RobotState {
    Eigen::Vector2d position{0.0, 0.0};   // [m]
    std::optional<double> heading;        // [rad]
    double radius = 0.0;                  // [m]
};

/// Control vector: (vx, vy) [m/s] for the integrator, (v, omega) [m/s, rad/s]
/// for the unicycle. Bounds are enforced by the solver, not by this type.
using ControlInput = Eigen::Vector2d;

/// Motion-noise description. A mixture picks one component uniformly at
/// random per call (per simulation step), then samples it for all dimensions.
/// `scale` multiplies the draw per dimension.
struct NoiseSpec {
    enum class Kind { gaussian, uniform, mixture };

    Kind kind = Kind::gaussian;
    Eigen::Vector2d sigma{0.0, 0.0};           // gaussian: per-dimension std
    Eigen::Vector2d lo{0.0, 0.0};              // uniform support
    Eigen::Vector2d hi{0.0, 0.0};
    std::vector<NoiseSpec> components;         // mixture members
    Eigen::Vector2d scale{1.0, 1.0};

    static NoiseSpec none() { return gaussian({0.0, 0.0}); }

    static NoiseSpec gaussian(const Eigen::Vector2d& sigma, const Eigen::Vector2d& scale = {1.0, 1.0}) {
        NoiseSpec s;
        s.kind = Kind::gaussian;
        s.sigma = sigma;
        s.scale = scale;
        return s;
    }

    static NoiseSpec uniform(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                             const Eigen::Vector2d& scale = {1.0, 1.0}) {
        NoiseSpec s;
        s.kind = Kind::uniform;
        s.lo = lo;
        s.hi = hi;
        s.scale = scale;
        return s;
    }

    static NoiseSpec mixture(std::vector<NoiseSpec> components, const Eigen::Vector2d& scale = {1.0, 1.0}) {
        NoiseSpec s;
        s.kind = Kind::mixture;
        s.components = std::move(components);
        s.scale = scale;
        return s;
    }

    /// Throws ConfigError naming the invalid field.
    void validate(const std::string& field_prefix = "noise") const;
};

/// Wrap an angle to (-pi, pi].
double wrap_angle(double theta);

/// One draw from the spec; mixtures consume one pick then sample the branch.
Eigen::Vector2d sample_noise(const NoiseSpec& spec, RngStream& rng);

/// Deterministic Euler step (the eps = 0 specialization of step_stochastic).
RobotState step_nominal(const DynamicsModel& model, const RobotState& x, const ControlInput& u);

/// Euler step with motion noise injected at the velocity level: the
/// integrator advances by (u + eps)*dt, the unicycle perturbs (v, omega)
/// before integration.
RobotState step_stochastic(const DynamicsModel& model, const RobotState& x, const ControlInput& u,
                           const NoiseSpec& noise, RngStream& rng);

}  // namespace acpsbc
