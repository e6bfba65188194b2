#include "acpsbc/dynamics.hpp"

#include <cmath>
#include <numbers>

namespace acpsbc {

void NoiseSpec::validate(const std::string& field_prefix) const {
    switch (kind) {
        case Kind::gaussian:
            if (sigma.minCoeff() < 0.0) throw ConfigError(field_prefix + ".sigma: must be >= 0");
            break;
        case Kind::uniform:
            if ((hi - lo).minCoeff() < 0.0) throw ConfigError(field_prefix + ".lo/hi: requires lo <= hi");
            break;
        case Kind::mixture:
            if (components.empty()) throw ConfigError(field_prefix + ".components: mixture must be non-empty");
            for (std::size_t i = 0; i < components.size(); ++i)
                components[i].validate(field_prefix + ".components[" + std::to_string(i) + "]");
            break;
    }
}

double wrap_angle(double theta) {
    const double two_pi = 2.0 * std::numbers::pi;
    double t = std::fmod(theta + std::numbers::pi, two_pi);
    if (t <= 0.0) t += two_pi;
    return t - std::numbers::pi;
}

Eigen::Vector2d sample_noise(const NoiseSpec& spec, RngStream& rng) {
    Eigen::Vector2d draw;
    switch (spec.kind) {
        case NoiseSpec::Kind::gaussian:
            for (int d = 0; d < 2; ++d) draw[d] = spec.sigma[d] == 0.0 ? 0.0 : spec.sigma[d] * rng.normal();
            break;
        case NoiseSpec::Kind::uniform:
            for (int d = 0; d < 2; ++d) draw[d] = rng.uniform(spec.lo[d], spec.hi[d]);
            break;
        case NoiseSpec::Kind::mixture: {
            const std::size_t branch = rng.pick(spec.components.size());
            draw = sample_noise(spec.components[branch], rng);
            break;
        }
    }
    return draw.cwiseProduct(spec.scale);
}

namespace {

void check_model_state(const DynamicsModel& model, const RobotState& x) {
    const bool needs_heading = model.kind == ModelKind::unicycle;
    if (needs_heading != x.heading.has_value())
        throw ConfigError(needs_heading ? "model/state mismatch: unicycle state requires heading"
                                        : "model/state mismatch: integrator state must not carry heading");
}

RobotState advance(const DynamicsModel& model, const RobotState& x, const ControlInput& u) {
    RobotState next = x;
    if (model.kind == ModelKind::single_integrator) {
        next.position += u * model.dt;
    } else {
        const double theta = *x.heading;
        next.position.x() += u[0] * std::cos(theta) * model.dt;
        next.position.y() += u[0] * std::sin(theta) * model.dt;
        next.heading = wrap_angle(theta + u[1] * model.dt);
    }
    return next;
}

}  // namespace

RobotState step_nominal(const DynamicsModel& model, const RobotState& x, const ControlInput& u) {
    check_model_state(model, x);
    return advance(model, x, u);
}

RobotState step_stochastic(const DynamicsModel& model, const RobotState& x, const ControlInput& u,
                           const NoiseSpec& noise, RngStream& rng) {
    check_model_state(model, x);
    return advance(model, x, u + sample_noise(noise, rng));
}

}  // namespace acpsbc
