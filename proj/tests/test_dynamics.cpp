#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "acpsbc/dynamics.hpp"

using namespace acpsbc;

namespace {

RobotState integrator_state(double x, double y) {
    RobotState s;
    s.position = {x, y};
    return s;
}

RobotState unicycle_state(double x, double y, double theta) {
    RobotState s;
    s.position = {x, y};
    s.heading = theta;
    return s;
}

}  // namespace

TEST_CASE("step_nominal: integrator direct Euler step") {
    const DynamicsModel model{ModelKind::single_integrator, 0.05};
    const RobotState next = step_nominal(model, integrator_state(0, 0), {1.0, 0.0});
    CHECK(next.position.x() == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(next.position.y() == 0.0);
}

TEST_CASE("step_nominal: unicycle zero-turn and rotated-heading cases") {
    const DynamicsModel model{ModelKind::unicycle, 0.05};
    const RobotState a = step_nominal(model, unicycle_state(0, 0, 0.0), {0.08, 0.0});
    CHECK(a.position.x() == doctest::Approx(0.004).epsilon(1e-15));
    CHECK(a.position.y() == 0.0);
    CHECK(*a.heading == 0.0);

    const double half_pi = std::numbers::pi / 2.0;
    const RobotState b = step_nominal(model, unicycle_state(0, 0, half_pi), {0.08, 0.0});
    CHECK(b.position.x() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(b.position.y() == doctest::Approx(0.004).epsilon(1e-15));
    CHECK(*b.heading == doctest::Approx(half_pi));
}

TEST_CASE("step_nominal: model/state mismatch raises configuration error") {
    const DynamicsModel unicycle{ModelKind::unicycle, 0.05};
    CHECK_THROWS_AS(step_nominal(unicycle, integrator_state(0, 0), {0, 0}), ConfigError);
    const DynamicsModel integrator{ModelKind::single_integrator, 0.05};
    CHECK_THROWS_AS(step_nominal(integrator, unicycle_state(0, 0, 0), {0, 0}), ConfigError);
}

TEST_CASE("wrap_angle: heading stays in (-pi, pi] under arbitrary steps") {
    CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(3.0 * std::numbers::pi) == doctest::Approx(std::numbers::pi));

    const DynamicsModel model{ModelKind::unicycle, 0.05};
    RngStream rng(7, "wrap");
    RobotState s = unicycle_state(0, 0, 0);
    for (int i = 0; i < 2000; ++i) {
        s = step_nominal(model, s, {rng.uniform(-0.1, 0.1), rng.uniform(-40.0, 40.0)});
        REQUIRE(*s.heading > -std::numbers::pi);
        REQUIRE(*s.heading <= std::numbers::pi);
    }
}

TEST_CASE("step_nominal: integrator step is additive in the control") {
    RngStream rng(11, "additive");
    const DynamicsModel model{ModelKind::single_integrator, 0.05};
    for (int i = 0; i < 500; ++i) {
        const RobotState x = integrator_state(rng.uniform(-2, 2), rng.uniform(-2, 2));
        const ControlInput u1{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const ControlInput u2{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const RobotState direct = step_nominal(model, x, u1 + u2);
        const RobotState chained = step_nominal(model, step_nominal(model, x, u1), u2);
        CHECK((direct.position - chained.position).norm() < 1e-15);
    }
}

TEST_CASE("step_stochastic: zero noise scale degenerates to the nominal step") {
    const DynamicsModel model{ModelKind::single_integrator, 0.05};
    RngStream rng(3, "zero");
    const NoiseSpec off = NoiseSpec::gaussian({0.0, 0.0});
    const RobotState x = integrator_state(0.3, -0.7);
    const RobotState a = step_stochastic(model, x, {0.4, 0.2}, off, rng);
    const RobotState b = step_nominal(model, x, {0.4, 0.2});
    CHECK(a.position.x() == b.position.x());
    CHECK(a.position.y() == b.position.y());
}

TEST_CASE("step_stochastic: identical seed and call sequence is bitwise reproducible") {
    const DynamicsModel model{ModelKind::single_integrator, 0.05};
    const NoiseSpec noise = NoiseSpec::gaussian({1.0, 1.0});
    for (int trial = 0; trial < 3; ++trial) {
        RngStream rng_a(42, "traj");
        RngStream rng_b(42, "traj");
        RobotState a = integrator_state(0, 0);
        RobotState b = integrator_state(0, 0);
        for (int k = 0; k < 200; ++k) {
            a = step_stochastic(model, a, {0.5, -0.2}, noise, rng_a);
            b = step_stochastic(model, b, {0.5, -0.2}, noise, rng_b);
            REQUIRE(a.position.x() == b.position.x());
            REQUIRE(a.position.y() == b.position.y());
        }
    }
}

// Monte-Carlo oracle on the sampler: the noise displacement is eps*dt with
// eps ~ N(0, 1) per dimension, so the empirical mean over N draws must sit
// within 3*sigma*dt/sqrt(N) of zero.
TEST_CASE("step_stochastic: empirical mean of the noise displacement is centered") {
    const DynamicsModel model{ModelKind::single_integrator, 0.05};
    const NoiseSpec noise = NoiseSpec::gaussian({1.0, 1.0});
    RngStream rng(2024, "mc");
    const int n = 100000;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    const RobotState x = integrator_state(0, 0);
    const ControlInput u{0.3, 0.1};
    const RobotState nominal = step_nominal(model, x, u);
    for (int i = 0; i < n; ++i)
        sum += step_stochastic(model, x, u, noise, rng).position - nominal.position;
    const Eigen::Vector2d mean = sum / n;
    const double bound = 3.0 * 1.0 * model.dt / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean.x()) < bound);
    CHECK(std::abs(mean.y()) < bound);
}

TEST_CASE("sample_noise: uniform support containment") {
    RngStream rng(5, "uniform");
    const NoiseSpec spec = NoiseSpec::uniform({-1, -1}, {1, 1});
    for (int i = 0; i < 10000; ++i) {
        const Eigen::Vector2d draw = sample_noise(spec, rng);
        REQUIRE(draw.minCoeff() >= -1.0);
        REQUIRE(draw.maxCoeff() <= 1.0);
    }
}

TEST_CASE("sample_noise: gaussian sigma zero is exactly zero") {
    RngStream rng(5, "sigma0");
    const NoiseSpec spec = NoiseSpec::gaussian({0.0, 0.0});
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector2d draw = sample_noise(spec, rng);
        CHECK(draw.x() == 0.0);
        CHECK(draw.y() == 0.0);
    }
}

// Branch-counter oracle: with branches whose outputs cannot overlap
// (constant 0 vs constant 5), every draw identifies the branch it came from.
TEST_CASE("sample_noise: mixture picks branches uniformly") {
    RngStream rng(17, "mixture");
    const NoiseSpec spec = NoiseSpec::mixture(
        {NoiseSpec::gaussian({0.0, 0.0}), NoiseSpec::uniform({5, 5}, {5, 5})});
    int first = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d draw = sample_noise(spec, rng);
        if (draw.x() == 0.0)
            ++first;
        else
            REQUIRE(draw.x() == doctest::Approx(5.0));
    }
    const double fraction = static_cast<double>(first) / n;
    CHECK(fraction == doctest::Approx(0.5).epsilon(0.04));
    CHECK(std::abs(fraction - 0.5) <= 0.02);
}

// Output-statistics check on the distribution pair used in simulation:
// |draw| > 1 can only come from the gaussian branch, with probability
// 0.5 * P(|N(0,1)| > 1) = 0.1587.
TEST_CASE("sample_noise: gaussian/uniform mixture tail fraction") {
    RngStream rng(23, "mixture2");
    const NoiseSpec spec = NoiseSpec::mixture(
        {NoiseSpec::gaussian({1.0, 1.0}), NoiseSpec::uniform({-1, -1}, {1, 1})});
    int tail = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
        if (std::abs(sample_noise(spec, rng).x()) > 1.0) ++tail;
    CHECK(static_cast<double>(tail) / n == doctest::Approx(0.1587).epsilon(0.12));
}

TEST_CASE("NoiseSpec validation names the offending field") {
    NoiseSpec bad = NoiseSpec::gaussian({-1.0, 1.0});
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("sigma"), ConfigError);
    NoiseSpec swapped = NoiseSpec::uniform({1, 1}, {-1, -1});
    CHECK_THROWS_AS(swapped.validate(), ConfigError);
    NoiseSpec empty = NoiseSpec::mixture({});
    CHECK_THROWS_WITH_AS(empty.validate(), doctest::Contains("components"), ConfigError);
}

TEST_CASE("named streams are independent of one another") {
    RngStream a1(9, "robot0/noise");
    RngStream b(9, "robot1/noise");
    RngStream a2(9, "robot0/noise");
    (void)b;
    for (int i = 0; i < 100; ++i) REQUIRE(a1.next_u64() == a2.next_u64());
}
