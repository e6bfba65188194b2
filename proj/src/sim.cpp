#include "acpsbc/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <set>
#include <string>

namespace acpsbc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void Scenario::validate() const {
    if (steps < 1) throw ConfigError("steps: must be >= 1");
    if (model.dt <= 0.0) throw ConfigError("dt_s: must be > 0");
    if (robots.empty()) throw ConfigError("robots: at least one robot required");
    const bool unicycle = model.kind == ModelKind::unicycle;
    for (std::size_t i = 0; i < robots.size(); ++i) {
        const std::string field = "robots[" + std::to_string(i) + "]";
        const RobotSpec& r = robots[i];
        if (r.start.radius < 0.0) throw ConfigError(field + ".radius_m: must be >= 0");
        if (unicycle != r.start.heading.has_value())
            throw ConfigError(field + ".heading_rad: " +
                              (unicycle ? "required for unicycle model" : "only valid for unicycle model"));
        if (!r.start.position.allFinite() || !r.goal.allFinite())
            throw ConfigError(field + ".start_m/goal_m: must be finite");
    }
    for (std::size_t o = 0; o < obstacles.size(); ++o)
        if (obstacles[o].radius < 0.0)
            throw ConfigError("obstacles[" + std::to_string(o) + "].radius_m: must be >= 0");
    noise.validate("noise");
    mpc.validate("mpc");
    acp.validate("acp");
    if (gamma <= 0.0) throw ConfigError("gamma: must be > 0");
    if (lipschitz_l < 0.0) throw ConfigError("lipschitz_l: must be >= 0");
    if (unicycle && unicycle_offset <= 0.0) throw ConfigError("unicycle_offset_m: must be > 0");
    if (goal_tolerance <= 0.0) throw ConfigError("goal_tolerance_m: must be > 0");
    if (workspace_half_extent <= 0.0) throw ConfigError("workspace_half_extent_m: must be > 0");

    // Lemma-level assumption: the initial joint state is safe.
    std::vector<RobotState> starts;
    starts.reserve(robots.size());
    for (const auto& r : robots) starts.push_back(r.start);
    for (const BarrierPair& pair : make_pairs(starts, obstacles)) {
        if (h_value(pair, starts, obstacles) <= 0.0)
            throw ConfigError("robots: unsafe initial state for pair (" + std::to_string(pair.i) + "," +
                              std::to_string(pair.j) +
                              (pair.kind == PairKind::robot_obstacle ? ", obstacle)" : ")"));
    }
}

namespace {

struct SimContext {
    const Scenario& sc;
    std::vector<BarrierPair> pairs;
    std::vector<int> group_of;
    int n_groups = 0;

    explicit SimContext(const Scenario& scenario) : sc(scenario) {
        std::vector<RobotState> starts;
        for (const auto& r : scenario.robots) starts.push_back(r.start);
        pairs = make_pairs(starts, scenario.obstacles);
        group_of.resize(pairs.size());
        if (scenario.acp.per_pair) {
            n_groups = static_cast<int>(pairs.size());
            for (std::size_t p = 0; p < pairs.size(); ++p) group_of[p] = static_cast<int>(p);
        } else {
            n_groups = 2;
            for (std::size_t p = 0; p < pairs.size(); ++p)
                group_of[p] = pairs[p].kind == PairKind::robot_robot ? 0 : 1;
        }
    }
};

// Constant-velocity rollout predictions, used when a solve is skipped
// (pinned robot shortcut) or after a brake.
Eigen::MatrixXd fixed_control_predictions(const SimContext& ctx, const std::vector<RobotState>& states,
                                          const std::vector<ControlInput>& velocities, int owner) {
    const int H = ctx.sc.mpc.horizon;
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(ctx.pairs.size()), H, kNaN);
    std::vector<RobotState> cur = states;
    for (int tau = 1; tau <= H; ++tau) {
        for (std::size_t i = 0; i < cur.size(); ++i)
            cur[i] = step_nominal(ctx.sc.model, cur[i], velocities[i]);
        for (std::size_t p = 0; p < ctx.pairs.size(); ++p) {
            const BarrierPair& pair = ctx.pairs[p];
            if (owner >= 0 && pair.i != owner) continue;
            try {
                const BarrierTerms terms = barrier_terms(pair, cur, ctx.sc.obstacles, ctx.sc.model,
                                                         ctx.sc.gamma, ctx.sc.unicycle_offset);
                const ControlInput u_j = pair.kind == PairKind::robot_robot
                                             ? velocities[static_cast<std::size_t>(pair.j)]
                                             : ControlInput::Zero();
                out(static_cast<Eigen::Index>(p), tau - 1) =
                    terms.value(velocities[static_cast<std::size_t>(pair.i)], u_j);
            } catch (const DegenerateGradientError&) {
                // leave NaN; the lag is skipped downstream
            }
        }
    }
    return out;
}

struct StepSolveOutput {
    std::vector<ControlInput> applied;
    std::vector<std::vector<ControlInput>> plan;  // [tau][robot] for warm starting
    Eigen::MatrixXd predictions;
    SolveStatus status = SolveStatus::optimal;
    bool braked = false;
    double max_slack = 0.0;
    int iterations = 0;
};

SolveStatus worse(SolveStatus a, SolveStatus b) { return static_cast<int>(a) >= static_cast<int>(b) ? a : b; }

bool plan_finite(const MpcSolution& sol) {
    for (const auto& per_tau : sol.controls)
        for (const auto& u : per_tau)
            if (!u.allFinite()) return false;
    return true;
}

std::vector<std::vector<ControlInput>> shifted_reference(
    const std::vector<std::vector<ControlInput>>& prev_plan, int horizon, std::size_t n_robots) {
    std::vector<std::vector<ControlInput>> ref(static_cast<std::size_t>(horizon),
                                               std::vector<ControlInput>(n_robots, ControlInput::Zero()));
    if (prev_plan.empty()) return ref;
    for (int tau = 0; tau < horizon; ++tau) {
        const std::size_t src = std::min(static_cast<std::size_t>(tau) + 1, prev_plan.size() - 1);
        ref[static_cast<std::size_t>(tau)] = prev_plan[src];
    }
    return ref;
}

StepSolveOutput solve_step(const SimContext& ctx, const std::vector<RobotState>& states,
                           const std::vector<ControlInput>& last_applied,
                           const Eigen::MatrixXd& quantiles, const std::vector<char>& pinned,
                           const std::vector<std::vector<ControlInput>>& prev_plan) {
    const Scenario& sc = ctx.sc;
    const std::size_t n = states.size();
    const int H = sc.mpc.horizon;
    std::vector<Eigen::Vector2d> goals;
    goals.reserve(n);
    for (const auto& r : sc.robots) goals.push_back(r.goal);

    StepSolveOutput out;
    out.applied.assign(n, ControlInput::Zero());
    out.predictions = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(ctx.pairs.size()), H, kNaN);

    const auto reference = shifted_reference(prev_plan, H, n);

    auto run_solver = [&](const MpcProblem& problem) {
        return sc.model.kind == ModelKind::single_integrator ? solve_qp(problem) : solve_sqp(problem);
    };

    if (!sc.mpc.decoupled) {
        bool braked = false;
        MpcSolution sol;
        try {
            const MpcProblem problem = build_problem(
                states, goals, sc.obstacles, ctx.pairs, quantiles, sc.mpc, sc.model, sc.gamma,
                sc.unicycle_offset, sc.tighten_mode, sc.lipschitz_l, nullptr, nullptr, &pinned,
                &reference);
            sol = run_solver(problem);
            if (sol.status == SolveStatus::max_iter || !plan_finite(sol)) braked = true;
        } catch (const DegenerateGradientError&) {
            braked = true;
        }
        if (braked) {
            out.braked = true;
            out.status = SolveStatus::max_iter;
            out.iterations = sol.iterations;
            const std::vector<ControlInput> zeros(n, apply_brake(sc.model));
            out.predictions = fixed_control_predictions(ctx, states, zeros, -1);
            out.plan.assign(static_cast<std::size_t>(H), zeros);
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) out.applied[i] = sol.controls[0][i];
        out.plan = sol.controls;
        out.predictions = sol.predicted_barriers;
        out.status = sol.status;
        out.max_slack = sol.max_slack;
        out.iterations = sol.iterations;
        return out;
    }

    // Decoupled: each robot optimizes its own controls with every other robot
    // frozen at its current (last applied) velocity. Pair predictions come
    // from the owning (lower-index) endpoint's solve.
    out.plan.assign(static_cast<std::size_t>(H), std::vector<ControlInput>(n, ControlInput::Zero()));
    for (int r = 0; r < static_cast<int>(n); ++r) {
        if (pinned[static_cast<std::size_t>(r)] != 0) {
            std::vector<ControlInput> vel = last_applied;
            vel[static_cast<std::size_t>(r)] = apply_brake(sc.model);
            const Eigen::MatrixXd mine = fixed_control_predictions(ctx, states, vel, r);
            for (std::size_t p = 0; p < ctx.pairs.size(); ++p)
                if (ctx.pairs[p].i == r) out.predictions.row(static_cast<Eigen::Index>(p)) =
                    mine.row(static_cast<Eigen::Index>(p));
            continue;  // controls stay zero
        }
        bool braked = false;
        MpcSolution sol;
        try {
            const std::vector<int> controlled{r};
            const MpcProblem problem = build_problem(
                states, goals, sc.obstacles, ctx.pairs, quantiles, sc.mpc, sc.model, sc.gamma,
                sc.unicycle_offset, sc.tighten_mode, sc.lipschitz_l, &controlled, &last_applied,
                &pinned, &reference);
            sol = run_solver(problem);
            if (sol.status == SolveStatus::max_iter || !plan_finite(sol)) braked = true;
        } catch (const DegenerateGradientError&) {
            braked = true;
        }
        if (braked) {
            out.braked = true;
            out.status = SolveStatus::max_iter;
            out.iterations += sol.iterations;
            std::vector<ControlInput> vel = last_applied;
            vel[static_cast<std::size_t>(r)] = apply_brake(sc.model);
            const Eigen::MatrixXd mine = fixed_control_predictions(ctx, states, vel, r);
            for (std::size_t p = 0; p < ctx.pairs.size(); ++p)
                if (ctx.pairs[p].i == r) out.predictions.row(static_cast<Eigen::Index>(p)) =
                    mine.row(static_cast<Eigen::Index>(p));
            continue;
        }
        out.applied[static_cast<std::size_t>(r)] = sol.controls[0][static_cast<std::size_t>(r)];
        for (int tau = 0; tau < H; ++tau)
            out.plan[static_cast<std::size_t>(tau)][static_cast<std::size_t>(r)] =
                sol.controls[static_cast<std::size_t>(tau)][static_cast<std::size_t>(r)];
        for (std::size_t p = 0; p < ctx.pairs.size(); ++p)
            if (ctx.pairs[p].i == r) out.predictions.row(static_cast<Eigen::Index>(p)) =
                sol.predicted_barriers.row(static_cast<Eigen::Index>(p));
        out.status = worse(out.status, sol.status);
        out.max_slack = std::max(out.max_slack, sol.max_slack);
        out.iterations += sol.iterations;
    }
    return out;
}

}  // namespace

TrajectoryLog run(const Scenario& scenario) {
    scenario.validate();
    const SimContext ctx(scenario);
    const std::size_t n = scenario.robots.size();
    const int H = scenario.mpc.horizon;

    TrajectoryLog log;
    log.scenario_name = scenario.name;
    log.seed = scenario.seed;
    log.config_hash = config_hash(scenario);
    log.n_robots = static_cast<int>(n);
    log.horizon = H;
    log.n_groups = ctx.n_groups;
    log.pair_list = ctx.pairs;
    log.group_of_pair = ctx.group_of;
    log.steps.reserve(static_cast<std::size_t>(scenario.steps));

    AcpLedger ledger(scenario.acp, H, ctx.n_groups);
    PredictionBuffer buffer(H, static_cast<int>(ctx.pairs.size()));

    std::vector<RngStream> noise_streams;
    noise_streams.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        noise_streams.emplace_back(scenario.seed, "robot" + std::to_string(i) + "/noise");

    std::vector<RobotState> states;
    states.reserve(n);
    for (const auto& r : scenario.robots) states.push_back(r.start);
    std::vector<ControlInput> last_applied(n, ControlInput::Zero());
    std::vector<std::vector<ControlInput>> prev_plan;

    for (int k = 0; k < scenario.steps; ++k) {
        StepRecord rec;
        rec.k = k;
        rec.states = states;

        // Observed certificates with the last applied controls.
        std::vector<double> observed_b(ctx.pairs.size(), kNaN);
        rec.pairs.resize(ctx.pairs.size());
        for (std::size_t p = 0; p < ctx.pairs.size(); ++p) {
            const BarrierPair& pair = ctx.pairs[p];
            rec.pairs[p].h = h_value(pair, states, scenario.obstacles);
            try {
                const ControlInput u_j = pair.kind == PairKind::robot_robot
                                             ? last_applied[static_cast<std::size_t>(pair.j)]
                                             : ControlInput::Zero();
                observed_b[p] = observed_barrier(states, last_applied[static_cast<std::size_t>(pair.i)],
                                                 u_j, pair, scenario.obstacles, scenario.model,
                                                 scenario.gamma, scenario.unicycle_offset);
            } catch (const DegenerateGradientError&) {
                // coincident centers: no certificate; the lag is skipped
            }
            rec.pairs[p].b_hat = observed_b[p];
        }

        // Time-lagged scores, aggregated to the worst error per (group, lag).
        std::vector<std::vector<double>> group_score(
            static_cast<std::size_t>(ctx.n_groups),
            std::vector<double>(static_cast<std::size_t>(H), -1.0));
        for (const LaggedScore& s : lagged_scores(buffer, observed_b, k)) {
            if (!std::isfinite(s.score)) continue;
            auto& cell = group_score[static_cast<std::size_t>(
                ctx.group_of[static_cast<std::size_t>(s.pair)])][static_cast<std::size_t>(s.tau - 1)];
            cell = std::max(cell, s.score);
        }
        for (int g = 0; g < ctx.n_groups; ++g) {
            for (int tau = 1; tau <= H; ++tau) {
                const double score = group_score[static_cast<std::size_t>(g)][static_cast<std::size_t>(tau - 1)];
                if (score < 0.0) continue;
                ledger.record_score(g, tau, score);
                const double q = ledger.tightening_quantile(g, tau);
                const bool breached = score > q;
                const double alpha_used = ledger.alpha_level(g, tau);
                ledger.update_alpha(g, tau, breached);
                rec.lags.push_back({g, tau, score, q, alpha_used, breached});
            }
        }

        // Per-lag tightening quantiles for the solver (zero for the baseline).
        Eigen::MatrixXd quantiles =
            Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ctx.pairs.size()), H);
        if (!scenario.baseline) {
            for (std::size_t p = 0; p < ctx.pairs.size(); ++p)
                for (int tau = 1; tau <= H; ++tau)
                    quantiles(static_cast<Eigen::Index>(p), tau - 1) =
                        ledger.tightening_quantile(ctx.group_of[p], tau);
        }

        // Goal-reached override: controls pinned to zero while inside tolerance.
        std::vector<char> pinned(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            pinned[i] = (states[i].position - scenario.robots[i].goal).norm() <= scenario.goal_tolerance
                            ? 1
                            : 0;

        const auto t0 = std::chrono::steady_clock::now();
        const StepSolveOutput solved =
            solve_step(ctx, states, last_applied, quantiles, pinned, prev_plan);
        rec.solve_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        rec.applied = solved.applied;
        rec.status = solved.status;
        rec.braked = solved.braked;
        rec.max_slack = solved.max_slack;
        rec.iterations = solved.iterations;

        buffer.store(k, solved.predictions);

        rec.min_rr = kNaN;
        rec.min_ro = kNaN;
        for (std::size_t p = 0; p < ctx.pairs.size(); ++p) {
            const BarrierPair& pair = ctx.pairs[p];
            const Eigen::Vector2d xi = states[static_cast<std::size_t>(pair.i)].position;
            const Eigen::Vector2d xj = pair.kind == PairKind::robot_robot
                                           ? states[static_cast<std::size_t>(pair.j)].position
                                           : scenario.obstacles[static_cast<std::size_t>(pair.j)].center;
            const double clearance = (xi - xj).norm() - pair.combined_radius;
            double& slot = pair.kind == PairKind::robot_robot ? rec.min_rr : rec.min_ro;
            if (std::isnan(slot) || clearance < slot) slot = clearance;
        }

        log.steps.push_back(std::move(rec));

        for (std::size_t i = 0; i < n; ++i)
            states[i] = step_stochastic(scenario.model, states[i], solved.applied[i], scenario.noise,
                                        noise_streams[i]);
        last_applied = solved.applied;
        prev_plan = solved.plan;
    }
    return log;
}

std::optional<double> coverage_rate(const TrajectoryLog& log, int tau) {
    long covered = 0;
    long total = 0;
    for (const StepRecord& rec : log.steps) {
        for (const LagRecord& lag : rec.lags) {
            if (lag.tau != tau) continue;
            ++total;
            if (!lag.breached) ++covered;
        }
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(covered) / static_cast<double>(total);
}

MinDistanceSeries min_distance_series(const TrajectoryLog& log) {
    MinDistanceSeries out;
    bool has_rr = false;
    bool has_ro = false;
    for (const BarrierPair& pair : log.pair_list) {
        has_rr = has_rr || pair.kind == PairKind::robot_robot;
        has_ro = has_ro || pair.kind == PairKind::robot_obstacle;
    }
    for (const StepRecord& rec : log.steps) {
        if (has_rr) out.robot_robot.push_back(rec.min_rr);
        if (has_ro) out.robot_obstacle.push_back(rec.min_ro);
    }
    return out;
}

Metrics compute_metrics(const TrajectoryLog& log, const Scenario& scenario) {
    Metrics m;
    m.steps_run = static_cast<int>(log.steps.size());
    m.min_h = kInf;
    m.min_clearance_rr = kNaN;
    m.min_clearance_ro = kNaN;
    std::vector<char> touched(scenario.robots.size(), 0);
    double solve_total = 0.0;
    for (const StepRecord& rec : log.steps) {
        for (const PairRecord& pr : rec.pairs) m.min_h = std::min(m.min_h, pr.h);
        if (!std::isnan(rec.min_rr))
            m.min_clearance_rr = std::isnan(m.min_clearance_rr) ? rec.min_rr
                                                                : std::min(m.min_clearance_rr, rec.min_rr);
        if (!std::isnan(rec.min_ro))
            m.min_clearance_ro = std::isnan(m.min_clearance_ro) ? rec.min_ro
                                                                : std::min(m.min_clearance_ro, rec.min_ro);
        solve_total += rec.solve_ms;
        bool all_touched = true;
        for (std::size_t i = 0; i < scenario.robots.size(); ++i) {
            if ((rec.states[i].position - scenario.robots[i].goal).norm() <= scenario.goal_tolerance)
                touched[i] = 1;
            all_touched = all_touched && touched[i] != 0;
        }
        if (all_touched && !m.goal_reach_step) m.goal_reach_step = rec.k;
    }
    m.collided = m.min_h < 0.0;
    m.mean_solve_ms = log.steps.empty() ? 0.0 : solve_total / static_cast<double>(log.steps.size());
    m.coverage_per_lag.resize(static_cast<std::size_t>(log.horizon));
    for (int tau = 1; tau <= log.horizon; ++tau)
        m.coverage_per_lag[static_cast<std::size_t>(tau - 1)] = coverage_rate(log, tau);
    return m;
}

std::vector<Metrics> batch_run(const Scenario& scenario, const std::vector<std::uint64_t>& seeds) {
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw ConfigError("batch seeds must be distinct");
    std::vector<std::future<Metrics>> futures;
    futures.reserve(seeds.size());
    for (const std::uint64_t seed : seeds) {
        Scenario copy = scenario;
        copy.seed = seed;
        futures.push_back(std::async(std::launch::async, [copy]() {
            const TrajectoryLog log = run(copy);
            return compute_metrics(log, copy);
        }));
    }
    std::vector<Metrics> out;
    out.reserve(seeds.size());
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

}  // namespace acpsbc
