#include "acpsbc/mpc.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace acpsbc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSlackTol = 1e-6;
}  // namespace

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::relaxed: return "relaxed";
        case SolveStatus::max_iter: return "max_iter";
    }
    return "unknown";
}

void MpcParams::validate(const std::string& field_prefix) const {
    if (horizon < 1) throw ConfigError(field_prefix + ".horizon: must be >= 1");
    if (q_weight < 0.0 || r_weight < 0.0 || p_weight < 0.0)
        throw ConfigError(field_prefix + ".q_weight/r_weight/p_weight: must be >= 0");
    if ((u_max - u_min).minCoeff() < 0.0)
        throw ConfigError(field_prefix + ".u_min/u_max: requires u_min <= u_max");
    if (slack_penalty <= 0.0) throw ConfigError(field_prefix + ".slack_penalty: must be > 0");
    if (eps_tol <= 0.0) throw ConfigError(field_prefix + ".eps_tol: must be > 0");
    if (max_iter < 1) throw ConfigError(field_prefix + ".max_iter: must be >= 1");
    if (sqp_max_iter < 1) throw ConfigError(field_prefix + ".sqp_max_iter: must be >= 1");
    if (sqp_step <= 0.0 || sqp_step > 1.0)
        throw ConfigError(field_prefix + ".sqp_step: must be in (0, 1]");
}

namespace {

struct Layout {
    int horizon = 0;
    int n_controlled = 0;
    std::vector<int> slot_of;  // robot -> controlled slot, -1 otherwise

    int n_vars() const { return 2 * horizon * n_controlled; }
    int idx(int slot, int tau, int comp) const { return (slot * horizon + tau) * 2 + comp; }
};

Layout make_layout(const MpcProblem& p) {
    Layout lay;
    lay.horizon = p.params.horizon;
    lay.n_controlled = static_cast<int>(p.controlled.size());
    lay.slot_of.assign(p.states.size(), -1);
    for (int s = 0; s < lay.n_controlled; ++s)
        lay.slot_of[static_cast<std::size_t>(p.controlled[static_cast<std::size_t>(s)])] = s;
    return lay;
}

ControlInput control_of(const MpcProblem& p, const Layout& lay, const Eigen::VectorXd& u, int robot,
                        int tau) {
    const int slot = lay.slot_of[static_cast<std::size_t>(robot)];
    if (slot < 0) return p.frozen_velocity[static_cast<std::size_t>(robot)];
    return {u[lay.idx(slot, tau, 0)], u[lay.idx(slot, tau, 1)]};
}

std::vector<std::vector<RobotState>> rollout(const MpcProblem& p, const Layout& lay,
                                             const Eigen::VectorXd& u) {
    const int n = static_cast<int>(p.states.size());
    std::vector<std::vector<RobotState>> out(static_cast<std::size_t>(lay.horizon) + 1);
    out[0] = p.states;
    for (int tau = 0; tau < lay.horizon; ++tau) {
        auto& next = out[static_cast<std::size_t>(tau) + 1];
        next.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            next[static_cast<std::size_t>(i)] = step_nominal(
                p.model, out[static_cast<std::size_t>(tau)][static_cast<std::size_t>(i)],
                control_of(p, lay, u, i, tau));
    }
    return out;
}

// d position(tau) / d U for one robot, in its local (2H)-variable block.
// Exact for the integrator; linearized at the reference rollout for the
// unicycle (theta sensitivity threads through all earlier omega slots).
std::vector<Eigen::MatrixXd> position_sensitivities(const MpcProblem& p, const Layout& lay, int robot,
                                                    const std::vector<std::vector<RobotState>>& ref_states,
                                                    const Eigen::VectorXd& u_ref) {
    const int H = lay.horizon;
    const double dt = p.model.dt;
    const int slot = lay.slot_of[static_cast<std::size_t>(robot)];
    std::vector<Eigen::MatrixXd> m(static_cast<std::size_t>(H) + 1,
                                   Eigen::MatrixXd::Zero(2, 2 * H));
    if (p.model.kind == ModelKind::single_integrator) {
        for (int tau = 1; tau <= H; ++tau) {
            m[static_cast<std::size_t>(tau)] = m[static_cast<std::size_t>(tau) - 1];
            m[static_cast<std::size_t>(tau)](0, 2 * (tau - 1)) += dt;
            m[static_cast<std::size_t>(tau)](1, 2 * (tau - 1) + 1) += dt;
        }
        return m;
    }
    Eigen::RowVectorXd theta_sens = Eigen::RowVectorXd::Zero(2 * H);
    for (int tau = 1; tau <= H; ++tau) {
        const RobotState& at = ref_states[static_cast<std::size_t>(tau) - 1][static_cast<std::size_t>(robot)];
        const double theta = at.heading.value_or(0.0);
        const double v = u_ref[lay.idx(slot, tau - 1, 0)];
        auto& cur = m[static_cast<std::size_t>(tau)];
        cur = m[static_cast<std::size_t>(tau) - 1];
        cur(0, 2 * (tau - 1)) += dt * std::cos(theta);
        cur(1, 2 * (tau - 1)) += dt * std::sin(theta);
        cur.row(0) += -dt * v * std::sin(theta) * theta_sens;
        cur.row(1) += dt * v * std::cos(theta) * theta_sens;
        theta_sens(2 * (tau - 1) + 1) += dt;
    }
    return m;
}

std::vector<std::vector<LinearConstraint>> build_constraints(
    const MpcProblem& p, const Layout& lay, const std::vector<std::vector<RobotState>>& ref_states) {
    const int H = lay.horizon;
    std::vector<std::vector<LinearConstraint>> out(static_cast<std::size_t>(H));
    for (int tau = 1; tau <= H; ++tau) {
        const auto& states = ref_states[static_cast<std::size_t>(tau) - 1];
        for (std::size_t pi = 0; pi < p.pairs.size(); ++pi) {
            const BarrierPair& pair = p.pairs[pi];
            const bool i_ctl = lay.slot_of[static_cast<std::size_t>(pair.i)] >= 0;
            const bool j_ctl = pair.kind == PairKind::robot_robot &&
                               lay.slot_of[static_cast<std::size_t>(pair.j)] >= 0;
            if (!i_ctl && !j_ctl) continue;
            const BarrierTerms terms =
                barrier_terms(pair, states, p.obstacles, p.model, p.gamma, p.unicycle_offset);
            LinearConstraint lc = tighten(terms, p.quantiles(static_cast<Eigen::Index>(pi), tau - 1),
                                          p.tighten_mode, p.lipschitz_l);
            if (!i_ctl) {
                lc.c += lc.a_i.dot(p.frozen_velocity[static_cast<std::size_t>(pair.i)]);
                lc.a_i.setZero();
                lc.i_in_control = false;
            }
            if (lc.j_in_control && !j_ctl) {
                lc.c += lc.a_j.dot(p.frozen_velocity[static_cast<std::size_t>(pair.j)]);
                lc.a_j.setZero();
                lc.j_in_control = false;
            }
            out[static_cast<std::size_t>(tau) - 1].push_back(lc);
        }
    }
    return out;
}

struct Assembled {
    QpProblem qp;
    int n_constraint_rows = 0;
};

Assembled assemble(const MpcProblem& p, const Layout& lay,
                   const std::vector<std::vector<LinearConstraint>>& constraints,
                   const std::vector<std::vector<RobotState>>& ref_states,
                   const Eigen::VectorXd& u_ref) {
    const int H = lay.horizon;
    const int n = lay.n_vars();
    Assembled out;
    out.qp.P = Eigen::MatrixXd::Zero(n, n);
    out.qp.q = Eigen::VectorXd::Zero(n);

    for (int slot = 0; slot < lay.n_controlled; ++slot) {
        const int robot = p.controlled[static_cast<std::size_t>(slot)];
        const auto sens = position_sensitivities(p, lay, robot, ref_states, u_ref);
        const Eigen::VectorXd u_bar = u_ref.segment(2 * H * slot, 2 * H);
        const Eigen::Vector2d goal = p.goals[static_cast<std::size_t>(robot)];
        auto add_tracking = [&](int tau, double w) {
            if (w == 0.0) return;
            const Eigen::MatrixXd& m = sens[static_cast<std::size_t>(tau)];
            const Eigen::Vector2d pos =
                ref_states[static_cast<std::size_t>(tau)][static_cast<std::size_t>(robot)].position;
            const Eigen::Vector2d b = pos - m * u_bar;
            out.qp.P.block(2 * H * slot, 2 * H * slot, 2 * H, 2 * H).noalias() +=
                2.0 * w * m.transpose() * m;
            out.qp.q.segment(2 * H * slot, 2 * H).noalias() += 2.0 * w * m.transpose() * (b - goal);
        };
        for (int tau = 1; tau < H; ++tau) add_tracking(tau, p.params.q_weight);
        add_tracking(H, p.params.p_weight);
        for (int t = 0; t < 2 * H; ++t)
            out.qp.P(2 * H * slot + t, 2 * H * slot + t) += 2.0 * p.params.r_weight;
    }

    int mc = 0;
    for (const auto& per_tau : constraints) mc += static_cast<int>(per_tau.size());
    out.n_constraint_rows = mc;

    const int m_total = mc + n;
    out.qp.A = Eigen::MatrixXd::Zero(m_total, n);
    out.qp.lo = Eigen::VectorXd::Constant(m_total, -kInf);
    out.qp.hi = Eigen::VectorXd::Constant(m_total, kInf);

    int row = 0;
    for (int tau = 1; tau <= H; ++tau) {
        for (const LinearConstraint& lc : constraints[static_cast<std::size_t>(tau) - 1]) {
            if (lc.i_in_control) {
                const int slot = lay.slot_of[static_cast<std::size_t>(lc.i)];
                out.qp.A(row, lay.idx(slot, tau - 1, 0)) = lc.a_i[0];
                out.qp.A(row, lay.idx(slot, tau - 1, 1)) = lc.a_i[1];
            }
            if (lc.j_in_control) {
                const int slot = lay.slot_of[static_cast<std::size_t>(lc.j)];
                out.qp.A(row, lay.idx(slot, tau - 1, 0)) = lc.a_j[0];
                out.qp.A(row, lay.idx(slot, tau - 1, 1)) = lc.a_j[1];
            }
            out.qp.lo[row] = lc.margin - lc.c;
            ++row;
        }
    }
    for (int slot = 0; slot < lay.n_controlled; ++slot) {
        const bool pin = p.pinned[static_cast<std::size_t>(p.controlled[static_cast<std::size_t>(slot)])] != 0;
        for (int tau = 0; tau < H; ++tau) {
            for (int comp = 0; comp < 2; ++comp) {
                const int var = lay.idx(slot, tau, comp);
                out.qp.A(row, var) = 1.0;
                out.qp.lo[row] = pin ? 0.0 : p.params.u_min[comp];
                out.qp.hi[row] = pin ? 0.0 : p.params.u_max[comp];
                ++row;
            }
        }
    }
    return out;
}

struct PhaseResult {
    Eigen::VectorXd u;
    std::vector<double> slack;
    double max_slack = 0.0;
    SolveStatus status = SolveStatus::optimal;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

// Hard solve first; on failure re-solve with quadratically penalized slack on
// the barrier rows (bounds stay hard).
PhaseResult solve_phases(const Assembled& assembled, const MpcParams& params,
                         const Eigen::VectorXd& warm) {
    QpSettings settings;
    settings.eps_abs = params.eps_tol;
    settings.eps_rel = params.eps_tol;
    settings.max_iter = params.max_iter;

    PhaseResult out;
    const QpResult hard = qp_solve(assembled.qp, settings, &warm);
    out.iterations = hard.iterations;
    if (hard.converged) {
        out.u = hard.x;
        out.slack.assign(static_cast<std::size_t>(assembled.n_constraint_rows), 0.0);
        out.status = SolveStatus::optimal;
        out.primal_residual = hard.primal_residual;
        out.dual_residual = hard.dual_residual;
        return out;
    }

    const int n = static_cast<int>(assembled.qp.P.rows());
    const int mc = assembled.n_constraint_rows;
    if (mc == 0) {
        out.u = hard.x;
        out.status = SolveStatus::max_iter;
        out.primal_residual = hard.primal_residual;
        out.dual_residual = hard.dual_residual;
        return out;
    }

    const int m_orig = static_cast<int>(assembled.qp.A.rows());
    QpProblem ext;
    ext.P = Eigen::MatrixXd::Zero(n + mc, n + mc);
    ext.P.topLeftCorner(n, n) = assembled.qp.P;
    ext.P.bottomRightCorner(mc, mc).diagonal().setConstant(2.0 * params.slack_penalty);
    ext.q = Eigen::VectorXd::Zero(n + mc);
    ext.q.head(n) = assembled.qp.q;
    ext.A = Eigen::MatrixXd::Zero(m_orig + mc, n + mc);
    ext.A.topLeftCorner(m_orig, n) = assembled.qp.A;
    ext.A.block(0, n, mc, mc).setIdentity();             // barrier rows gain +s
    ext.A.block(m_orig, n, mc, mc).setIdentity();        // s >= 0
    ext.lo = Eigen::VectorXd::Constant(m_orig + mc, -kInf);
    ext.hi = Eigen::VectorXd::Constant(m_orig + mc, kInf);
    ext.lo.head(m_orig) = assembled.qp.lo;
    ext.hi.head(m_orig) = assembled.qp.hi;
    ext.lo.segment(m_orig, mc).setZero();

    Eigen::VectorXd warm_ext = Eigen::VectorXd::Zero(n + mc);
    warm_ext.head(n) = warm;
    const QpResult soft = qp_solve(ext, settings, &warm_ext);
    out.iterations += soft.iterations;
    out.u = soft.x.head(n);
    out.slack.resize(static_cast<std::size_t>(mc));
    for (int i = 0; i < mc; ++i)
        out.slack[static_cast<std::size_t>(i)] = std::max(0.0, soft.x[n + i]);
    out.max_slack = mc > 0 ? *std::max_element(out.slack.begin(), out.slack.end()) : 0.0;
    out.primal_residual = soft.primal_residual;
    out.dual_residual = soft.dual_residual;
    if (!soft.converged)
        out.status = SolveStatus::max_iter;
    else
        out.status = out.max_slack > kSlackTol ? SolveStatus::relaxed : SolveStatus::optimal;
    return out;
}

Eigen::VectorXd clamp_controls(const MpcProblem& p, const Layout& lay, Eigen::VectorXd u) {
    for (int slot = 0; slot < lay.n_controlled; ++slot) {
        const bool pin = p.pinned[static_cast<std::size_t>(p.controlled[static_cast<std::size_t>(slot)])] != 0;
        for (int tau = 0; tau < lay.horizon; ++tau) {
            for (int comp = 0; comp < 2; ++comp) {
                double& v = u[lay.idx(slot, tau, comp)];
                v = pin ? 0.0 : std::clamp(v, p.params.u_min[comp], p.params.u_max[comp]);
            }
        }
    }
    return u;
}

Eigen::VectorXd flatten_reference(const MpcProblem& p, const Layout& lay) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(lay.n_vars());
    for (int slot = 0; slot < lay.n_controlled; ++slot) {
        const int robot = p.controlled[static_cast<std::size_t>(slot)];
        for (int tau = 0; tau < lay.horizon; ++tau) {
            ControlInput r = ControlInput::Zero();
            if (static_cast<std::size_t>(tau) < p.reference.size())
                r = p.reference[static_cast<std::size_t>(tau)][static_cast<std::size_t>(robot)];
            u[lay.idx(slot, tau, 0)] = r[0];
            u[lay.idx(slot, tau, 1)] = r[1];
        }
    }
    return clamp_controls(p, lay, std::move(u));
}

Eigen::MatrixXd predict_barriers(const MpcProblem& p, const Layout& lay,
                                 const std::vector<std::vector<RobotState>>& states,
                                 const Eigen::VectorXd& u) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(p.pairs.size()),
                                                    lay.horizon, kNaN);
    for (std::size_t pi = 0; pi < p.pairs.size(); ++pi) {
        const BarrierPair& pair = p.pairs[pi];
        if (lay.slot_of[static_cast<std::size_t>(pair.i)] < 0) continue;  // owned by pair.i's solve
        for (int tau = 1; tau <= lay.horizon; ++tau) {
            const BarrierTerms terms = barrier_terms(pair, states[static_cast<std::size_t>(tau)],
                                                     p.obstacles, p.model, p.gamma, p.unicycle_offset);
            const ControlInput u_i = control_of(p, lay, u, pair.i, tau - 1);
            const ControlInput u_j = pair.kind == PairKind::robot_robot
                                         ? control_of(p, lay, u, pair.j, tau - 1)
                                         : ControlInput::Zero();
            out(static_cast<Eigen::Index>(pi), tau - 1) = terms.value(u_i, u_j);
        }
    }
    return out;
}

double rollout_objective(const MpcProblem& p, const Layout& lay,
                         const std::vector<std::vector<RobotState>>& states,
                         const Eigen::VectorXd& u) {
    double j = 0.0;
    for (int slot = 0; slot < lay.n_controlled; ++slot) {
        const int robot = p.controlled[static_cast<std::size_t>(slot)];
        const Eigen::Vector2d goal = p.goals[static_cast<std::size_t>(robot)];
        for (int tau = 0; tau < lay.horizon; ++tau) {
            const Eigen::Vector2d pos =
                states[static_cast<std::size_t>(tau)][static_cast<std::size_t>(robot)].position;
            const Eigen::Vector2d uc{u[lay.idx(slot, tau, 0)], u[lay.idx(slot, tau, 1)]};
            j += p.params.q_weight * (pos - goal).squaredNorm() + p.params.r_weight * uc.squaredNorm();
        }
        const Eigen::Vector2d last =
            states[static_cast<std::size_t>(lay.horizon)][static_cast<std::size_t>(robot)].position;
        j += p.params.p_weight * (last - goal).squaredNorm();
    }
    return j;
}

MpcSolution finalize(const MpcProblem& p, const Layout& lay, const PhaseResult& phase,
                     const Eigen::VectorXd& u_final) {
    MpcSolution sol;
    const auto states = rollout(p, lay, u_final);
    sol.states = states;
    sol.controls.resize(static_cast<std::size_t>(lay.horizon));
    for (int tau = 0; tau < lay.horizon; ++tau) {
        sol.controls[static_cast<std::size_t>(tau)].resize(p.states.size());
        for (std::size_t i = 0; i < p.states.size(); ++i)
            sol.controls[static_cast<std::size_t>(tau)][i] =
                control_of(p, lay, u_final, static_cast<int>(i), tau);
    }
    sol.predicted_barriers = predict_barriers(p, lay, states, u_final);
    sol.slack = phase.slack;
    sol.max_slack = phase.max_slack;
    sol.status = phase.status;
    sol.iterations = phase.iterations;
    sol.primal_residual = phase.primal_residual;
    sol.dual_residual = phase.dual_residual;
    sol.objective = rollout_objective(p, lay, states, u_final);
    return sol;
}

void check_problem(const MpcProblem& p) {
    if (p.states.empty()) throw ConfigError("mpc problem has no robots");
    if (p.states.size() != p.goals.size()) throw ConfigError("mpc problem goals/states size mismatch");
    p.params.validate();
    if (!p.controlled.empty()) {
        for (int i : p.controlled)
            if (i < 0 || static_cast<std::size_t>(i) >= p.states.size())
                throw ConfigError("mpc controlled index out of range");
        if (p.frozen_velocity.size() != p.states.size() || p.pinned.size() != p.states.size())
            throw ConfigError("mpc frozen_velocity/pinned must match robot count");
    }
}

void check_solvable(const MpcProblem& p) {
    check_problem(p);
    if (p.controlled.empty()) throw ConfigError("mpc problem has no controlled robots");
}

}  // namespace

MpcProblem build_problem(const std::vector<RobotState>& joint_state,
                         const std::vector<Eigen::Vector2d>& goals,
                         const std::vector<ObstacleSpec>& obstacles,
                         const std::vector<BarrierPair>& pairs, const Eigen::MatrixXd& quantiles,
                         const MpcParams& params, const DynamicsModel& model, double gamma,
                         double unicycle_offset, TightenMode tighten_mode, double lipschitz_l,
                         const std::vector<int>* controlled,
                         const std::vector<ControlInput>* frozen_velocity,
                         const std::vector<char>* pinned,
                         const std::vector<std::vector<ControlInput>>* reference) {
    MpcProblem p;
    p.model = model;
    p.states = joint_state;
    p.goals = goals;
    p.obstacles = obstacles;
    p.pairs = pairs;
    p.quantiles = quantiles;
    p.tighten_mode = tighten_mode;
    p.lipschitz_l = lipschitz_l;
    p.params = params;
    p.gamma = gamma;
    p.unicycle_offset = unicycle_offset;
    if (controlled != nullptr) {
        p.controlled = *controlled;
    } else {
        p.controlled.resize(joint_state.size());
        for (std::size_t i = 0; i < joint_state.size(); ++i) p.controlled[i] = static_cast<int>(i);
    }
    p.frozen_velocity = frozen_velocity != nullptr
                            ? *frozen_velocity
                            : std::vector<ControlInput>(joint_state.size(), ControlInput::Zero());
    p.pinned = pinned != nullptr ? *pinned : std::vector<char>(joint_state.size(), 0);
    if (reference != nullptr) p.reference = *reference;
    check_problem(p);
    if (p.quantiles.rows() != static_cast<Eigen::Index>(pairs.size()) ||
        p.quantiles.cols() != params.horizon)
        throw ConfigError("mpc quantile matrix must be (#pairs x horizon)");

    const Layout lay = make_layout(p);
    const Eigen::VectorXd u_ref = flatten_reference(p, lay);
    const auto ref_states = rollout(p, lay, u_ref);
    p.constraints = build_constraints(p, lay, ref_states);
    return p;
}

MpcSolution solve_qp(const MpcProblem& problem) {
    check_solvable(problem);
    if (problem.model.kind != ModelKind::single_integrator)
        throw ConfigError("solve_qp requires single-integrator dynamics; use solve_sqp");
    const Layout lay = make_layout(problem);
    const Eigen::VectorXd u_ref = flatten_reference(problem, lay);
    const auto ref_states = rollout(problem, lay, u_ref);
    const Assembled assembled = assemble(problem, lay, problem.constraints, ref_states, u_ref);
    const PhaseResult phase = solve_phases(assembled, problem.params, u_ref);
    const Eigen::VectorXd u_final = clamp_controls(problem, lay, phase.u);
    return finalize(problem, lay, phase, u_final);
}

MpcSolution solve_sqp(const MpcProblem& problem) {
    check_solvable(problem);
    if (problem.model.kind != ModelKind::unicycle)
        throw ConfigError("solve_sqp requires unicycle dynamics; use solve_qp");
    const Layout lay = make_layout(problem);
    Eigen::VectorXd u = flatten_reference(problem, lay);
    PhaseResult phase;
    int total_iters = 0;
    for (int it = 0; it < problem.params.sqp_max_iter; ++it) {
        const auto ref_states = rollout(problem, lay, u);
        const auto constraints = build_constraints(problem, lay, ref_states);
        const Assembled assembled = assemble(problem, lay, constraints, ref_states, u);
        phase = solve_phases(assembled, problem.params, u);
        total_iters += phase.iterations;
        const Eigen::VectorXd u_next =
            clamp_controls(problem, lay, u + problem.params.sqp_step * (phase.u - u));
        const double delta = (u_next - u).cwiseAbs().maxCoeff();
        u = u_next;
        if (delta < problem.params.eps_tol) break;
    }
    phase.iterations = total_iters;
    return finalize(problem, lay, phase, u);
}

ControlInput apply_brake(const DynamicsModel&) { return ControlInput::Zero(); }

}  // namespace acpsbc
