#include "acpsbc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace acpsbc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
    double primal_scale = 0.0;
    double dual_scale = 0.0;
};

Residuals compute_residuals(const QpProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& y) {
    Residuals r;
    if (p.A.rows() > 0) {
        const Eigen::VectorXd ax = p.A * x;
        r.primal = inf_norm(ax - z);
        r.primal_scale = std::max(inf_norm(ax), inf_norm(z));
        r.dual = inf_norm(p.P * x + p.q + p.A.transpose() * y);
        r.dual_scale = std::max({inf_norm(p.P * x), inf_norm(p.A.transpose() * y), inf_norm(p.q)});
    } else {
        r.dual = inf_norm(p.P * x + p.q);
        r.dual_scale = std::max(inf_norm(p.P * x), inf_norm(p.q));
    }
    return r;
}

// Exact solve on the detected active set. Returns true when the polished
// point is primal/dual feasible to tight tolerance.
bool try_polish(const QpProblem& p, QpResult& result) {
    const Eigen::Index n = p.P.rows();
    const Eigen::Index m = p.A.rows();

    std::vector<Eigen::Index> active;
    std::vector<double> active_rhs;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double zi = result.z[i];
        const double yi = result.y[i];
        const double span = std::max(1.0, std::max(std::abs(p.lo[i]) == kInf ? 0.0 : std::abs(p.lo[i]),
                                                   std::abs(p.hi[i]) == kInf ? 0.0 : std::abs(p.hi[i])));
        const bool low = std::isfinite(p.lo[i]) && (yi < -1e-12 || zi - p.lo[i] < 1e-7 * span);
        const bool high = std::isfinite(p.hi[i]) && (yi > 1e-12 || p.hi[i] - zi < 1e-7 * span);
        if (low) {
            active.push_back(i);
            active_rhs.push_back(p.lo[i]);
        } else if (high) {
            active.push_back(i);
            active_rhs.push_back(p.hi[i]);
        }
    }

    const Eigen::Index na = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    kkt.topLeftCorner(n, n) = p.P;
    for (Eigen::Index a = 0; a < na; ++a) {
        kkt.block(n + a, 0, 1, n) = p.A.row(active[static_cast<std::size_t>(a)]);
        kkt.block(0, n + a, n, 1) = p.A.row(active[static_cast<std::size_t>(a)]).transpose();
    }
    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = -p.q;
    for (Eigen::Index a = 0; a < na; ++a) rhs[n + a] = active_rhs[static_cast<std::size_t>(a)];

    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    if (!x.allFinite()) return false;

    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    for (Eigen::Index a = 0; a < na; ++a) y[active[static_cast<std::size_t>(a)]] = sol[n + a];

    // Feasibility of the polished point over all rows.
    double viol = 0.0;
    Eigen::VectorXd z(m);
    if (m > 0) {
        z = p.A * x;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double scale = std::max(1.0, std::abs(z[i]));
            if (std::isfinite(p.lo[i])) viol = std::max(viol, (p.lo[i] - z[i]) / scale);
            if (std::isfinite(p.hi[i])) viol = std::max(viol, (z[i] - p.hi[i]) / scale);
        }
    }
    const Residuals res = compute_residuals(p, x, z, y);
    const double tol_p = std::max(1e-9, result.primal_residual);
    const double tol_d = std::max(1e-9, result.dual_residual);
    if (viol > tol_p || res.dual > tol_d) return false;

    result.x = x;
    result.z = z;
    result.y = y;
    result.primal_residual = res.primal;
    result.dual_residual = res.dual;
    result.polished = true;
    return true;
}

}  // namespace

QpResult qp_solve(const QpProblem& problem, const QpSettings& settings, const Eigen::VectorXd* warm_x) {
    const Eigen::Index n = problem.P.rows();
    const Eigen::Index m = problem.A.rows();

    QpResult result;
    result.x = (warm_x != nullptr && warm_x->size() == n) ? *warm_x : Eigen::VectorXd::Zero(n);

    if (m == 0) {
        // Unconstrained: one regularized solve.
        Eigen::MatrixXd reg = problem.P;
        reg.diagonal().array() += settings.sigma;
        result.x = reg.ldlt().solve(-problem.q);
        result.converged = result.x.allFinite();
        result.objective = 0.5 * result.x.dot(problem.P * result.x) + problem.q.dot(result.x);
        return result;
    }

    // Row equilibration keeps mixed constraint scales (tight bounds vs large
    // barrier offsets) from stalling the splitting iteration.
    Eigen::VectorXd row_scale(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double norm = problem.A.row(i).cwiseAbs().maxCoeff();
        row_scale[i] = norm > 1e-12 ? 1.0 / norm : 1.0;
    }
    const Eigen::MatrixXd a_s = row_scale.asDiagonal() * problem.A;
    Eigen::VectorXd lo_s(m);
    Eigen::VectorXd hi_s(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        lo_s[i] = std::isfinite(problem.lo[i]) ? problem.lo[i] * row_scale[i] : problem.lo[i];
        hi_s[i] = std::isfinite(problem.hi[i]) ? problem.hi[i] * row_scale[i] : problem.hi[i];
    }

    double rho = settings.rho;
    auto factorize = [&](double rho_val) {
        Eigen::MatrixXd kkt = problem.P;
        kkt.diagonal().array() += settings.sigma;
        kkt.noalias() += rho_val * a_s.transpose() * a_s;
        return Eigen::LDLT<Eigen::MatrixXd>(kkt);
    };
    Eigen::LDLT<Eigen::MatrixXd> ldlt = factorize(rho);

    Eigen::VectorXd x = result.x;
    Eigen::VectorXd z = a_s * x;
    z = z.cwiseMax(lo_s).cwiseMin(hi_s);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

    const double alpha = settings.over_relaxation;
    Residuals res;
    int iter = 0;
    for (iter = 1; iter <= settings.max_iter; ++iter) {
        const Eigen::VectorXd rhs = settings.sigma * x - problem.q + a_s.transpose() * (rho * z - y);
        const Eigen::VectorXd x_tilde = ldlt.solve(rhs);
        const Eigen::VectorXd z_tilde = a_s * x_tilde;

        x = alpha * x_tilde + (1.0 - alpha) * x;
        const Eigen::VectorXd z_relaxed = alpha * z_tilde + (1.0 - alpha) * z;
        const Eigen::VectorXd z_next = (z_relaxed + y / rho).cwiseMax(lo_s).cwiseMin(hi_s);
        y += rho * (z_relaxed - z_next);
        z = z_next;

        if (iter % 25 == 0 || iter == settings.max_iter) {
            if (!x.allFinite()) break;
            // Residuals in the scaled system; rows are O(1) after equilibration.
            const Eigen::VectorXd ax = a_s * x;
            const double r_p = inf_norm(ax - z);
            const double s_p = std::max({inf_norm(ax), inf_norm(z), 1e-12});
            const Eigen::VectorXd dual_vec = problem.P * x + problem.q + a_s.transpose() * y;
            const double r_d = inf_norm(dual_vec);
            const double s_d = std::max({inf_norm(problem.P * x), inf_norm(a_s.transpose() * y),
                                         inf_norm(problem.q), 1e-12});
            if (r_p <= settings.eps_abs + settings.eps_rel * s_p &&
                r_d <= settings.eps_abs + settings.eps_rel * s_d) {
                result.converged = true;
                break;
            }
            if (settings.adaptive_rho && iter % 50 == 0) {
                const double ratio = std::sqrt((r_p / s_p) / std::max(r_d / s_d, 1e-16));
                const double rho_new = std::clamp(rho * ratio, 1e-6, 1e6);
                if (rho_new > 5.0 * rho || rho_new < rho / 5.0) {
                    rho = rho_new;
                    ldlt = factorize(rho);
                }
            }
        }
    }

    result.iterations = std::min(iter, settings.max_iter);
    result.x = x;
    result.z = problem.A * x;
    result.y = row_scale.asDiagonal() * y;  // unscale duals

    res = compute_residuals(problem, result.x, result.z, result.y);
    result.primal_residual = res.primal;
    result.dual_residual = res.dual;

    if (settings.polish && result.converged) try_polish(problem, result);

    result.objective = 0.5 * result.x.dot(problem.P * result.x) + problem.q.dot(result.x);
    return result;
}

}  // namespace acpsbc
