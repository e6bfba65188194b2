#pragma once

#include <Eigen/Dense>

namespace acpsbc {

/// Dense convex QP:  min 0.5 x'Px + q'x  s.t.  lo <= Ax <= hi.
/// Bounds may be +-infinity per row.
struct QpProblem {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd A;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

struct QpSettings {
    double eps_abs = 1e-8;
    double eps_rel = 1e-8;
    int max_iter = 4000;
    double rho = 0.1;           // initial step; adapted online
    double sigma = 1e-6;
    double over_relaxation = 1.6;
    bool adaptive_rho = true;
    bool polish = true;
};

struct QpResult {
    Eigen::VectorXd x;
    Eigen::VectorXd z;  // constraint values Ax at the solution
    Eigen::VectorXd y;  // constraint duals
    bool converged = false;
    bool polished = false;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;
};

/// Operator-splitting iteration over (x, z) with scaled dual updates, row
/// equilibration, and an exact active-set polish on convergence.
QpResult qp_solve(const QpProblem& problem, const QpSettings& settings,
                  const Eigen::VectorXd* warm_x = nullptr);

}  // namespace acpsbc
