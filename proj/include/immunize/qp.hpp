#pragma once

#include <Eigen/Dense>

namespace immunize {

struct QpResult {
    bool converged = false;
    Eigen::VectorXd x;
    double objective = 0.0;
};

/// Minimize 0.5 x'Qx + q'x subject to E x = e and C x >= d, with Q
/// positive definite on the feasible subspace. Primal active-set method;
/// `x0` must be feasible. Intended for small problems (tens of
/// variables).
QpResult solve_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                  const Eigen::MatrixXd& E, const Eigen::VectorXd& e,
                  const Eigen::MatrixXd& C, const Eigen::VectorXd& d,
                  const Eigen::VectorXd& x0);

}  // namespace immunize
