#pragma once

#include <Eigen/Dense>

namespace immunize {

enum class LpStatus { optimal, infeasible, unbounded, stalled };

struct LpResult {
    LpStatus status = LpStatus::stalled;
    Eigen::VectorXd x;        // primal solution (size n)
    double objective = 0.0;
    Eigen::VectorXd dual;     // equality-row multipliers (size m)
};

/// Minimize c'x subject to A x = b, x >= 0.
///
/// Dense two-phase revised simplex with Bland's rule; intended for
/// problems with few rows (tens) and up to a few thousand columns.
LpResult solve_lp(const Eigen::VectorXd& cost, const Eigen::MatrixXd& lhs,
                  const Eigen::VectorXd& rhs);

}  // namespace immunize
