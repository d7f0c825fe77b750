#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "immunize/basis.hpp"
#include "immunize/curves.hpp"

namespace immunize {

/// Merged payout grid of a liability and a bond universe (exact-match
/// union of dates, ascending).
std::vector<double> payout_union(const CashFlowSchedule& liability,
                                 const std::vector<CashFlowSchedule>& bonds);

/// Normalized first-order sensitivities of the liability and bonds with
/// respect to each basis perturbation, assembled on a shared payout grid:
///
///   A  = H diag(p) F' / (p f'),  b = H diag(p) f' / (p f'),
///   a0 = p F' / (p f'),          A+ = [a0; A],  b+ = [1; b],
///
/// where p are zero-coupon discount factors on the grid, f the liability
/// amounts and F the bond payout matrix.
struct SensitivitySystem {
    Eigen::MatrixXd A;         // I x J
    Eigen::VectorXd b;         // I
    Eigen::RowVectorXd a0;     // 1 x J, bond values per unit liability value
    Eigen::MatrixXd A_plus;    // (I+1) x J
    Eigen::VectorXd b_plus;    // I+1
    Eigen::RowVectorXd p;      // 1 x N discount factors on the grid
    double liability_value;    // P > 0 (money)
    Eigen::VectorXd bond_values;  // P_j
    int a_plus_column_rank;    // reported, not enforced

    // Inputs retained for repricing and norm geometry.
    BasisSet basis;
    YieldCurve curve;
    CashFlowSchedule liability;
    std::vector<CashFlowSchedule> bonds;

    int basis_count() const { return static_cast<int>(A.rows()); }
    int bond_count() const { return static_cast<int>(A.cols()); }
};

/// Assemble the sensitivity system. The basis payout grid must equal the
/// union of liability and bond dates; the liability value must be
/// positive.
SensitivitySystem build_system(const YieldCurve& curve,
                               const CashFlowSchedule& liability,
                               const std::vector<CashFlowSchedule>& bonds,
                               const BasisSet& basis);

/// Value shares theta_j = z_j P_j / P and gross leverage |theta|_1.
std::pair<Eigen::VectorXd, double> shares_and_leverage(
    const SensitivitySystem& system, const Eigen::VectorXd& z);

/// Equity V(z, x+h) - P(x+h) under a perturbation of the discount rate.
double equity(const SensitivitySystem& system, const Eigen::VectorXd& z,
              const Perturbation& p);

}  // namespace immunize
