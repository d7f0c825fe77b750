#pragma once

#include <Eigen/Dense>

#include <string_view>
#include <vector>

#include "immunize/curves.hpp"

namespace immunize {

enum class BasisFamily { chebyshev, monomial, tabulated };

BasisFamily basis_family_from_string(std::string_view name);
std::string to_string(BasisFamily family);

/// g_i(t) = T_{i-1}(2t/T - 1), the (i-1)-degree Chebyshev polynomial
/// mapped to [0, T]. Index is 1-based; requires 0 <= t <= T.
double chebyshev_g(int index, double horizon, double t);

/// Basis functions h_i(t) = t * g_i(t) for discount-rate perturbations,
/// together with their evaluations H = (h_i(t_n)) and G = (g_i(t_n)) on
/// the payout grid. Both matrices must have full row rank.
class BasisSet {
public:
    static BasisSet build(BasisFamily family, int count, double horizon,
                          std::vector<double> payout_dates);

    /// Escape hatch for externally supplied yield-curve loadings: rows of
    /// g_values are g_i at the payout dates; between grid points g is
    /// interpolated linearly.
    static BasisSet tabulated(Eigen::MatrixXd g_values, double horizon,
                              std::vector<double> payout_dates);

    int count() const { return static_cast<int>(H_.rows()); }
    double horizon() const { return horizon_; }
    BasisFamily family() const { return family_; }
    const std::vector<double>& payout_dates() const { return dates_; }
    const Eigen::MatrixXd& H() const { return H_; }
    const Eigen::MatrixXd& G() const { return G_; }

    /// g_i(t), 1-based index, t in [0, horizon]
    double g(int index, double t) const;
    /// h_i(t) = t * g_i(t)
    double h(int index, double t) const { return t * g(index, t); }

    /// Restriction to the first `count` basis functions (same grid).
    BasisSet truncated(int count) const;

private:
    BasisSet() = default;
    void finalize_and_check_rank();

    BasisFamily family_ = BasisFamily::chebyshev;
    double horizon_ = 0.0;
    std::vector<double> dates_;
    Eigen::MatrixXd H_;  // I x N
    Eigen::MatrixXd G_;  // I x N
};

/// h(t) = magnitude * sum_i w_i h_i(t)
double evaluate_perturbation(const BasisSet& basis, const Perturbation& p,
                             double t);

/// Yield-space shift h(t)/t (t > 0).
double perturbation_yield_shift(const BasisSet& basis, const Perturbation& p,
                                double t);

/// Membership in the admissible set: max_n |h(t_n)/t_n| <= delta.
bool perturbation_within(const BasisSet& basis, const Perturbation& p,
                         double delta);

/// P evaluated under the perturbed discount rate x + h.
double present_value(const YieldCurve& curve, const CashFlowSchedule& cf,
                     const BasisSet& basis, const Perturbation& p);

}  // namespace immunize
