#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "immunize/sensitivity.hpp"

namespace immunize {

enum class NormKind { linf, l2 };

/// Adversary's certificate for the minmax value: V together with an
/// attaining coefficient vector w in the admissible set.
struct MinmaxCertificate {
    double value = 0.0;
    Eigen::VectorXd w_star;
    NormKind norm_kind = NormKind::linf;
};

/// Linear portfolio constraints R z = r; the first row is always the
/// value-matching row a0 with right side 1.
struct ConstraintSet {
    Eigen::MatrixXd R;
    Eigen::VectorXd r;
    bool nonnegative = false;  // additionally require z >= 0

    static ConstraintSet value_matching(const SensitivitySystem& system);

    /// Value matching plus the first `level` sensitivity rows
    /// (level 1 adds duration matching, level 2 adds convexity).
    static ConstraintSet moment_matching(const SensitivitySystem& system,
                                         int level);
};

struct Portfolio {
    Eigen::VectorXd holdings;  // z, face-value units
    Eigen::VectorXd theta;     // value shares
    double gross_leverage = 0.0;
    std::string method;
    std::optional<MinmaxCertificate> certificate;
    double condition_number = std::numeric_limits<double>::quiet_NaN();

    bool value_matched(double tol = 1e-8) const {
        return std::abs(theta.sum() - 1.0) <= tol;
    }
};

/// Exact solution z = A+^-1 b+ when the number of basis functions is one
/// less than the number of bonds. Throws on a singular system; the
/// condition number of A+ is reported on the portfolio.
Portfolio solve_hd(const SensitivitySystem& system);

/// Closed-form robust portfolio under the Euclidean perturbation norm:
/// the constrained GLS solution with weight (GG')^-1.
Portfolio solve_ri_l2(const SensitivitySystem& system,
                      const ConstraintSet& constraints);

/// Robust portfolio under the sup-norm admissible set, solved as a
/// single linear program over (z, u, v):
///
///   min 1'(u+v)  s.t.  A z - G u + G v = b,  R z = r,  u, v >= 0,
///
/// which dualizes the inner maximization max{c'w : G'w in [-1,1]^N}.
/// Optimal z is post-processed to the minimum-norm point of the optimal
/// face for determinism.
Portfolio solve_ri_linf(const SensitivitySystem& system,
                        const ConstraintSet& constraints);

/// Worst-case first-order equity loss at a fixed portfolio.
MinmaxCertificate inner_value(const SensitivitySystem& system,
                              const Eigen::VectorXd& z,
                              NormKind kind = NormKind::linf);

/// One elemental estimate: the square subsystem picked by `rows`
/// (1-based indices into the sensitivity rows; the value-matching row is
/// always included), its determinant weight, and its solution.
struct ElementalTerm {
    std::vector<int> rows;
    double weight = 0.0;
    Eigen::VectorXd z;  // empty when the subsystem is singular
    bool singular = false;
};

/// Determinant-weighted decomposition of the value-matching-only GLS
/// portfolio into elemental square solves. Requires I >= J and I <= 14
/// (subset enumeration guard).
std::vector<ElementalTerm> jacobi_decompose(const SensitivitySystem& system);

/// Recombine a decomposition into the portfolio it represents.
Eigen::VectorXd combine_elementals(const std::vector<ElementalTerm>& terms);

/// Price sensitivity to a tent-shaped yield shift centered at key rate k
/// (0-based index into key_rates): linear between adjacent key rates,
/// held flat below the first and above the last.
double key_rate_duration(const YieldCurve& curve, const CashFlowSchedule& cf,
                         const std::vector<double>& key_rates, int k,
                         double delta = 0.01);

/// Least-squares match of the liability's key-rate exposures subject to
/// value matching. Key rates default to the bond maturities.
Portfolio solve_krd(const YieldCurve& curve, const CashFlowSchedule& liability,
                    const std::vector<CashFlowSchedule>& bonds,
                    std::vector<double> key_rates = {}, double delta = 0.01);

struct FundingReport {
    double min_equity = 0.0;
    Eigen::VectorXd worst_coefficients;
    int samples = 0;
};

/// Sample in-span discount-rate shocks with coefficients up to delta_max
/// and record the minimum equity of the (nonnegative) portfolio.
/// Requires a single-date liability and z >= 0.
FundingReport check_guaranteed_funding(const SensitivitySystem& system,
                                       const Eigen::VectorXd& z,
                                       int n_samples, double delta_max,
                                       std::uint64_t seed = 0);

}  // namespace immunize
