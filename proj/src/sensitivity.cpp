#include "immunize/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace immunize {

namespace {
// Payment dates come from the same arithmetic (k/frequency) on both
// sides, so exact comparison with a small guard is enough.
constexpr double kDateEps = 1e-9;
}

std::vector<double> payout_union(const CashFlowSchedule& liability,
                                 const std::vector<CashFlowSchedule>& bonds) {
    std::vector<double> dates = liability.dates;
    for (const auto& bond : bonds)
        dates.insert(dates.end(), bond.dates.begin(), bond.dates.end());
    std::sort(dates.begin(), dates.end());
    std::vector<double> merged;
    merged.reserve(dates.size());
    for (double t : dates)
        if (merged.empty() || t > merged.back() + kDateEps)
            merged.push_back(t);
    return merged;
}

namespace {

// Scatter cash-flow amounts onto the shared grid.
Eigen::RowVectorXd amounts_on_grid(const CashFlowSchedule& cf,
                                   const std::vector<double>& grid) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(
        static_cast<Eigen::Index>(grid.size()));
    std::size_t g = 0;
    for (std::size_t k = 0; k < cf.dates.size(); ++k) {
        while (g < grid.size() && grid[g] < cf.dates[k] - kDateEps) ++g;
        if (g >= grid.size() || std::abs(grid[g] - cf.dates[k]) > kDateEps)
            throw std::invalid_argument(
                "build_system: payout grid does not contain all cash-flow dates");
        row(static_cast<Eigen::Index>(g)) += cf.amounts[k];
    }
    return row;
}

}  // namespace

SensitivitySystem build_system(const YieldCurve& curve,
                               const CashFlowSchedule& liability,
                               const std::vector<CashFlowSchedule>& bonds,
                               const BasisSet& basis) {
    liability.validate();
    if (bonds.empty()) throw std::invalid_argument("build_system: no bonds");
    for (const auto& bond : bonds) bond.validate();

    const std::vector<double>& grid = basis.payout_dates();
    {
        const std::vector<double> expected = payout_union(liability, bonds);
        if (expected.size() != grid.size())
            throw std::invalid_argument(
                "build_system: basis grid is not the union of payout dates");
        for (std::size_t n = 0; n < grid.size(); ++n)
            if (std::abs(expected[n] - grid[n]) > kDateEps)
                throw std::invalid_argument(
                    "build_system: basis grid is not the union of payout dates");
    }

    const Eigen::Index N = static_cast<Eigen::Index>(grid.size());
    const Eigen::Index J = static_cast<Eigen::Index>(bonds.size());
    const Eigen::Index I = basis.H().rows();

    Eigen::RowVectorXd p(N);
    for (Eigen::Index n = 0; n < N; ++n)
        p(n) = std::exp(
            -curve.cumulative_discount(grid[static_cast<std::size_t>(n)]));

    const Eigen::RowVectorXd f = amounts_on_grid(liability, grid);
    Eigen::MatrixXd F(J, N);
    for (Eigen::Index j = 0; j < J; ++j)
        F.row(j) = amounts_on_grid(bonds[static_cast<std::size_t>(j)], grid);

    const double P = p.dot(f);
    if (!(P > 0.0))
        throw std::invalid_argument("build_system: liability value <= 0");

    SensitivitySystem sys{
        .A = Eigen::MatrixXd(),
        .b = Eigen::VectorXd(),
        .a0 = Eigen::RowVectorXd(),
        .A_plus = Eigen::MatrixXd(),
        .b_plus = Eigen::VectorXd(),
        .p = p,
        .liability_value = P,
        .bond_values = Eigen::VectorXd(),
        .a_plus_column_rank = 0,
        .basis = basis,
        .curve = curve,
        .liability = liability,
        .bonds = bonds,
    };

    const Eigen::MatrixXd Hp = sys.basis.H() * p.asDiagonal();  // I x N
    sys.A = Hp * F.transpose() / P;
    sys.b = Hp * f.transpose() / P;
    sys.a0 = p * F.transpose() / P;
    sys.bond_values = (F * p.transpose());

    sys.A_plus.resize(I + 1, J);
    sys.A_plus.row(0) = sys.a0;
    sys.A_plus.bottomRows(I) = sys.A;
    sys.b_plus.resize(I + 1);
    sys.b_plus(0) = 1.0;
    sys.b_plus.tail(I) = sys.b;

    if (!sys.A_plus.allFinite() || !sys.b_plus.allFinite())
        throw std::invalid_argument("build_system: non-finite sensitivities");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.A_plus);
    qr.setThreshold(1e-12);
    sys.a_plus_column_rank = static_cast<int>(qr.rank());
    return sys;
}

std::pair<Eigen::VectorXd, double> shares_and_leverage(
    const SensitivitySystem& system, const Eigen::VectorXd& z) {
    if (z.size() != system.bond_values.size())
        throw std::invalid_argument("shares_and_leverage: size mismatch");
    Eigen::VectorXd theta =
        z.cwiseProduct(system.bond_values) / system.liability_value;
    return {theta, theta.lpNorm<1>()};
}

double equity(const SensitivitySystem& system, const Eigen::VectorXd& z,
              const Perturbation& p) {
    double assets = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j)
        assets += z(j) * present_value(system.curve,
                                       system.bonds[static_cast<std::size_t>(j)],
                                       system.basis, p);
    return assets -
           present_value(system.curve, system.liability, system.basis, p);
}

}  // namespace immunize
