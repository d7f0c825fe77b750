#include "immunize/basis.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace immunize {

namespace {
constexpr double kRankTol = 1e-10;  // relative singular-value cutoff
}

BasisFamily basis_family_from_string(std::string_view name) {
    if (name == "chebyshev") return BasisFamily::chebyshev;
    if (name == "monomial") return BasisFamily::monomial;
    if (name == "tabulated") return BasisFamily::tabulated;
    throw std::invalid_argument("unknown basis family: " + std::string(name));
}

std::string to_string(BasisFamily family) {
    switch (family) {
        case BasisFamily::chebyshev: return "chebyshev";
        case BasisFamily::monomial: return "monomial";
        case BasisFamily::tabulated: return "tabulated";
    }
    return "?";
}

double chebyshev_g(int index, double horizon, double t) {
    if (index < 1) throw std::domain_error("chebyshev_g: index must be >= 1");
    if (t < -1e-12 || t > horizon * (1.0 + 1e-12))
        throw std::domain_error("chebyshev_g: t outside [0, horizon]");
    const double u = std::clamp(2.0 * t / horizon - 1.0, -1.0, 1.0);
    // three-term recurrence T_0 = 1, T_1 = u, T_k = 2u T_{k-1} - T_{k-2}
    double prev = 1.0;
    if (index == 1) return prev;
    double cur = u;
    for (int k = 2; k < index; ++k) {
        const double next = 2.0 * u * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

BasisSet BasisSet::build(BasisFamily family, int count, double horizon,
                         std::vector<double> payout_dates) {
    if (family == BasisFamily::tabulated)
        throw std::invalid_argument("BasisSet::build: use BasisSet::tabulated");
    if (count < 1) throw std::invalid_argument("BasisSet: count must be >= 1");
    if (horizon <= 0.0) throw std::invalid_argument("BasisSet: horizon <= 0");
    if (payout_dates.empty())
        throw std::invalid_argument("BasisSet: empty payout grid");
    for (std::size_t n = 0; n < payout_dates.size(); ++n) {
        if (payout_dates[n] <= 0.0 || payout_dates[n] > horizon * (1.0 + 1e-12))
            throw std::invalid_argument(
                "BasisSet: payout dates must lie in (0, horizon]");
        if (n > 0 && payout_dates[n] <= payout_dates[n - 1])
            throw std::invalid_argument("BasisSet: payout dates must increase");
    }
    if (count > static_cast<int>(payout_dates.size()))
        throw std::invalid_argument(
            "BasisSet: more basis functions than payout dates (rank)");

    BasisSet basis;
    basis.family_ = family;
    basis.horizon_ = horizon;
    basis.dates_ = std::move(payout_dates);
    const int N = static_cast<int>(basis.dates_.size());
    basis.G_.resize(count, N);
    basis.H_.resize(count, N);
    for (int n = 0; n < N; ++n) {
        const double t = basis.dates_[static_cast<std::size_t>(n)];
        for (int i = 1; i <= count; ++i) {
            // Monomials are scaled to the unit interval; same span, far
            // better conditioning at high degree.
            const double g = family == BasisFamily::chebyshev
                                 ? chebyshev_g(i, horizon, t)
                                 : std::pow(t / horizon, i - 1);
            basis.G_(i - 1, n) = g;
            basis.H_(i - 1, n) = t * g;
        }
    }
    basis.finalize_and_check_rank();
    return basis;
}

BasisSet BasisSet::tabulated(Eigen::MatrixXd g_values, double horizon,
                             std::vector<double> payout_dates) {
    if (g_values.rows() < 1 ||
        g_values.cols() != static_cast<Eigen::Index>(payout_dates.size()))
        throw std::invalid_argument("BasisSet::tabulated: shape mismatch");
    BasisSet basis;
    basis.family_ = BasisFamily::tabulated;
    basis.horizon_ = horizon;
    basis.dates_ = std::move(payout_dates);
    basis.G_ = std::move(g_values);
    basis.H_ = basis.G_;
    for (Eigen::Index n = 0; n < basis.H_.cols(); ++n)
        basis.H_.col(n) *= basis.dates_[static_cast<std::size_t>(n)];
    basis.finalize_and_check_rank();
    return basis;
}

namespace {

bool full_row_rank(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1) > kRankTol * sv(0);
}

}  // namespace

void BasisSet::finalize_and_check_rank() {
    for (const Eigen::MatrixXd* m : {&H_, &G_}) {
        if (full_row_rank(*m)) continue;
        // Name the first prefix that loses rank.
        for (Eigen::Index k = 1; k <= m->rows(); ++k) {
            if (!full_row_rank(m->topRows(k)))
                throw std::invalid_argument(
                    "BasisSet: rank deficiency at basis index " +
                    std::to_string(k) + " (" +
                    (m == &H_ ? std::string("H") : std::string("G")) + ")");
        }
    }
}

double BasisSet::g(int index, double t) const {
    if (index < 1 || index > count())
        throw std::domain_error("BasisSet::g: index out of range");
    switch (family_) {
        case BasisFamily::chebyshev: return chebyshev_g(index, horizon_, t);
        case BasisFamily::monomial: return std::pow(t / horizon_, index - 1);
        case BasisFamily::tabulated: break;
    }
    // linear interpolation in g over the payout grid, flat tails
    const auto it = std::lower_bound(dates_.begin(), dates_.end(), t);
    const Eigen::Index row = index - 1;
    if (it == dates_.begin()) return G_(row, 0);
    if (it == dates_.end()) return G_(row, G_.cols() - 1);
    const std::size_t hi = static_cast<std::size_t>(it - dates_.begin());
    const double w = (t - dates_[hi - 1]) / (dates_[hi] - dates_[hi - 1]);
    return (1.0 - w) * G_(row, static_cast<Eigen::Index>(hi - 1)) +
           w * G_(row, static_cast<Eigen::Index>(hi));
}

BasisSet BasisSet::truncated(int count) const {
    if (count < 1 || count > this->count())
        throw std::invalid_argument("BasisSet::truncated: bad count");
    BasisSet basis;
    basis.family_ = family_;
    basis.horizon_ = horizon_;
    basis.dates_ = dates_;
    basis.H_ = H_.topRows(count);
    basis.G_ = G_.topRows(count);
    return basis;
}

namespace {

void check_coefficients(const BasisSet& basis, const Perturbation& p) {
    if (static_cast<int>(p.coefficients.size()) != basis.count())
        throw std::invalid_argument(
            "Perturbation: coefficient count does not match basis");
}

}  // namespace

double evaluate_perturbation(const BasisSet& basis, const Perturbation& p,
                             double t) {
    check_coefficients(basis, p);
    double h = 0.0;
    for (int i = 1; i <= basis.count(); ++i)
        h += p.coefficients[static_cast<std::size_t>(i - 1)] * basis.h(i, t);
    return p.magnitude * h;
}

double perturbation_yield_shift(const BasisSet& basis, const Perturbation& p,
                                double t) {
    if (t <= 0.0)
        throw std::domain_error("perturbation_yield_shift: t must be > 0");
    check_coefficients(basis, p);
    double g = 0.0;
    for (int i = 1; i <= basis.count(); ++i)
        g += p.coefficients[static_cast<std::size_t>(i - 1)] * basis.g(i, t);
    return p.magnitude * g;
}

bool perturbation_within(const BasisSet& basis, const Perturbation& p,
                         double delta) {
    check_coefficients(basis, p);
    const Eigen::Map<const Eigen::VectorXd> w(p.coefficients.data(),
                                              basis.count());
    const double worst =
        (basis.G().transpose() * w).cwiseAbs().maxCoeff() * std::abs(p.magnitude);
    return worst <= delta * (1.0 + 1e-12);
}

double present_value(const YieldCurve& curve, const CashFlowSchedule& cf,
                     const BasisSet& basis, const Perturbation& p) {
    check_coefficients(basis, p);
    if (cf.max_date() > basis.horizon() * (1.0 + 1e-12))
        throw std::invalid_argument(
            "present_value: cash flow extends past basis horizon");
    return present_value_shifted(curve, cf, [&](double t) {
        return evaluate_perturbation(basis, p, t);
    });
}

}  // namespace immunize
