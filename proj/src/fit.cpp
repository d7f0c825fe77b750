#include "immunize/fit.hpp"

#include <cmath>
#include <stdexcept>

#include "immunize/basis.hpp"
#include "immunize/parallel.hpp"

namespace immunize {

std::vector<double> FitGrid::terms() const {
    if (!custom_terms.empty()) return custom_terms;
    if (points < 1 || per_year < 1)
        throw std::invalid_argument("FitGrid: bad grid spec");
    std::vector<double> t(static_cast<std::size_t>(points));
    for (int n = 1; n <= points; ++n)
        t[static_cast<std::size_t>(n - 1)] =
            static_cast<double>(n) / per_year;
    return t;
}

namespace {

Eigen::MatrixXd design_matrix(const FitGrid& grid, int basis_count) {
    const std::vector<double> terms = grid.terms();
    const double T = grid.horizon();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(terms.size()), basis_count);
    for (std::size_t n = 0; n < terms.size(); ++n)
        for (int i = 1; i <= basis_count; ++i)
            X(static_cast<Eigen::Index>(n), i - 1) =
                chebyshev_g(i, T, terms[n]);
    return X;
}

Eigen::VectorXd yield_changes(const YieldHistory& history, std::size_t s,
                              int d, const std::vector<double>& terms) {
    Eigen::VectorXd dy(static_cast<Eigen::Index>(terms.size()));
    const YieldCurve& before = history.curves[s];
    const YieldCurve& after = history.curves[s + static_cast<std::size_t>(d)];
    for (std::size_t n = 0; n < terms.size(); ++n)
        dy(static_cast<Eigen::Index>(n)) =
            after.yield(terms[n]) - before.yield(terms[n]);
    return dy;
}

}  // namespace

FitResult fit_changes(const YieldHistory& history, int basis_count,
                      int horizon_days, const FitGrid& grid) {
    if (basis_count < 1)
        throw std::invalid_argument("fit_changes: basis_count < 1");
    if (horizon_days < 1 ||
        history.size() <= static_cast<std::size_t>(horizon_days))
        throw std::invalid_argument("fit_changes: panel shorter than horizon");

    const std::vector<double> terms = grid.terms();
    const Eigen::MatrixXd X = design_matrix(grid, basis_count);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);

    const std::size_t n_dates =
        history.size() - static_cast<std::size_t>(horizon_days);
    FitResult result;
    result.basis_count = basis_count;
    result.horizon_days = horizon_days;
    result.gamma.resize(static_cast<Eigen::Index>(n_dates), basis_count);
    result.r2_by_date.assign(n_dates, 0.0);

    std::vector<double> fitted_ss(n_dates), actual_ss(n_dates);
    parallel_for(n_dates, [&](std::size_t s) {
        const Eigen::VectorXd dy = yield_changes(history, s, horizon_days, terms);
        const Eigen::VectorXd coef = qr.solve(dy);
        result.gamma.row(static_cast<Eigen::Index>(s)) = coef.transpose();
        fitted_ss[s] = (X * coef).squaredNorm();
        actual_ss[s] = dy.squaredNorm();
    });

    double pooled_fit = 0.0, pooled_act = 0.0;
    for (std::size_t s = 0; s < n_dates; ++s) {
        pooled_fit += fitted_ss[s];
        pooled_act += actual_ss[s];
        if (actual_ss[s] > 0.0) {
            result.r2_by_date[s] = fitted_ss[s] / actual_ss[s];
            ++result.dates_used;
        } else {
            result.r2_by_date[s] = std::numeric_limits<double>::quiet_NaN();
            ++result.dates_degenerate;
        }
    }
    result.r2_overall = pooled_act > 0.0
                            ? pooled_fit / pooled_act
                            : std::numeric_limits<double>::quiet_NaN();
    return result;
}

double overall_r2(const YieldHistory& history, int basis_count,
                  int horizon_days, const FitGrid& grid) {
    return fit_changes(history, basis_count, horizon_days, grid).r2_overall;
}

ShapleyResult shapley_r2(const YieldHistory& history, int basis_count,
                         int horizon_days, const FitGrid& grid) {
    if (basis_count < 1 || basis_count > 12)
        throw std::invalid_argument(
            "shapley_r2: subset enumeration guarded at I <= 12");
    if (horizon_days < 1 ||
        history.size() <= static_cast<std::size_t>(horizon_days))
        throw std::invalid_argument("shapley_r2: panel shorter than horizon");

    const int I = basis_count;
    const std::vector<double> terms = grid.terms();
    const Eigen::MatrixXd X = design_matrix(grid, I);
    const Eigen::MatrixXd gram = X.transpose() * X;

    // Cholesky factors of every subset Gram block, shared across dates.
    const std::size_t n_subsets = std::size_t{1} << I;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> factors(n_subsets);
    std::vector<std::vector<int>> members(n_subsets);
    for (std::size_t mask = 1; mask < n_subsets; ++mask) {
        for (int i = 0; i < I; ++i)
            if (mask & (std::size_t{1} << i)) members[mask].push_back(i);
        const int k = static_cast<int>(members[mask].size());
        Eigen::MatrixXd sub(k, k);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                sub(a, b) = gram(members[mask][static_cast<std::size_t>(a)],
                                 members[mask][static_cast<std::size_t>(b)]);
        factors[mask].compute(sub);
        if (factors[mask].info() != Eigen::Success)
            throw std::runtime_error("shapley_r2: degenerate design block");
    }

    // Shapley weight for a coalition of size m (out of I-1 others).
    std::vector<double> weight(static_cast<std::size_t>(I), 0.0);
    {
        std::vector<double> log_fact(static_cast<std::size_t>(I + 1), 0.0);
        for (int k = 1; k <= I; ++k)
            log_fact[static_cast<std::size_t>(k)] =
                log_fact[static_cast<std::size_t>(k - 1)] + std::log(k);
        for (int m = 0; m < I; ++m)
            weight[static_cast<std::size_t>(m)] = std::exp(
                log_fact[static_cast<std::size_t>(m)] +
                log_fact[static_cast<std::size_t>(I - 1 - m)] -
                log_fact[static_cast<std::size_t>(I)]);
    }

    const std::size_t n_dates =
        history.size() - static_cast<std::size_t>(horizon_days);
    ShapleyResult result;
    result.by_date.resize(static_cast<Eigen::Index>(n_dates), I);
    result.r2_full.assign(n_dates, 0.0);
    std::vector<char> usable(n_dates, 0);

    parallel_for(n_dates, [&](std::size_t s) {
        const Eigen::VectorXd dy = yield_changes(history, s, horizon_days, terms);
        const double actual = dy.squaredNorm();
        if (!(actual > 0.0)) {
            result.by_date.row(static_cast<Eigen::Index>(s)).setZero();
            return;
        }
        const Eigen::VectorXd c = X.transpose() * dy;
        std::vector<double> r2(n_subsets, 0.0);
        for (std::size_t mask = 1; mask < n_subsets; ++mask) {
            const auto& idx = members[mask];
            Eigen::VectorXd cs(static_cast<Eigen::Index>(idx.size()));
            for (std::size_t a = 0; a < idx.size(); ++a)
                cs(static_cast<Eigen::Index>(a)) = c(idx[a]);
            r2[mask] = cs.dot(factors[mask].solve(cs)) / actual;
        }
        for (int i = 0; i < I; ++i) {
            const std::size_t bit = std::size_t{1} << i;
            double value = 0.0;
            for (std::size_t mask = 0; mask < n_subsets; ++mask) {
                if (mask & bit) continue;
                const int m = static_cast<int>(members[mask].size());
                value += weight[static_cast<std::size_t>(m)] *
                         (r2[mask | bit] - r2[mask]);
            }
            result.by_date(static_cast<Eigen::Index>(s), i) = value;
        }
        result.r2_full[s] = r2[n_subsets - 1];
        usable[s] = 1;
    });

    result.mean_components = Eigen::VectorXd::Zero(I);
    for (std::size_t s = 0; s < n_dates; ++s) {
        if (!usable[s]) continue;
        result.mean_components +=
            result.by_date.row(static_cast<Eigen::Index>(s)).transpose();
        ++result.dates_used;
    }
    if (result.dates_used > 0)
        result.mean_components /= static_cast<double>(result.dates_used);
    return result;
}

}  // namespace immunize
