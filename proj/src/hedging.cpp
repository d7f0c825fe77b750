#include "immunize/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "immunize/parallel.hpp"
#include "immunize/stats.hpp"

namespace immunize {

Method method_from_string(std::string_view name) {
    if (name == "ri0") return Method::ri0;
    if (name == "ri1") return Method::ri1;
    if (name == "ri2") return Method::ri2;
    if (name == "hd") return Method::hd;
    if (name == "krd") return Method::krd;
    throw std::invalid_argument("unknown method: " + std::string(name));
}

std::string to_string(Method method) {
    switch (method) {
        case Method::ri0: return "ri0";
        case Method::ri1: return "ri1";
        case Method::ri2: return "ri2";
        case Method::hd: return "hd";
        case Method::krd: return "krd";
    }
    return "?";
}

std::vector<CashFlowSchedule> zero_coupon_universe(
    const std::vector<double>& maturities) {
    std::vector<CashFlowSchedule> bonds;
    bonds.reserve(maturities.size());
    for (double m : maturities) bonds.push_back(CashFlowSchedule::zero_coupon(m));
    return bonds;
}

namespace {

// Bases are curve-independent, so one instrument set can share them
// across panel dates and simulation paths.
struct InstrumentSet {
    CashFlowSchedule liability;
    std::vector<CashFlowSchedule> bonds;
    std::optional<BasisSet> chebyshev;  // for the RI methods
    std::optional<BasisSet> monomial;   // for HD

    InstrumentSet(CashFlowSchedule liability_in,
                  std::vector<CashFlowSchedule> bonds_in,
                  const std::vector<Method>& methods,
                  const ExperimentConfig& config)
        : liability(std::move(liability_in)), bonds(std::move(bonds_in)) {
        const std::vector<double> grid = payout_union(liability, bonds);
        for (Method m : methods) {
            if ((m == Method::ri0 || m == Method::ri1 || m == Method::ri2) &&
                !chebyshev)
                chebyshev = BasisSet::build(BasisFamily::chebyshev,
                                            config.basis_count, config.horizon,
                                            grid);
            if (m == Method::hd && !monomial)
                monomial = BasisSet::build(
                    BasisFamily::monomial,
                    static_cast<int>(bonds.size()) - 1, config.horizon, grid);
        }
    }

    Portfolio solve(Method method, const YieldCurve& curve,
                    const ExperimentConfig& config) const {
        if (method == Method::krd) return solve_krd(curve, liability, bonds);
        if (method == Method::hd)
            return solve_hd(build_system(curve, liability, bonds, *monomial));
        const SensitivitySystem system =
            build_system(curve, liability, bonds, *chebyshev);
        const int level =
            method == Method::ri0 ? 0 : method == Method::ri1 ? 1 : 2;
        ConstraintSet constraints = ConstraintSet::moment_matching(system, level);
        constraints.nonnegative = config.no_short_sales;
        Portfolio p = config.norm == NormKind::l2
                          ? solve_ri_l2(system, constraints)
                          : solve_ri_linf(system, constraints);
        p.method = to_string(method);
        return p;
    }
};

}  // namespace

Portfolio solve_method(Method method, const YieldCurve& curve,
                       const CashFlowSchedule& liability,
                       const std::vector<CashFlowSchedule>& bonds,
                       const ExperimentConfig& config) {
    const InstrumentSet instruments(liability, bonds, {method}, config);
    return instruments.solve(method, curve, config);
}

StaticResult static_experiment(
    const YieldHistory& history, LiabilityKind kind,
    const std::vector<Method>& methods, const ExperimentConfig& config,
    int max_horizon, int percentile_horizon,
    const std::function<void(const StaticObservation&)>& sink) {
    if (history.size() < 2)
        throw std::invalid_argument("static_experiment: panel too short");
    if (max_horizon < 1 || percentile_horizon < 1 ||
        percentile_horizon > max_horizon)
        throw std::invalid_argument("static_experiment: bad horizons");

    const CashFlowSchedule liability = standard_liability(kind, config.horizon);
    const std::vector<CashFlowSchedule> bonds =
        zero_coupon_universe(config.bond_maturities);
    const InstrumentSet instruments(liability, bonds, methods, config);
    const std::size_t n_methods = methods.size();
    const std::size_t n_dates = history.size();

    StaticResult result;
    result.methods = methods;
    result.max_horizon = max_horizon;
    result.percentile_horizon = percentile_horizon;

    // Portfolios depend on the date only; solve once per (date, method).
    // Prices under each date's curve are shared by every (s, d) pair that
    // lands on it.
    struct DateSolution {
        bool ok = false;
        std::vector<Eigen::VectorXd> holdings;
        std::vector<double> leverage;
    };
    std::vector<DateSolution> solutions(n_dates);
    std::vector<double> liability_pv(n_dates);
    Eigen::MatrixXd bond_pv(static_cast<Eigen::Index>(bonds.size()),
                            static_cast<Eigen::Index>(n_dates));
    parallel_for(n_dates, [&](std::size_t s) {
        liability_pv[s] = present_value(history.curves[s], liability);
        for (std::size_t j = 0; j < bonds.size(); ++j)
            bond_pv(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) =
                present_value(history.curves[s], bonds[j]);
        DateSolution sol;
        sol.holdings.resize(n_methods);
        sol.leverage.resize(n_methods);
        try {
            for (std::size_t m = 0; m < n_methods; ++m) {
                Portfolio p = instruments.solve(methods[m], history.curves[s],
                                                config);
                sol.holdings[m] = std::move(p.holdings);
                sol.leverage[m] = p.gross_leverage;
            }
            sol.ok = true;
        } catch (const std::exception&) {
            sol.ok = false;  // counted below
        }
        solutions[s] = std::move(sol);
    });

    result.mean_underfunding = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(n_methods), max_horizon);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(n_methods), max_horizon);
    std::vector<std::vector<double>> pooled_ufr(n_methods);
    std::vector<std::vector<double>> pooled_lev(n_methods);

    for (std::size_t s = 0; s < n_dates; ++s) {
        if (!solutions[s].ok) {
            ++result.dates_skipped;
            continue;
        }
        ++result.dates_used;
        for (std::size_t m = 0; m < n_methods; ++m)
            pooled_lev[m].push_back(solutions[s].leverage[m]);
        const int d_max = std::min<int>(
            max_horizon, static_cast<int>(n_dates - 1 - s));
        for (int d = 1; d <= d_max; ++d) {
            const std::size_t after = s + static_cast<std::size_t>(d);
            for (std::size_t m = 0; m < n_methods; ++m) {
                const double phi =
                    solutions[s].holdings[m].dot(
                        bond_pv.col(static_cast<Eigen::Index>(after))) /
                    liability_pv[after];
                const double ufr = 1.0 - std::min(phi, 1.0);
                result.mean_underfunding(static_cast<Eigen::Index>(m), d - 1) += ufr;
                counts(static_cast<Eigen::Index>(m), d - 1) += 1.0;
                if (d == percentile_horizon) pooled_ufr[m].push_back(ufr);
                if (sink)
                    sink({static_cast<int>(s), d, methods[m], phi, ufr,
                          solutions[s].leverage[m]});
            }
        }
    }
    result.mean_underfunding.array() /= counts.array().max(1.0);

    result.underfunding_pct.resize(static_cast<Eigen::Index>(n_methods), 3);
    result.leverage_pct.resize(static_cast<Eigen::Index>(n_methods), 3);
    for (std::size_t m = 0; m < n_methods; ++m) {
        const Eigen::Index row = static_cast<Eigen::Index>(m);
        if (pooled_ufr[m].empty()) {
            result.underfunding_pct.row(row).setConstant(
                std::numeric_limits<double>::quiet_NaN());
        } else {
            result.underfunding_pct(row, 0) = percentile(pooled_ufr[m], 0.90);
            result.underfunding_pct(row, 1) = percentile(pooled_ufr[m], 0.95);
            result.underfunding_pct(row, 2) = percentile(pooled_ufr[m], 0.99);
        }
        result.leverage_pct(row, 0) = percentile(pooled_lev[m], 0.50);
        result.leverage_pct(row, 1) = percentile(pooled_lev[m], 0.95);
        result.leverage_pct(row, 2) = percentile(pooled_lev[m], 0.99);
    }
    return result;
}

namespace {

double payment_at(const CashFlowSchedule& cf, double time) {
    for (std::size_t k = 0; k < cf.dates.size(); ++k)
        if (std::abs(cf.dates[k] - time) <= 1e-9) return cf.amounts[k];
    return 0.0;
}

/// Liability payments strictly after `now`, re-expressed in remaining
/// term reduced by `reduce`.
CashFlowSchedule remaining_liability(const CashFlowSchedule& cf, double now,
                                     double reduce) {
    CashFlowSchedule out;
    for (std::size_t k = 0; k < cf.dates.size(); ++k) {
        const double remaining = cf.dates[k] - now - reduce;
        if (remaining > 1e-9) {
            out.dates.push_back(remaining);
            out.amounts.push_back(cf.amounts[k]);
        }
    }
    return out;
}

}  // namespace

namespace {

// Hedge for the coming period on maturity-reduced instruments; an empty
// reduced liability (only the predetermined next coupon left) parks
// everything in cash.
struct ReducedHedge {
    std::optional<InstrumentSet> instruments;
    std::size_t universe_size = 0;

    ReducedHedge(const CashFlowSchedule& liability, double now,
                 const std::vector<double>& fresh_maturities, double dt,
                 const std::vector<Method>& methods,
                 const ExperimentConfig& config)
        : universe_size(fresh_maturities.size()) {
        const CashFlowSchedule reduced = remaining_liability(liability, now, dt);
        if (reduced.dates.empty()) return;
        std::vector<double> reduced_maturities;
        reduced_maturities.reserve(fresh_maturities.size());
        for (double m : fresh_maturities) reduced_maturities.push_back(m - dt);
        instruments.emplace(reduced, zero_coupon_universe(reduced_maturities),
                            methods, config);
    }

    Eigen::VectorXd solve(Method method, const YieldCurve& curve,
                          const ExperimentConfig& config) const {
        if (!instruments)
            return Eigen::VectorXd::Zero(
                static_cast<Eigen::Index>(universe_size));
        return instruments->solve(method, curve, config).holdings;
    }
};

double portfolio_value(const YieldCurve& curve, const Eigen::VectorXd& z,
                       const std::vector<double>& maturities) {
    double value = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j)
        value += z(j) * curve.discount(maturities[static_cast<std::size_t>(j)]);
    return value;
}

DynamicState advance(const DynamicState& previous, const YieldCurve& curve_now,
                     double now, const CashFlowSchedule& liability,
                     const std::vector<double>& aged_maturities,
                     const std::vector<double>& fresh_maturities, double dt,
                     const Eigen::VectorXd& new_holdings) {
    if (static_cast<Eigen::Index>(aged_maturities.size()) !=
        previous.holdings.size())
        throw std::invalid_argument("dynamic_step: holdings/maturity mismatch");

    DynamicState state;
    state.time = now;
    state.nav = previous.gross_short * previous.cash +
                portfolio_value(curve_now, previous.holdings, aged_maturities) -
                payment_at(liability, now);

    const CashFlowSchedule outstanding = remaining_liability(liability, now, 0.0);
    state.liability_value =
        outstanding.dates.empty() ? 0.0 : present_value(curve_now, outstanding);

    state.holdings = new_holdings;
    state.cash = state.nav -
                 portfolio_value(curve_now, state.holdings, fresh_maturities);
    state.gross_short = std::exp(curve_now.cumulative_discount(dt));
    return state;
}

}  // namespace

DynamicState dynamic_step(const DynamicState& previous,
                          const YieldCurve& curve_now, double now,
                          Method method, const CashFlowSchedule& liability,
                          const std::vector<double>& aged_maturities,
                          const std::vector<double>& fresh_maturities,
                          double dt, const ExperimentConfig& config) {
    const ReducedHedge hedge(liability, now, fresh_maturities, dt, {method},
                             config);
    return advance(previous, curve_now, now, liability, aged_maturities,
                   fresh_maturities, dt,
                   hedge.solve(method, curve_now, config));
}

DynamicState initial_dynamic_state(const YieldCurve& curve0, Method method,
                                   const CashFlowSchedule& liability,
                                   const std::vector<double>& fresh_maturities,
                                   double dt, const ExperimentConfig& config) {
    DynamicState state;
    state.time = 0.0;
    state.liability_value =
        present_value(curve0, remaining_liability(liability, 0.0, 0.0));
    state.nav = state.liability_value;  // 100% funded
    const ReducedHedge hedge(liability, 0.0, fresh_maturities, dt, {method},
                             config);
    state.holdings = hedge.solve(method, curve0, config);
    state.cash = state.nav -
                 portfolio_value(curve0, state.holdings, fresh_maturities);
    state.gross_short = std::exp(curve0.cumulative_discount(dt));
    return state;
}

CashFlowSchedule rebucket_quarterly(const CashFlowSchedule& monthly) {
    CashFlowSchedule out;
    const int quarters =
        static_cast<int>(std::ceil(monthly.max_date() * 4.0 - 1e-9));
    for (int k = 1; k <= quarters; ++k) {
        const double lo = (k - 1) / 4.0;
        const double hi = k / 4.0;
        double amount = 0.0;
        for (std::size_t i = 0; i < monthly.dates.size(); ++i)
            if (monthly.dates[i] > lo + 1e-12 && monthly.dates[i] <= hi + 1e-12)
                amount += monthly.amounts[i];
        if (amount > 0.0) {
            out.dates.push_back(hi);
            out.amounts.push_back(amount);
        }
    }
    out.validate();
    return out;
}

DynamicResult dynamic_experiment(const AbwParams& params,
                                 const std::vector<Method>& methods,
                                 LiabilityKind kind,
                                 const ExperimentConfig& config,
                                 int horizon_quarters, int n_paths,
                                 std::uint64_t seed,
                                 const UniverseSchedule& universe) {
    if (n_paths < 1 || horizon_quarters < 1)
        throw std::invalid_argument("dynamic_experiment: bad experiment size");

    const CashFlowSchedule liability =
        rebucket_quarterly(standard_liability(kind, config.horizon));
    const int max_quarters =
        static_cast<int>(std::lround(config.horizon * 4.0));
    std::vector<int> curve_maturities;
    curve_maturities.reserve(static_cast<std::size_t>(max_quarters));
    for (int n = 1; n <= max_quarters; ++n) curve_maturities.push_back(n);
    const BondCoefficients coeffs = bond_coefficients(params, max_quarters);

    const UniverseSchedule issue =
        universe ? universe
                 : UniverseSchedule([&config](double) {
                       return config.bond_maturities;
                   });

    const std::size_t n_methods = methods.size();
    DynamicResult result;
    result.methods = methods;
    result.quarters = horizon_quarters;
    result.paths = n_paths;
    for (std::size_t m = 0; m < n_methods; ++m)
        result.abs_return_error.emplace_back(
            Eigen::MatrixXd::Constant(n_paths, horizon_quarters,
                                      std::numeric_limits<double>::quiet_NaN()));
    std::vector<char> path_ok(static_cast<std::size_t>(n_paths), 0);

    constexpr double kDt = 0.25;
    // The reduced instruments (and their bases) at each rebalance date
    // are path-independent; build them once for every path to share.
    std::vector<ReducedHedge> hedges;
    hedges.reserve(static_cast<std::size_t>(horizon_quarters) + 1);
    for (int q = 0; q <= horizon_quarters; ++q)
        hedges.emplace_back(liability, q * kDt, issue(q * kDt), kDt, methods,
                            config);

    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
        try {
            const SimulatedPath path =
                simulate_path(params, coeffs, horizon_quarters, seed,
                              static_cast<std::uint64_t>(p), curve_maturities);
            for (std::size_t m = 0; m < n_methods; ++m) {
                std::vector<double> held = issue(0.0);
                DynamicState state;
                {
                    const YieldCurve& curve0 = path.curves[0];
                    state.liability_value = present_value(
                        curve0, remaining_liability(liability, 0.0, 0.0));
                    state.nav = state.liability_value;
                    state.holdings = hedges[0].solve(methods[m], curve0, config);
                    state.cash = state.nav -
                                 portfolio_value(curve0, state.holdings, held);
                    state.gross_short =
                        std::exp(curve0.cumulative_discount(kDt));
                }
                for (int q = 1; q <= horizon_quarters; ++q) {
                    const double now = q * kDt;
                    const YieldCurve& curve =
                        path.curves[static_cast<std::size_t>(q)];
                    std::vector<double> aged = held;
                    for (double& mat : aged) mat -= kDt;
                    const std::vector<double> fresh = issue(now);
                    const double prev_liability = state.liability_value;
                    state = advance(
                        state, curve, now, liability, aged, fresh, kDt,
                        hedges[static_cast<std::size_t>(q)].solve(methods[m],
                                                                  curve, config));
                    result.abs_return_error[m](static_cast<Eigen::Index>(p), q - 1) =
                        std::abs(state.nav - state.liability_value) /
                        prev_liability;
                    held = fresh;
                }
            }
            path_ok[p] = 1;
        } catch (const std::exception&) {
            path_ok[p] = 0;
        }
    });

    // Aggregate over surviving paths.
    std::vector<int> survivors;
    for (int p = 0; p < n_paths; ++p)
        if (path_ok[static_cast<std::size_t>(p)]) survivors.push_back(p);
    result.dropped_paths = n_paths - static_cast<int>(survivors.size());
    if (survivors.empty())
        throw std::runtime_error("dynamic_experiment: every path failed");

    result.pct99.resize(static_cast<Eigen::Index>(n_methods), horizon_quarters);
    result.end_mse.assign(n_methods, 0.0);
    for (std::size_t m = 0; m < n_methods; ++m) {
        for (int q = 0; q < horizon_quarters; ++q) {
            std::vector<double> column;
            column.reserve(survivors.size());
            for (int p : survivors)
                column.push_back(result.abs_return_error[m](p, q));
            result.pct99(static_cast<Eigen::Index>(m), q) =
                percentile(column, 0.99);
            if (q == horizon_quarters - 1) {
                double mse = 0.0;
                for (double v : column) mse += v * v;
                result.end_mse[m] = mse / static_cast<double>(column.size());
            }
        }
    }
    return result;
}

}  // namespace immunize
