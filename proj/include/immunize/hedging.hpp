#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "immunize/abw.hpp"
#include "immunize/curves.hpp"
#include "immunize/solvers.hpp"

namespace immunize {

enum class Method { ri0, ri1, ri2, hd, krd };

Method method_from_string(std::string_view name);
std::string to_string(Method method);

/// Shared experiment settings: the bond universe, the robust basis and
/// the norm used by the RI solvers.
struct ExperimentConfig {
    std::vector<double> bond_maturities{1.0, 2.0, 5.0, 10.0, 30.0};
    int basis_count = 10;          // Chebyshev count for the RI methods
    double horizon = 50.0;         // planning horizon T
    NormKind norm = NormKind::l2;  // RI solve norm
    bool no_short_sales = false;   // adds z >= 0 to the RI methods
};

std::vector<CashFlowSchedule> zero_coupon_universe(
    const std::vector<double>& maturities);

/// Solve one immunization problem with the requested method. HD uses a
/// monomial basis with J-1 functions; RI(k) uses the Chebyshev basis
/// with value matching plus k sensitivity rows; KRD matches key-rate
/// exposures at the bond maturities.
Portfolio solve_method(Method method, const YieldCurve& curve,
                       const CashFlowSchedule& liability,
                       const std::vector<CashFlowSchedule>& bonds,
                       const ExperimentConfig& config);

/// One static-hedging observation; underfunding = 1 - min(phi, 1).
struct StaticObservation {
    int date_index;
    int horizon_days;
    Method method;
    double funding_ratio;
    double underfunding;
    double gross_leverage;
};

struct StaticResult {
    std::vector<Method> methods;
    int max_horizon = 0;
    int percentile_horizon = 0;           // pooled horizon for the tables
    Eigen::MatrixXd mean_underfunding;    // methods x horizons (d = col+1)
    Eigen::MatrixXd underfunding_pct;     // methods x {90, 95, 99}
    Eigen::MatrixXd leverage_pct;         // methods x {50, 95, 99}
    int dates_used = 0;
    int dates_skipped = 0;
};

/// Hedge on each panel date, shock with the realized d-day-ahead change
/// in the cumulative discount rate, and aggregate underfunding ratios.
/// Observations stream through `sink` when provided.
StaticResult static_experiment(
    const YieldHistory& history, LiabilityKind kind,
    const std::vector<Method>& methods, const ExperimentConfig& config,
    int max_horizon = 100, int percentile_horizon = 30,
    const std::function<void(const StaticObservation&)>& sink = {});

/// Mark-to-market state of the rebalanced fund.
struct DynamicState {
    double time = 0.0;           // years
    double liability_value = 0.0;  // P_s
    double nav = 0.0;            // V_s
    double cash = 0.0;           // C_s
    Eigen::VectorXd holdings;    // z_s on the current universe
    double gross_short = 1.0;    // R_s, growth of cash over the next step
};

/// Advance one rebalancing period of length dt to time `now`: mark the
/// previous portfolio (whose remaining maturities are aged_maturities)
/// to the new curve, pay the liability coupon, then re-solve the hedge
/// on the freshly issued universe with maturities reduced by dt. A
/// liability with no payments after now+dt parks everything in cash.
DynamicState dynamic_step(const DynamicState& previous,
                          const YieldCurve& curve_now, double now,
                          Method method, const CashFlowSchedule& liability,
                          const std::vector<double>& aged_maturities,
                          const std::vector<double>& fresh_maturities,
                          double dt, const ExperimentConfig& config);

/// State at time zero: fully funded (V = P), hedged on the maturity-
/// reduced universe.
DynamicState initial_dynamic_state(const YieldCurve& curve0, Method method,
                                   const CashFlowSchedule& liability,
                                   const std::vector<double>& fresh_maturities,
                                   double dt, const ExperimentConfig& config);

struct DynamicResult {
    std::vector<Method> methods;
    int quarters = 0;
    int paths = 0;
    std::vector<Eigen::MatrixXd> abs_return_error;  // per method, paths x quarters
    std::vector<double> end_mse;                    // per method
    Eigen::MatrixXd pct99;                          // methods x quarters
    int dropped_paths = 0;
};

/// Mapping from rebalance time to the freshly issued bond maturities;
/// the default reissues the configured universe every quarter.
using UniverseSchedule = std::function<std::vector<double>(double now)>;

/// Quarterly rebalanced hedging over simulated curve paths. Paths are
/// independent with per-path streams keyed by (seed, path), so results
/// are identical at any parallelism level.
DynamicResult dynamic_experiment(const AbwParams& params,
                                 const std::vector<Method>& methods,
                                 LiabilityKind kind,
                                 const ExperimentConfig& config,
                                 int horizon_quarters, int n_paths,
                                 std::uint64_t seed,
                                 const UniverseSchedule& universe = {});

/// Sum monthly amounts into the quarterly buckets ((k-1)/4, k/4].
CashFlowSchedule rebucket_quarterly(const CashFlowSchedule& monthly);

}  // namespace immunize
