#include <doctest.h>

#include <cmath>

#include "immunize/hedging.hpp"
#include "immunize/solvers.hpp"

using namespace immunize;

namespace {
const std::vector<double> kKeyRates{1.0, 2.0, 5.0, 10.0, 30.0};

YieldCurve key_rate_curve(double level) {
    std::vector<double> terms, yields;
    for (int t = 1; t <= 30; ++t) {
        terms.push_back(t);
        yields.push_back(level);
    }
    return YieldCurve(terms, yields);
}
}  // namespace

TEST_CASE("zero coupon at a key rate has the analytic exposure") {
    const YieldCurve curve = key_rate_curve(0.03);
    const auto cf = CashFlowSchedule::zero_coupon(5.0);
    const double krd = key_rate_duration(curve, cf, kKeyRates, 2);
    // repricing one discount factor: (e^{5 d} - e^{-5 d}) / (2 d)
    CHECK(krd == doctest::Approx(std::sinh(0.05) / 0.01).epsilon(1e-10));
}

TEST_CASE("payments outside the tent are insensitive") {
    const YieldCurve curve = key_rate_curve(0.025);
    const auto cf = CashFlowSchedule::zero_coupon(20.0);
    // the 1y key's tent dies at 2y; a 20y payment never moves
    CHECK(key_rate_duration(curve, cf, kKeyRates, 0) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("key-rate exposure is a value-weighted sum over payments") {
    const YieldCurve curve({1.0, 5.0, 10.0, 30.0}, {0.02, 0.025, 0.03, 0.032});
    CashFlowSchedule cf;
    cf.dates = {3.0, 8.0, 24.0};
    cf.amounts = {1.0, 2.0, 4.0};
    const double total_pv = present_value(curve, cf);
    for (int k = 0; k < static_cast<int>(kKeyRates.size()); ++k) {
        double weighted = 0.0;
        for (std::size_t n = 0; n < cf.dates.size(); ++n) {
            CashFlowSchedule single;
            single.dates = {cf.dates[n]};
            single.amounts = {cf.amounts[n]};
            const double pv = present_value(curve, single);
            weighted += pv / total_pv *
                        key_rate_duration(curve, single, kKeyRates, k);
        }
        CHECK(key_rate_duration(curve, cf, kKeyRates, k) ==
              doctest::Approx(weighted).epsilon(1e-10));
    }
}

TEST_CASE("flat tails: the last key shifts the extrapolated region too") {
    const YieldCurve curve = key_rate_curve(0.03);
    const auto cf = CashFlowSchedule::zero_coupon(45.0);  // extrapolated term
    const double krd = key_rate_duration(curve, cf, kKeyRates, 4);
    CHECK(krd == doctest::Approx(std::sinh(0.45) / 0.01).epsilon(1e-10));
}

TEST_CASE("krd portfolio replicates a one-bond liability") {
    const YieldCurve curve = key_rate_curve(0.028);
    const auto liability = CashFlowSchedule::zero_coupon(10.0);
    const auto bonds = zero_coupon_universe(kKeyRates);
    const Portfolio p = solve_krd(curve, liability, bonds);
    CHECK(p.theta(3) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(p.gross_leverage == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("krd stays nearly unlevered on the standard liabilities") {
    const YieldCurve curve({1.0, 5.0, 10.0, 30.0}, {0.021, 0.026, 0.029, 0.031});
    const auto bonds = zero_coupon_universe(kKeyRates);
    for (auto kind : {LiabilityKind::full_horizon, LiabilityKind::long_run,
                      LiabilityKind::medium, LiabilityKind::short_and_long}) {
        const Portfolio p = solve_krd(curve, standard_liability(kind), bonds);
        CHECK(p.value_matched());
        CHECK(p.gross_leverage < 1.5);
    }
}

TEST_CASE("objective beats a naive value-matched start") {
    const YieldCurve curve({1.0, 5.0, 10.0, 30.0}, {0.02, 0.024, 0.028, 0.03});
    const auto liability = standard_liability(LiabilityKind::medium);
    const auto bonds = zero_coupon_universe(kKeyRates);
    const Portfolio p = solve_krd(curve, liability, bonds);

    const double lp = present_value(curve, liability);
    const auto exposures = [&](const Eigen::VectorXd& z) {
        double sum_sq = 0.0;
        for (int k = 0; k < 5; ++k) {
            double port = 0.0;
            for (int j = 0; j < 5; ++j) {
                const auto& bond = bonds[static_cast<std::size_t>(j)];
                port += z(j) * (present_value(curve, bond) / lp) *
                        key_rate_duration(curve, bond, kKeyRates, k);
            }
            const double gap = port - key_rate_duration(curve, liability,
                                                        kKeyRates, k);
            sum_sq += gap * gap;
        }
        return sum_sq;
    };

    // equal-value-share start scaled to value matching
    Eigen::VectorXd naive(5);
    for (int j = 0; j < 5; ++j)
        naive(j) = lp / (5.0 * present_value(curve, bonds[static_cast<std::size_t>(j)]));
    CHECK(exposures(p.holdings) <= exposures(naive) + 1e-12);
}

TEST_CASE("key index bounds") {
    const YieldCurve curve = key_rate_curve(0.03);
    const auto cf = CashFlowSchedule::zero_coupon(5.0);
    CHECK_THROWS_AS(key_rate_duration(curve, cf, kKeyRates, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(key_rate_duration(curve, cf, kKeyRates, -1),
                    std::invalid_argument);
    CHECK_THROWS_AS(key_rate_duration(curve, cf, kKeyRates, 2, 0.0),
                    std::invalid_argument);
}
