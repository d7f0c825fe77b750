#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "immunize/curves.hpp"

using namespace immunize;

TEST_CASE("cumulative discount on a flat curve") {
    const YieldCurve curve = YieldCurve::flat(0.05, 50.0);
    CHECK(curve.cumulative_discount(10.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(curve.cumulative_discount(0.0) == 0.0);
    CHECK_THROWS_AS(curve.cumulative_discount(-1.0), std::domain_error);
}

TEST_CASE("linear-in-x interpolation between nodes") {
    const YieldCurve curve({1.0, 2.0}, {0.02, 0.03});
    // x(1) = 0.02, x(2) = 0.06, halfway: 0.04
    CHECK(curve.cumulative_discount(1.5) == doctest::Approx(0.04).epsilon(1e-14));
    // below the first node x runs linearly from the origin
    CHECK(curve.cumulative_discount(0.5) == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("constant-forward extrapolation") {
    const YieldCurve curve({1.0, 2.0}, {0.02, 0.03});
    CHECK(curve.long_forward() == doctest::Approx(0.04).epsilon(1e-14));
    const double x2 = curve.cumulative_discount(2.0);
    for (double t : {2.5, 5.0, 30.0, 80.0})
        CHECK(curve.cumulative_discount(t) ==
              doctest::Approx(x2 + (t - 2.0) * 0.04).epsilon(1e-13));
    // continuity at the junction and at interior nodes
    CHECK(curve.cumulative_discount(2.0 - 1e-9) ==
          doctest::Approx(curve.cumulative_discount(2.0)).epsilon(1e-7));
    CHECK(curve.cumulative_discount(1.0) == doctest::Approx(0.02));
}

TEST_CASE("curve validation") {
    CHECK_THROWS_AS(YieldCurve({2.0, 1.0}, {0.01, 0.01}), std::invalid_argument);
    CHECK_THROWS_AS(YieldCurve({0.0, 1.0}, {0.01, 0.01}), std::invalid_argument);
    CHECK_THROWS_AS(YieldCurve({1.0}, {std::nan("")}), std::invalid_argument);
}

TEST_CASE("present value basics") {
    CashFlowSchedule cf;
    cf.dates = {1.0, 2.0, 3.0};
    cf.amounts = {1.0, 2.0, 3.0};
    CHECK(present_value(YieldCurve::flat(0.0), cf) ==
          doctest::Approx(6.0).epsilon(1e-14));

    const auto single = CashFlowSchedule::zero_coupon(5.0);
    CHECK(present_value(YieldCurve::flat(0.04), single) ==
          doctest::Approx(std::exp(-0.2)).epsilon(1e-14));
}

TEST_CASE("present value decreases under uniform upward x shifts") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const YieldCurve curve({1.0, 5.0, 10.0, 30.0},
                           {0.01, 0.02, 0.025, 0.03});
    for (int rep = 0; rep < 50; ++rep) {
        CashFlowSchedule cf;
        double t = 0.0;
        for (int k = 0; k < 10; ++k) {
            t += 0.2 + 3.0 * u(rng);
            cf.dates.push_back(t);
            cf.amounts.push_back(u(rng));
        }
        cf.amounts[0] += 0.1;
        const double eps = 1e-4 + 0.01 * u(rng);
        const double base = present_value(curve, cf);
        const double shifted =
            present_value_shifted(curve, cf, [&](double) { return eps; });
        CHECK(shifted < base);
    }
}

TEST_CASE("standard liabilities") {
    const auto full = standard_liability(LiabilityKind::full_horizon);
    CHECK(full.size() == 600);
    for (double a : full.amounts) CHECK(a == doctest::Approx(1.0 / 600));

    const auto late = standard_liability(LiabilityKind::long_run);
    CHECK(late.dates.front() > 20.0);
    CHECK(late.size() == 360);

    for (auto kind : {LiabilityKind::full_horizon, LiabilityKind::long_run,
                      LiabilityKind::medium, LiabilityKind::short_and_long}) {
        const auto cf = standard_liability(kind);
        double sum = 0.0;
        for (double a : cf.amounts) sum += a;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cf.dates.back() <= 50.0 + 1e-12);
        const double lo = cf.amounts.front(), hi = cf.amounts.front();
        for (double a : cf.amounts) {
            CHECK(a >= lo);
            CHECK(a <= hi);
        }
    }

    const auto split = standard_liability(LiabilityKind::short_and_long);
    for (double t : split.dates)
        CHECK(((t > 1.0 && t <= 15.0 + 1e-9) || t > 35.0));
}

TEST_CASE("yield history ingestion") {
    SUBCASE("direct read-back") {
        std::istringstream in("date,1,2,5\n2016-12-02,0.01,0.012,0.015\n");
        const auto history = load_yield_history(in);
        REQUIRE(history.size() == 1);
        CHECK(history.curves[0].yield(2.0) == doctest::Approx(0.012));
        CHECK(history.dates[0] == "2016-12-02");
        CHECK(history.rejected.empty());
    }
    SUBCASE("NaN yield rejects the row with a diagnostic") {
        std::istringstream in(
            "date,1,2\n2016-12-02,0.01,NaN\n2016-12-05,0.01,0.02\n");
        const auto history = load_yield_history(in);
        CHECK(history.size() == 1);
        REQUIRE(history.rejected.size() == 1);
        CHECK(history.rejected[0].find("line 2") != std::string::npos);
    }
    SUBCASE("non-ascending maturities are a format error") {
        std::istringstream in("date,5,2,1\n2016-12-02,0.01,0.01,0.01\n");
        CHECK_THROWS(load_yield_history(in));
    }
    SUBCASE("percent flag scales the yields") {
        std::istringstream in("date,1\n2016-12-02,1.5\n");
        const auto history = load_yield_history(in, true);
        CHECK(history.curves[0].yield(1.0) == doctest::Approx(0.015));
    }
    SUBCASE("round trip reproduces the input") {
        std::istringstream in(
            "date,1,2,5\n2016-12-02,0.0101,0.0123456789,0.015\n"
            "2016-12-05,0.0102,0.0124,0.0149\n");
        const auto history = load_yield_history(in);
        std::ostringstream out;
        write_yield_history(out, history);
        std::istringstream again(out.str());
        const auto reloaded = load_yield_history(again);
        REQUIRE(reloaded.size() == history.size());
        for (std::size_t s = 0; s < history.size(); ++s)
            for (std::size_t i = 0; i < history.maturities.size(); ++i)
                CHECK(reloaded.curves[s].grid_yields()[i] ==
                      doctest::Approx(history.curves[s].grid_yields()[i])
                          .epsilon(1e-12));
    }
}

TEST_CASE("full-horizon PV matches an independent summation") {
    // sampled historical-style curve; the oracle re-implements the
    // discounting from scratch
    const std::vector<double> terms{0.5, 1, 2, 3, 5, 7, 10, 20, 30};
    const std::vector<double> yields{0.021, 0.023, 0.0245, 0.0255, 0.027,
                                     0.0285, 0.0295, 0.0315, 0.032};
    const YieldCurve curve(terms, yields);
    const auto cf = standard_liability(LiabilityKind::full_horizon);

    auto x_of = [&](double t) -> double {
        std::vector<double> xs(terms.size());
        for (std::size_t i = 0; i < terms.size(); ++i) xs[i] = terms[i] * yields[i];
        if (t <= 0.0) return 0.0;
        if (t >= terms.back()) {
            const std::size_t k = terms.size() - 1;
            const double fwd = (xs[k] - xs[k - 1]) / (terms[k] - terms[k - 1]);
            return xs[k] + (t - terms[k]) * fwd;
        }
        std::size_t hi = 0;
        while (terms[hi] < t) ++hi;
        const double t0 = hi == 0 ? 0.0 : terms[hi - 1];
        const double x0 = hi == 0 ? 0.0 : xs[hi - 1];
        return x0 + (t - t0) / (terms[hi] - t0) * (xs[hi] - x0);
    };
    double expected = 0.0;
    for (std::size_t n = 0; n < cf.size(); ++n)
        expected += std::exp(-x_of(cf.dates[n])) * cf.amounts[n];

    CHECK(present_value(curve, cf) ==
          doctest::Approx(expected).epsilon(1e-12));
}
