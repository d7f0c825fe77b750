#include <doctest.h>

#include <cmath>

#include "immunize/basis.hpp"

using namespace immunize;

TEST_CASE("chebyshev recurrence") {
    CHECK(chebyshev_g(1, 50.0, 17.3) == 1.0);
    CHECK(chebyshev_g(2, 50.0, 0.0) == doctest::Approx(-1.0));
    CHECK(chebyshev_g(2, 50.0, 50.0) == doctest::Approx(1.0));
    // T_3(0) = 0 at the midpoint
    CHECK(chebyshev_g(4, 50.0, 25.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK_THROWS_AS(chebyshev_g(2, 50.0, -0.5), std::domain_error);
    CHECK_THROWS_AS(chebyshev_g(2, 50.0, 50.5), std::domain_error);

    // recurrence agrees with the trigonometric form
    for (int i = 1; i <= 12; ++i)
        for (int k = 0; k <= 100; ++k) {
            const double t = 50.0 * k / 100.0;
            const double u = 2.0 * t / 50.0 - 1.0;
            CHECK(chebyshev_g(i, 50.0, t) ==
                  doctest::Approx(std::cos((i - 1) * std::acos(u)))
                      .epsilon(1e-10));
        }
}

TEST_CASE("basis construction") {
    const std::vector<double> dates{1.0, 2.0, 5.0};

    SUBCASE("monomial level row") {
        const auto basis = BasisSet::build(BasisFamily::monomial, 1, 50.0, dates);
        for (int n = 0; n < 3; ++n) {
            CHECK(basis.G()(0, n) == doctest::Approx(1.0));
            CHECK(basis.H()(0, n) == doctest::Approx(dates[static_cast<std::size_t>(n)]));
        }
    }
    SUBCASE("chebyshev full rank at I = N") {
        CHECK_NOTHROW(BasisSet::build(BasisFamily::chebyshev, 3, 50.0, dates));
    }
    SUBCASE("more functions than dates") {
        CHECK_THROWS_AS(
            BasisSet::build(BasisFamily::chebyshev, 2, 50.0, {1.0}),
            std::invalid_argument);
    }
    SUBCASE("tabulated rank deficiency names the offending index") {
        Eigen::MatrixXd g(2, 3);
        g.row(0) << 1.0, 1.0, 1.0;
        g.row(1) << 2.0, 2.0, 2.0;  // dependent on row 1
        try {
            BasisSet::tabulated(g, 50.0, dates);
            FAIL("expected rank error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("index 2") != std::string::npos);
        }
    }
    SUBCASE("dates outside the horizon") {
        CHECK_THROWS_AS(
            BasisSet::build(BasisFamily::chebyshev, 2, 4.0, dates),
            std::invalid_argument);
    }
}

TEST_CASE("perturbation evaluation") {
    const std::vector<double> dates{1.0, 2.0, 5.0, 10.0};
    const auto basis = BasisSet::build(BasisFamily::monomial, 3, 10.0, dates);

    SUBCASE("parallel shift") {
        Perturbation p{{1.0, 0.0, 0.0}, 0.01};
        for (double t : {0.5, 3.0, 10.0}) {
            CHECK(evaluate_perturbation(basis, p, t) ==
                  doctest::Approx(0.01 * t).epsilon(1e-14));
            CHECK(perturbation_yield_shift(basis, p, t) ==
                  doctest::Approx(0.01).epsilon(1e-14));
        }
    }
    SUBCASE("zero coefficients") {
        Perturbation p{{0.0, 0.0, 0.0}, 0.5};
        CHECK(evaluate_perturbation(basis, p, 7.0) == 0.0);
    }
    SUBCASE("coefficient count must match") {
        Perturbation p{{1.0}, 0.01};
        CHECK_THROWS_AS(evaluate_perturbation(basis, p, 1.0),
                        std::invalid_argument);
    }
    SUBCASE("shifted pricing refuses cash flows past the horizon") {
        Perturbation p{{0.01, 0.0, 0.0}, 1.0};
        const auto curve = YieldCurve::flat(0.02);
        CashFlowSchedule cf;
        cf.dates = {12.0};  // beyond the 10y basis horizon
        cf.amounts = {1.0};
        CHECK_THROWS_AS(present_value(curve, cf, basis, p),
                        std::invalid_argument);
    }
    SUBCASE("membership matches the grid sup of the yield shift") {
        Perturbation p{{0.4, -0.3, 0.2}, 1.0};
        double sup = 0.0;
        for (double t : dates)
            sup = std::max(sup, std::abs(perturbation_yield_shift(basis, p, t)));
        CHECK(perturbation_within(basis, p, sup * 1.0001));
        CHECK_FALSE(perturbation_within(basis, p, sup * 0.9));
    }
}

TEST_CASE("tabulated loadings interpolate between grid nodes") {
    // Vasicek-style mean-reversion loading alongside a level loading
    const double kappa = 0.35;
    const std::vector<double> dates{1.0, 2.0, 5.0, 10.0, 20.0, 30.0};
    Eigen::MatrixXd g(2, 6);
    for (int n = 0; n < 6; ++n) {
        const double t = dates[static_cast<std::size_t>(n)];
        g(0, n) = 1.0;
        g(1, n) = (1.0 - std::exp(-kappa * t)) / (kappa * t);
    }
    const auto basis = BasisSet::tabulated(g, 30.0, dates);
    CHECK(basis.family() == BasisFamily::tabulated);
    CHECK(basis.g(1, 7.0) == doctest::Approx(1.0));
    // linear between the 5y and 10y nodes
    const double mid = 0.5 * (g(1, 2) + g(1, 3));
    CHECK(basis.g(2, 7.5) == doctest::Approx(mid).epsilon(1e-14));
    // flat tails outside the grid
    CHECK(basis.g(2, 0.5) == doctest::Approx(g(1, 0)));
    CHECK(basis.g(2, 40.0) == doctest::Approx(g(1, 5)));
    CHECK(basis.h(2, 2.0) == doctest::Approx(2.0 * g(1, 1)).epsilon(1e-14));
}

TEST_CASE("truncated basis keeps leading rows") {
    const std::vector<double> dates{1.0, 2.0, 5.0, 10.0, 20.0};
    const auto basis = BasisSet::build(BasisFamily::chebyshev, 5, 20.0, dates);
    const auto head = basis.truncated(3);
    CHECK(head.count() == 3);
    CHECK((head.G() - basis.G().topRows(3)).cwiseAbs().maxCoeff() == 0.0);
}
