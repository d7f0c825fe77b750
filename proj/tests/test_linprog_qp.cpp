#include <doctest.h>

#include "immunize/linprog.hpp"
#include "immunize/qp.hpp"

using namespace immunize;

TEST_CASE("simplex solves a known LP") {
    // min -x1 - 2 x2  s.t.  x1 + x2 + s1 = 4,  x1 + 3 x2 + s2 = 6,  x >= 0
    Eigen::VectorXd c(4);
    c << -1, -2, 0, 0;
    Eigen::MatrixXd A(2, 4);
    A << 1, 1, 1, 0,
         1, 3, 0, 1;
    Eigen::VectorXd b(2);
    b << 4, 6;
    const auto res = solve_lp(c, A, b);
    REQUIRE(res.status == LpStatus::optimal);
    // optimum at (3, 1)
    CHECK(res.x(0) == doctest::Approx(3.0));
    CHECK(res.x(1) == doctest::Approx(1.0));
    CHECK(res.objective == doctest::Approx(-5.0));
    // strong duality: y'b equals the optimum
    CHECK(res.dual.dot(b) == doctest::Approx(-5.0).epsilon(1e-9));
}

TEST_CASE("simplex detects infeasibility") {
    Eigen::VectorXd c(1);
    c << 1;
    Eigen::MatrixXd A(1, 1);
    A << 1;
    Eigen::VectorXd b(1);
    b << -2;  // x = -2 impossible with x >= 0
    CHECK(solve_lp(c, A, b).status == LpStatus::infeasible);
}

TEST_CASE("simplex detects unboundedness") {
    // min -x1 with x1 - x2 = 0: both can grow without bound
    Eigen::VectorXd c(2);
    c << -1, 0;
    Eigen::MatrixXd A(1, 2);
    A << 1, -1;
    Eigen::VectorXd b(1);
    b << 0;
    CHECK(solve_lp(c, A, b).status == LpStatus::unbounded);
}

TEST_CASE("simplex tolerates redundant rows") {
    Eigen::VectorXd c(2);
    c << 1, 1;
    Eigen::MatrixXd A(2, 2);
    A << 1, 1,
         2, 2;  // duplicate of row one
    Eigen::VectorXd b(2);
    b << 1, 2;
    const auto res = solve_lp(c, A, b);
    REQUIRE(res.status == LpStatus::optimal);
    CHECK(res.objective == doctest::Approx(1.0));
}

TEST_CASE("simplex duals satisfy complementary slackness") {
    Eigen::VectorXd c(5);
    c << 2, 3, 1, 0, 0;
    Eigen::MatrixXd A(2, 5);
    A << 1, 2, 1, 1, 0,
         2, 1, 3, 0, 1;
    Eigen::VectorXd b(2);
    b << 5, 7;
    const auto res = solve_lp(c, A, b);
    REQUIRE(res.status == LpStatus::optimal);
    for (Eigen::Index j = 0; j < 5; ++j) {
        const double reduced = c(j) - res.dual.dot(A.col(j));
        CHECK(reduced >= -1e-9);              // dual feasibility
        CHECK(reduced * res.x(j) <= 1e-9);    // complementary slackness
    }
}

TEST_CASE("active-set QP projects onto a box") {
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd q(3);
    q << -2.5, 0.7, -0.2;  // minimizer of ||x + q||^2 is -q
    // bounds 0 <= x <= 1 as C x >= d
    Eigen::MatrixXd C(6, 3);
    C << Eigen::MatrixXd::Identity(3, 3), -Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd d(6);
    d << 0, 0, 0, -1, -1, -1;
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.5);
    const auto res = solve_qp(Q, q, Eigen::MatrixXd(0, 3), Eigen::VectorXd(0),
                              C, d, x0);
    REQUIRE(res.converged);
    CHECK(res.x(0) == doctest::Approx(1.0));   // clamp(2.5)
    CHECK(res.x(1) == doctest::Approx(0.0));   // clamp(-0.7)
    CHECK(res.x(2) == doctest::Approx(0.2));   // interior
}

TEST_CASE("active-set QP with equality constraint") {
    // min ||x - a||^2 s.t. sum x = 1, x >= 0: projection onto the simplex
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd a(3);
    a << 1.2, 0.3, -0.4;
    const Eigen::VectorXd q = -a;
    Eigen::MatrixXd E(1, 3);
    E << 1, 1, 1;
    Eigen::VectorXd e(1);
    e << 1;
    const Eigen::MatrixXd C = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::VectorXd d = Eigen::VectorXd::Zero(3);
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 1.0 / 3);
    const auto res = solve_qp(Q, q, E, e, C, d, x0);
    REQUIRE(res.converged);
    // known simplex projection of (1.2, 0.3, -0.4)
    CHECK(res.x(0) == doctest::Approx(0.95));
    CHECK(res.x(1) == doctest::Approx(0.05));
    CHECK(res.x(2) == doctest::Approx(0.0));
}
