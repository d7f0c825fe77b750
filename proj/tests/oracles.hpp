// Test-only reference implementations, kept independent of the library's
// solve paths: brute-force enumeration, projected gradient, finite
// differences, and random instance generation.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "immunize/basis.hpp"
#include "immunize/curves.hpp"
#include "immunize/sensitivity.hpp"

namespace oracles {

/// Random but realistic sensitivity instance: zero-coupon bonds and a
/// scattered liability on a shared grid under a wiggly curve.
struct RandomInstance {
    immunize::YieldCurve curve;
    immunize::CashFlowSchedule liability;
    std::vector<immunize::CashFlowSchedule> bonds;
    immunize::SensitivitySystem system;

    RandomInstance(std::mt19937_64& rng, int bonds_count, int basis_count,
                   int grid_points,
                   immunize::BasisFamily family = immunize::BasisFamily::chebyshev)
        : curve(make_curve(rng)),
          liability(make_liability(rng, grid_points, bonds_count)),
          bonds(make_bonds(rng, liability, bonds_count)),
          system(immunize::build_system(
              curve, liability, bonds,
              immunize::BasisSet::build(
                  family, basis_count, 31.0,
                  immunize::payout_union(liability, bonds)))) {}

private:
    static immunize::YieldCurve make_curve(std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> terms, yields;
        const double base = 0.005 + 0.05 * u(rng);
        for (int t = 1; t <= 31; ++t) {
            terms.push_back(t);
            yields.push_back(base + 0.01 * (u(rng) - 0.5));
        }
        return immunize::YieldCurve(terms, yields);
    }

    static immunize::CashFlowSchedule make_liability(std::mt19937_64& rng,
                                                     int grid_points,
                                                     int bonds_count) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const int payments = std::max(2, grid_points - bonds_count);
        immunize::CashFlowSchedule cf;
        std::vector<double> dates;
        for (int k = 0; k < payments; ++k)
            dates.push_back(0.5 + 29.0 * u(rng));
        std::sort(dates.begin(), dates.end());
        for (double t : dates) {
            if (!cf.dates.empty() && t <= cf.dates.back() + 1e-3) continue;
            cf.dates.push_back(t);
            cf.amounts.push_back(0.1 + 0.9 * u(rng));
        }
        cf.validate();
        return cf;
    }

    static std::vector<immunize::CashFlowSchedule> make_bonds(
        std::mt19937_64& rng, const immunize::CashFlowSchedule& liability,
        int bonds_count) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<immunize::CashFlowSchedule> bonds;
        std::vector<double> used = liability.dates;
        while (static_cast<int>(bonds.size()) < bonds_count) {
            const double t = 1.0 + 28.0 * u(rng);
            bool clash = false;
            for (double s : used)
                if (std::abs(s - t) < 5e-2) { clash = true; break; }
            if (clash) continue;
            used.push_back(t);
            bonds.push_back(immunize::CashFlowSchedule::zero_coupon(t));
        }
        std::sort(bonds.begin(), bonds.end(),
                  [](const auto& a, const auto& b) {
                      return a.dates[0] < b.dates[0];
                  });
        return bonds;
    }
};

/// Projected gradient with exact line search for the constrained GLS
/// problem min (Az-b)' Omega^-1 (Az-b) s.t. Rz = r. Runs until the
/// iterate stalls over a block of steps, which bounds the remaining
/// error directly in z.
inline Eigen::VectorXd projected_gradient_gls(
    const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
    const Eigen::MatrixXd& omega, const Eigen::MatrixXd& R,
    const Eigen::VectorXd& r, long max_iter = 5'000'000) {
    // whiten with a Cholesky factor: min ||L^-1 (Az - b)||^2, same
    // minimizer, far better floating-point scales than forming Omega^-1
    const Eigen::LLT<Eigen::MatrixXd> llt(omega);
    const Eigen::MatrixXd white_A = llt.matrixL().solve(A);
    const Eigen::VectorXd white_b = llt.matrixL().solve(b);
    const Eigen::MatrixXd Q = white_A.transpose() * white_A;
    const Eigen::VectorXd q = white_A.transpose() * white_b;
    // projector onto null(R) and a feasible start
    const Eigen::MatrixXd RRt_inv = (R * R.transpose()).inverse();
    const Eigen::MatrixXd P =
        Eigen::MatrixXd::Identity(A.cols(), A.cols()) -
        R.transpose() * RRt_inv * R;
    Eigen::VectorXd z = R.transpose() * (RRt_inv * r);

    constexpr long kBlock = 50;
    const auto reproject = [&](Eigen::VectorXd& v) {
        v -= R.transpose() * (RRt_inv * (R * v - r));
    };
    Eigen::VectorXd z_block = z;
    for (long it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd g = Q * z - q;
        const Eigen::VectorXd d = -(P * g);
        const double dd = d.squaredNorm();
        const double curvature = dd > 0.0 ? d.dot(Q * d) : 1.0;
        if (dd == 0.0 || curvature <= 0.0) break;
        z += (dd / curvature) * d;
        if ((it + 1) % kBlock == 0) {
            reproject(z);  // cancel accumulated drift off the manifold
            if ((z - z_block).norm() <= 1e-13 * (1.0 + z.norm())) break;
            z_block = z;
        }
    }
    reproject(z);
    return z;
}

/// Vertices of {w in R^2 : |g_n'w| <= 1} for a 2 x N matrix G.
inline std::vector<Eigen::Vector2d> polygon_vertices(const Eigen::MatrixXd& G) {
    const Eigen::Index N = G.cols();
    std::vector<Eigen::Vector2d> vertices;
    for (Eigen::Index a = 0; a < N; ++a)
        for (Eigen::Index b = a + 1; b < N; ++b)
            for (double sa : {-1.0, 1.0})
                for (double sb : {-1.0, 1.0}) {
                    Eigen::Matrix2d M;
                    M.row(0) = G.col(a).transpose();
                    M.row(1) = G.col(b).transpose();
                    if (std::abs(M.determinant()) < 1e-12) continue;
                    const Eigen::Vector2d w =
                        M.inverse() * Eigen::Vector2d(sa, sb);
                    if ((G.transpose() * w).cwiseAbs().maxCoeff() <= 1.0 + 1e-9)
                        vertices.push_back(w);
                }
    if (vertices.empty())
        throw std::runtime_error("polygon_vertices: unbounded set");
    return vertices;
}

/// max over the polygon of <w, Az-b> by vertex enumeration (I = 2).
inline double vertex_inner_value(const Eigen::MatrixXd& G,
                                 const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& z) {
    const Eigen::VectorXd c = A * z - b;
    double best = 0.0;
    for (const auto& w : polygon_vertices(G))
        best = std::max(best, w.dot(c));
    return best;
}

/// Brute-force minmax value for J = 2, I = 2 under value matching only:
/// coarse scan of the value-matching line followed by ternary search.
inline double grid_minmax_value(const Eigen::MatrixXd& G,
                                const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& b,
                                const Eigen::RowVectorXd& a0) {
    const Eigen::Vector2d zp =
        a0.transpose() * (1.0 / a0.squaredNorm());  // particular solution
    Eigen::Vector2d dir(-a0(1), a0(0));
    dir.normalize();
    const auto value = [&](double tau) {
        return vertex_inner_value(G, A, b, zp + tau * dir);
    };
    double best_tau = 0.0, best = value(0.0);
    for (double tau = -300.0; tau <= 300.0; tau += 0.05) {
        const double v = value(tau);
        if (v < best) {
            best = v;
            best_tau = tau;
        }
    }
    double lo = best_tau - 0.06, hi = best_tau + 0.06;
    while (hi - lo > 1e-12) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (value(m1) <= value(m2)) hi = m2;
        else lo = m1;
    }
    return value(0.5 * (lo + hi));
}

/// Central-difference sensitivity of a cash flow against basis direction
/// i; matches the definition used for b (and columns of A).
inline double gateaux_sensitivity(const immunize::YieldCurve& curve,
                                  const immunize::CashFlowSchedule& cf,
                                  const immunize::BasisSet& basis, int index,
                                  double alpha, double liability_value) {
    const auto bump = [&](double sign) {
        return immunize::present_value_shifted(curve, cf, [&](double t) {
            return sign * alpha * basis.h(index, t);
        });
    };
    return -(bump(1.0) - bump(-1.0)) / (2.0 * alpha * liability_value);
}

}  // namespace oracles
