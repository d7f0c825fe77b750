#include "immunize/solvers.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "immunize/linprog.hpp"
#include "immunize/qp.hpp"

namespace immunize {

namespace {

constexpr double kResidualTol = 1e-10;

double condition_estimate(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

Portfolio make_portfolio(const SensitivitySystem& system,
                         Eigen::VectorXd z, std::string method) {
    Portfolio p;
    p.holdings = std::move(z);
    auto [theta, leverage] = shares_and_leverage(system, p.holdings);
    p.theta = std::move(theta);
    p.gross_leverage = leverage;
    p.method = std::move(method);
    return p;
}

Eigen::LLT<Eigen::MatrixXd> norm_geometry(const SensitivitySystem& system) {
    const Eigen::MatrixXd omega = system.basis.G() * system.basis.G().transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("solver: GG' is not positive definite");
    return llt;
}

void check_full_column_rank(const Eigen::MatrixXd& m, const char* name) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-12);
    if (qr.rank() < m.cols())
        throw std::runtime_error(std::string("solver: ") + name +
                                 " lacks full column rank");
}

void check_full_row_rank(const Eigen::MatrixXd& m, const char* name) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m.transpose());
    qr.setThreshold(1e-12);
    if (qr.rank() < m.rows())
        throw std::runtime_error(std::string("solver: ") + name +
                                 " lacks full row rank");
}

}  // namespace

ConstraintSet ConstraintSet::value_matching(const SensitivitySystem& system) {
    ConstraintSet c;
    c.R = system.a0;
    c.r = Eigen::VectorXd::Ones(1);
    return c;
}

ConstraintSet ConstraintSet::moment_matching(const SensitivitySystem& system,
                                             int level) {
    if (level < 0 || level > system.basis_count())
        throw std::invalid_argument("moment_matching: bad level");
    ConstraintSet c;
    c.R.resize(1 + level, system.bond_count());
    c.R.row(0) = system.a0;
    c.R.bottomRows(level) = system.A.topRows(level);
    c.r.resize(1 + level);
    c.r(0) = 1.0;
    c.r.tail(level) = system.b.head(level);
    return c;
}

Portfolio solve_hd(const SensitivitySystem& system) {
    const Eigen::Index J = system.bond_count();
    if (system.basis_count() != J - 1)
        throw std::invalid_argument(
            "solve_hd: requires exactly J-1 basis functions");
    const double cond = condition_estimate(system.A_plus);

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system.A_plus);
    Eigen::VectorXd z = lu.solve(system.b_plus);
    z += lu.solve(system.b_plus - system.A_plus * z);  // one refinement step

    const double residual = (system.A_plus * z - system.b_plus).norm() /
                            std::max(system.b_plus.norm(), 1.0);
    if (!z.allFinite() || residual > kResidualTol)
        throw std::runtime_error(
            "solve_hd: singular or near-singular system (cond ~ " +
            std::to_string(cond) + ")");

    Portfolio p = make_portfolio(system, std::move(z), "hd");
    p.condition_number = cond;
    p.certificate = MinmaxCertificate{
        0.0, Eigen::VectorXd::Zero(system.basis_count()), NormKind::linf};
    return p;
}

Portfolio solve_ri_l2(const SensitivitySystem& system,
                      const ConstraintSet& constraints) {
    const Eigen::MatrixXd& A = system.A;
    const Eigen::VectorXd& b = system.b;
    const Eigen::MatrixXd& R = constraints.R;
    const Eigen::VectorXd& r = constraints.r;
    if (R.cols() != A.cols() || R.rows() != r.size())
        throw std::invalid_argument("solve_ri_l2: constraint shape mismatch");
    check_full_column_rank(A, "A");
    check_full_row_rank(R, "R");

    const auto omega = norm_geometry(system);
    const Eigen::MatrixXd A_tilde = omega.solve(A);          // (GG')^-1 A
    const Eigen::MatrixXd S = A.transpose() * A_tilde;       // A'(GG')^-1 A
    Eigen::LLT<Eigen::MatrixXd> S_llt(S);
    if (S_llt.info() != Eigen::Success)
        throw std::runtime_error("solve_ri_l2: normal matrix not PD");

    Eigen::VectorXd z;
    if (!constraints.nonnegative) {
        const Eigen::VectorXd z_u = S_llt.solve(A_tilde.transpose() * b);
        const Eigen::MatrixXd T = S_llt.solve(R.transpose());
        const Eigen::MatrixXd K = R * T;
        z = z_u + T * K.partialPivLu().solve(r - R * z_u);
        const double feas = (R * z - r).cwiseAbs().maxCoeff();
        if (feas > kResidualTol * std::max(1.0, r.cwiseAbs().maxCoeff()))
            throw std::runtime_error("solve_ri_l2: constraint residual too large");
    } else {
        // Active-set quadratic solve with z >= 0.
        const LpResult feasible = solve_lp(
            Eigen::VectorXd::Zero(A.cols()), R, r);
        if (feasible.status != LpStatus::optimal)
            throw std::runtime_error(
                "solve_ri_l2: no nonnegative feasible portfolio");
        const Eigen::MatrixXd Q = S;
        const Eigen::VectorXd q = -(A_tilde.transpose() * b);
        const Eigen::MatrixXd C =
            Eigen::MatrixXd::Identity(A.cols(), A.cols());
        const Eigen::VectorXd d = Eigen::VectorXd::Zero(A.cols());
        const QpResult qp = solve_qp(Q, q, R, r, C, d, feasible.x);
        if (!qp.converged)
            throw std::runtime_error("solve_ri_l2: active-set did not converge");
        z = qp.x;
    }

    Portfolio p = make_portfolio(system, std::move(z), "ri-l2");
    p.certificate = inner_value(system, p.holdings, NormKind::l2);
    return p;
}

MinmaxCertificate inner_value(const SensitivitySystem& system,
                              const Eigen::VectorXd& z, NormKind kind) {
    if (z.size() != system.bond_count())
        throw std::invalid_argument("inner_value: size mismatch");
    if (!z.allFinite())
        throw std::invalid_argument("inner_value: non-finite portfolio");
    const Eigen::VectorXd c = system.A * z - system.b;
    const Eigen::Index I = c.size();

    if (kind == NormKind::l2) {
        const auto omega = norm_geometry(system);
        const Eigen::VectorXd oc = omega.solve(c);
        const double value = std::sqrt(std::max(c.dot(oc), 0.0));
        Eigen::VectorXd w = Eigen::VectorXd::Zero(I);
        if (value > 0.0) w = oc / value;
        return {value, std::move(w), NormKind::l2};
    }

    // max{c'w : G'w in [-1,1]^N} via its dual min{1'(u+v) : Gu - Gv = c}.
    const Eigen::MatrixXd& G = system.basis.G();
    const Eigen::Index N = G.cols();
    Eigen::MatrixXd lhs(I, 2 * N);
    lhs.leftCols(N) = G;
    lhs.rightCols(N) = -G;
    const LpResult lp =
        solve_lp(Eigen::VectorXd::Ones(2 * N), lhs, c);
    if (lp.status != LpStatus::optimal)
        throw std::runtime_error("inner_value: LP failed");
    return {std::max(lp.objective, 0.0), lp.dual, NormKind::linf};
}

namespace {

// Minimum-norm point of the optimal face {R z = r, M(z) <= V + slack},
// located by cutting planes; each violated inner maximizer w contributes
// the cut (w'A) z <= V + slack + w'b. Falls back to the vertex solution.
Eigen::VectorXd minimum_norm_optimal(const SensitivitySystem& system,
                                     const ConstraintSet& constraints,
                                     const Eigen::VectorXd& z_vertex,
                                     double value) {
    const Eigen::Index J = z_vertex.size();
    const double slack = 1e-9 * std::max(1.0, value);
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(J, J);
    const Eigen::VectorXd q = Eigen::VectorXd::Zero(J);

    std::vector<Eigen::RowVectorXd> cut_rows;
    std::vector<double> cut_rhs;
    Eigen::VectorXd best = z_vertex;
    for (int pass = 0; pass < 50; ++pass) {
        Eigen::Index base = constraints.nonnegative ? J : 0;
        Eigen::MatrixXd C(base + static_cast<Eigen::Index>(cut_rows.size()), J);
        Eigen::VectorXd d(C.rows());
        if (constraints.nonnegative) {
            C.topRows(J) = Eigen::MatrixXd::Identity(J, J);
            d.head(J).setZero();
        }
        for (std::size_t k = 0; k < cut_rows.size(); ++k) {
            // stored as >= rows for the QP
            C.row(base + static_cast<Eigen::Index>(k)) = -cut_rows[k];
            d(base + static_cast<Eigen::Index>(k)) = -cut_rhs[k];
        }
        const QpResult qp = solve_qp(Q, q, constraints.R, constraints.r, C, d,
                                     z_vertex);
        if (!qp.converged) return best;
        const MinmaxCertificate probe =
            inner_value(system, qp.x, NormKind::linf);
        if (probe.value <= value + 2.0 * slack + 1e-12) {
            best = qp.x;
            return best;
        }
        const Eigen::RowVectorXd row =
            probe.w_star.transpose() * system.A;
        cut_rows.push_back(row);
        cut_rhs.push_back(value + slack + probe.w_star.dot(system.b));
    }
    return best;
}

}  // namespace

Portfolio solve_ri_linf(const SensitivitySystem& system,
                        const ConstraintSet& constraints) {
    const Eigen::MatrixXd& A = system.A;
    const Eigen::MatrixXd& G = system.basis.G();
    const Eigen::MatrixXd& R = constraints.R;
    const Eigen::VectorXd& r = constraints.r;
    const Eigen::Index I = A.rows();
    const Eigen::Index J = A.cols();
    const Eigen::Index N = G.cols();
    const Eigen::Index M = R.rows();
    if (R.cols() != J || r.size() != M)
        throw std::invalid_argument("solve_ri_linf: constraint shape mismatch");
    if (I < J - 1)
        throw std::invalid_argument("solve_ri_linf: needs at least J-1 basis rows");

    const Eigen::Index z_cols = constraints.nonnegative ? J : 2 * J;
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(I + M, z_cols + 2 * N);
    Eigen::VectorXd rhs(I + M);
    if (constraints.nonnegative) {
        lhs.block(0, 0, I, J) = A;
        lhs.block(I, 0, M, J) = R;
    } else {
        lhs.block(0, 0, I, J) = A;
        lhs.block(0, J, I, J) = -A;
        lhs.block(I, 0, M, J) = R;
        lhs.block(I, J, M, J) = -R;
    }
    lhs.block(0, z_cols, I, N) = -G;
    lhs.block(0, z_cols + N, I, N) = G;
    rhs.head(I) = system.b;
    rhs.tail(M) = r;

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(z_cols + 2 * N);
    cost.tail(2 * N).setOnes();

    const LpResult lp = solve_lp(cost, lhs, rhs);
    if (lp.status == LpStatus::infeasible)
        throw std::runtime_error("solve_ri_linf: portfolio constraints infeasible");
    if (lp.status != LpStatus::optimal)
        throw std::runtime_error(
            "solve_ri_linf: LP did not reach an optimum (is A+ full column rank?)");

    Eigen::VectorXd z = constraints.nonnegative
                            ? Eigen::VectorXd(lp.x.head(J))
                            : Eigen::VectorXd(lp.x.head(J) - lp.x.segment(J, J));
    const double value = std::max(lp.objective, 0.0);

    z = minimum_norm_optimal(system, constraints, z, value);

    Portfolio p = make_portfolio(system, std::move(z), "ri-linf");
    MinmaxCertificate cert = inner_value(system, p.holdings, NormKind::linf);
    cert.value = value;  // report the minmax optimum
    p.certificate = std::move(cert);
    return p;
}

std::vector<ElementalTerm> jacobi_decompose(const SensitivitySystem& system) {
    const Eigen::Index I = system.basis_count();
    const Eigen::Index J = system.bond_count();
    if (I < J)
        throw std::invalid_argument("jacobi_decompose: requires I >= J");
    if (I > 14)
        throw std::invalid_argument(
            "jacobi_decompose: subset enumeration guarded at I <= 14");

    const auto omega = norm_geometry(system);
    const Eigen::MatrixXd A_tilde = omega.solve(system.A);

    std::vector<ElementalTerm> terms;
    std::vector<int> pick(static_cast<std::size_t>(J - 1));
    for (Eigen::Index k = 0; k < J - 1; ++k) pick[static_cast<std::size_t>(k)] = static_cast<int>(k);

    Eigen::MatrixXd A_s(J, J), At_s(J, J);
    Eigen::VectorXd b_s(J);
    double denom = 0.0;
    while (true) {
        A_s.row(0) = system.a0;
        At_s.row(0) = system.a0;
        b_s(0) = 1.0;
        for (Eigen::Index k = 0; k < J - 1; ++k) {
            const int row = pick[static_cast<std::size_t>(k)];
            A_s.row(k + 1) = system.A.row(row);
            At_s.row(k + 1) = A_tilde.row(row);
            b_s(k + 1) = system.b(row);
        }
        ElementalTerm term;
        term.rows.reserve(pick.size());
        for (int rowidx : pick) term.rows.push_back(rowidx + 1);

        const double det_a = A_s.determinant();
        const double det_at = At_s.determinant();
        term.weight = det_a * det_at;  // normalized below
        double hadamard = 1.0;
        for (Eigen::Index i = 0; i < J; ++i) hadamard *= A_s.row(i).norm();
        if (std::abs(det_a) <= 1e-14 * std::max(hadamard, 1e-300)) {
            term.singular = true;
        } else {
            term.z = A_s.partialPivLu().solve(b_s);
        }
        denom += term.weight;
        terms.push_back(std::move(term));

        // next combination of size J-1 from {0..I-1}
        Eigen::Index k = J - 2;
        while (k >= 0 &&
               pick[static_cast<std::size_t>(k)] ==
                   static_cast<int>(I - (J - 1) + k))
            --k;
        if (k < 0) break;
        ++pick[static_cast<std::size_t>(k)];
        for (Eigen::Index j = k + 1; j < J - 1; ++j)
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }

    if (std::abs(denom) < 1e-300)
        throw std::runtime_error("jacobi_decompose: degenerate weight sum");
    for (auto& term : terms) term.weight /= denom;
    return terms;
}

Eigen::VectorXd combine_elementals(const std::vector<ElementalTerm>& terms) {
    if (terms.empty())
        throw std::invalid_argument("combine_elementals: empty decomposition");
    Eigen::VectorXd z;
    for (const auto& term : terms) {
        if (term.singular) continue;
        if (z.size() == 0) z = Eigen::VectorXd::Zero(term.z.size());
        z += term.weight * term.z;
    }
    return z;
}

namespace {

// Piecewise-linear key-rate shift profile; flat below the first and
// above the last key rate.
double tent_profile(const std::vector<double>& keys, int k, double t) {
    const int K = static_cast<int>(keys.size());
    const double tk = keys[static_cast<std::size_t>(k)];
    if (K == 1) return 1.0;
    if (k == 0) {
        if (t <= tk) return 1.0;
        const double next = keys[1];
        return t >= next ? 0.0 : (next - t) / (next - tk);
    }
    if (k == K - 1) {
        if (t >= tk) return 1.0;
        const double prev = keys[static_cast<std::size_t>(k - 1)];
        return t <= prev ? 0.0 : (t - prev) / (tk - prev);
    }
    const double lo = keys[static_cast<std::size_t>(k - 1)];
    const double hi = keys[static_cast<std::size_t>(k + 1)];
    if (t <= lo || t >= hi) return 0.0;
    return t <= tk ? (t - lo) / (tk - lo) : (hi - t) / (hi - tk);
}

YieldCurve shifted_curve(const YieldCurve& curve,
                         const std::vector<double>& keys, int k,
                         double shift) {
    // Evaluate on the union of the curve grid and the key rates so the
    // tent's peak exists as a node even on sparse grids.
    std::vector<double> terms = curve.grid_terms();
    terms.insert(terms.end(), keys.begin(), keys.end());
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end(),
                            [](double a, double b) {
                                return std::abs(a - b) <= 1e-9;
                            }),
                terms.end());
    std::vector<double> yields;
    yields.reserve(terms.size());
    for (double t : terms)
        yields.push_back(curve.yield(t) + shift * tent_profile(keys, k, t));
    // Keep the extrapolated region consistent with the flat tail of the
    // tent: a shift that is flat at the long end moves the forward too.
    const double tail = tent_profile(keys, k, terms.back() + 1.0);
    return YieldCurve(std::move(terms), std::move(yields),
                      curve.long_forward() + shift * tail);
}

}  // namespace

double key_rate_duration(const YieldCurve& curve, const CashFlowSchedule& cf,
                         const std::vector<double>& key_rates, int k,
                         double delta) {
    if (key_rates.empty() || k < 0 || k >= static_cast<int>(key_rates.size()))
        throw std::invalid_argument("key_rate_duration: key index out of range");
    if (!(delta > 0.0))
        throw std::invalid_argument("key_rate_duration: delta must be > 0");
    for (std::size_t i = 1; i < key_rates.size(); ++i)
        if (key_rates[i] <= key_rates[i - 1])
            throw std::invalid_argument("key_rate_duration: key rates must increase");
    const double p0 = present_value(curve, cf);
    const double p_down = present_value(shifted_curve(curve, key_rates, k, -delta), cf);
    const double p_up = present_value(shifted_curve(curve, key_rates, k, delta), cf);
    return (p_down - p_up) / (2.0 * delta * p0);
}

Portfolio solve_krd(const YieldCurve& curve, const CashFlowSchedule& liability,
                    const std::vector<CashFlowSchedule>& bonds,
                    std::vector<double> key_rates, double delta) {
    const Eigen::Index J = static_cast<Eigen::Index>(bonds.size());
    if (key_rates.empty()) {
        key_rates.reserve(bonds.size());
        for (const auto& bond : bonds) key_rates.push_back(bond.max_date());
        std::sort(key_rates.begin(), key_rates.end());
    }
    if (static_cast<Eigen::Index>(key_rates.size()) != J)
        throw std::invalid_argument("solve_krd: need one key rate per bond");

    const double P = present_value(curve, liability);
    Eigen::VectorXd bond_values(J);
    for (Eigen::Index j = 0; j < J; ++j)
        bond_values(j) = present_value(curve, bonds[static_cast<std::size_t>(j)]);

    // Exposures per unit liability value; with value matching the
    // portfolio exposure is linear in z.
    Eigen::MatrixXd K(J, J);
    Eigen::VectorXd target(J);
    for (Eigen::Index k = 0; k < J; ++k) {
        const YieldCurve down = shifted_curve(curve, key_rates, static_cast<int>(k), -delta);
        const YieldCurve up = shifted_curve(curve, key_rates, static_cast<int>(k), delta);
        for (Eigen::Index j = 0; j < J; ++j) {
            const auto& bond = bonds[static_cast<std::size_t>(j)];
            K(k, j) = (present_value(down, bond) - present_value(up, bond)) /
                      (2.0 * delta * P);
        }
        target(k) = (present_value(down, liability) - present_value(up, liability)) /
                    (2.0 * delta * P);
    }

    Eigen::RowVectorXd a0 = bond_values.transpose() / P;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(J + 1, J + 1);
    kkt.topLeftCorner(J, J) = K.transpose() * K;
    kkt.topRightCorner(J, 1) = a0.transpose();
    kkt.bottomLeftCorner(1, J) = a0;
    Eigen::VectorXd rhs(J + 1);
    rhs.head(J) = K.transpose() * target;
    rhs(J) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible())
        throw std::runtime_error("solve_krd: degenerate key-rate system");
    const Eigen::VectorXd sol = lu.solve(rhs);

    Portfolio p;
    p.holdings = sol.head(J);
    p.theta = p.holdings.cwiseProduct(bond_values) / P;
    p.gross_leverage = p.theta.lpNorm<1>();
    p.method = "krd";
    return p;
}

FundingReport check_guaranteed_funding(const SensitivitySystem& system,
                                       const Eigen::VectorXd& z,
                                       int n_samples, double delta_max,
                                       std::uint64_t seed) {
    if (system.liability.size() != 1)
        throw std::invalid_argument(
            "check_guaranteed_funding: liability must pay on a single date");
    if (z.minCoeff() < -1e-12)
        throw std::invalid_argument(
            "check_guaranteed_funding: portfolio must be nonnegative");
    if (n_samples < 1 || !(delta_max > 0.0))
        throw std::invalid_argument("check_guaranteed_funding: bad sampling spec");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-delta_max, delta_max);

    const int I = system.basis_count();
    FundingReport report;
    report.samples = n_samples;
    report.min_equity = std::numeric_limits<double>::infinity();
    Perturbation p;
    p.magnitude = 1.0;
    p.coefficients.resize(static_cast<std::size_t>(I));
    for (int s = 0; s < n_samples; ++s) {
        for (int i = 0; i < I; ++i)
            p.coefficients[static_cast<std::size_t>(i)] = unif(rng);
        const double e = equity(system, z, p);
        if (e < report.min_equity) {
            report.min_equity = e;
            report.worst_coefficients = Eigen::Map<const Eigen::VectorXd>(
                p.coefficients.data(), I);
        }
    }
    return report;
}

}  // namespace immunize
