#include "immunize/linprog.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace immunize {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-8;

struct Simplex {
    Eigen::MatrixXd A;   // m x (n + m), original columns then artificials
    Eigen::VectorXd b;   // >= 0 after row flips
    Eigen::VectorXd row_sign;
    Eigen::Index m, n;
    std::vector<Eigen::Index> basis;  // size m, column indices into A

    Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // of the basis matrix

    void factor() {
        Eigen::MatrixXd B(m, m);
        for (Eigen::Index i = 0; i < m; ++i) B.col(i) = A.col(basis[i]);
        lu.compute(B);
    }

    Eigen::VectorXd basic_solution() const { return lu.solve(b); }

    // One simplex phase: minimize cost over the current basis. Pricing
    // is steepest-reduced-cost (Dantzig) while the objective moves and
    // falls back to Bland's rule through degenerate stretches, which
    // keeps the method finite. `allow` masks columns that may enter.
    LpStatus iterate(const Eigen::VectorXd& cost,
                     const std::vector<bool>& allow, long max_iter) {
        double last_objective = std::numeric_limits<double>::infinity();
        long stalled_for = 0;
        for (long iter = 0; iter < max_iter; ++iter) {
            factor();
            Eigen::VectorXd xb = basic_solution();
            Eigen::VectorXd cb(m);
            for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost(basis[i]);
            const Eigen::VectorXd y = lu.transpose().solve(cb);

            const double objective = cb.dot(xb);
            if (objective < last_objective - 1e-12 * (1.0 + std::abs(objective))) {
                last_objective = objective;
                stalled_for = 0;
            } else {
                ++stalled_for;
            }
            const bool bland = stalled_for > 2 * m + 20;

            std::vector<bool> in_basis(static_cast<std::size_t>(A.cols()), false);
            for (Eigen::Index i = 0; i < m; ++i)
                in_basis[static_cast<std::size_t>(basis[i])] = true;

            Eigen::Index entering = -1;
            double steepest = -kCostTol;
            for (Eigen::Index j = 0; j < A.cols(); ++j) {
                if (!allow[static_cast<std::size_t>(j)] ||
                    in_basis[static_cast<std::size_t>(j)])
                    continue;
                const double reduced = cost(j) - y.dot(A.col(j));
                if (reduced < -kCostTol) {
                    if (bland) { entering = j; break; }
                    if (reduced < steepest) {
                        steepest = reduced;
                        entering = j;
                    }
                }
            }
            if (entering < 0) return LpStatus::optimal;

            const Eigen::VectorXd d = lu.solve(A.col(entering));

            // An artificial parked at zero must not move again: evict it
            // as soon as the entering column touches its row.
            Eigen::Index leaving = -1;
            double best_ratio = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (basis[i] >= n && std::abs(xb(i)) <= kFeasTol &&
                    std::abs(d(i)) > kPivotTol) {
                    leaving = i;
                    best_ratio = 0.0;
                    break;
                }
            }
            if (leaving < 0) {
                for (Eigen::Index i = 0; i < m; ++i) {
                    if (d(i) <= kPivotTol) continue;
                    const double ratio = std::max(xb(i), 0.0) / d(i);
                    if (leaving < 0 || ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 &&
                         basis[i] < basis[leaving])) {
                        leaving = i;
                        best_ratio = ratio;
                    }
                }
            }
            if (leaving < 0) return LpStatus::unbounded;
            basis[static_cast<std::size_t>(leaving)] = entering;
        }
        return LpStatus::stalled;
    }
};

}  // namespace

LpResult solve_lp(const Eigen::VectorXd& cost, const Eigen::MatrixXd& lhs,
                  const Eigen::VectorXd& rhs) {
    const Eigen::Index m = lhs.rows();
    const Eigen::Index n = lhs.cols();
    if (cost.size() != n || rhs.size() != m)
        throw std::invalid_argument("solve_lp: dimension mismatch");

    Simplex s;
    s.m = m;
    s.n = n;
    s.A.resize(m, n + m);
    s.b.resize(m);
    s.row_sign.resize(m);

    // Row equilibration, then flip rows to make the right side nonnegative.
    for (Eigen::Index i = 0; i < m; ++i) {
        double scale = lhs.row(i).cwiseAbs().maxCoeff();
        if (scale <= 0.0) scale = 1.0;
        const double sign = rhs(i) < 0.0 ? -1.0 : 1.0;
        s.row_sign(i) = sign / scale;
        s.A.row(i).head(n) = lhs.row(i) * s.row_sign(i);
        s.b(i) = rhs(i) * s.row_sign(i);
    }
    s.A.rightCols(m) = Eigen::MatrixXd::Identity(m, m);

    s.basis.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) s.basis[static_cast<std::size_t>(i)] = n + i;

    const long max_iter = 20000 + 100 * (m + n);

    // Phase 1: drive the artificial variables to zero.
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
    phase1.tail(m).setOnes();
    std::vector<bool> allow_all(static_cast<std::size_t>(n + m), true);
    LpStatus st = s.iterate(phase1, allow_all, max_iter);
    if (st == LpStatus::stalled) return {LpStatus::stalled, {}, 0.0, {}};
    s.factor();
    {
        const Eigen::VectorXd xb = s.basic_solution();
        double artificial_sum = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (s.basis[static_cast<std::size_t>(i)] >= n)
                artificial_sum += std::max(xb(i), 0.0);
        if (artificial_sum > kFeasTol) return {LpStatus::infeasible, {}, 0.0, {}};
    }

    // Phase 2 over the original columns only.
    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
    phase2.head(n) = cost;
    std::vector<bool> allow(static_cast<std::size_t>(n + m), false);
    for (Eigen::Index j = 0; j < n; ++j) allow[static_cast<std::size_t>(j)] = true;
    st = s.iterate(phase2, allow, max_iter);
    if (st != LpStatus::optimal) return {st, {}, 0.0, {}};

    s.factor();
    const Eigen::VectorXd xb = s.basic_solution();
    LpResult result;
    result.status = LpStatus::optimal;
    result.x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i)
        if (s.basis[static_cast<std::size_t>(i)] < n)
            result.x(s.basis[static_cast<std::size_t>(i)]) = std::max(xb(i), 0.0);
    result.objective = cost.dot(result.x);

    Eigen::VectorXd cb(m);
    for (Eigen::Index i = 0; i < m; ++i)
        cb(i) = phase2(s.basis[static_cast<std::size_t>(i)]);
    Eigen::VectorXd y = s.lu.transpose().solve(cb);
    // Undo row scaling/flips so the duals refer to the caller's rows.
    result.dual = y.cwiseProduct(s.row_sign);
    return result;
}

}  // namespace immunize
