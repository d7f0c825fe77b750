#include "immunize/qp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace immunize {

namespace {
constexpr double kFeasTol = 1e-9;
constexpr double kStepTol = 1e-12;
}

QpResult solve_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                  const Eigen::MatrixXd& E, const Eigen::VectorXd& e,
                  const Eigen::MatrixXd& C, const Eigen::VectorXd& d,
                  const Eigen::VectorXd& x0) {
    const Eigen::Index n = Q.rows();
    const Eigen::Index me = E.rows();
    const Eigen::Index mi = C.rows();
    if (Q.cols() != n || q.size() != n || x0.size() != n ||
        (me > 0 && E.cols() != n) || (mi > 0 && C.cols() != n))
        throw std::invalid_argument("solve_qp: dimension mismatch");
    if (me > 0 && (E * x0 - e).cwiseAbs().maxCoeff() > 1e-7)
        throw std::invalid_argument("solve_qp: start violates equalities");
    if (mi > 0 && (C * x0 - d).minCoeff() < -1e-7)
        throw std::invalid_argument("solve_qp: start violates inequalities");

    Eigen::VectorXd x = x0;
    std::vector<bool> active(static_cast<std::size_t>(mi), false);
    for (Eigen::Index i = 0; i < mi; ++i)
        active[static_cast<std::size_t>(i)] = (C.row(i).dot(x) - d(i)) <= kFeasTol;

    const long max_iter = 100 * (n + mi + 1);
    for (long iter = 0; iter < max_iter; ++iter) {
        std::vector<Eigen::Index> work;
        for (Eigen::Index i = 0; i < mi; ++i)
            if (active[static_cast<std::size_t>(i)]) work.push_back(i);
        const Eigen::Index mw = me + static_cast<Eigen::Index>(work.size());

        // KKT system for the step within the working set:
        // [Q  A'] [p     ]   [-g]
        // [A  0 ] [lambda] = [ 0],   A = [E; C_work]
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + mw, n + mw);
        K.topLeftCorner(n, n) = Q;
        Eigen::MatrixXd A(mw, n);
        if (me > 0) A.topRows(me) = E;
        for (std::size_t k = 0; k < work.size(); ++k)
            A.row(me + static_cast<Eigen::Index>(k)) = C.row(work[k]);
        if (mw > 0) {
            K.block(n, 0, mw, n) = A;
            K.block(0, n, n, mw) = A.transpose();
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + mw);
        const Eigen::VectorXd g = Q * x + q;
        rhs.head(n) = -g;

        const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
        const Eigen::VectorXd p = sol.head(n);

        if (p.cwiseAbs().maxCoeff() <= kStepTol * (1.0 + x.cwiseAbs().maxCoeff())) {
            // Stationary on the working set; check the multipliers. The
            // KKT block solves Qp + A'lambda = -g, so the sign of the
            // usual inequality multiplier is -lambda.
            double most_negative = -kFeasTol;
            Eigen::Index drop = -1;
            for (std::size_t k = 0; k < work.size(); ++k) {
                const double mu = -sol(n + me + static_cast<Eigen::Index>(k));
                if (mu < most_negative) {
                    most_negative = mu;
                    drop = work[k];
                }
            }
            if (drop < 0) {
                QpResult res;
                res.converged = true;
                res.x = x;
                res.objective = 0.5 * x.dot(Q * x) + q.dot(x);
                return res;
            }
            active[static_cast<std::size_t>(drop)] = false;
            continue;
        }

        // Step length limited by the inactive constraints.
        double alpha = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index i = 0; i < mi; ++i) {
            if (active[static_cast<std::size_t>(i)]) continue;
            const double along = C.row(i).dot(p);
            if (along >= -kStepTol) continue;
            const double slack = C.row(i).dot(x) - d(i);
            const double limit = std::max(slack, 0.0) / (-along);
            if (limit < alpha) {
                alpha = limit;
                blocking = i;
            }
        }
        x += alpha * p;
        if (blocking >= 0) active[static_cast<std::size_t>(blocking)] = true;
    }
    QpResult res;
    res.converged = false;
    res.x = x;
    res.objective = 0.5 * x.dot(Q * x) + q.dot(x);
    return res;
}

}  // namespace immunize
