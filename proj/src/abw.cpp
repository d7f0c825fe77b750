#include "immunize/abw.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "immunize/parallel.hpp"

namespace immunize {

Eigen::Vector3d AbwParams::mu(int k) const {
    return {mu_q, mu_f[static_cast<std::size_t>(sub_f(k))],
            mu_pi[static_cast<std::size_t>(sub_pi(k))]};
}

Eigen::Vector3d AbwParams::sigma_diag(int k) const {
    return {sigma_q, sigma_f[static_cast<std::size_t>(sub_f(k))],
            sigma_pi[static_cast<std::size_t>(sub_pi(k))]};
}

Eigen::Matrix3d AbwParams::phi() const {
    Eigen::Matrix3d m;
    m << phi_qq, 0.0, 0.0,
         0.0, phi_ff, 0.0,
         phi_pq, phi_pf, phi_pp;
    return m;
}

AbwParams AbwParams::table_defaults() {
    AbwParams p;
    p.delta0 = 0.0077;  // restriction value; the table rounds it to 0.008
    p.delta_pi = -0.199;
    p.gamma0 = 0.0;
    p.gamma1 = -84.137;
    p.mu_q = 0.0;
    p.sigma_q = 0.00054;
    p.mu_f = {-0.00621, -0.00020};
    p.sigma_f = {0.00400, 0.00108};
    p.mu_pi = {-0.00789, 0.00726};
    p.sigma_pi = {0.00048, 0.00624};
    p.lambda_f = {-19.734, 0.051};
    p.phi_qq = 0.962;
    p.phi_ff = 0.969;
    p.phi_pq = -0.139;
    p.phi_pf = 0.246;
    p.phi_pp = 0.178;
    p.transition << 0.744, 0.174, 0.037, 0.045,
                    0.685, 0.216, 0.052, 0.047,
                    0.001, 0.001, 0.354, 0.645,
                    0.000, 0.000, 0.020, 0.980;
    p.validate_and_normalize();
    return p;
}

void AbwParams::validate_and_normalize() {
    for (int i = 0; i < 4; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < 4; ++j) {
            const double v = transition(i, j);
            if (!std::isfinite(v) || v < 0.0)
                throw std::invalid_argument(
                    "AbwParams: transition entries must be finite and >= 0");
            row_sum += v;
        }
        if (std::abs(row_sum - 1.0) > 5e-3)
            throw std::invalid_argument(
                "AbwParams: transition row " + std::to_string(i + 1) +
                " sums to " + std::to_string(row_sum));
        transition.row(i) /= row_sum;  // absorb table rounding
    }
    for (double v : {delta0, delta_pi, gamma0, gamma1, mu_q, sigma_q,
                     mu_f[0], mu_f[1], sigma_f[0], sigma_f[1], mu_pi[0],
                     mu_pi[1], sigma_pi[0], sigma_pi[1], lambda_f[0],
                     lambda_f[1], phi_qq, phi_ff, phi_pq, phi_pf, phi_pp})
        if (!std::isfinite(v))
            throw std::invalid_argument("AbwParams: non-finite parameter");
}

AbwParams AbwParams::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open parameter file: " + path);
    std::map<std::string, double> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
        if (key.empty()) continue;
        try {
            kv[key] = std::stod(line.substr(eq + 1));
        } catch (const std::exception&) {
            throw std::runtime_error("parameter file line " +
                                     std::to_string(line_no) + ": bad number");
        }
    }
    AbwParams p = table_defaults();
    auto get = [&](const std::string& key, double& into) {
        if (auto it = kv.find(key); it != kv.end()) {
            into = it->second;
            kv.erase(it);
        }
    };
    get("delta0", p.delta0);
    get("delta_pi", p.delta_pi);
    get("gamma0", p.gamma0);
    get("gamma1", p.gamma1);
    get("mu_q", p.mu_q);
    get("sigma_q", p.sigma_q);
    get("mu_f1", p.mu_f[0]);
    get("mu_f2", p.mu_f[1]);
    get("sigma_f1", p.sigma_f[0]);
    get("sigma_f2", p.sigma_f[1]);
    get("mu_pi1", p.mu_pi[0]);
    get("mu_pi2", p.mu_pi[1]);
    get("sigma_pi1", p.sigma_pi[0]);
    get("sigma_pi2", p.sigma_pi[1]);
    get("lambda_f1", p.lambda_f[0]);
    get("lambda_f2", p.lambda_f[1]);
    get("phi_qq", p.phi_qq);
    get("phi_ff", p.phi_ff);
    get("phi_pq", p.phi_pq);
    get("phi_pf", p.phi_pf);
    get("phi_pp", p.phi_pp);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            get("pi" + std::to_string(i + 1) + std::to_string(j + 1),
                p.transition(i, j));
    if (!kv.empty())
        throw std::runtime_error("parameter file: unknown key '" +
                                 kv.begin()->first + "'");
    p.validate_and_normalize();
    return p;
}

BondCoefficients bond_coefficients(const AbwParams& params, int n_max) {
    if (n_max < 1)
        throw std::invalid_argument("bond_coefficients: n_max must be >= 1");
    constexpr int K = AbwParams::regime_count;
    BondCoefficients out;
    out.n_max = n_max;
    out.A = Eigen::MatrixXd::Zero(n_max + 1, K);
    out.B = Eigen::MatrixXd::Zero(3, n_max + 1);

    const Eigen::Matrix3d phi_t = params.phi().transpose();
    const Eigen::Vector3d delta1 = params.delta1();
    const Eigen::Vector3d e3(0.0, 0.0, 1.0);

    for (int n = 0; n < n_max; ++n) {
        const Eigen::Vector3d bn = out.B.col(n);
        const Eigen::Vector3d shifted = bn - e3;  // B_n - e_M
        const double b_q = bn(0);

        // log of the regime-mixture term, one entry per next regime j
        Eigen::Vector4d inner;
        for (int j = 0; j < K; ++j) {
            const Eigen::Vector3d sig = params.sigma_diag(j);
            const double drift = shifted.dot(params.mu(j));
            // (B_nx - e_2)' Sigma_x lambda with lambda = (lambda_f, 0)'
            const double risk = shifted(1) * sig(1) * params.lambda_f_of(j);
            const double convexity =
                0.5 * (shifted.array() * sig.array()).matrix().squaredNorm();
            inner(j) = drift - risk + convexity;
        }
        for (int i = 0; i < K; ++i) {
            Eigen::Vector4d terms;
            for (int j = 0; j < K; ++j) {
                const double pij = params.transition(i, j);
                terms(j) = pij > 0.0
                               ? std::log(pij) + out.A(n, j) + inner(j)
                               : -std::numeric_limits<double>::infinity();
            }
            const double peak = terms.maxCoeff();
            const double lse =
                peak + std::log((terms.array() - peak).exp().sum());
            out.A(n + 1, i) =
                -params.delta0 - b_q * params.sigma_q * params.gamma0 + lse;
            if (!std::isfinite(out.A(n + 1, i)))
                throw std::runtime_error(
                    "bond_coefficients: non-finite A at n=" +
                    std::to_string(n + 1) + " regime " + std::to_string(i + 1));
        }
        out.B.col(n + 1) = -delta1 + phi_t * shifted -
                           b_q * params.sigma_q * params.gamma1 *
                               Eigen::Vector3d::UnitX();
        if (!out.B.col(n + 1).allFinite())
            throw std::runtime_error("bond_coefficients: non-finite B at n=" +
                                     std::to_string(n + 1));
    }
    return out;
}

YieldCurve yields_from_state(const BondCoefficients& coeffs, int regime,
                             const Eigen::Vector3d& x,
                             const std::vector<int>& maturities_quarters) {
    if (regime < 0 || regime >= AbwParams::regime_count)
        throw std::invalid_argument("yields_from_state: bad regime");
    std::vector<double> terms, yields;
    terms.reserve(maturities_quarters.size());
    yields.reserve(maturities_quarters.size());
    for (int n : maturities_quarters) {
        if (n < 1 || n > coeffs.n_max)
            throw std::invalid_argument(
                "yields_from_state: maturity outside computed range");
        const double log_price = coeffs.A(n, regime) + coeffs.B.col(n).dot(x);
        terms.push_back(n / 4.0);
        yields.push_back(-4.0 * log_price / n);
    }
    return YieldCurve(std::move(terms), std::move(yields));
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
    const Eigen::Index K = transition.rows();
    if (transition.cols() != K || K < 1)
        throw std::invalid_argument("stationary_distribution: not square");
    for (Eigen::Index i = 0; i < K; ++i) {
        if (std::abs(transition.row(i).sum() - 1.0) > 1e-8 ||
            transition.row(i).minCoeff() < 0.0)
            throw std::invalid_argument(
                "stationary_distribution: matrix is not row-stochastic");
    }
    // pi' (P - I) = 0 together with sum(pi) = 1, solved as a stacked
    // least-squares system; a unique solution requires an ergodic chain.
    Eigen::MatrixXd lhs(K + 1, K);
    lhs.topRows(K) = transition.transpose() - Eigen::MatrixXd::Identity(K, K);
    lhs.row(K).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K + 1);
    rhs(K) = 1.0;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
    qr.setThreshold(1e-10);
    if (qr.rank() < K)
        throw std::runtime_error(
            "stationary_distribution: chain has no unique stationary law");
    Eigen::VectorXd pi = qr.solve(rhs);
    if ((lhs * pi - rhs).cwiseAbs().maxCoeff() > 1e-8 || pi.minCoeff() < -1e-10)
        throw std::runtime_error(
            "stationary_distribution: chain has no unique stationary law");
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    return pi;
}

Eigen::Vector3d unconditional_state_mean(const AbwParams& params) {
    const Eigen::VectorXd pi = stationary_distribution(params.transition);
    Eigen::Vector3d mu_bar = Eigen::Vector3d::Zero();
    for (int k = 0; k < AbwParams::regime_count; ++k)
        mu_bar += pi(k) * params.mu(k);
    return (Eigen::Matrix3d::Identity() - params.phi())
        .partialPivLu()
        .solve(mu_bar);
}

SimulatedPath simulate_path(const AbwParams& params,
                            const BondCoefficients& coeffs, int quarters,
                            std::uint64_t seed, std::uint64_t path_index,
                            const std::vector<int>& maturities_quarters) {
    if (quarters < 0)
        throw std::invalid_argument("simulate_path: negative horizon");
    const Eigen::VectorXd pi = stationary_distribution(params.transition);

    std::seed_seq seq{static_cast<std::uint64_t>(0x9e3779b97f4a7c15ULL), seed,
                      path_index};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    auto draw_categorical = [&](const Eigen::VectorXd& weights) {
        const double u = unif(rng);
        double acc = 0.0;
        for (Eigen::Index k = 0; k < weights.size(); ++k) {
            acc += weights(k);
            if (u <= acc) return static_cast<int>(k);
        }
        return static_cast<int>(weights.size() - 1);
    };

    SimulatedPath path;
    path.regimes.reserve(static_cast<std::size_t>(quarters) + 1);
    path.states.reserve(static_cast<std::size_t>(quarters) + 1);
    path.curves.reserve(static_cast<std::size_t>(quarters) + 1);

    int regime = draw_categorical(pi);
    Eigen::Vector3d x = unconditional_state_mean(params);
    const Eigen::Matrix3d phi = params.phi();
    for (int t = 0; t <= quarters; ++t) {
        path.regimes.push_back(regime);
        path.states.push_back(x);
        path.curves.push_back(
            yields_from_state(coeffs, regime, x, maturities_quarters));
        if (t == quarters) break;
        const int next = draw_categorical(params.transition.row(regime));
        Eigen::Vector3d eps(normal(rng), normal(rng), normal(rng));
        x = params.mu(next) + phi * x +
            params.sigma_diag(next).asDiagonal() * eps;
        regime = next;
    }
    return path;
}

std::vector<SimulatedPath> simulate_paths(
    const AbwParams& params, const BondCoefficients& coeffs, int quarters,
    int n_paths, std::uint64_t seed,
    const std::vector<int>& maturities_quarters) {
    if (n_paths < 1)
        throw std::invalid_argument("simulate_paths: n_paths must be >= 1");
    std::vector<SimulatedPath> paths(static_cast<std::size_t>(n_paths));
    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
        paths[p] = simulate_path(params, coeffs, quarters, seed,
                                 static_cast<std::uint64_t>(p),
                                 maturities_quarters);
    });
    return paths;
}

}  // namespace immunize
