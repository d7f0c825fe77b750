#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "immunize/curves.hpp"

namespace immunize {

/// Regime-switching three-factor term-structure model parameters.
/// Factors are X = (q, f, pi)'; the combined regime k in {0..3} maps to
/// the sub-regimes (s_f, s_pi) = (k / 2, k % 2). Means and volatilities
/// of f are keyed by s_f; those of pi and the price of risk lambda_f by
/// s_pi. The price of risk on inflation is identically zero.
struct AbwParams {
    Eigen::Matrix4d transition;  // row-stochastic

    double delta0 = 0.0;   // mean nominal short rate restriction
    double delta_pi = 0.0; // third entry of delta1 = (1, 1, delta_pi)'
    double gamma0 = 0.0;
    double gamma1 = 0.0;

    double mu_q = 0.0;
    double sigma_q = 0.0;
    std::array<double, 2> mu_f{}, sigma_f{};
    std::array<double, 2> mu_pi{}, sigma_pi{};
    std::array<double, 2> lambda_f{};

    // companion matrix entries; phi_fq is restricted to zero
    double phi_qq = 0.0, phi_ff = 0.0;
    double phi_pq = 0.0, phi_pf = 0.0, phi_pp = 0.0;

    static constexpr int regime_count = 4;
    static int sub_f(int k) { return k / 2; }
    static int sub_pi(int k) { return k % 2; }

    Eigen::Vector3d mu(int k) const;
    Eigen::Vector3d sigma_diag(int k) const;
    double lambda_f_of(int k) const { return lambda_f[static_cast<std::size_t>(sub_pi(k))]; }
    Eigen::Matrix3d phi() const;
    Eigen::Vector3d delta1() const { return {1.0, 1.0, delta_pi}; }

    /// Quarterly estimates used throughout the experiments.
    static AbwParams table_defaults();

    /// Flat key=value parameter file mirroring the default blocks.
    static AbwParams from_file(const std::string& path);

    /// Checks stochasticity of the transition matrix (renormalizing
    /// rounding-level drift) and finiteness of all entries.
    void validate_and_normalize();
};

/// Log-price coefficients P_n(i, X) = exp(A_n(i) + B_n'X) per maturity n
/// (quarters). B carries no regime index.
struct BondCoefficients {
    Eigen::MatrixXd A;  // (n_max+1) x 4, row n, column regime
    Eigen::MatrixXd B;  // 3 x (n_max+1)
    int n_max = 0;
};

/// Backward recursion for the bond-price coefficients, evaluated with a
/// max-subtracted log-sum-exp over next-period regimes.
BondCoefficients bond_coefficients(const AbwParams& params, int n_max);

/// Continuously compounded annual-decimal curve on the quarterly grid
/// implied by (regime, X).
YieldCurve yields_from_state(const BondCoefficients& coeffs, int regime,
                             const Eigen::Vector3d& x,
                             const std::vector<int>& maturities_quarters);

/// Left Perron eigenvector of a row-stochastic matrix, normalized to a
/// probability vector. Throws if the chain has no unique stationary law.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

struct SimulatedPath {
    std::vector<int> regimes;                 // s_0..s_T
    std::vector<Eigen::Vector3d> states;      // X_0..X_T
    std::vector<YieldCurve> curves;           // one per quarter
};

/// Simulate one factor/regime path and its curves. The stream is fully
/// determined by (seed, path_index), so paths may be generated in any
/// order or in parallel with identical results. The regime chain starts
/// from the stationary distribution and X_0 from the unconditional mean.
SimulatedPath simulate_path(const AbwParams& params,
                            const BondCoefficients& coeffs, int quarters,
                            std::uint64_t seed, std::uint64_t path_index,
                            const std::vector<int>& maturities_quarters);

/// All paths 0..n_paths-1, generated in parallel.
std::vector<SimulatedPath> simulate_paths(
    const AbwParams& params, const BondCoefficients& coeffs, int quarters,
    int n_paths, std::uint64_t seed,
    const std::vector<int>& maturities_quarters);

/// Unconditional mean of X under the stationary regime mix.
Eigen::Vector3d unconditional_state_mean(const AbwParams& params);

}  // namespace immunize
