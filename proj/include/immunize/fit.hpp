#pragma once

#include <Eigen/Dense>

#include <vector>

#include "immunize/curves.hpp"

namespace immunize {

/// Evaluation grid for yield-change regressions: t_n = n/months_per_year,
/// n = 1..points (a 30-year monthly grid by default), or explicit terms
/// with their own reference horizon for the Chebyshev map.
struct FitGrid {
    int points = 360;
    int per_year = 12;
    std::vector<double> custom_terms;   // overrides the uniform grid if set
    double custom_horizon = 0.0;        // used with custom_terms when > 0

    std::vector<double> terms() const;
    double horizon() const {
        if (custom_terms.empty()) return static_cast<double>(points) / per_year;
        return custom_horizon > 0.0 ? custom_horizon : custom_terms.back();
    }
};

/// Per-date OLS of d-step yield changes on the Chebyshev loadings g_i
/// (no intercept beyond g_1 itself, zero benchmark).
struct FitResult {
    int basis_count = 0;
    int horizon_days = 0;
    Eigen::MatrixXd gamma;           // dates x I coefficients
    std::vector<double> r2_by_date;  // zero-benchmark R^2 per date
    double r2_overall = 0.0;         // pooled over dates and nodes
    int dates_used = 0;
    int dates_degenerate = 0;        // zero-change dates (excluded from R^2)
};

FitResult fit_changes(const YieldHistory& history, int basis_count,
                      int horizon_days, const FitGrid& grid = {});

/// Pooled goodness of fit sum(fitted^2) / sum(actual^2).
double overall_r2(const YieldHistory& history, int basis_count,
                  int horizon_days, const FitGrid& grid = {});

struct ShapleyResult {
    Eigen::VectorXd mean_components;  // I, averaged over dates
    Eigen::MatrixXd by_date;          // dates x I
    std::vector<double> r2_full;      // per date, for the efficiency check
    int dates_used = 0;
};

/// Shapley decomposition of the per-date regression R^2 across basis
/// functions, by exact subset enumeration (guarded at I <= 12). The
/// empty model scores zero.
ShapleyResult shapley_r2(const YieldHistory& history, int basis_count,
                         int horizon_days, const FitGrid& grid = {});

}  // namespace immunize
