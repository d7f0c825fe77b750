#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace immunize {

/// Term structure of continuously compounded zero yields.
///
/// Internally works with the cumulative discount rate x(t) = t*y(t),
/// stored at the grid nodes. x is interpolated linearly between nodes
/// (piecewise-constant forward rate) and extrapolated beyond the last
/// node with a constant forward rate.
class YieldCurve {
public:
    /// Build from grid terms (years, strictly increasing, > 0) and
    /// decimal yields. The long forward rate is taken from the last
    /// two nodes of x.
    YieldCurve(std::vector<double> terms, std::vector<double> yields);

    /// Same, with an explicit forward rate past the last node.
    YieldCurve(std::vector<double> terms, std::vector<double> yields,
               double long_forward);

    static YieldCurve flat(double rate, double max_term = 50.0);

    /// x(t) = t*y(t). Requires t >= 0; x(0) = 0.
    double cumulative_discount(double t) const;

    /// Zero yield y(t) = x(t)/t for t > 0; for t == 0 the short-end limit.
    double yield(double t) const;

    /// exp(-x(t))
    double discount(double t) const;

    double max_observed_term() const { return terms_.back(); }
    double long_forward() const { return long_forward_; }
    const std::vector<double>& grid_terms() const { return terms_; }
    const std::vector<double>& grid_yields() const { return yields_; }

private:
    std::vector<double> terms_;
    std::vector<double> yields_;
    std::vector<double> x_;  // t*y at the nodes
    double long_forward_;
};

/// Dated payment amounts; cumulative payout is a right-continuous step
/// function. Dates are year fractions, strictly increasing, in (0, T].
struct CashFlowSchedule {
    std::vector<double> dates;
    std::vector<double> amounts;

    static CashFlowSchedule zero_coupon(double maturity, double face = 1.0);

    /// Throws std::invalid_argument on empty/unordered/negative input or
    /// when every amount is zero.
    void validate() const;

    double max_date() const { return dates.back(); }
    std::size_t size() const { return dates.size(); }
};

enum class LiabilityKind { full_horizon, long_run, medium, short_and_long };

LiabilityKind liability_kind_from_string(std::string_view name);
std::string to_string(LiabilityKind kind);

/// Standard liability cash flows: equal payments on a monthly grid over
/// the kind's window, scaled so the amounts sum to one. Windows are
/// half-open (lo, hi]: full horizon (0,T], long run (0.4T,T], medium
/// (0.3T,0.7T], short and long (0.02T,0.3T] plus (0.7T,T].
CashFlowSchedule standard_liability(LiabilityKind kind,
                                    double horizon_years = 50.0,
                                    int payments_per_year = 12);

/// Coefficients of a discount-rate perturbation h = magnitude * sum_i w_i h_i
/// relative to some BasisSet with matching count.
struct Perturbation {
    std::vector<double> coefficients;
    double magnitude = 0.0;
};

/// P(x) = sum_n exp(-x(t_n)) f_n
double present_value(const YieldCurve& curve, const CashFlowSchedule& cf);

/// Present value under a shifted discount rate x(t) + bump(t).
template <class Bump>
double present_value_shifted(const YieldCurve& curve,
                             const CashFlowSchedule& cf, Bump&& bump) {
    double total = 0.0;
    for (std::size_t n = 0; n < cf.dates.size(); ++n) {
        const double t = cf.dates[n];
        total += std::exp(-curve.cumulative_discount(t) - bump(t)) * cf.amounts[n];
    }
    return total;
}

/// A dated panel of yield curves plus per-row rejection diagnostics.
struct YieldHistory {
    std::vector<std::string> dates;       // ISO-8601 strings, one per curve
    std::vector<YieldCurve> curves;
    std::vector<double> maturities;       // header maturities, years
    std::vector<std::string> rejected;    // "line <n>: <reason>"

    std::size_t size() const { return curves.size(); }
};

/// Parse a yield CSV: header "date,<m1>,<m2>,..." with maturities in
/// years, then one row per date with decimal yields. Rows with
/// non-finite or malformed yields are rejected with a diagnostic;
/// structural problems (non-ascending maturities) throw.
/// With percent=true, input yields are divided by 100 on read.
YieldHistory load_yield_history(std::istream& in, bool percent = false);
YieldHistory load_yield_history_file(const std::string& path, bool percent = false);

/// Re-emit a history in the same CSV schema (full precision round trip).
void write_yield_history(std::ostream& out, const YieldHistory& history);

}  // namespace immunize
