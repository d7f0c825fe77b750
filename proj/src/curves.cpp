#include "immunize/curves.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace immunize {

namespace {

void validate_grid(const std::vector<double>& terms,
                   const std::vector<double>& yields) {
    if (terms.empty() || terms.size() != yields.size())
        throw std::invalid_argument("YieldCurve: empty grid or size mismatch");
    if (terms.front() <= 0.0)
        throw std::invalid_argument("YieldCurve: grid terms must be positive");
    for (std::size_t i = 1; i < terms.size(); ++i)
        if (terms[i] <= terms[i - 1])
            throw std::invalid_argument(
                "YieldCurve: grid terms must be strictly increasing");
    for (double y : yields)
        if (!std::isfinite(y))
            throw std::invalid_argument("YieldCurve: non-finite yield");
}

std::vector<double> to_x(const std::vector<double>& terms,
                         const std::vector<double>& yields) {
    std::vector<double> x(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) x[i] = terms[i] * yields[i];
    return x;
}

double tail_forward(const std::vector<double>& terms,
                    const std::vector<double>& x) {
    if (terms.size() == 1) return x.back() / terms.back();
    const std::size_t k = terms.size() - 1;
    return (x[k] - x[k - 1]) / (terms[k] - terms[k - 1]);
}

}  // namespace

YieldCurve::YieldCurve(std::vector<double> terms, std::vector<double> yields)
    : terms_(std::move(terms)), yields_(std::move(yields)) {
    validate_grid(terms_, yields_);
    x_ = to_x(terms_, yields_);
    long_forward_ = tail_forward(terms_, x_);
}

YieldCurve::YieldCurve(std::vector<double> terms, std::vector<double> yields,
                       double long_forward)
    : terms_(std::move(terms)),
      yields_(std::move(yields)),
      long_forward_(long_forward) {
    validate_grid(terms_, yields_);
    if (!std::isfinite(long_forward))
        throw std::invalid_argument("YieldCurve: non-finite forward rate");
    x_ = to_x(terms_, yields_);
}

YieldCurve YieldCurve::flat(double rate, double max_term) {
    return YieldCurve({max_term / 2.0, max_term}, {rate, rate});
}

double YieldCurve::cumulative_discount(double t) const {
    if (t < 0.0)
        throw std::domain_error("cumulative_discount: negative term");
    if (t == 0.0) return 0.0;
    if (t >= terms_.back())
        return x_.back() + (t - terms_.back()) * long_forward_;
    // x is linear from (0, 0) through the grid nodes.
    const auto it = std::upper_bound(terms_.begin(), terms_.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - terms_.begin());
    const double t0 = hi == 0 ? 0.0 : terms_[hi - 1];
    const double x0 = hi == 0 ? 0.0 : x_[hi - 1];
    const double w = (t - t0) / (terms_[hi] - t0);
    return x0 + w * (x_[hi] - x0);
}

double YieldCurve::yield(double t) const {
    if (t <= 0.0) return yields_.front();
    return cumulative_discount(t) / t;
}

double YieldCurve::discount(double t) const {
    return std::exp(-cumulative_discount(t));
}

CashFlowSchedule CashFlowSchedule::zero_coupon(double maturity, double face) {
    CashFlowSchedule cf{{maturity}, {face}};
    cf.validate();
    return cf;
}

void CashFlowSchedule::validate() const {
    if (dates.empty() || dates.size() != amounts.size())
        throw std::invalid_argument("CashFlowSchedule: empty or size mismatch");
    if (dates.front() <= 0.0)
        throw std::invalid_argument("CashFlowSchedule: dates must be positive");
    for (std::size_t i = 1; i < dates.size(); ++i)
        if (dates[i] <= dates[i - 1])
            throw std::invalid_argument(
                "CashFlowSchedule: dates must be strictly increasing");
    bool any_positive = false;
    for (double a : amounts) {
        if (!(a >= 0.0))
            throw std::invalid_argument("CashFlowSchedule: negative amount");
        any_positive |= a > 0.0;
    }
    if (!any_positive)
        throw std::invalid_argument("CashFlowSchedule: all amounts zero");
}

LiabilityKind liability_kind_from_string(std::string_view name) {
    if (name == "fullHorizon") return LiabilityKind::full_horizon;
    if (name == "longRun") return LiabilityKind::long_run;
    if (name == "medium") return LiabilityKind::medium;
    if (name == "shortAndLong") return LiabilityKind::short_and_long;
    throw std::invalid_argument("unknown liability kind: " + std::string(name));
}

std::string to_string(LiabilityKind kind) {
    switch (kind) {
        case LiabilityKind::full_horizon: return "fullHorizon";
        case LiabilityKind::long_run: return "longRun";
        case LiabilityKind::medium: return "medium";
        case LiabilityKind::short_and_long: return "shortAndLong";
    }
    return "?";
}

CashFlowSchedule standard_liability(LiabilityKind kind, double horizon_years,
                                    int payments_per_year) {
    const double T = horizon_years;
    std::vector<std::pair<double, double>> windows;  // (lo, hi], half-open
    switch (kind) {
        case LiabilityKind::full_horizon: windows = {{0.0, T}}; break;
        case LiabilityKind::long_run: windows = {{0.4 * T, T}}; break;
        case LiabilityKind::medium: windows = {{0.3 * T, 0.7 * T}}; break;
        case LiabilityKind::short_and_long:
            windows = {{0.02 * T, 0.3 * T}, {0.7 * T, T}};
            break;
    }
    CashFlowSchedule cf;
    const int total = static_cast<int>(std::lround(T * payments_per_year));
    for (int k = 1; k <= total; ++k) {
        const double t = static_cast<double>(k) / payments_per_year;
        for (const auto& [lo, hi] : windows) {
            if (t > lo && t <= hi + 1e-12) {
                cf.dates.push_back(t);
                cf.amounts.push_back(1.0);
                break;
            }
        }
    }
    const double scale = 1.0 / static_cast<double>(cf.amounts.size());
    for (double& a : cf.amounts) a *= scale;
    cf.validate();
    return cf;
}

double present_value(const YieldCurve& curve, const CashFlowSchedule& cf) {
    double total = 0.0;
    for (std::size_t n = 0; n < cf.dates.size(); ++n)
        total += std::exp(-curve.cumulative_discount(cf.dates[n])) * cf.amounts[n];
    return total;
}

namespace {

bool parse_double(std::string_view field, double& out) {
    // std::from_chars does not accept leading spaces or "NaN" spellings
    // uniformly across libcs, so trim and lowercase the special cases.
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    if (b == std::string_view::npos) return false;
    field = field.substr(b, e - b + 1);
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace

YieldHistory load_yield_history(std::istream& in, bool percent) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("yield history: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv(line);
    if (header.size() < 2)
        throw std::runtime_error("yield history: header needs maturities");
    YieldHistory history;
    history.maturities.reserve(header.size() - 1);
    for (std::size_t i = 1; i < header.size(); ++i) {
        double m;
        if (!parse_double(header[i], m) || !(m > 0.0))
            throw std::runtime_error("yield history: bad maturity in header: " +
                                     std::string(header[i]));
        if (!history.maturities.empty() && m <= history.maturities.back())
            throw std::runtime_error(
                "yield history: maturities must be ascending");
        history.maturities.push_back(m);
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != history.maturities.size() + 1) {
            history.rejected.push_back("line " + std::to_string(line_no) +
                                       ": expected " +
                                       std::to_string(history.maturities.size() + 1) +
                                       " fields, got " + std::to_string(fields.size()));
            continue;
        }
        std::vector<double> yields(history.maturities.size());
        bool ok = true;
        for (std::size_t i = 0; i < yields.size(); ++i) {
            double y;
            if (!parse_double(fields[i + 1], y) || !std::isfinite(y)) {
                history.rejected.push_back("line " + std::to_string(line_no) +
                                           ": non-finite yield at maturity " +
                                           std::to_string(history.maturities[i]));
                ok = false;
                break;
            }
            yields[i] = percent ? y / 100.0 : y;
        }
        if (!ok) continue;
        history.dates.emplace_back(fields[0]);
        history.curves.emplace_back(history.maturities, std::move(yields));
    }
    return history;
}

YieldHistory load_yield_history_file(const std::string& path, bool percent) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open yield history: " + path);
    return load_yield_history(in, percent);
}

void write_yield_history(std::ostream& out, const YieldHistory& history) {
    out << "date";
    out << std::setprecision(17);
    for (double m : history.maturities) out << ',' << m;
    out << '\n';
    for (std::size_t r = 0; r < history.curves.size(); ++r) {
        out << history.dates[r];
        for (double y : history.curves[r].grid_yields()) out << ',' << y;
        out << '\n';
    }
}

}  // namespace immunize
