#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "immunize/abw.hpp"
#include "immunize/basis.hpp"
#include "immunize/curves.hpp"
#include "immunize/fit.hpp"
#include "immunize/hedging.hpp"
#include "immunize/sensitivity.hpp"
#include "immunize/solvers.hpp"
#include "immunize/stats.hpp"
#include "immunize/svg.hpp"

namespace fs = std::filesystem;
using namespace immunize;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(12);
    return out;
}

std::vector<Method> parse_methods(const std::string& csv) {
    std::vector<Method> methods;
    std::stringstream ss(csv);
    std::string token;
    while (std::getline(ss, token, ','))
        if (!token.empty()) methods.push_back(method_from_string(token));
    if (methods.empty()) throw CLI::ValidationError("--methods", "empty list");
    return methods;
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string token;
    while (std::getline(ss, token, ','))
        if (!token.empty()) values.push_back(std::stod(token));
    return values;
}

CashFlowSchedule load_bond_file_entry(const std::string&);  // fwd

/// Bond universe file: either "maturity,face" rows (zero-coupon) or
/// "bond,date,amount" rows for explicit cash flows.
std::vector<CashFlowSchedule> load_bond_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open bond file: " + path);
    std::string header;
    std::getline(in, header);
    std::string line;
    std::vector<CashFlowSchedule> bonds;
    if (header.rfind("maturity", 0) == 0) {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string m, f;
            std::getline(ss, m, ',');
            std::getline(ss, f, ',');
            bonds.push_back(CashFlowSchedule::zero_coupon(
                std::stod(m), f.empty() ? 1.0 : std::stod(f)));
        }
    } else if (header.rfind("bond", 0) == 0) {
        std::map<std::string, CashFlowSchedule> grouped;
        std::vector<std::string> order;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string id, d, a;
            std::getline(ss, id, ',');
            std::getline(ss, d, ',');
            std::getline(ss, a, ',');
            if (!grouped.count(id)) order.push_back(id);
            grouped[id].dates.push_back(std::stod(d));
            grouped[id].amounts.push_back(std::stod(a));
        }
        for (const auto& id : order) {
            grouped[id].validate();
            bonds.push_back(grouped[id]);
        }
    } else {
        throw std::runtime_error(
            "bond file must start with 'maturity,...' or 'bond,date,amount'");
    }
    if (bonds.empty()) throw std::runtime_error("bond file has no bonds");
    return bonds;
}

/// Liability spec: a key=value file (kind/horizon/frequency) or a CSV of
/// explicit date,amount rows.
CashFlowSchedule load_liability_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open liability file: " + path);
    std::string first;
    std::getline(in, first);
    if (first.rfind("date", 0) == 0) {
        CashFlowSchedule cf;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string d, a;
            std::getline(ss, d, ',');
            std::getline(ss, a, ',');
            cf.dates.push_back(std::stod(d));
            cf.amounts.push_back(std::stod(a));
        }
        cf.validate();
        return cf;
    }
    std::string kind = "fullHorizon";
    double horizon = 50.0;
    int frequency = 12;
    auto consume = [&](const std::string& line) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) return;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(value);
        if (key == "kind") kind = value;
        else if (key == "horizon") horizon = std::stod(value);
        else if (key == "frequency") frequency = std::stoi(value);
        else throw std::runtime_error("liability file: unknown key " + key);
    };
    consume(first);
    std::string line;
    while (std::getline(in, line)) consume(line);
    return standard_liability(liability_kind_from_string(kind), horizon,
                              frequency);
}

struct DataOptions {
    std::string data_path;
    bool percent = false;
};

void add_data_options(CLI::App* cmd, DataOptions& opt) {
    cmd->add_option("--data", opt.data_path, "yield panel CSV")->required();
    cmd->add_flag("--percent", opt.percent,
                  "input yields are percentages, divide by 100");
}

struct UniverseOptions {
    std::string bonds_csv = "1,2,5,10,30";
    std::string bond_file;
    std::string liability = "fullHorizon";
    std::string liability_file;
    int basis_count = 10;
    double horizon = 50.0;
    std::string norm = "l2";
};

void add_universe_options(CLI::App* cmd, UniverseOptions& opt) {
    cmd->add_option("--bonds", opt.bonds_csv,
                    "zero-coupon maturities, comma separated");
    cmd->add_option("--bond-file", opt.bond_file,
                    "bond universe CSV (maturity,face or bond,date,amount)");
    cmd->add_option("--liability", opt.liability,
                    "fullHorizon|longRun|medium|shortAndLong");
    cmd->add_option("--liability-file", opt.liability_file,
                    "liability spec file (key=value or date,amount CSV)");
    cmd->add_option("--basis-count", opt.basis_count,
                    "number of Chebyshev basis functions for RI");
    cmd->add_option("--horizon", opt.horizon, "planning horizon T in years");
    cmd->add_option("--norm", opt.norm, "RI perturbation norm: l2|linf")
        ->check(CLI::IsMember({"l2", "linf"}));
}

std::vector<CashFlowSchedule> universe_bonds(const UniverseOptions& opt) {
    if (!opt.bond_file.empty()) return load_bond_file(opt.bond_file);
    const auto maturities = parse_doubles(opt.bonds_csv);
    if (maturities.empty()) throw std::runtime_error("no bond maturities given");
    return zero_coupon_universe(maturities);
}

CashFlowSchedule universe_liability(const UniverseOptions& opt) {
    if (!opt.liability_file.empty())
        return load_liability_file(opt.liability_file);
    return standard_liability(liability_kind_from_string(opt.liability),
                              opt.horizon);
}

ExperimentConfig experiment_config(const UniverseOptions& opt) {
    ExperimentConfig config;
    config.bond_maturities = parse_doubles(opt.bonds_csv);
    config.basis_count = opt.basis_count;
    config.horizon = opt.horizon;
    config.norm = opt.norm == "l2" ? NormKind::l2 : NormKind::linf;
    return config;
}

int cmd_solve(const DataOptions& data, const UniverseOptions& universe,
              const std::string& method_name, int date_index,
              const std::string& date_label, bool basis_count_given,
              bool no_short_sales, const std::string& out_dir) {
    const YieldHistory history =
        load_yield_history_file(data.data_path, data.percent);
    if (history.size() == 0) throw std::runtime_error("empty yield panel");

    std::size_t row = history.size() - 1;
    if (!date_label.empty()) {
        bool found = false;
        for (std::size_t s = 0; s < history.size(); ++s)
            if (history.dates[s] == date_label) {
                row = s;
                found = true;
                break;
            }
        if (!found) throw std::runtime_error("date not in panel: " + date_label);
    } else if (date_index >= 0) {
        if (static_cast<std::size_t>(date_index) >= history.size())
            throw std::runtime_error("date index out of range");
        row = static_cast<std::size_t>(date_index);
    }

    const Method method = method_from_string(method_name);
    const CashFlowSchedule liability = universe_liability(universe);
    const std::vector<CashFlowSchedule> bonds = universe_bonds(universe);
    ExperimentConfig config = experiment_config(universe);
    config.no_short_sales = no_short_sales;

    if (method == Method::hd && basis_count_given &&
        universe.basis_count != static_cast<int>(bonds.size()) - 1)
        throw CLI::ValidationError(
            "--basis-count",
            "hd requires exactly J-1 basis functions (J = bond count)");

    const Portfolio p = solve_method(method, history.curves[row], liability,
                                     bonds, config);

    // rank diagnostic of the stacked sensitivity system
    int a_plus_rank = -1;
    if (method != Method::krd) {
        const int count = method == Method::hd
                              ? static_cast<int>(bonds.size()) - 1
                              : config.basis_count;
        const auto family = method == Method::hd ? BasisFamily::monomial
                                                 : BasisFamily::chebyshev;
        const auto basis = BasisSet::build(family, count, config.horizon,
                                           payout_union(liability, bonds));
        a_plus_rank = build_system(history.curves[row], liability, bonds, basis)
                          .a_plus_column_rank;
    }

    fs::create_directories(out_dir);
    {
        auto out = open_out(fs::path(out_dir) / "portfolio.csv");
        out << "method,bond,holding,theta\n";
        for (Eigen::Index j = 0; j < p.holdings.size(); ++j)
            out << p.method << ',' << j + 1 << ',' << p.holdings(j) << ','
                << p.theta(j) << '\n';
    }
    {
        auto out = open_out(fs::path(out_dir) / "summary.csv");
        out << "method,date,liability,value,leverage,theta_sum,minmax_value,"
               "minmax_norm,condition,a_plus_rank\n";
        out << p.method << ',' << history.dates[row] << ','
            << universe.liability << ','
            << present_value(history.curves[row], liability) << ','
            << p.gross_leverage << ',' << p.theta.sum() << ',';
        if (p.certificate)
            out << p.certificate->value << ','
                << (p.certificate->norm_kind == NormKind::l2 ? "l2" : "linf");
        else
            out << ",";
        out << ',' << p.condition_number << ',' << a_plus_rank << '\n';
    }
    std::cout << "method " << p.method << "  date " << history.dates[row]
              << "  leverage " << p.gross_leverage;
    if (p.certificate) std::cout << "  V " << p.certificate->value;
    std::cout << '\n';
    return 0;
}

int cmd_static(const DataOptions& data, const UniverseOptions& universe,
               const std::string& methods_csv, int max_horizon,
               int percentile_horizon, bool write_rows, bool write_svg,
               const std::string& out_dir) {
    const YieldHistory history =
        load_yield_history_file(data.data_path, data.percent);
    const std::vector<Method> methods = parse_methods(methods_csv);
    const ExperimentConfig config = experiment_config(universe);
    const LiabilityKind kind = liability_kind_from_string(universe.liability);

    fs::create_directories(out_dir);
    std::ofstream rows;
    std::function<void(const StaticObservation&)> sink;
    if (write_rows) {
        rows = open_out(fs::path(out_dir) / "static_observations.csv");
        rows << "date_index,horizon_days,method,funding_ratio,underfunding,"
                "leverage\n";
        sink = [&rows](const StaticObservation& o) {
            rows << o.date_index << ',' << o.horizon_days << ','
                 << to_string(o.method) << ',' << o.funding_ratio << ','
                 << o.underfunding << ',' << o.gross_leverage << '\n';
        };
    }

    const StaticResult result = static_experiment(
        history, kind, methods, config, max_horizon, percentile_horizon, sink);

    {
        auto out = open_out(fs::path(out_dir) / "static_mean_underfunding.csv");
        out << "horizon_days,method,mean_underfunding\n";
        for (int d = 1; d <= result.max_horizon; ++d)
            for (std::size_t m = 0; m < methods.size(); ++m)
                out << d << ',' << to_string(methods[m]) << ','
                    << result.mean_underfunding(static_cast<Eigen::Index>(m), d - 1)
                    << '\n';
    }
    {
        auto out = open_out(fs::path(out_dir) / "static_percentiles.csv");
        out << "method,p90,p95,p99\n";
        for (std::size_t m = 0; m < methods.size(); ++m)
            out << to_string(methods[m]) << ','
                << result.underfunding_pct(static_cast<Eigen::Index>(m), 0) << ','
                << result.underfunding_pct(static_cast<Eigen::Index>(m), 1) << ','
                << result.underfunding_pct(static_cast<Eigen::Index>(m), 2) << '\n';
    }
    {
        auto out = open_out(fs::path(out_dir) / "static_leverage.csv");
        out << "method,median,p95,p99\n";
        for (std::size_t m = 0; m < methods.size(); ++m)
            out << to_string(methods[m]) << ','
                << result.leverage_pct(static_cast<Eigen::Index>(m), 0) << ','
                << result.leverage_pct(static_cast<Eigen::Index>(m), 1) << ','
                << result.leverage_pct(static_cast<Eigen::Index>(m), 2) << '\n';
    }
    if (write_svg) {
        std::vector<svg::Series> series;
        for (std::size_t m = 0; m < methods.size(); ++m) {
            svg::Series s;
            s.label = to_string(methods[m]);
            for (int d = 1; d <= result.max_horizon; ++d) {
                s.x.push_back(d);
                s.y.push_back(result.mean_underfunding(
                    static_cast<Eigen::Index>(m), d - 1));
            }
            series.push_back(std::move(s));
        }
        svg::write_line_chart(
            (fs::path(out_dir) / "static_underfunding.svg").string(),
            "Mean underfunding ratio by holding period", "holding period (days)",
            "underfunding ratio", series);
    }
    std::cout << "static experiment: " << result.dates_used << " dates, "
              << result.dates_skipped << " skipped\n";
    return 0;
}

int cmd_dynamic(const UniverseOptions& universe, const std::string& methods_csv,
                int paths, int quarters, std::uint64_t seed,
                const std::string& params_file, bool write_svg,
                const std::string& out_dir) {
    const AbwParams params = params_file.empty()
                                 ? AbwParams::table_defaults()
                                 : AbwParams::from_file(params_file);
    const std::vector<Method> methods = parse_methods(methods_csv);
    const ExperimentConfig config = experiment_config(universe);
    const LiabilityKind kind = liability_kind_from_string(universe.liability);

    const DynamicResult result = dynamic_experiment(params, methods, kind,
                                                    config, quarters, paths, seed);

    fs::create_directories(out_dir);
    {
        auto out = open_out(fs::path(out_dir) / "dynamic_errors.csv");
        out << "path,quarter,method,abs_return_error\n";
        for (std::size_t m = 0; m < methods.size(); ++m)
            for (int p = 0; p < result.paths; ++p)
                for (int q = 1; q <= result.quarters; ++q) {
                    const double v = result.abs_return_error[m](p, q - 1);
                    if (std::isnan(v)) continue;  // dropped path
                    out << p << ',' << q << ',' << to_string(methods[m]) << ','
                        << v << '\n';
                }
    }
    {
        auto out = open_out(fs::path(out_dir) / "dynamic_summary.csv");
        out << "method,end_mse,dropped_paths\n";
        for (std::size_t m = 0; m < methods.size(); ++m)
            out << to_string(methods[m]) << ',' << result.end_mse[m] << ','
                << result.dropped_paths << '\n';
    }
    {
        auto out = open_out(fs::path(out_dir) / "dynamic_pct99.csv");
        out << "quarter,method,p99\n";
        for (int q = 1; q <= result.quarters; ++q)
            for (std::size_t m = 0; m < methods.size(); ++m)
                out << q << ',' << to_string(methods[m]) << ','
                    << result.pct99(static_cast<Eigen::Index>(m), q - 1) << '\n';
    }
    if (write_svg) {
        std::vector<svg::Series> hist;
        std::vector<svg::Series> lines;
        for (std::size_t m = 0; m < methods.size(); ++m) {
            svg::Series h;
            h.label = to_string(methods[m]);
            for (int p = 0; p < result.paths; ++p) {
                const double v =
                    result.abs_return_error[m](p, result.quarters - 1);
                if (!std::isnan(v)) h.y.push_back(v);
            }
            h.x.assign(h.y.size(), 0.0);
            hist.push_back(std::move(h));
            svg::Series l;
            l.label = to_string(methods[m]);
            for (int q = 1; q <= result.quarters; ++q) {
                l.x.push_back(q / 4.0);
                l.y.push_back(result.pct99(static_cast<Eigen::Index>(m), q - 1));
            }
            lines.push_back(std::move(l));
        }
        svg::write_histogram(
            (fs::path(out_dir) / "dynamic_histogram.svg").string(),
            "End-horizon absolute return error", "absolute return error", hist);
        svg::write_line_chart((fs::path(out_dir) / "dynamic_pct99.svg").string(),
                              "99th percentile of absolute return error",
                              "years", "absolute return error", lines);
    }
    std::cout << "dynamic experiment: " << result.paths - result.dropped_paths
              << " paths";
    for (std::size_t m = 0; m < methods.size(); ++m)
        std::cout << "  mse(" << to_string(methods[m])
                  << ") = " << result.end_mse[m];
    std::cout << '\n';
    return 0;
}

int cmd_fit(const DataOptions& data, int shapley_count, int max_count,
            int max_horizon, int horizon_step, bool write_svg,
            const std::string& out_dir) {
    const YieldHistory history =
        load_yield_history_file(data.data_path, data.percent);
    fs::create_directories(out_dir);

    std::vector<int> horizons;
    for (int d = 1; d <= max_horizon; d += horizon_step) horizons.push_back(d);

    {
        auto out = open_out(fs::path(out_dir) / "fit_shapley.csv");
        out << "horizon_days,basis_index,shapley,r2_total\n";
        for (int d : horizons) {
            const ShapleyResult sh = shapley_r2(history, shapley_count, d);
            double total = 0.0;
            for (int i = 0; i < shapley_count; ++i) total += sh.mean_components(i);
            for (int i = 0; i < shapley_count; ++i)
                out << d << ',' << i + 1 << ',' << sh.mean_components(i) << ','
                    << total << '\n';
        }
    }
    {
        auto out = open_out(fs::path(out_dir) / "fit_unexplained.csv");
        out << "horizon_days,basis_count,one_minus_r2\n";
        for (int count = 1; count <= max_count; ++count)
            for (int d : horizons)
                out << d << ',' << count << ','
                    << 1.0 - overall_r2(history, count, d) << '\n';
    }
    if (write_svg) {
        std::vector<svg::Series> series;
        for (int count = 1; count <= max_count; ++count) {
            svg::Series s;
            s.label = "I=" + std::to_string(count);
            for (int d : horizons) {
                s.x.push_back(d);
                s.y.push_back(1.0 - overall_r2(history, count, d));
            }
            series.push_back(std::move(s));
        }
        svg::write_line_chart((fs::path(out_dir) / "fit_unexplained.svg").string(),
                              "Unexplained share of yield-curve changes",
                              "horizon (days)", "1 - R2", series);
    }
    std::cout << "fit written to " << out_dir << '\n';
    return 0;
}

int cmd_simulate(int quarters, std::uint64_t seed, int path_index,
                 const std::string& params_file, const std::string& out_path) {
    const AbwParams params = params_file.empty()
                                 ? AbwParams::table_defaults()
                                 : AbwParams::from_file(params_file);
    const int n_max = 200;
    const BondCoefficients coeffs = bond_coefficients(params, n_max);
    std::vector<int> maturities;
    for (int n = 1; n <= n_max; ++n) maturities.push_back(n);

    const SimulatedPath path =
        simulate_path(params, coeffs, quarters, seed,
                      static_cast<std::uint64_t>(path_index), maturities);

    YieldHistory history;
    for (int n = 1; n <= n_max; ++n) history.maturities.push_back(n / 4.0);
    int year = 1986, month = 1;
    for (std::size_t t = 0; t < path.curves.size(); ++t) {
        std::ostringstream date;
        date << year << '-' << std::setw(2) << std::setfill('0') << month
             << "-01";
        history.dates.push_back(date.str());
        history.curves.push_back(path.curves[t]);
        month += 3;
        if (month > 12) {
            month -= 12;
            ++year;
        }
    }
    auto out = open_out(out_path);
    write_yield_history(out, history);
    std::cout << "wrote " << path.curves.size() << " quarterly curves to "
              << out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust bond-portfolio immunization toolkit"};
    app.set_config("--config", "", "flat key=value config file with sections");
    app.require_subcommand(1);

    DataOptions data;
    UniverseOptions universe;

    // solve
    auto* solve = app.add_subcommand("solve", "solve one hedging portfolio");
    add_data_options(solve, data);
    add_universe_options(solve, universe);
    std::string method_name = "ri2";
    int date_index = -1;
    std::string date_label;
    std::string out_dir = "out";
    solve->add_option("--method", method_name, "ri0|ri1|ri2|hd|krd");
    bool no_short_sales = false;
    solve->add_flag("--no-short-sales", no_short_sales,
                    "require z >= 0 (RI methods only)");
    solve->add_option("--date-index", date_index, "panel row (default last)");
    solve->add_option("--date", date_label, "panel date label");
    solve->add_option("--out", out_dir, "output directory");

    // static
    auto* stat = app.add_subcommand("static", "static hedging experiment");
    add_data_options(stat, data);
    add_universe_options(stat, universe);
    std::string methods_csv = "ri0,ri1,ri2,hd,krd";
    int max_horizon = 100;
    int percentile_horizon = 30;
    bool write_rows = false, write_svg = false;
    stat->add_option("--methods", methods_csv, "comma separated method list");
    stat->add_option("--max-horizon", max_horizon, "holding periods 1..d");
    stat->add_option("--percentile-horizon", percentile_horizon,
                     "holding period pooled for the percentile table");
    stat->add_flag("--rows", write_rows, "also write per-observation rows");
    stat->add_flag("--svg", write_svg, "also write SVG charts");
    stat->add_option("--out", out_dir, "output directory");

    // dynamic
    auto* dyn = app.add_subcommand("dynamic", "dynamic hedging experiment");
    add_universe_options(dyn, universe);
    int paths = 500, quarters = 40;
    std::uint64_t seed = 20240917;
    std::string params_file;
    dyn->add_option("--methods", methods_csv, "comma separated method list");
    dyn->add_option("--paths", paths, "number of simulated paths");
    dyn->add_option("--quarters", quarters, "rebalancing horizon in quarters");
    dyn->add_option("--seed", seed, "simulation seed");
    dyn->add_option("--params", params_file, "term-structure parameter file");
    dyn->add_flag("--svg", write_svg, "also write SVG charts");
    dyn->add_option("--out", out_dir, "output directory");

    // fit
    auto* fit = app.add_subcommand("fit", "yield-change basis goodness of fit");
    add_data_options(fit, data);
    int shapley_count = 6, max_count = 12, horizon_step = 1;
    fit->add_option("--shapley-count", shapley_count,
                    "basis count for the Shapley panel");
    fit->add_option("--max-count", max_count,
                    "largest basis count for the 1-R2 panel");
    fit->add_option("--max-horizon", max_horizon, "horizons 1..d days");
    fit->add_option("--horizon-step", horizon_step, "horizon stride");
    fit->add_flag("--svg", write_svg, "also write SVG charts");
    fit->add_option("--out", out_dir, "output directory");

    // simulate-yields
    auto* sim = app.add_subcommand("simulate-yields",
                                   "emit a simulated quarterly yield panel");
    int sim_quarters = 148, sim_path = 0;
    std::string sim_out = "panel.csv";
    sim->add_option("--quarters", sim_quarters, "number of quarters");
    sim->add_option("--seed", seed, "simulation seed");
    sim->add_option("--path-index", sim_path, "stream index within the seed");
    sim->add_option("--params", params_file, "term-structure parameter file");
    sim->add_option("--out", sim_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed())
            return cmd_solve(data, universe, method_name, date_index, date_label,
                             solve->count("--basis-count") > 0, no_short_sales,
                             out_dir);
        if (stat->parsed())
            return cmd_static(data, universe, methods_csv, max_horizon,
                              percentile_horizon, write_rows, write_svg, out_dir);
        if (dyn->parsed())
            return cmd_dynamic(universe, methods_csv, paths, quarters, seed,
                               params_file, write_svg, out_dir);
        if (fit->parsed())
            return cmd_fit(data, shapley_count, max_count, max_horizon,
                           horizon_step, write_svg, out_dir);
        if (sim->parsed())
            return cmd_simulate(sim_quarters, seed, sim_path, params_file,
                                sim_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
