#include "immunize/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace immunize::svg {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

struct Frame {
    double x_min, x_max, y_min, y_max;

    double px(double x) const {
        const double span = x_max > x_min ? x_max - x_min : 1.0;
        return kMarginLeft +
               (x - x_min) / span * (kWidth - kMarginLeft - kMarginRight);
    }
    double py(double y) const {
        const double span = y_max > y_min ? y_max - y_min : 1.0;
        return kHeight - kMarginBottom -
               (y - y_min) / span * (kHeight - kMarginTop - kMarginBottom);
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

void open_svg(std::ofstream& out, const std::string& path,
              const std::string& title) {
    out.open(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth
        << "' height='" << kHeight << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << kWidth / 2 << "' y='22' text-anchor='middle' "
        << "font-family='sans-serif' font-size='16'>" << title << "</text>\n";
}

void draw_axes(std::ofstream& out, const Frame& f, const std::string& x_label,
               const std::string& y_label) {
    out << "<g stroke='#333' stroke-width='1'>\n"
        << "<line x1='" << kMarginLeft << "' y1='" << kHeight - kMarginBottom
        << "' x2='" << kWidth - kMarginRight << "' y2='"
        << kHeight - kMarginBottom << "'/>\n"
        << "<line x1='" << kMarginLeft << "' y1='" << kMarginTop << "' x2='"
        << kMarginLeft << "' y2='" << kHeight - kMarginBottom << "'/>\n</g>\n";
    out << "<g font-family='sans-serif' font-size='11' fill='#333'>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = f.x_min + (f.x_max - f.x_min) * k / 5.0;
        const double yv = f.y_min + (f.y_max - f.y_min) * k / 5.0;
        out << "<text x='" << f.px(xv) << "' y='"
            << kHeight - kMarginBottom + 16 << "' text-anchor='middle'>"
            << fmt(xv) << "</text>\n";
        out << "<text x='" << kMarginLeft - 6 << "' y='" << f.py(yv) + 4
            << "' text-anchor='end'>" << fmt(yv) << "</text>\n";
    }
    out << "<text x='" << (kMarginLeft + kWidth - kMarginRight) / 2 << "' y='"
        << kHeight - 12 << "' text-anchor='middle'>" << x_label << "</text>\n";
    out << "<text x='16' y='" << (kMarginTop + kHeight - kMarginBottom) / 2
        << "' text-anchor='middle' transform='rotate(-90 16 "
        << (kMarginTop + kHeight - kMarginBottom) / 2 << ")'>" << y_label
        << "</text>\n</g>\n";
}

void draw_legend(std::ofstream& out, const std::vector<std::string>& labels) {
    out << "<g font-family='sans-serif' font-size='12'>\n";
    int y = kMarginTop + 8;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const char* color = kPalette[i % 8];
        out << "<line x1='" << kWidth - 150 << "' y1='" << y << "' x2='"
            << kWidth - 126 << "' y2='" << y << "' stroke='" << color
            << "' stroke-width='2'/>\n"
            << "<text x='" << kWidth - 120 << "' y='" << y + 4 << "'>"
            << labels[i] << "</text>\n";
        y += 18;
    }
    out << "</g>\n";
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
    if (series.empty()) throw std::invalid_argument("write_line_chart: no data");
    Frame f{std::numeric_limits<double>::max(),
            std::numeric_limits<double>::lowest(),
            std::numeric_limits<double>::max(),
            std::numeric_limits<double>::lowest()};
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || s.x.empty())
            throw std::invalid_argument("write_line_chart: bad series");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            f.x_min = std::min(f.x_min, s.x[i]);
            f.x_max = std::max(f.x_max, s.x[i]);
            f.y_min = std::min(f.y_min, s.y[i]);
            f.y_max = std::max(f.y_max, s.y[i]);
        }
    }
    if (f.y_min > 0.0 && f.y_min < 0.25 * (f.y_max - f.y_min)) f.y_min = 0.0;

    std::ofstream out;
    open_svg(out, path, title);
    draw_axes(out, f, x_label, y_label);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < series.size(); ++i) {
        labels.push_back(series[i].label);
        out << "<polyline fill='none' stroke='" << kPalette[i % 8]
            << "' stroke-width='1.5' points='";
        for (std::size_t k = 0; k < series[i].x.size(); ++k)
            out << f.px(series[i].x[k]) << ',' << f.py(series[i].y[k]) << ' ';
        out << "'/>\n";
    }
    draw_legend(out, labels);
    out << "</svg>\n";
}

void write_histogram(const std::string& path, const std::string& title,
                     const std::string& x_label,
                     const std::vector<Series>& samples, int bins) {
    if (samples.empty() || bins < 1)
        throw std::invalid_argument("write_histogram: bad input");
    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    for (const auto& s : samples)
        for (double v : s.y) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(hi > lo)) hi = lo + 1.0;

    std::vector<Series> outlines;
    double peak = 0.0;
    for (const auto& s : samples) {
        std::vector<double> count(static_cast<std::size_t>(bins), 0.0);
        for (double v : s.y) {
            int b = static_cast<int>((v - lo) / (hi - lo) * bins);
            b = std::clamp(b, 0, bins - 1);
            count[static_cast<std::size_t>(b)] += 1.0;
        }
        Series line;
        line.label = s.label;
        // step outline
        for (int b = 0; b < bins; ++b) {
            const double x0 = lo + (hi - lo) * b / bins;
            const double x1 = lo + (hi - lo) * (b + 1) / bins;
            line.x.push_back(x0);
            line.y.push_back(count[static_cast<std::size_t>(b)]);
            line.x.push_back(x1);
            line.y.push_back(count[static_cast<std::size_t>(b)]);
            peak = std::max(peak, count[static_cast<std::size_t>(b)]);
        }
        outlines.push_back(std::move(line));
    }

    Frame f{lo, hi, 0.0, peak > 0.0 ? peak : 1.0};
    std::ofstream out;
    open_svg(out, path, title);
    draw_axes(out, f, x_label, "count");
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < outlines.size(); ++i) {
        labels.push_back(outlines[i].label);
        out << "<polyline fill='none' stroke='" << kPalette[i % 8]
            << "' stroke-width='1.5' points='";
        for (std::size_t k = 0; k < outlines[i].x.size(); ++k)
            out << f.px(outlines[i].x[k]) << ',' << f.py(outlines[i].y[k]) << ' ';
        out << "'/>\n";
    }
    draw_legend(out, labels);
    out << "</svg>\n";
}

}  // namespace immunize::svg
