#pragma once

#include <string>
#include <vector>

namespace immunize::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal multi-series line chart with axes and a legend.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

/// Equal-width histogram of one or more samples (overlaid outlines).
void write_histogram(const std::string& path, const std::string& title,
                     const std::string& x_label,
                     const std::vector<Series>& samples, int bins = 40);

}  // namespace immunize::svg
