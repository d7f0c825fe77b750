#include "immunize/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace immunize {

double percentile(std::vector<double> values, double p) {
    if (values.empty())
        throw std::invalid_argument("percentile: empty sample");
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("percentile: p outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean: empty sample");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

}  // namespace immunize
