#pragma once

#include <vector>

namespace immunize {

/// Quantile by linear interpolation of order statistics (the common
/// "type 7" rule): position p*(n-1) in the sorted sample.
double percentile(std::vector<double> values, double p);

double mean(const std::vector<double>& values);

}  // namespace immunize
