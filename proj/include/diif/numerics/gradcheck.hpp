#pragma once

#include <functional>
#include <span>
#include <vector>

namespace diif {

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (fn(p + h e_i) - fn(p - h e_i)) / 2h for every coordinate.
std::vector<double> finite_diff_gradient(const ScalarFunction& fn, std::span<const double> params,
                                         double h);

/// ||a - b|| / max(||a||, ||b||), or 0 when both are zero.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace diif
