#pragma once

#include <span>

namespace fbp::pipeline {

// Pearson correlation coefficient, accumulated in one pass with the
// co-moment update of Welford's algorithm and clamped to [-1, 1].
// Throws UndefinedCorrelationError when either input has zero variance
// and ArgumentError for unequal lengths or fewer than two samples.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace fbp::pipeline
