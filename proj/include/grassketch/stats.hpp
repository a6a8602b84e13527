#pragma once

#include <span>

namespace grassketch::stats {

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) standard deviation
  double se = 0.0;      // stddev / sqrt(n)
  std::size_t count = 0;
};

Summary summarize(std::span<const double> xs);

/// Whether |mean - target| <= z * se. A zero standard error only accepts an
/// exact match up to a few ulps of the target.
bool within_se(const Summary& s, double target, double z);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of y = b x (no intercept) and its standard error.
struct SlopeFit {
  double slope = 0.0;
  double se = 0.0;
};
SlopeFit slope_through_origin(std::span<const double> x, std::span<const double> y);

}  // namespace grassketch::stats
