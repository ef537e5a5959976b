#pragma once

#include <span>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace widthlab {

struct ScalingPoint {
  double width = 0.0;
  double value = 0.0;
};

/// value ~ exp(intercept) * width^exponent, fitted by least squares in log-log space.
struct PowerLawFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
  double min_width = 0.0;
  double max_width = 0.0;
};

/// Thrown when a point cannot be placed on a log-log axis.
class FitError : public std::invalid_argument {
 public:
  FitError(const std::string& what, double width)
      : std::invalid_argument(what), width_(width) {}
  double width() const noexcept { return width_; }

 private:
  double width_;
};

/// Requires >= 2 points with positive widths and values. Constant data
/// reports r_squared = 1.
PowerLawFit power_law_fit(std::span<const ScalingPoint> points);

/// Log-spaced grid 10^(log10(lo) + i / per_decade) up to hi (inclusive).
std::vector<double> log_grid(double lo, double hi, std::size_t per_decade);

}  // namespace widthlab
