#include "widthlab/power_law.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace widthlab {

PowerLawFit power_law_fit(std::span<const ScalingPoint> points) {
  if (points.size() < 2) throw FitError("power_law_fit: need at least 2 points", 0.0);

  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& p : points) {
    if (!(p.width > 0.0) || !std::isfinite(p.width)) {
      throw FitError("power_law_fit: nonpositive width " + std::to_string(p.width), p.width);
    }
    if (!(p.value > 0.0) || !std::isfinite(p.value)) {
      throw FitError("power_law_fit: nonpositive or non-finite value " + std::to_string(p.value) +
                         " at width " + std::to_string(p.width),
                     p.width);
    }
    xs.push_back(std::log(p.width));
    ys.push_back(std::log(p.value));
  }

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw FitError("power_law_fit: all widths identical", points.front().width);

  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.exponent * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.points = points.size();
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                            [](const auto& a, const auto& b) {
                                              return a.width < b.width;
                                            });
  fit.min_width = lo->width;
  fit.max_width = hi->width;
  return fit;
}

std::vector<double> log_grid(double lo, double hi, std::size_t per_decade) {
  if (!(lo > 0.0) || !(hi >= lo) || per_decade == 0)
    throw std::invalid_argument("log_grid: need 0 < lo <= hi and per_decade >= 1");
  std::vector<double> out;
  const double a = std::log10(lo);
  const double span = std::log10(hi) - a;
  const auto count = static_cast<std::size_t>(std::floor(span * per_decade + 1e-9));
  for (std::size_t i = 0; i <= count; ++i)
    out.push_back(std::pow(10.0, a + static_cast<double>(i) / static_cast<double>(per_decade)));
  return out;
}

}  // namespace widthlab
