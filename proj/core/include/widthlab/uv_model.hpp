#pragma once

// Two-layer linear network f(x) = a v u x trained with SGD on MSE, repeatedly
// on a single point (x, y). Writing chi = f - y, eta for the effective global
// learning rate, and
//   n_sp  = n in SP, else 1
//   n_ntp = n in NTP, else 1
// the output and the update kernel lambda evolve exactly as
//   f'      = f (1 + eta^2 chi^2 ||x||^2 / n_ntp) - n_sp eta chi lambda
//   lambda' = lambda + ||x||^2 eta chi (eta chi lambda - 4 f / n_sp) / n_ntp
// with
//   NTP: a = n^{-1/2}, eta_u = eta_v = eta,       lambda = (||ux||^2 + ||v||^2 ||x||^2) / n
//   muP: a = 1, eta_u = eta n, eta_v = eta / n,   lambda = n ||v||^2 ||x||^2 + ||ux||^2 / n
//   SP:  a = 1, eta_u = eta_v = eta n^{-c},       lambda = (||ux||^2 + ||v||^2 ||x||^2) / n
// where SP's effective rate is eta n^{-c}.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "widthlab/matrix.hpp"
#include "widthlab/power_law.hpp"
#include "widthlab/rng.hpp"

namespace widthlab {

enum class UvParamKind { kNTP, kSP, kMuP };

struct UvParam {
  UvParamKind kind = UvParamKind::kMuP;
  /// SP learning-rate exponent: eta_eff = eta n^{-c}.
  double c = 0.0;

  bool operator==(const UvParam&) const = default;
};

std::string to_string(const UvParam& p);
UvParamKind parse_uv_param(std::string_view name);

inline constexpr double kUvOverflowGuard = 1e12;

struct UvState {
  double f = 0.0;
  double lambda = 0.0;
  UvParam param;
  double n = 1.0;
  /// Base learning rate; see effective_lr.
  double eta = 0.0;
  double y = 0.0;
  double x_norm2 = 1.0;
  bool diverged = false;

  double chi() const noexcept { return f - y; }
  double effective_lr() const noexcept;
  double n_sp() const noexcept;
  double n_ntp() const noexcept;
};

struct UvWeights {
  Matrix u;  // n x d
  Vector v;  // n
};

struct UvInit {
  UvWeights weights;
  UvState state;
};

/// NTP: u, v ~ N(0, 1); muP: u ~ N(0, 1/d), v ~ N(0, 1/n^2); SP: u ~ N(0, 1/d), v ~ N(0, 1/n).
UvInit uv_init(Rng& rng, const UvParam& param, std::size_t n, std::size_t d,
               std::span<const double> x, double y, double eta);

double uv_output(const UvWeights& w, const UvParam& param, std::span<const double> x);
double uv_kernel(const UvWeights& w, const UvParam& param, std::span<const double> x);

/// One step of the closed-form recursion. Non-finite results or |f| above
/// the overflow guard set `diverged`; diverged states are returned unchanged.
UvState uv_step(const UvState& s);

struct UvPoint {
  double f = 0.0;
  double lambda = 0.0;
};

struct UvTrajectory {
  std::vector<UvPoint> points;  // t = 0..T, truncated at divergence
  bool diverged = false;
};

UvTrajectory uv_closed_form(const UvState& initial, std::size_t steps);

/// Ground truth by explicit gradient steps on (u, v), re-evaluating f and
/// lambda from the weights after every step.
UvTrajectory uv_explicit_train(UvWeights weights, const UvParam& param, double eta,
                               std::span<const double> x, double y, std::size_t steps);

/// eta^2 n_ntp^{-1} ||x||^2 chi f - eta n_sp lambda; chi' = chi (1 + q).
double uv_loss_factor(const UvState& s);

/// True iff the factor lies strictly inside (-2, 0), i.e. |chi'| < |chi|.
bool loss_decreases(const UvState& s);

enum class SharpnessChange { kIncrease, kBoundary, kDecrease };

/// Sign of eta chi (eta chi lambda - 4 f / n_sp), with |value| <= band
/// treated as the boundary.
SharpnessChange sharpness_change(const UvState& s, double band = 0.0);
bool sharpness_increases(const UvState& s);

struct UvStabilityOptions {
  std::size_t steps = 1000;
  double x = 1.0;
  double y = 1.0;
  std::size_t seeds = 4;
  std::uint64_t seed = 0;
  /// Stable iff finite, |f| within the overflow guard and |chi_T| <= factor |chi_0|.
  double chi_growth_limit = 10.0;
};

bool uv_is_stable(const UvState& initial, std::size_t steps, double chi_growth_limit);

/// Per seed, the largest grid rate below the first unstable one; the result
/// is the mean over seeds. Missing if some seed is unstable at the smallest rate.
std::optional<double> uv_max_stable_lr(const UvParam& param, std::size_t n,
                                       std::span<const double> eta_grid,
                                       const UvStabilityOptions& opts = {});

// Scalar-input dynamics under fresh data. With d = 1 the network is the
// line f(x) = g x and the kernel is k x^2, so each step on (x, y) is
//   chi = g x - y
//   g'  = g (1 + eta^2 chi^2 x^2 / (n_ntp n_sp^2)) - eta chi x k
//   k'  = k + (eta / (n_ntp n_sp)) chi x (eta chi x k / n_sp - 4 g / n_sp)
// where SP uses c = 1 so its effective rate is eta / n.

struct UvSlope {
  double g = 0.0;
  double k = 0.0;
};

UvSlope uv_slope_step(const UvSlope& s, UvParamKind kind, double n, double eta, double x,
                      double y);

/// Infinite-width recursion: muP keeps its width-independent form (k0 = 2);
/// SP (k = 1) and NTP (k = 2) freeze the kernel.
UvSlope uv_limit_slope_step(const UvSlope& s, UvParamKind kind, double eta, double x, double y);
double uv_limit_kernel(UvParamKind kind);

struct UvLimitRow {
  std::size_t n = 0;
  std::size_t step = 0;
  double mean_abs_deviation = 0.0;
};

/// Mean over seeds of |g_t - g_t^lim| for t = 0..steps, with the limit
/// started from the finite network's g_0 and fresh (x, y) ~ N(0, 1) per step.
std::vector<UvLimitRow> uv_limit_distance(UvParamKind kind, std::span<const std::size_t> widths,
                                          std::size_t steps, std::size_t seeds, double eta,
                                          std::uint64_t seed = 0);

}  // namespace widthlab
