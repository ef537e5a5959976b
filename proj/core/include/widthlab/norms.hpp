#pragma once

// Width-aware norms.
//
//   ||x||_RMS        = d^{-1/2} ||x||_2
//   ||W||_RMS        = (fan_in * fan_out)^{-1/2} ||W||_F
//   ||W||_RMS->RMS   = sqrt(fan_in / fan_out) * sigma_max(W)
//
// sigma_max comes from power iteration on W^T W.

#include <cstddef>
#include <cstdint>
#include <span>

#include "widthlab/matrix.hpp"

namespace widthlab {

double rms_norm(std::span<const double> v);
double rms_matrix_norm(const Matrix& w);

struct PowerIterationOptions {
  int max_iterations = 1000;
  /// Stop once successive sigma estimates differ by less than this, relative.
  double relative_tolerance = 1e-9;
  /// Seed for the random restart taken when the all-ones start collapses.
  std::uint64_t restart_seed = 0x5EC7A1;
};

struct SpectralEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  bool restarted = false;
};

/// Largest singular value of w.
SpectralEstimate spectral_norm(const Matrix& w, const PowerIterationOptions& opts = {});

/// Operator norm induced by the RMS vector norm.
SpectralEstimate rms_op_norm(const Matrix& w, const PowerIterationOptions& opts = {});

}  // namespace widthlab
