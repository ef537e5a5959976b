#include "widthlab/norms.hpp"

#include <cmath>

#include "widthlab/rng.hpp"

namespace widthlab {

double rms_norm(std::span<const double> v) {
  if (v.empty()) throw ShapeError("rms_norm: empty vector");
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

double rms_matrix_norm(const Matrix& w) {
  return frobenius_norm(w) / std::sqrt(static_cast<double>(w.rows()) * w.cols());
}

namespace {

double normalize(Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double n = std::sqrt(s);
  if (n > 0.0)
    for (double& x : v) x /= n;
  return n;
}

SpectralEstimate iterate(const Matrix& w, Vector v, const PowerIterationOptions& opts) {
  SpectralEstimate est;
  double prev = -1.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Vector wv = matvec(w, v);
    double s = 0.0;
    for (double x : wv) s += x * x;
    const double sigma = std::sqrt(s);
    est.value = sigma;
    est.iterations = it;
    if (!std::isfinite(sigma)) return est;
    if (sigma == 0.0) {
      est.converged = true;
      return est;
    }
    if (prev >= 0.0 && std::abs(sigma - prev) <= opts.relative_tolerance * sigma) {
      est.converged = true;
      return est;
    }
    prev = sigma;
    v = matvec_t(w, wv);
    if (normalize(v) == 0.0) {
      est.converged = true;
      return est;
    }
  }
  return est;
}

}  // namespace

SpectralEstimate spectral_norm(const Matrix& w, const PowerIterationOptions& opts) {
  Vector start(w.cols(), 1.0);
  normalize(start);
  SpectralEstimate est = iterate(w, start, opts);

  // The all-ones start can be (numerically) orthogonal to the row space.
  const double scale = frobenius_norm(w);
  if (scale > 0.0 && est.value <= 1e-12 * scale) {
    Rng rng(opts.restart_seed, streams::kSpectral);
    for (double& x : start) x = rng.normal();
    normalize(start);
    est = iterate(w, start, opts);
    est.restarted = true;
  }
  return est;
}

SpectralEstimate rms_op_norm(const Matrix& w, const PowerIterationOptions& opts) {
  SpectralEstimate est = spectral_norm(w, opts);
  est.value *= std::sqrt(static_cast<double>(w.cols()) / static_cast<double>(w.rows()));
  return est;
}

}  // namespace widthlab
