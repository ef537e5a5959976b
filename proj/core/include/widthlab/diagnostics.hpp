#pragma once

// Width-scaling observables computed on a fixed probe batch.
//
// For weight layer l with input activations x (post-activation of the layer
// below, or the raw input) and output h = W x:
//   effective update    (W_t - W_0) x_t
//   propagating update  W_0 (x_t - x_0)
// and h_t - h_0 is exactly their sum. Per-sample RMS norms are averaged over
// the probe batch.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "widthlab/matrix.hpp"
#include "widthlab/network.hpp"
#include "widthlab/norms.hpp"

namespace widthlab {

/// Non-owning view of the state needed for one probe.
struct ProbeSnapshot {
  std::int64_t step = 0;
  const Network* net = nullptr;
  const ForwardTrace* initial = nullptr;  // probe batch through W_0
  const ForwardTrace* current = nullptr;  // probe batch through W_t
};

struct RccTerms {
  double effective_rms = 0.0;
  double propagating_rms = 0.0;
  double delta_h_rms = 0.0;
  /// Largest per-sample ||eff + prop - dh||_2 / (||eff||_2 + ||prop||_2); 0 when both vanish.
  double max_relative_residual = 0.0;
};

RccTerms rcc(const ProbeSnapshot& snap, std::size_t layer);

/// Mean over samples of ||A x||_RMS / (||A||_RMS ||x||_RMS). Samples with
/// ||x|| = 0 are skipped; missing when A = 0 or no sample remains.
std::optional<double> alignment_rms(const Matrix& a, const Matrix& x_batch);

/// Same with the RMS->RMS operator norm in the denominator. A precomputed
/// operator norm of A may be supplied.
std::optional<double> alignment_op(const Matrix& a, const Matrix& x_batch,
                                   std::optional<double> op_norm = std::nullopt);

/// ||dW||_F / sigma_max(dW); missing for the zero matrix.
std::optional<double> effective_rank(const Matrix& dw);

/// Fraction of entries exactly equal to 0.
double activation_sparsity(const Matrix& x);

struct CosineResult {
  std::optional<double> mean;
  std::size_t skipped = 0;
};

/// Mean per-sample cosine between rows of x0 and xt.
CosineResult activation_cosine(const Matrix& x0, const Matrix& xt);

struct LayerDiagnostics {
  std::size_t layer = 0;
  RccTerms rcc;
  /// ||dW||_RMS and ||dx||_RMS (mean over samples) for exponent fits.
  double delta_w_rms = 0.0;
  double delta_x_rms = 0.0;
  /// Ratios of the two RCC terms.
  std::optional<double> align_rms_update;  // (dW_t, x_t)
  std::optional<double> align_rms_init;    // (W_0, dx_t)
  std::optional<double> align_op_update;
  std::optional<double> align_op_init;
  std::optional<double> effective_rank;
  /// Of this layer's post-activation output; missing for the readout.
  std::optional<double> sparsity;
  std::optional<double> cosine;
  std::optional<double> grad_rms;
};

struct DiagnosticRecord {
  std::int64_t step = 0;
  std::vector<LayerDiagnostics> layers;
  double logit_rms = 0.0;
  double delta_logit_rms = 0.0;
};

struct DiagnosticOptions {
  /// Operator-norm metrics need power iterations on n x n matrices.
  bool op_norms = true;
  PowerIterationOptions power;
};

/// Caches rms_op_norm(W_0^l) across probes of one run.
class InitialOpNormCache {
 public:
  double get(const Network& net, std::size_t layer, const PowerIterationOptions& opts);

 private:
  std::vector<std::optional<double>> values_;
};

DiagnosticRecord diagnose(const ProbeSnapshot& snap, const DiagnosticOptions& opts,
                          InitialOpNormCache& cache,
                          const std::vector<double>& grad_rms = {});

/// Mean over rows of the per-row RMS norm.
double mean_row_rms(const Matrix& m);

}  // namespace widthlab
