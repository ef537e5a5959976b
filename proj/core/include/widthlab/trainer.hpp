#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "widthlab/dataset.hpp"
#include "widthlab/diagnostics.hpp"
#include "widthlab/loss.hpp"
#include "widthlab/network.hpp"
#include "widthlab/optimizer.hpp"
#include "widthlab/parameterization.hpp"

namespace widthlab {

struct TrainOptions {
  LossKind loss = LossKind::kCrossEntropy;
  std::int64_t steps = 100;
  std::size_t batch_size = 64;
  /// Probes are taken after this many updates; step 0 is always probed.
  std::vector<std::int64_t> probe_steps;
  std::size_t probe_size = 64;
  std::int64_t log_every = 1;
  /// CE/MSESoftmax loss above this counts as divergence.
  double ce_divergence_threshold = 50.0;
  DiagnosticOptions diagnostics;
};

struct StepMetrics {
  std::int64_t step = 0;
  /// Batch loss and accuracy before update `step`.
  double loss = 0.0;
  double accuracy = 0.0;
  double logit_rms = 0.0;
  double chi_rms = 0.0;
  double chi_max_abs = 0.0;
  std::vector<double> grad_rms;
  bool diverged = false;
};

struct RunMetrics {
  std::vector<StepMetrics> steps;
  std::vector<DiagnosticRecord> probes;
  bool diverged = false;
  std::optional<std::int64_t> divergence_step;
  std::int64_t steps_completed = 0;
  /// Largest |chi| entry seen on any training batch.
  double max_abs_chi = 0.0;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  bool diverged = false;
};

/// Runs `opts.steps` updates over consecutive batches of `data`, halting early
/// on divergence (non-finite loss, gradient or weights, or a loss threshold
/// breach for softmax losses).
RunMetrics train(Network& net, OptimizerState& opt, const ParamSpec& spec, const Dataset& data,
                 const TrainOptions& opts);

/// Mean loss and accuracy over the whole dataset.
Evaluation evaluate(const Network& net, const Dataset& data, LossKind loss,
                    std::size_t chunk = 1024);

}  // namespace widthlab
