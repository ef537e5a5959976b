#pragma once

#include <cstdint>
#include <vector>

#include "widthlab/matrix.hpp"
#include "widthlab/network.hpp"
#include "widthlab/parameterization.hpp"

namespace widthlab {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  AdamSettings adam;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;

  static OptimizerState sgd();
  static OptimizerState adam_for(const Network& net, AdamSettings settings = {});
};

/// W_l <- W_l - eta_l g_l. Returns false (weights untouched) on non-finite gradients.
bool sgd_step(Network& net, const std::vector<Matrix>& grads, const ParamSpec& spec);

/// Bias-corrected Adam with per-layer rates eta_l. Returns false (weights and
/// moments untouched) on non-finite gradients.
bool adam_step(Network& net, OptimizerState& state, const std::vector<Matrix>& grads,
               const ParamSpec& spec);

/// Dispatches on state.kind.
bool apply_update(Network& net, OptimizerState& state, const std::vector<Matrix>& grads,
                  const ParamSpec& spec);

}  // namespace widthlab
