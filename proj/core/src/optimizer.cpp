#include "widthlab/optimizer.hpp"

#include <cmath>

namespace widthlab {

namespace {

void check_grads(const Network& net, const std::vector<Matrix>& grads) {
  if (grads.size() != net.depth()) throw ShapeError("optimizer: gradient count mismatch");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    if (grads[l].rows() != net.weight(l).rows() || grads[l].cols() != net.weight(l).cols())
      throw ShapeError("optimizer: gradient shape mismatch at layer " + std::to_string(l));
  }
}

bool grads_finite(const std::vector<Matrix>& grads) {
  for (const Matrix& g : grads)
    if (!all_finite(g)) return false;
  return true;
}

}  // namespace

OptimizerState OptimizerState::sgd() { return OptimizerState{}; }

OptimizerState OptimizerState::adam_for(const Network& net, AdamSettings settings) {
  if (!(settings.beta1 >= 0.0 && settings.beta1 < 1.0) ||
      !(settings.beta2 >= 0.0 && settings.beta2 < 1.0) || !(settings.epsilon >= 0.0))
    throw ConfigError("adam: betas must lie in [0, 1) and epsilon must be >= 0");
  OptimizerState s;
  s.kind = OptimizerKind::kAdam;
  s.adam = settings;
  for (const Matrix& w : net.weights()) {
    s.first_moment.emplace_back(w.rows(), w.cols());
    s.second_moment.emplace_back(w.rows(), w.cols());
  }
  return s;
}

bool sgd_step(Network& net, const std::vector<Matrix>& grads, const ParamSpec& spec) {
  check_grads(net, grads);
  if (!grads_finite(grads)) return false;
  const double width = static_cast<double>(net.arch().width);
  for (std::size_t l = 0; l < grads.size(); ++l)
    axpy(-scaled_lr(spec, l, width), grads[l], net.weight(l));
  return true;
}

bool adam_step(Network& net, OptimizerState& state, const std::vector<Matrix>& grads,
               const ParamSpec& spec) {
  check_grads(net, grads);
  if (state.first_moment.size() != grads.size())
    throw ShapeError("adam: moment count does not match network depth");
  if (!grads_finite(grads)) return false;
  const double width = static_cast<double>(net.arch().width);
  const auto& a = state.adam;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(a.beta1, t);
  const double c2 = 1.0 - std::pow(a.beta2, t);
  for (std::size_t l = 0; l < grads.size(); ++l) {
    const double lr = scaled_lr(spec, l, width);
    double* m = state.first_moment[l].data();
    double* v = state.second_moment[l].data();
    double* w = net.weight(l).data();
    const double* g = grads[l].data();
    for (std::size_t i = 0; i < grads[l].size(); ++i) {
      m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * g[i];
      v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + a.epsilon);
    }
  }
  return true;
}

bool apply_update(Network& net, OptimizerState& state, const std::vector<Matrix>& grads,
                  const ParamSpec& spec) {
  return state.kind == OptimizerKind::kAdam ? adam_step(net, state, grads, spec)
                                             : sgd_step(net, grads, spec);
}

}  // namespace widthlab
