#include "widthlab/network.hpp"

#include <cmath>
#include <string>

#include "widthlab/rng.hpp"

namespace widthlab {

void validate(const Architecture& arch) {
  if (arch.depth < 2) throw ConfigError("architecture: depth must be >= 2 weight matrices");
  if (arch.d_in < 1 || arch.width < 1 || arch.d_out < 1)
    throw ConfigError("architecture: dimensions must be >= 1");
  if (arch.activation.kind == ActivationKind::kSigmaGelu && !(arch.activation.sigma > 0.0))
    throw ConfigError("architecture: sigma_gelu requires sigma > 0");
}

namespace {

void check_shapes(const Architecture& arch, const std::vector<Matrix>& weights) {
  if (weights.size() != arch.depth)
    throw ShapeError("network: expected " + std::to_string(arch.depth) + " weight matrices");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != arch.fan_out(l) || weights[l].cols() != arch.fan_in(l)) {
      throw ShapeError("network: layer " + std::to_string(l) + " has shape " +
                       shape_string(weights[l]));
    }
  }
}

Matrix apply_activation(const Activation& act, const Matrix& h) {
  Matrix x = h;
  for (double& v : x.values()) v = act.apply(v);
  return x;
}

// batch x fan_in times W^T -> batch x fan_out.
Matrix apply_weight(const Matrix& w, const Matrix& x) { return matmul_nt(x, w); }

}  // namespace

Network::Network(Architecture arch, std::vector<Matrix> weights)
    : arch_(arch), weights_(std::move(weights)) {
  validate(arch_);
  check_shapes(arch_, weights_);
  initial_ = weights_;
}

Network::Network(Architecture arch, std::vector<Matrix> weights, std::vector<Matrix> initial)
    : arch_(arch), weights_(std::move(weights)), initial_(std::move(initial)) {
  validate(arch_);
  check_shapes(arch_, weights_);
  check_shapes(arch_, initial_);
}

Network Network::initialize(const Architecture& arch, const ParamSpec& spec,
                            std::uint64_t seed) {
  validate(arch);
  if (spec.layers.size() != arch.depth)
    throw ConfigError("network: parameterization depth does not match architecture");
  std::vector<Matrix> weights;
  weights.reserve(arch.depth);
  for (std::size_t l = 0; l < arch.depth; ++l) {
    Rng rng(seed, stream_id(streams::kInit, l));
    const double var = scaled_init_variance(spec, l, static_cast<double>(arch.width),
                                            static_cast<double>(arch.fan_in(l)));
    weights.push_back(gaussian_matrix(rng, arch.fan_out(l), arch.fan_in(l), var));
  }
  return Network(arch, std::move(weights));
}

Matrix Network::delta(std::size_t l) const { return weights_.at(l) - initial_.at(l); }

ForwardTrace forward(const Network& net, const Matrix& batch) {
  const Architecture& arch = net.arch();
  if (batch.cols() != arch.d_in) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                     " features, expected " + std::to_string(arch.d_in));
  }
  ForwardTrace trace;
  trace.input = batch;
  const std::size_t hidden = net.depth() - 1;
  trace.pre.reserve(hidden);
  trace.post.reserve(hidden);
  for (std::size_t l = 0; l < hidden; ++l) {
    trace.pre.push_back(apply_weight(net.weight(l), trace.layer_input(l)));
    trace.post.push_back(apply_activation(arch.activation, trace.pre.back()));
  }
  trace.logits = apply_weight(net.weight(hidden), trace.post.back());
  trace.diverged = !all_finite(trace.logits);
  return trace;
}

std::vector<Matrix> backward(const Network& net, const ForwardTrace& trace, const Matrix& chi) {
  const std::size_t depth = net.depth();
  if (chi.rows() != trace.logits.rows() || chi.cols() != trace.logits.cols()) {
    throw ShapeError("backward: chi " + shape_string(chi) + " does not match logits " +
                     shape_string(trace.logits));
  }
  if (trace.pre.size() + 1 != depth) throw ShapeError("backward: trace depth mismatch");

  const double inv_batch = 1.0 / static_cast<double>(chi.rows());
  const Activation& act = net.arch().activation;
  std::vector<Matrix> grads(depth);

  // delta holds d(sum of per-sample losses)/d(layer output), batch x fan_out.
  Matrix delta = chi;
  for (std::size_t l = depth; l-- > 0;) {
    Matrix g = matmul_tn(delta, trace.layer_input(l));
    g *= inv_batch;
    grads[l] = std::move(g);
    if (l == 0) break;
    Matrix back = matmul(delta, net.weight(l));
    const Matrix& h = trace.pre[l - 1];
    for (std::size_t i = 0; i < back.size(); ++i) back.data()[i] *= act.derivative(h.data()[i]);
    delta = std::move(back);
  }
  return grads;
}

}  // namespace widthlab
