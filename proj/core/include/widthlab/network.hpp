#pragma once

// Bias-free (L+1)-layer MLP:
//   h^1 = W^1 xi,  x^l = phi(h^l),  h^{l+1} = W^{l+1} x^l,  f = W^{L+1} x^L
// with W^1: n x d_in, W^l: n x n, W^{L+1}: d_out x n.
//
// Layers are indexed from 0 in code: weight(0) is W^1 and weight(depth-1)
// is the readout W^{L+1}.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "widthlab/activation.hpp"
#include "widthlab/matrix.hpp"
#include "widthlab/parameterization.hpp"

namespace widthlab {

struct Architecture {
  std::size_t d_in = 100;
  std::size_t width = 256;
  std::size_t d_out = 2;
  /// Number of weight matrices, L + 1 >= 2.
  std::size_t depth = 3;
  Activation activation = Activation::relu();

  std::size_t fan_in(std::size_t layer) const { return layer == 0 ? d_in : width; }
  std::size_t fan_out(std::size_t layer) const { return layer + 1 == depth ? d_out : width; }

  bool operator==(const Architecture&) const = default;
};

void validate(const Architecture& arch);

class Network {
 public:
  /// Takes ownership of the weights and freezes a copy as the initial state.
  Network(Architecture arch, std::vector<Matrix> weights);
  /// Also restores a separately stored initial state.
  Network(Architecture arch, std::vector<Matrix> weights, std::vector<Matrix> initial);

  /// Gaussian init with per-layer variances from the spec; layer l draws
  /// from stream (seed, stream_id(kInit, l)).
  static Network initialize(const Architecture& arch, const ParamSpec& spec, std::uint64_t seed);

  const Architecture& arch() const noexcept { return arch_; }
  std::size_t depth() const noexcept { return weights_.size(); }

  const Matrix& weight(std::size_t l) const { return weights_.at(l); }
  Matrix& weight(std::size_t l) { return weights_.at(l); }
  const Matrix& initial_weight(std::size_t l) const { return initial_.at(l); }
  const std::vector<Matrix>& weights() const noexcept { return weights_; }
  const std::vector<Matrix>& initial_weights() const noexcept { return initial_; }

  /// W_t - W_0 for layer l.
  Matrix delta(std::size_t l) const;

 private:
  Architecture arch_;
  std::vector<Matrix> weights_;
  std::vector<Matrix> initial_;
};

struct ForwardTrace {
  Matrix input;               // batch x d_in
  std::vector<Matrix> pre;    // h^1..h^L, each batch x n
  std::vector<Matrix> post;   // x^1..x^L, each batch x n
  Matrix logits;              // batch x d_out
  bool diverged = false;

  /// Activations entering weight layer l (x^{l-1} in one-based notation).
  const Matrix& layer_input(std::size_t l) const { return l == 0 ? input : post.at(l - 1); }
  /// Pre-activations produced by weight layer l (the logits for the readout).
  const Matrix& layer_output(std::size_t l) const {
    return l < pre.size() ? pre[l] : logits;
  }
};

/// batch: one sample per row.
ForwardTrace forward(const Network& net, const Matrix& batch);

/// Per-layer gradients of the batch-mean loss, given per-sample loss-logit
/// derivatives chi (batch x d_out, row i = d loss_i / d f_i).
std::vector<Matrix> backward(const Network& net, const ForwardTrace& trace, const Matrix& chi);

}  // namespace widthlab
