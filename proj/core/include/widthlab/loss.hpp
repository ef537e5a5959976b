#pragma once

#include <string>
#include <string_view>

#include "widthlab/matrix.hpp"

namespace widthlab {

enum class LossKind { kCrossEntropy, kMse, kMseSoftmax };

std::string to_string(LossKind kind);
/// "ce", "mse" or "mse_softmax".
LossKind parse_loss(std::string_view name);

struct LossResult {
  /// Mean over the batch of the per-sample losses.
  double loss = 0.0;
  /// Row i holds d loss_i / d f_i for sample i.
  Matrix chi;
  bool diverged = false;
};

/// Per-sample losses:
///   CE          -log softmax(f)_y
///   MSE         (1/2) ||f - y||^2
///   MSESoftmax  (1/2) ||softmax(f) - y||^2
/// Non-finite logits give loss = +inf, chi = 0 and diverged = true.
LossResult loss_and_chi(LossKind kind, const Matrix& logits, const Matrix& targets);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

/// Fraction of rows whose logit argmax equals the target argmax; ties go to
/// the lowest index on both sides.
double accuracy(const Matrix& logits, const Matrix& targets);

}  // namespace widthlab
