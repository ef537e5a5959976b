#include "widthlab/loss.hpp"

#include <cmath>
#include <limits>

#include "widthlab/dataset.hpp"
#include "widthlab/parameterization.hpp"

namespace widthlab {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy: return "ce";
    case LossKind::kMse: return "mse";
    case LossKind::kMseSoftmax: return "mse_softmax";
  }
  return "unknown";
}

LossKind parse_loss(std::string_view name) {
  if (name == "ce" || name == "cross_entropy") return LossKind::kCrossEntropy;
  if (name == "mse") return LossKind::kMse;
  if (name == "mse_softmax") return LossKind::kMseSoftmax;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto r = p.row(i);
    double m = r[0];
    for (double v : r) m = std::max(m, v);
    double z = 0.0;
    for (double& v : r) {
      v = std::exp(v - m);
      z += v;
    }
    for (double& v : r) v /= z;
  }
  return p;
}

LossResult loss_and_chi(LossKind kind, const Matrix& logits, const Matrix& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw ShapeError("loss_and_chi: logits " + shape_string(logits) + " vs targets " +
                     shape_string(targets));
  }
  LossResult out;
  out.chi = Matrix(logits.rows(), logits.cols());
  if (!all_finite(logits)) {
    out.loss = std::numeric_limits<double>::infinity();
    out.diverged = true;
    return out;
  }
  const std::size_t batch = logits.rows();
  const std::size_t k = logits.cols();
  double total = 0.0;

  switch (kind) {
    case LossKind::kCrossEntropy: {
      const Matrix p = softmax_rows(logits);
      for (std::size_t i = 0; i < batch; ++i) {
        const auto f = logits.row(i);
        const auto y = targets.row(i);
        double m = f[0];
        for (double v : f) m = std::max(m, v);
        double z = 0.0;
        for (double v : f) z += std::exp(v - m);
        const double lse = m + std::log(z);
        for (std::size_t j = 0; j < k; ++j) {
          total += y[j] * (lse - f[j]);
          out.chi(i, j) = p(i, j) - y[j];
        }
      }
      break;
    }
    case LossKind::kMse: {
      for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double r = logits(i, j) - targets(i, j);
          total += 0.5 * r * r;
          out.chi(i, j) = r;
        }
      }
      break;
    }
    case LossKind::kMseSoftmax: {
      const Matrix p = softmax_rows(logits);
      for (std::size_t i = 0; i < batch; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          const double r = p(i, j) - targets(i, j);
          total += 0.5 * r * r;
          s += r * p(i, j);
        }
        for (std::size_t j = 0; j < k; ++j)
          out.chi(i, j) = p(i, j) * ((p(i, j) - targets(i, j)) - s);
      }
      break;
    }
  }
  out.loss = total / static_cast<double>(batch);
  if (!std::isfinite(out.loss) || !all_finite(out.chi)) {
    out.loss = std::numeric_limits<double>::infinity();
    out.chi = Matrix(logits.rows(), logits.cols());
    out.diverged = true;
  }
  return out;
}

double accuracy(const Matrix& logits, const Matrix& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw ShapeError("accuracy: shape mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i)
    if (argmax_row(logits, i) == argmax_row(targets, i)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace widthlab
