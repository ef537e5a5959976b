#pragma once

#include <string>
#include <string_view>

namespace widthlab {

enum class ActivationKind { kReLU, kIdentity, kSigmaGelu };

/// Smooth ReLU surrogate: (x/2)(1 + erf(x/sigma)) + sigma exp(-x^2/sigma^2) / (2 sqrt(pi)).
double sigma_gelu(double x, double sigma);
/// Its derivative, which simplifies to (1 + erf(x/sigma)) / 2.
double sigma_gelu_prime(double x, double sigma);

struct Activation {
  ActivationKind kind = ActivationKind::kReLU;
  double sigma = 0.0;

  static Activation relu() { return {ActivationKind::kReLU, 0.0}; }
  static Activation identity() { return {ActivationKind::kIdentity, 0.0}; }
  static Activation smooth_relu(double sigma);

  double apply(double x) const {
    switch (kind) {
      case ActivationKind::kReLU: return x > 0.0 ? x : 0.0;
      case ActivationKind::kIdentity: return x;
      case ActivationKind::kSigmaGelu: return sigma_gelu(x, sigma);
    }
    return x;
  }

  // ReLU'(0) = 0 so that dead units count as exact zeros.
  double derivative(double x) const {
    switch (kind) {
      case ActivationKind::kReLU: return x > 0.0 ? 1.0 : 0.0;
      case ActivationKind::kIdentity: return 1.0;
      case ActivationKind::kSigmaGelu: return sigma_gelu_prime(x, sigma);
    }
    return 1.0;
  }

  bool operator==(const Activation&) const = default;
};

std::string to_string(const Activation& a);
/// "relu", "identity", or "sigma_gelu" (sigma supplied separately).
Activation parse_activation(std::string_view name, double sigma = 0.0);

}  // namespace widthlab
