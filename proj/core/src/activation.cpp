#include "widthlab/activation.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "widthlab/parameterization.hpp"

namespace widthlab {

double sigma_gelu(double x, double sigma) {
  const double z = x / sigma;
  return 0.5 * x * (1.0 + std::erf(z)) +
         sigma * std::exp(-z * z) / (2.0 * std::sqrt(std::numbers::pi));
}

double sigma_gelu_prime(double x, double sigma) { return 0.5 * (1.0 + std::erf(x / sigma)); }

Activation Activation::smooth_relu(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("sigma_gelu: sigma must be > 0");
  return {ActivationKind::kSigmaGelu, sigma};
}

std::string to_string(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::kReLU: return "relu";
    case ActivationKind::kIdentity: return "identity";
    case ActivationKind::kSigmaGelu: {
      std::ostringstream os;
      os << "sigma_gelu(" << a.sigma << ")";
      return os.str();
    }
  }
  return "?";
}

Activation parse_activation(std::string_view name, double sigma) {
  if (name == "relu") return Activation::relu();
  if (name == "identity") return Activation::identity();
  if (name == "sigma_gelu") return Activation::smooth_relu(sigma);
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

}  // namespace widthlab
