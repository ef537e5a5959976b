#pragma once

// Width-scaling rules for initialization variances and learning rates.
//
// For layer l at width n:
//   sigma_l^2 = init_multiplier_l * c_phi / fan_in * (n / n_base)^(-b_l)
//   eta_l     = lr_multiplier_l * eta * (n / n_base)^(-c_l)
// so every scaling factor equals 1 at n = n_base.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace widthlab {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LayerRole { kInputLike, kHiddenLike, kOutputLike };
enum class OptimizerKind { kSgd, kAdam };
enum class PresetKind { kSP, kMuP, kNTP, kSPFullAlign, kMUSOLI };

struct Preset {
  PresetKind kind = PresetKind::kSP;
  /// Global learning-rate exponent; only meaningful for SP.
  double alpha = 0.0;

  bool operator==(const Preset&) const = default;
};

struct LayerScaling {
  LayerRole role = LayerRole::kHiddenLike;
  double init_exponent = 0.0;  // b_l
  double init_multiplier = 1.0;
  double lr_exponent = 0.0;  // c_l
  double lr_multiplier = 1.0;

  bool operator==(const LayerScaling&) const = default;
};

struct PresetSettings {
  Preset preset;
  /// Number of weight matrices (L + 1); at least 2.
  std::size_t depth = 3;
  double c_phi = 2.0;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double base_lr = 1e-3;
  double base_width = 256.0;
};

struct ParamSpec {
  Preset preset;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double c_phi = 2.0;
  double base_lr = 1e-3;
  double base_width = 256.0;
  std::vector<LayerScaling> layers;

  bool operator==(const ParamSpec&) const = default;
};

ParamSpec resolve_preset(const PresetSettings& settings);

double scaled_lr(const ParamSpec& spec, std::size_t layer, double width);
double scaled_init_variance(const ParamSpec& spec, std::size_t layer, double width, double fan_in);

LayerRole role_for_layer(std::size_t layer, std::size_t depth);

std::string to_string(LayerRole role);
std::string to_string(OptimizerKind opt);
std::string to_string(PresetKind kind);
std::string to_string(const Preset& preset);

PresetKind parse_preset_kind(std::string_view name);
OptimizerKind parse_optimizer(std::string_view name);

/// Markdown reference table of (role, b_l, c_l) per preset and optimizer.
std::string render_preset_table();

}  // namespace widthlab
