#include "widthlab/parameterization.hpp"

#include <cmath>
#include <sstream>

namespace widthlab {

LayerRole role_for_layer(std::size_t layer, std::size_t depth) {
  if (layer == 0) return LayerRole::kInputLike;
  if (layer + 1 == depth) return LayerRole::kOutputLike;
  return LayerRole::kHiddenLike;
}

namespace {

struct Exponents {
  double input, hidden, output;
};

// muP learning-rate exponents c_l per optimizer. SGD: input eta*n, hidden
// eta, output eta/n. Adam: eta / fan_in, i.e. eta for the input layer and
// eta/n otherwise.
Exponents mup_lr_exponents(OptimizerKind opt) {
  if (opt == OptimizerKind::kSgd) return {-1.0, 0.0, 1.0};
  return {0.0, 1.0, 1.0};
}

double pick(const Exponents& e, LayerRole role) {
  switch (role) {
    case LayerRole::kInputLike: return e.input;
    case LayerRole::kHiddenLike: return e.hidden;
    case LayerRole::kOutputLike: return e.output;
  }
  return 0.0;
}

}  // namespace

ParamSpec resolve_preset(const PresetSettings& s) {
  if (s.depth < 2) throw ConfigError("resolve_preset: depth must be >= 2 weight matrices");
  if (!(s.c_phi > 0.0)) throw ConfigError("resolve_preset: c_phi must be > 0");
  if (!(s.base_lr > 0.0) || !std::isfinite(s.base_lr))
    throw ConfigError("resolve_preset: base learning rate must be > 0");
  if (!(s.base_width > 0.0)) throw ConfigError("resolve_preset: base width must be > 0");
  if (!std::isfinite(s.preset.alpha)) throw ConfigError("resolve_preset: alpha must be finite");
  if (s.preset.kind == PresetKind::kNTP && s.optimizer == OptimizerKind::kAdam)
    throw ConfigError("resolve_preset: NTP is only defined for SGD");

  Exponents init{0.0, 0.0, 0.0};
  Exponents lr{0.0, 0.0, 0.0};
  switch (s.preset.kind) {
    case PresetKind::kSP:
      lr = {s.preset.alpha, s.preset.alpha, s.preset.alpha};
      break;
    case PresetKind::kMuP:
      init = {0.0, 0.0, 1.0};
      lr = mup_lr_exponents(s.optimizer);
      break;
    case PresetKind::kNTP:
      // Unit-variance weights behind n^{-1/2} multipliers, folded into the
      // weights: He-scale init, and every width-fanned layer sees eta / n.
      lr = {0.0, 1.0, 1.0};
      break;
    case PresetKind::kSPFullAlign:
      lr = mup_lr_exponents(s.optimizer);
      break;
    case PresetKind::kMUSOLI:
      lr = mup_lr_exponents(s.optimizer);
      lr.output = 0.5;
      break;
  }

  ParamSpec spec;
  spec.preset = s.preset;
  if (s.preset.kind != PresetKind::kSP) spec.preset.alpha = 0.0;
  spec.optimizer = s.optimizer;
  spec.c_phi = s.c_phi;
  spec.base_lr = s.base_lr;
  spec.base_width = s.base_width;
  spec.layers.reserve(s.depth);
  for (std::size_t l = 0; l < s.depth; ++l) {
    LayerScaling ls;
    ls.role = role_for_layer(l, s.depth);
    ls.init_exponent = pick(init, ls.role);
    ls.lr_exponent = pick(lr, ls.role);
    spec.layers.push_back(ls);
  }
  return spec;
}

double scaled_lr(const ParamSpec& spec, std::size_t layer, double width) {
  const LayerScaling& ls = spec.layers.at(layer);
  return ls.lr_multiplier * spec.base_lr * std::pow(width / spec.base_width, -ls.lr_exponent);
}

double scaled_init_variance(const ParamSpec& spec, std::size_t layer, double width,
                            double fan_in) {
  const LayerScaling& ls = spec.layers.at(layer);
  return ls.init_multiplier * spec.c_phi / fan_in *
         std::pow(width / spec.base_width, -ls.init_exponent);
}

std::string to_string(LayerRole role) {
  switch (role) {
    case LayerRole::kInputLike: return "input";
    case LayerRole::kHiddenLike: return "hidden";
    case LayerRole::kOutputLike: return "output";
  }
  return "?";
}

std::string to_string(OptimizerKind opt) { return opt == OptimizerKind::kSgd ? "sgd" : "adam"; }

std::string to_string(PresetKind kind) {
  switch (kind) {
    case PresetKind::kSP: return "sp";
    case PresetKind::kMuP: return "mup";
    case PresetKind::kNTP: return "ntp";
    case PresetKind::kSPFullAlign: return "sp_full_align";
    case PresetKind::kMUSOLI: return "musoli";
  }
  return "?";
}

std::string to_string(const Preset& preset) {
  if (preset.kind != PresetKind::kSP) return to_string(preset.kind);
  std::ostringstream os;
  os << "sp(alpha=" << preset.alpha << ")";
  return os.str();
}

PresetKind parse_preset_kind(std::string_view name) {
  if (name == "sp") return PresetKind::kSP;
  if (name == "mup") return PresetKind::kMuP;
  if (name == "ntp") return PresetKind::kNTP;
  if (name == "sp_full_align") return PresetKind::kSPFullAlign;
  if (name == "musoli") return PresetKind::kMUSOLI;
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::string render_preset_table() {
  std::ostringstream os;
  os << "# Parameterization presets\n\n"
     << "Per layer: sigma^2 = c_phi / fan_in * (n/n_base)^(-b), "
     << "eta_l = eta * (n/n_base)^(-c). SP rows use the global exponent alpha.\n\n"
     << "| preset | optimizer | role | b | c |\n"
     << "|---|---|---|---|---|\n";
  const PresetKind kinds[] = {PresetKind::kSP, PresetKind::kMuP, PresetKind::kNTP,
                              PresetKind::kSPFullAlign, PresetKind::kMUSOLI};
  for (PresetKind kind : kinds) {
    for (OptimizerKind opt : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
      if (kind == PresetKind::kNTP && opt == OptimizerKind::kAdam) continue;
      PresetSettings s;
      s.preset.kind = kind;
      s.depth = 3;
      s.optimizer = opt;
      const ParamSpec spec = resolve_preset(s);
      for (const auto& ls : spec.layers) {
        os << "| " << to_string(kind) << " | " << to_string(opt) << " | " << to_string(ls.role)
           << " | " << ls.init_exponent << " | ";
        if (kind == PresetKind::kSP)
          os << "alpha";
        else
          os << ls.lr_exponent;
        os << " |\n";
      }
    }
  }
  return os.str();
}

}  // namespace widthlab
