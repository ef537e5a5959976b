#include "widthlab/config.hpp"

#include <fstream>
#include <set>

#include "widthlab/uv_model.hpp"
#include "widthlab/vision.hpp"

namespace widthlab {

namespace {

using nlohmann::json;

// Reads fields of one JSON object and rejects any key it was not asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    known_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* object(const char* key) {
    known_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) throw ConfigError(where_ + ": unknown field '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> known_;
};

LrRange parse_range(const json& j, const std::string& where) {
  LrRange r;
  Fields f(j, where);
  f.get("lo", r.lo);
  f.get("hi", r.hi);
  f.get("per_decade", r.per_decade);
  f.finish();
  return r;
}

json range_json(const LrRange& r) {
  return {{"lo", r.lo}, {"hi", r.hi}, {"per_decade", r.per_decade}};
}

}  // namespace

ExperimentConfig parse_experiment(const json& j) {
  ExperimentConfig c;
  Fields f(j, "config");
  f.get("name", c.name);
  if (const json* d = f.object("data")) {
    Fields df(*d, "config.data");
    df.get("kind", c.data.kind);
    df.get("seed", c.data.seed);
    df.get("n_train", c.data.n_train);
    df.get("n_test", c.data.n_test);
    df.get("d_in", c.data.d_in);
    df.get("images", c.data.images);
    df.get("labels", c.data.labels);
    df.get("batches", c.data.batches);
    df.get("path", c.data.path);
    df.finish();
  }
  f.get("depth", c.depth);
  f.get("widths", c.widths);
  f.get("activation", c.activation);
  f.get("activation_sigma", c.activation_sigma);
  f.get("preset", c.preset);
  f.get("alpha", c.alpha);
  f.get("c_phi", c.c_phi);
  f.get("base_width", c.base_width);
  f.get("loss", c.loss);
  f.get("optimizer", c.optimizer);
  if (const json* a = f.object("adam")) {
    Fields af(*a, "config.adam");
    af.get("beta1", c.adam.beta1);
    af.get("beta2", c.adam.beta2);
    af.get("epsilon", c.adam.epsilon);
    af.finish();
  }
  f.get("lrs", c.lrs);
  if (const json* r = f.object("lr_range")) c.lr_range = parse_range(*r, "config.lr_range");
  f.get("steps", c.steps);
  f.get("batch_size", c.batch_size);
  f.get("probe_steps", c.probe_steps);
  f.get("probe_size", c.probe_size);
  f.get("log_every", c.log_every);
  f.get("op_norms", c.op_norms);
  f.get("eval_samples", c.eval_samples);
  f.get("seeds", c.seeds);
  f.get("divergence_loss", c.divergence_loss);
  f.get("accuracy_floor", c.accuracy_floor);
  f.get("objective", c.objective);
  f.get("min_fit_width", c.min_fit_width);
  f.get("output", c.output);
  f.finish();
  validate(c);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["data"] = {{"kind", c.data.kind},     {"seed", c.data.seed},     {"n_train", c.data.n_train},
               {"n_test", c.data.n_test}, {"d_in", c.data.d_in},     {"images", c.data.images},
               {"labels", c.data.labels}, {"batches", c.data.batches}, {"path", c.data.path}};
  j["depth"] = c.depth;
  j["widths"] = c.widths;
  j["activation"] = c.activation;
  j["activation_sigma"] = c.activation_sigma;
  j["preset"] = c.preset;
  j["alpha"] = c.alpha;
  j["c_phi"] = c.c_phi;
  j["base_width"] = c.base_width;
  j["loss"] = c.loss;
  j["optimizer"] = c.optimizer;
  j["adam"] = {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}};
  j["lrs"] = c.lrs;
  if (c.lr_range) j["lr_range"] = range_json(*c.lr_range);
  j["steps"] = c.steps;
  j["batch_size"] = c.batch_size;
  j["probe_steps"] = c.probe_steps;
  j["probe_size"] = c.probe_size;
  j["log_every"] = c.log_every;
  j["op_norms"] = c.op_norms;
  j["eval_samples"] = c.eval_samples;
  j["seeds"] = c.seeds;
  j["divergence_loss"] = c.divergence_loss;
  j["accuracy_floor"] = c.accuracy_floor;
  j["objective"] = c.objective;
  j["min_fit_width"] = c.min_fit_width;
  j["output"] = c.output;
  return j;
}

void validate(const ExperimentConfig& c) {
  if (c.name.empty()) throw ConfigError("config.name must not be empty");
  if (c.widths.empty()) throw ConfigError("config.widths must not be empty");
  for (std::size_t w : c.widths)
    if (w == 0) throw ConfigError("config.widths entries must be >= 1");
  if (c.seeds.empty()) throw ConfigError("config.seeds must not be empty");
  if (c.steps < 0) throw ConfigError("config.steps must be >= 0");
  if (c.batch_size == 0 || c.probe_size == 0) throw ConfigError("batch sizes must be >= 1");
  if (c.log_every < 1) throw ConfigError("config.log_every must be >= 1");
  if (c.objective != "accuracy" && c.objective != "loss")
    throw ConfigError("config.objective must be 'accuracy' or 'loss'");
  if (!c.lrs.empty() && c.lr_range) throw ConfigError("give either config.lrs or config.lr_range");
  for (double lr : c.lrs)
    if (!(lr > 0.0)) throw ConfigError("config.lrs entries must be > 0");
  if (c.lr_range && (!(c.lr_range->lo > 0.0) || c.lr_range->hi < c.lr_range->lo ||
                     c.lr_range->per_decade == 0))
    throw ConfigError("config.lr_range needs 0 < lo <= hi and per_decade >= 1");
  for (auto s : c.probe_steps)
    if (s < 0) throw ConfigError("config.probe_steps entries must be >= 0");
  const std::set<std::string> kinds{"multi_index", "mnist", "cifar10", "file"};
  if (!kinds.count(c.data.kind)) throw ConfigError("config.data.kind '" + c.data.kind + "' unknown");
  if (c.data.kind == "multi_index" && c.data.d_in < 2)
    throw ConfigError("config.data.d_in must be >= 2 for multi-index data");
  parse_loss(c.loss);
  parse_activation(c.activation, c.activation_sigma);
  // Resolving the preset checks the name, optimizer and their combination.
  resolve_preset(preset_settings(c, 1.0));
}

std::vector<double> lr_grid(const ExperimentConfig& c) {
  if (!c.lrs.empty()) return c.lrs;
  const LrRange r = c.lr_range.value_or(LrRange{});
  return log_grid(r.lo, r.hi, r.per_decade);
}

PresetSettings preset_settings(const ExperimentConfig& c, double base_lr) {
  PresetSettings s;
  s.preset = {parse_preset_kind(c.preset), c.alpha};
  s.depth = c.depth;
  s.c_phi = c.c_phi;
  s.optimizer = parse_optimizer(c.optimizer);
  s.base_lr = base_lr;
  s.base_width = c.base_width;
  return s;
}

Architecture architecture(const ExperimentConfig& c, std::size_t width, std::size_t d_in,
                          std::size_t d_out) {
  Architecture a;
  a.d_in = d_in;
  a.width = width;
  a.d_out = d_out;
  a.depth = c.depth;
  a.activation = parse_activation(c.activation, c.activation_sigma);
  return a;
}

TrainOptions train_options(const ExperimentConfig& c) {
  TrainOptions o;
  o.loss = parse_loss(c.loss);
  o.steps = c.steps;
  o.batch_size = c.batch_size;
  o.probe_steps = c.probe_steps;
  o.probe_size = c.probe_size;
  o.log_every = c.log_every;
  o.ce_divergence_threshold = c.divergence_loss;
  o.diagnostics.op_norms = c.op_norms;
  return o;
}

double lr_axis_exponent(const ExperimentConfig& c) {
  return parse_preset_kind(c.preset) == PresetKind::kSP ? c.alpha : 0.0;
}

SplitDataset load_data(const DataSpec& spec) {
  if (spec.kind == "multi_index") {
    return gen_multi_index({spec.seed, spec.n_train, spec.n_test, spec.d_in});
  }
  SplitDataset out;
  if (spec.kind == "mnist") {
    out.train = load_mnist(spec.images, spec.labels);
  } else if (spec.kind == "cifar10") {
    std::vector<std::filesystem::path> paths(spec.batches.begin(), spec.batches.end());
    out.train = load_cifar10_bin(paths);
  } else if (spec.kind == "file") {
    out.train = load_dataset(spec.path);
  } else {
    throw ConfigError("unknown data kind '" + spec.kind + "'");
  }
  return out;
}

UvExperimentConfig parse_uv_experiment(const json& j) {
  UvExperimentConfig c;
  Fields f(j, "config");
  f.get("name", c.name);
  f.get("params", c.params);
  f.get("widths", c.widths);
  if (const json* r = f.object("eta_range")) c.eta_range = parse_range(*r, "config.eta_range");
  f.get("steps", c.steps);
  f.get("seeds", c.seeds);
  f.get("seed", c.seed);
  f.get("x", c.x);
  f.get("y", c.y);
  f.get("chi_growth_limit", c.chi_growth_limit);
  f.get("limit_widths", c.limit_widths);
  f.get("limit_steps", c.limit_steps);
  f.get("limit_seeds", c.limit_seeds);
  f.get("limit_etas", c.limit_etas);
  f.get("output", c.output);
  f.finish();
  if (c.widths.empty() || c.params.empty()) throw ConfigError("uv config: empty widths or params");
  if (c.seeds == 0 || c.limit_seeds == 0) throw ConfigError("uv config: seeds must be >= 1");
  for (const auto& p : c.params) parse_uv_param(p);
  log_grid(c.eta_range.lo, c.eta_range.hi, c.eta_range.per_decade);
  return c;
}

json to_json(const UvExperimentConfig& c) {
  return {{"name", c.name},
          {"params", c.params},
          {"widths", c.widths},
          {"eta_range", range_json(c.eta_range)},
          {"steps", c.steps},
          {"seeds", c.seeds},
          {"seed", c.seed},
          {"x", c.x},
          {"y", c.y},
          {"chi_growth_limit", c.chi_growth_limit},
          {"limit_widths", c.limit_widths},
          {"limit_steps", c.limit_steps},
          {"limit_seeds", c.limit_seeds},
          {"limit_etas", c.limit_etas},
          {"output", c.output}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace widthlab
