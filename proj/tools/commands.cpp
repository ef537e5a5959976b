#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "widthlab/checkpoint.hpp"
#include "widthlab/config.hpp"
#include "widthlab/dataset.hpp"
#include "widthlab/exponent_report.hpp"
#include "widthlab/parameterization.hpp"
#include "widthlab/power_law.hpp"
#include "widthlab/run_io.hpp"
#include "widthlab/sweep.hpp"
#include "widthlab/uv_model.hpp"

namespace widthlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

ExperimentConfig load_experiment(const CommonOptions& o) {
  ExperimentConfig c = parse_experiment(read_json_file(o.config));
  for (auto& s : c.seeds) s += o.seed_offset;
  validate(c);
  return c;
}

json manifest(const std::string& command, const json& config) {
  return {{"tool", "widthlab"},
          {"version", WIDTHLAB_VERSION},
          {"command", command},
          {"config", config}};
}

void write_json(const fs::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

json fit_json(const std::optional<PowerLawFit>& f) {
  if (!f) return nullptr;
  return {{"exponent", f->exponent},
          {"intercept", f->intercept},
          {"r_squared", f->r_squared},
          {"points", f->points}};
}

SweepGrid run_logged_sweep(const ExperimentConfig& c, const CommonOptions& o,
                           const fs::path& out) {
  SweepOptions opts;
  opts.out_dir = out;
  opts.jobs = resolve_jobs(o.jobs);
  const std::size_t total = c.widths.size() * lr_grid(c).size() * c.seeds.size();
  std::size_t done = 0;
  opts.on_cell = [&](const CellResult& r, bool reused) {
    ++done;
    spdlog::info("[{}/{}] {}{} loss={:.6g} acc={:.4f}{}", done, total,
                 cell_id(r.width, r.lr_index, r.seed), reused ? " (reused)" : "", r.final_loss,
                 r.final_accuracy, r.diverged ? " diverged" : "");
  };
  spdlog::info("sweep '{}': {} cells, {} jobs -> {}", c.name, total, opts.jobs, out.string());
  return run_sweep(c, opts);
}

void log_report(const ExponentReport& r) {
  if (r.optimal_lr_fit)
    spdlog::info("optimal-lr exponent {:.3f}", r.optimal_lr_fit->exponent);
  if (r.min_unstable_lr_fit)
    spdlog::info("min-unstable-lr exponent {:.3f}", r.min_unstable_lr_fit->exponent);
}

}  // namespace

fs::path resolve_out_dir(const std::optional<fs::path>& out, const std::string& config_output,
                         const std::string& config_name) {
  if (out) return *out;
  const char* env = std::getenv(kOutRootEnv);
  const fs::path root = (env != nullptr && *env != '\0') ? fs::path(env) : fs::path("results");
  return root / (config_output.empty() ? config_name : config_output);
}

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const json::exception& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitIo;
  }
}

int cmd_train(const CommonOptions& o) {
  const ExperimentConfig c = load_experiment(o);
  const fs::path out = resolve_out_dir(o.out, c.output, c.name);
  fs::create_directories(out);
  const std::vector<double> grid = lr_grid(c);
  if (c.widths.size() * grid.size() * c.seeds.size() > 1)
    spdlog::warn("train runs a single cell; using the first width, learning rate and seed");
  const std::size_t width = c.widths.front();
  const std::uint64_t seed = c.seeds.front();

  write_json(out / "manifest.json", manifest("train", to_json(c)));
  const SplitDataset data = load_data(c.data);
  spdlog::info("train '{}': width {} lr {} seed {} steps {}", c.name, width, grid.front(), seed,
               c.steps);
  CellRun run = run_cell(c, data.train, width, 0, seed, true);
  write_metrics_csv(out / "metrics.csv", run.metrics);
  write_diagnostics_csv(out / "diagnostics.csv", run.result.probes);
  save_checkpoint(out / "weights.bin", *run.network);
  const CellResult& r = run.result;
  json summary = {{"width", r.width},
                  {"base_lr", r.base_lr},
                  {"lr", r.lr},
                  {"seed", r.seed},
                  {"final_loss", std::isfinite(r.final_loss) ? json(r.final_loss) : json()},
                  {"final_accuracy", r.final_accuracy},
                  {"diverged", r.diverged},
                  {"divergence_step", r.divergence_step ? json(*r.divergence_step) : json()},
                  {"steps_completed", r.steps_completed},
                  {"max_abs_chi", r.max_abs_chi}};
  if (!data.test.inputs.empty() && !r.diverged) {
    const Evaluation ev = evaluate(*run.network, data.test, parse_loss(c.loss));
    summary["test_loss"] = std::isfinite(ev.loss) ? json(ev.loss) : json();
    summary["test_accuracy"] = ev.accuracy;
  }
  write_json(out / "summary.json", summary);
  spdlog::info("done: loss={:.6g} acc={:.4f}{}", r.final_loss, r.final_accuracy,
               r.diverged ? " diverged" : "");
  return kExitOk;
}

int cmd_sweep(const CommonOptions& o) {
  const ExperimentConfig c = load_experiment(o);
  const fs::path out = resolve_out_dir(o.out, c.output, c.name);
  run_logged_sweep(c, o, out);
  log_report(write_report(out));
  return kExitOk;
}

int cmd_coordcheck(const CommonOptions& o) {
  const ExperimentConfig c = load_experiment(o);
  if (c.probe_steps.empty()) throw ConfigError("coordcheck needs probe_steps");
  const fs::path out = resolve_out_dir(o.out, c.output, c.name);
  run_logged_sweep(c, o, out);
  const ExponentReport r = write_report(out);
  for (const auto& e : r.exponents) {
    if (e.quantity != "effective_rms" || !e.fit) continue;
    spdlog::info("step {} layer {} effective-update exponent {:.3f}", e.step, *e.layer,
                 e.fit->exponent);
  }
  return kExitOk;
}

int cmd_align(const CommonOptions& o) {
  ExperimentConfig c = load_experiment(o);
  c.op_norms = true;
  if (c.probe_steps.empty()) throw ConfigError("align needs probe_steps");
  const fs::path out = resolve_out_dir(o.out, c.output, c.name);
  run_logged_sweep(c, o, out);
  const ExponentReport r = write_report(out);
  for (const auto& e : r.exponents) {
    if (e.quantity.rfind("align_", 0) != 0 || !e.fit) continue;
    spdlog::info("step {} layer {} {} exponent {:.3f}", e.step, *e.layer, e.quantity,
                 e.fit->exponent);
  }
  return kExitOk;
}

int cmd_uvmodel(const CommonOptions& o) {
  UvExperimentConfig c = parse_uv_experiment(read_json_file(o.config));
  c.seed += o.seed_offset;
  const fs::path out = resolve_out_dir(o.out, c.output, c.name);
  fs::create_directories(out);
  write_json(out / "manifest.json", manifest("uvmodel", to_json(c)));

  const std::vector<double> grid = log_grid(c.eta_range.lo, c.eta_range.hi, c.eta_range.per_decade);
  UvStabilityOptions opts;
  opts.steps = c.steps;
  opts.x = c.x;
  opts.y = c.y;
  opts.seeds = c.seeds;
  opts.seed = c.seed;
  opts.chi_growth_limit = c.chi_growth_limit;

  std::string stability = "param,width,max_stable_lr\n";
  std::string limit = "param,eta,width,step,mean_abs_deviation\n";
  json report = {{"name", c.name}, {"params", json::object()}};
  for (const auto& name : c.params) {
    const UvParam param{parse_uv_param(name), 0.0};
    std::vector<ScalingPoint> pts;
    for (std::size_t n : c.widths) {
      const auto eta = uv_max_stable_lr(param, n, grid, opts);
      stability += name + "," + std::to_string(n) + "," + format_optional(eta) + "\n";
      if (eta) pts.push_back({static_cast<double>(n), *eta});
    }
    json entry;
    entry["max_stable_lr_fit"] = pts.size() >= 2 ? fit_json(power_law_fit(pts)) : json();
    if (pts.size() >= 2)
      spdlog::info("{}: max-stable-lr exponent {:.3f}", name, power_law_fit(pts).exponent);

    json limits = json::array();
    for (double eta : c.limit_etas) {
      const auto rows =
          uv_limit_distance(param.kind, c.limit_widths, c.limit_steps, c.limit_seeds, eta, c.seed);
      std::vector<ScalingPoint> last;
      for (const auto& r : rows) {
        limit += name + "," + format_double(eta) + "," + std::to_string(r.n) + "," +
                 std::to_string(r.step) + "," + format_double(r.mean_abs_deviation) + "\n";
        if (r.step == c.limit_steps && r.mean_abs_deviation > 0.0)
          last.push_back({static_cast<double>(r.n), r.mean_abs_deviation});
      }
      limits.push_back({{"eta", eta},
                        {"step", c.limit_steps},
                        {"fit", last.size() >= 2 ? fit_json(power_law_fit(last)) : json()}});
    }
    entry["limit_distance"] = limits;
    report["params"][name] = entry;
  }
  write_text_atomic(out / "stability.csv", stability);
  write_text_atomic(out / "limit.csv", limit);
  write_json(out / "report.json", report);
  return kExitOk;
}

int cmd_gendata(const CommonOptions& o) {
  const ExperimentConfig c = load_experiment(o);
  const fs::path out = resolve_out_dir(o.out, c.output, c.name);
  fs::create_directories(out);
  write_json(out / "manifest.json", manifest("gendata", to_json(c)));
  const SplitDataset data = load_data(c.data);
  save_dataset(out / "train.bin", data.train);
  if (!data.test.inputs.empty()) save_dataset(out / "test.bin", data.test);
  spdlog::info("wrote {} training samples to {}", data.train.samples(), out.string());
  return kExitOk;
}

int cmd_report(const fs::path& dir) {
  log_report(write_report(dir));
  return kExitOk;
}

int cmd_presets(const fs::path& dir) {
  fs::create_directories(dir);
  write_text_atomic(dir / "presets.md", render_preset_table());
  return kExitOk;
}

}  // namespace widthlab::cli
