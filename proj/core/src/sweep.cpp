#include "widthlab/sweep.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "widthlab/checkpoint.hpp"
#include "widthlab/run_io.hpp"

namespace widthlab {

namespace {

using nlohmann::json;

std::size_t index_of(const std::vector<std::size_t>& v, std::size_t x) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == x) return i;
  return v.size();
}

json cell_summary_json(const CellResult& r) {
  json j;
  j["width"] = r.width;
  j["lr_index"] = r.lr_index;
  j["base_lr"] = r.base_lr;
  j["lr"] = r.lr;
  j["seed"] = r.seed;
  j["final_loss"] = std::isfinite(r.final_loss) ? json(r.final_loss) : json(nullptr);
  j["final_accuracy"] = r.final_accuracy;
  j["diverged"] = r.diverged;
  j["divergence_step"] = r.divergence_step ? json(*r.divergence_step) : json(nullptr);
  j["steps_completed"] = r.steps_completed;
  j["max_abs_chi"] = r.max_abs_chi;
  return j;
}

CellResult cell_from_json(const json& j) {
  CellResult r;
  r.width = j.at("width").get<std::size_t>();
  r.lr_index = j.at("lr_index").get<std::size_t>();
  r.base_lr = j.at("base_lr").get<double>();
  r.lr = j.at("lr").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.final_loss = j.at("final_loss").is_null() ? std::numeric_limits<double>::infinity()
                                              : j.at("final_loss").get<double>();
  r.final_accuracy = j.at("final_accuracy").get<double>();
  r.diverged = j.at("diverged").get<bool>();
  if (!j.at("divergence_step").is_null())
    r.divergence_step = j.at("divergence_step").get<std::int64_t>();
  r.steps_completed = j.at("steps_completed").get<std::int64_t>();
  r.max_abs_chi = j.at("max_abs_chi").get<double>();
  return r;
}

json manifest_json(const SweepGrid& g) {
  return {{"tool", "widthlab"},
          {"version", WIDTHLAB_VERSION},
          {"config", to_json(g.config)},
          {"widths", g.widths},
          {"base_lrs", g.base_lrs},
          {"seeds", g.seeds}};
}

}  // namespace

const CellResult* SweepGrid::find(std::size_t width, std::size_t lr_index,
                                  std::uint64_t seed) const {
  for (const auto& c : cells)
    if (c.width == width && c.lr_index == lr_index && c.seed == seed) return &c;
  return nullptr;
}

std::string cell_id(std::size_t width, std::size_t lr_index, std::uint64_t seed) {
  return "w" + std::to_string(width) + "_lr" + std::to_string(lr_index) + "_s" +
         std::to_string(seed);
}

double reported_lr(const ExperimentConfig& c, double base_lr, std::size_t width) {
  return base_lr * std::pow(static_cast<double>(width) / c.base_width, -lr_axis_exponent(c));
}

CellRun run_cell(const ExperimentConfig& c, const Dataset& data, std::size_t width,
                 std::size_t lr_index, std::uint64_t seed, bool keep_network) {
  const std::vector<double> grid = lr_grid(c);
  if (lr_index >= grid.size()) throw ConfigError("run_cell: learning-rate index out of range");
  const double base_lr = grid[lr_index];
  const ParamSpec spec = resolve_preset(preset_settings(c, base_lr));
  const Architecture arch = architecture(c, width, data.d_in(), data.d_out());
  Network net = Network::initialize(arch, spec, seed);
  OptimizerState opt = spec.optimizer == OptimizerKind::kAdam
                           ? OptimizerState::adam_for(net, c.adam)
                           : OptimizerState::sgd();

  CellRun out;
  out.metrics = train(net, opt, spec, data, train_options(c));
  CellResult& r = out.result;
  r.width = width;
  r.lr_index = lr_index;
  r.base_lr = base_lr;
  r.lr = reported_lr(c, base_lr, width);
  r.seed = seed;
  r.diverged = out.metrics.diverged;
  r.divergence_step = out.metrics.divergence_step;
  r.steps_completed = out.metrics.steps_completed;
  r.max_abs_chi = out.metrics.max_abs_chi;
  r.probes = out.metrics.probes;
  if (r.diverged) {
    r.final_loss = std::numeric_limits<double>::infinity();
    r.final_accuracy = 0.0;
  } else {
    const std::size_t n_eval =
        c.eval_samples == 0 ? data.samples() : std::min(c.eval_samples, data.samples());
    const Evaluation ev = evaluate(net, n_eval == data.samples() ? data : data.slice(0, n_eval),
                                   parse_loss(c.loss));
    r.final_loss = ev.loss;
    r.final_accuracy = ev.accuracy;
    if (ev.diverged) {
      r.diverged = true;
      r.divergence_step = r.steps_completed;
      r.final_accuracy = 0.0;
    }
  }
  if (keep_network) out.network = std::move(net);
  return out;
}

void write_grid_csv(const std::filesystem::path& path, const SweepGrid& grid) {
  std::string text =
      "width,lr_index,base_lr,lr,seed,final_loss,final_accuracy,diverged,divergence_step,"
      "steps_completed,max_abs_chi\n";
  for (const auto& r : grid.cells) {
    text += std::to_string(r.width) + "," + std::to_string(r.lr_index) + "," +
            format_double(r.base_lr) + "," + format_double(r.lr) + "," + std::to_string(r.seed) +
            "," + format_double(r.final_loss) + "," + format_double(r.final_accuracy) + "," +
            (r.diverged ? "1" : "0") + "," +
            (r.divergence_step ? std::to_string(*r.divergence_step) : std::string(kMissing)) +
            "," + std::to_string(r.steps_completed) + "," + format_double(r.max_abs_chi) + "\n";
  }
  write_text_atomic(path, text);
}

SweepGrid run_sweep(const ExperimentConfig& c, const SweepOptions& opts) {
  validate(c);
  SweepGrid grid;
  grid.config = c;
  grid.widths = c.widths;
  grid.base_lrs = lr_grid(c);
  grid.seeds = c.seeds;

  const bool persist = !opts.out_dir.empty();
  if (persist) {
    const auto manifest_path = opts.out_dir / "manifest.json";
    const std::string manifest = manifest_json(grid).dump(2) + "\n";
    if (std::filesystem::exists(manifest_path)) {
      if (!opts.resume) throw std::runtime_error(opts.out_dir.string() + " already holds a sweep");
      if (read_text(manifest_path) != manifest)
        throw std::runtime_error(manifest_path.string() +
                                 " was written for a different configuration");
    } else {
      write_text_atomic(manifest_path, manifest);
    }
  }

  const Dataset data = load_data(c.data).train;

  struct Job {
    std::size_t width;
    std::size_t lr_index;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t w : grid.widths)
    for (std::size_t i = 0; i < grid.base_lrs.size(); ++i)
      for (std::uint64_t s : grid.seeds) jobs.push_back({w, i, s});
  grid.cells.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        const Job& job = jobs[k];
        const std::string id = cell_id(job.width, job.lr_index, job.seed);
        const auto dir = opts.out_dir / "cells" / id;
        CellResult result;
        bool reused = false;
        if (persist && opts.resume && std::filesystem::exists(dir / "summary.json")) {
          result = cell_from_json(json::parse(read_text(dir / "summary.json")));
          result.probes = read_diagnostics_csv(dir / "diagnostics.csv");
          reused = true;
        } else {
          const bool keep = persist && opts.save_checkpoints;
          CellRun run = run_cell(c, data, job.width, job.lr_index, job.seed, keep);
          result = std::move(run.result);
          if (persist) {
            write_metrics_csv(dir / "metrics.csv", run.metrics);
            write_diagnostics_csv(dir / "diagnostics.csv", result.probes);
            if (keep) save_checkpoint(dir / "weights.bin", *run.network);
            write_text_atomic(dir / "summary.json", cell_summary_json(result).dump(2) + "\n");
          }
        }
        std::lock_guard lock(mu);
        grid.cells[k] = std::move(result);
        if (opts.on_cell) opts.on_cell(grid.cells[k], reused);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(opts.jobs, jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  if (persist) write_grid_csv(opts.out_dir / "grid.csv", grid);
  return grid;
}

SweepGrid load_sweep(const std::filesystem::path& dir) {
  const json manifest = json::parse(read_text(dir / "manifest.json"));
  SweepGrid grid;
  grid.config = parse_experiment(manifest.at("config"));
  grid.widths = manifest.at("widths").get<std::vector<std::size_t>>();
  grid.base_lrs = manifest.at("base_lrs").get<std::vector<double>>();
  grid.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();

  std::istringstream is(read_text(dir / "grid.csv"));
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) throw std::runtime_error((dir / "grid.csv").string() + ": bad row");
    CellResult r;
    r.width = std::stoul(f[0]);
    r.lr_index = std::stoul(f[1]);
    r.base_lr = *parse_optional(f[2]);
    r.lr = *parse_optional(f[3]);
    r.seed = std::stoull(f[4]);
    r.final_loss = *parse_optional(f[5]);
    r.final_accuracy = *parse_optional(f[6]);
    r.diverged = f[7] == "1";
    if (f[8] != kMissing) r.divergence_step = std::stoll(f[8]);
    r.steps_completed = std::stoll(f[9]);
    r.max_abs_chi = *parse_optional(f[10]);
    if (index_of(grid.widths, r.width) == grid.widths.size())
      throw std::runtime_error("grid.csv lists a width missing from the manifest");
    r.probes = read_diagnostics_csv(dir / "cells" / cell_id(r.width, r.lr_index, r.seed) /
                                    "diagnostics.csv");
    grid.cells.push_back(std::move(r));
  }
  return grid;
}

}  // namespace widthlab
