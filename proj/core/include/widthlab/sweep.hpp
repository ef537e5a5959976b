#pragma once

// Width x learning-rate x seed sweeps.
//
// Results directory:
//   manifest.json                      config echo, grid axes, version
//   grid.csv                           one row per cell
//   cells/<cell id>/metrics.csv        per-step training metrics
//   cells/<cell id>/diagnostics.csv    per-probe, per-layer diagnostics
//   cells/<cell id>/summary.json       final metrics; written last, marks the cell done
//
// grid.csv columns: width,lr_index,base_lr,lr,seed,final_loss,final_accuracy,
// diverged,divergence_step,steps_completed,max_abs_chi

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "widthlab/config.hpp"
#include "widthlab/diagnostics.hpp"
#include "widthlab/trainer.hpp"

namespace widthlab {

struct CellResult {
  std::size_t width = 0;
  std::size_t lr_index = 0;
  double base_lr = 0.0;
  /// base_lr (width / base_width)^(-axis exponent): the width-scaled rate.
  double lr = 0.0;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  bool diverged = false;
  std::optional<std::int64_t> divergence_step;
  std::int64_t steps_completed = 0;
  double max_abs_chi = 0.0;
  std::vector<DiagnosticRecord> probes;
};

struct SweepGrid {
  ExperimentConfig config;
  std::vector<std::size_t> widths;
  std::vector<double> base_lrs;
  std::vector<std::uint64_t> seeds;
  std::vector<CellResult> cells;

  const CellResult* find(std::size_t width, std::size_t lr_index, std::uint64_t seed) const;
};

struct SweepOptions {
  /// Empty: keep results in memory only.
  std::filesystem::path out_dir;
  unsigned jobs = 1;
  /// Reuse cells whose summary.json already exists.
  bool resume = true;
  /// Also store final weights as cells/<id>/weights.bin.
  bool save_checkpoints = false;
  /// Called after each cell, serialized across workers.
  std::function<void(const CellResult&, bool reused)> on_cell;
};

std::string cell_id(std::size_t width, std::size_t lr_index, std::uint64_t seed);

double reported_lr(const ExperimentConfig& c, double base_lr, std::size_t width);

struct CellRun {
  CellResult result;
  RunMetrics metrics;
  std::optional<Network> network;  // final weights, when requested
};

/// One training run. The network draws from `seed`; data order is shared.
CellRun run_cell(const ExperimentConfig& c, const Dataset& data, std::size_t width,
                 std::size_t lr_index, std::uint64_t seed, bool keep_network = false);

SweepGrid run_sweep(const ExperimentConfig& c, const SweepOptions& opts = {});

/// Rebuilds a grid from a results directory (manifest, grid.csv, diagnostics).
SweepGrid load_sweep(const std::filesystem::path& dir);

void write_grid_csv(const std::filesystem::path& path, const SweepGrid& grid);

}  // namespace widthlab
