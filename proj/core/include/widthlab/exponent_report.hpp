#pragma once

// Width exponents fitted from a sweep: optimal and minimal unstable learning
// rates, and per-layer update and alignment quantities at each probe step.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "widthlab/lr_analysis.hpp"
#include "widthlab/power_law.hpp"
#include "widthlab/sweep.hpp"

namespace widthlab {

struct ExponentEntry {
  std::string quantity;
  std::optional<std::size_t> layer;  // missing for network-level quantities
  std::int64_t step = 0;
  std::size_t lr_index = 0;
  double base_lr = 0.0;
  std::optional<PowerLawFit> fit;
  /// Widths left out: below the fit range, no surviving seed, or a missing or
  /// non-positive value.
  std::size_t excluded = 0;
};

struct LrRow {
  std::size_t width = 0;
  std::optional<double> optimal_lr;
  std::optional<double> min_unstable_lr;
};

struct ExponentReport {
  std::string name;
  std::string objective;
  std::string instability;
  std::size_t min_fit_width = 0;
  std::vector<LrRow> lr_table;
  std::optional<PowerLawFit> optimal_lr_fit;
  std::size_t optimal_lr_excluded = 0;
  std::optional<PowerLawFit> min_unstable_lr_fit;
  std::size_t min_unstable_lr_excluded = 0;
  std::vector<ExponentEntry> exponents;

  const ExponentEntry* find(const std::string& quantity, std::optional<std::size_t> layer,
                            std::int64_t step, std::size_t lr_index) const;
};

/// Names of the per-layer quantities in the report.
const std::vector<std::string>& layer_quantities();

InstabilityCriterion instability_criterion(const ExperimentConfig& c);

ExponentReport exponent_report(const SweepGrid& grid);

nlohmann::json to_json(const ExponentReport& r);
std::string to_markdown(const ExponentReport& r);

/// Seed-mean RCC terms per (width, lr index, step, layer).
void write_coordcheck_csv(const std::filesystem::path& path, const SweepGrid& grid);

/// Loads the sweep in `dir` and writes report.json and report.md next to it.
ExponentReport write_report(const std::filesystem::path& dir);

}  // namespace widthlab
