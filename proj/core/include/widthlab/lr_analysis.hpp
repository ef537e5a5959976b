#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "widthlab/sweep.hpp"

namespace widthlab {

/// Seed-averaged cell. A cell counts as diverged if any seed diverged.
struct CellAggregate {
  std::size_t width = 0;
  std::size_t lr_index = 0;
  double base_lr = 0.0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double mean_accuracy = 0.0;
  bool diverged = false;
  std::size_t seeds = 0;
};

std::vector<CellAggregate> aggregate_cells(const SweepGrid& grid);

enum class Objective { kAccuracy, kLoss };

struct InstabilityCriterion {
  /// Cells with mean accuracy below the floor also count as unstable.
  std::optional<double> accuracy_floor;
  /// Only consider rates at or above the optimal one, so that undertrained
  /// small-rate cells below an accuracy floor are not reported.
  bool from_optimum = false;
  Objective objective = Objective::kAccuracy;

  std::string describe() const;
};

/// Smallest grid rate at `width` meeting the criterion; missing if none does.
std::optional<double> min_unstable_lr(std::span<const CellAggregate> cells, std::size_t width,
                                      const InstabilityCriterion& criterion);

/// Rate of the best non-diverged cell at `width`; ties go to the smaller rate.
std::optional<double> optimal_lr(std::span<const CellAggregate> cells, std::size_t width,
                                 Objective objective);

Objective parse_objective(const std::string& name);

}  // namespace widthlab
