#include "widthlab/lr_analysis.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace widthlab {

namespace {

std::vector<const CellAggregate*> at_width(std::span<const CellAggregate> cells,
                                           std::size_t width) {
  std::vector<const CellAggregate*> out;
  for (const auto& c : cells)
    if (c.width == width) out.push_back(&c);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->lr < b->lr; });
  return out;
}

}  // namespace

std::vector<CellAggregate> aggregate_cells(const SweepGrid& grid) {
  std::map<std::pair<std::size_t, std::size_t>, CellAggregate> acc;
  for (const auto& r : grid.cells) {
    auto& a = acc[{r.width, r.lr_index}];
    a.width = r.width;
    a.lr_index = r.lr_index;
    a.base_lr = r.base_lr;
    a.lr = r.lr;
    a.diverged = a.diverged || r.diverged;
    a.mean_loss += r.final_loss;
    a.mean_accuracy += r.final_accuracy;
    ++a.seeds;
  }
  std::vector<CellAggregate> out;
  for (auto& [key, a] : acc) {
    a.mean_loss /= static_cast<double>(a.seeds);
    a.mean_accuracy /= static_cast<double>(a.seeds);
    out.push_back(a);
  }
  return out;
}

std::string InstabilityCriterion::describe() const {
  std::ostringstream s;
  s << "diverged (non-finite loss/gradient/weights or softmax loss above threshold) in any seed";
  if (accuracy_floor) s << ", or seed-mean final accuracy < " << *accuracy_floor;
  if (from_optimum) s << "; searched at and above the optimal learning rate";
  return s.str();
}

std::optional<double> optimal_lr(std::span<const CellAggregate> cells, std::size_t width,
                                 Objective objective) {
  const CellAggregate* best = nullptr;
  for (const CellAggregate* c : at_width(cells, width)) {
    if (c->diverged) continue;
    if (best == nullptr) {
      best = c;
      continue;
    }
    const bool better = objective == Objective::kAccuracy ? c->mean_accuracy > best->mean_accuracy
                                                          : c->mean_loss < best->mean_loss;
    if (better) best = c;
  }
  if (best == nullptr) return std::nullopt;
  return best->lr;
}

std::optional<double> min_unstable_lr(std::span<const CellAggregate> cells, std::size_t width,
                                      const InstabilityCriterion& criterion) {
  std::optional<double> start;
  if (criterion.from_optimum) start = optimal_lr(cells, width, criterion.objective);
  for (const CellAggregate* c : at_width(cells, width)) {
    if (start && c->lr < *start) continue;
    const bool unstable = c->diverged || (criterion.accuracy_floor &&
                                          c->mean_accuracy < *criterion.accuracy_floor);
    if (unstable) return c->lr;
  }
  return std::nullopt;
}

Objective parse_objective(const std::string& name) {
  if (name == "accuracy") return Objective::kAccuracy;
  if (name == "loss") return Objective::kLoss;
  throw ConfigError("unknown objective '" + name + "'");
}

}  // namespace widthlab
