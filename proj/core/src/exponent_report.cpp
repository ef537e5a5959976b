#include "widthlab/exponent_report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "widthlab/run_io.hpp"

namespace widthlab {

namespace {

using nlohmann::json;

std::optional<double> layer_value(const LayerDiagnostics& d, const std::string& q) {
  if (q == "effective_rms") return d.rcc.effective_rms;
  if (q == "propagating_rms") return d.rcc.propagating_rms;
  if (q == "delta_h_rms") return d.rcc.delta_h_rms;
  if (q == "delta_w_rms") return d.delta_w_rms;
  if (q == "delta_x_rms") return d.delta_x_rms;
  if (q == "align_rms_update") return d.align_rms_update;
  if (q == "align_rms_init") return d.align_rms_init;
  if (q == "align_op_update") return d.align_op_update;
  if (q == "align_op_init") return d.align_op_init;
  return std::nullopt;
}

std::optional<double> record_value(const DiagnosticRecord& r, const std::string& q) {
  if (q == "logit_rms") return r.logit_rms;
  if (q == "delta_logit_rms") return r.delta_logit_rms;
  return std::nullopt;
}

const DiagnosticRecord* probe_at(const CellResult& c, std::int64_t step) {
  for (const auto& p : c.probes)
    if (p.step == step) return &p;
  return nullptr;
}

std::optional<PowerLawFit> fit_points(const std::vector<ScalingPoint>& pts) {
  if (pts.size() < 2) return std::nullopt;
  return power_law_fit(pts);
}

json fit_json(const std::optional<PowerLawFit>& f) {
  if (!f) return nullptr;
  return {{"exponent", f->exponent},   {"intercept", f->intercept},
          {"r_squared", f->r_squared}, {"points", f->points},
          {"min_width", f->min_width}, {"max_width", f->max_width}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace

const std::vector<std::string>& layer_quantities() {
  static const std::vector<std::string> q{
      "effective_rms",    "propagating_rms", "delta_h_rms",     "delta_w_rms",  "delta_x_rms",
      "align_rms_update", "align_rms_init",  "align_op_update", "align_op_init"};
  return q;
}

const ExponentEntry* ExponentReport::find(const std::string& quantity,
                                          std::optional<std::size_t> layer, std::int64_t step,
                                          std::size_t lr_index) const {
  for (const auto& e : exponents)
    if (e.quantity == quantity && e.layer == layer && e.step == step && e.lr_index == lr_index)
      return &e;
  return nullptr;
}

InstabilityCriterion instability_criterion(const ExperimentConfig& c) {
  InstabilityCriterion crit;
  crit.objective = parse_objective(c.objective);
  if (parse_loss(c.loss) != LossKind::kMse && c.accuracy_floor >= 0.0) {
    crit.accuracy_floor = c.accuracy_floor;
    crit.from_optimum = true;
  }
  return crit;
}

ExponentReport exponent_report(const SweepGrid& grid) {
  const ExperimentConfig& c = grid.config;
  ExponentReport rep;
  rep.name = c.name;
  rep.objective = c.objective;
  rep.min_fit_width = c.min_fit_width;
  const InstabilityCriterion crit = instability_criterion(c);
  rep.instability = crit.describe();

  const auto cells = aggregate_cells(grid);
  std::vector<ScalingPoint> opt_pts, unstable_pts;
  for (std::size_t w : grid.widths) {
    LrRow row;
    row.width = w;
    row.optimal_lr = optimal_lr(cells, w, crit.objective);
    row.min_unstable_lr = min_unstable_lr(cells, w, crit);
    const bool in_range = w >= c.min_fit_width;
    if (in_range && row.optimal_lr) opt_pts.push_back({double(w), *row.optimal_lr});
    else ++rep.optimal_lr_excluded;
    if (in_range && row.min_unstable_lr) unstable_pts.push_back({double(w), *row.min_unstable_lr});
    else ++rep.min_unstable_lr_excluded;
    rep.lr_table.push_back(row);
  }
  rep.optimal_lr_fit = fit_points(opt_pts);
  rep.min_unstable_lr_fit = fit_points(unstable_pts);

  std::set<std::int64_t> steps;
  std::size_t depth = 0;
  for (const auto& cell : grid.cells)
    for (const auto& p : cell.probes) {
      if (p.step > 0) steps.insert(p.step);
      depth = std::max(depth, p.layers.size());
    }

  auto fit_quantity = [&](const std::string& q, std::optional<std::size_t> layer,
                          std::int64_t step, std::size_t li) {
    ExponentEntry e;
    e.quantity = q;
    e.layer = layer;
    e.step = step;
    e.lr_index = li;
    e.base_lr = grid.base_lrs.at(li);
    std::vector<ScalingPoint> pts;
    for (std::size_t w : grid.widths) {
      double sum = 0.0;
      std::size_t used = 0;
      bool missing = false;
      for (std::uint64_t s : grid.seeds) {
        const CellResult* cell = grid.find(w, li, s);
        if (cell == nullptr || cell->diverged) continue;
        const DiagnosticRecord* p = probe_at(*cell, step);
        if (p == nullptr) continue;
        std::optional<double> v;
        if (layer) {
          if (*layer < p->layers.size()) v = layer_value(p->layers[*layer], q);
        } else {
          v = record_value(*p, q);
        }
        if (!v) {
          missing = true;
          break;
        }
        sum += *v;
        ++used;
      }
      const double mean = used ? sum / static_cast<double>(used) : 0.0;
      if (w < c.min_fit_width || missing || used == 0 || !(mean > 0.0) || !std::isfinite(mean)) {
        ++e.excluded;
        continue;
      }
      pts.push_back({double(w), mean});
    }
    e.fit = fit_points(pts);
    rep.exponents.push_back(std::move(e));
  };

  for (std::size_t li = 0; li < grid.base_lrs.size(); ++li) {
    for (std::int64_t step : steps) {
      for (const char* q : {"logit_rms", "delta_logit_rms"}) fit_quantity(q, std::nullopt, step, li);
      for (std::size_t l = 0; l < depth; ++l)
        for (const auto& q : layer_quantities()) fit_quantity(q, l, step, li);
    }
  }
  return rep;
}

json to_json(const ExponentReport& r) {
  json j;
  j["name"] = r.name;
  j["objective"] = r.objective;
  j["instability_criterion"] = r.instability;
  j["min_fit_width"] = r.min_fit_width;
  json table = json::array();
  for (const auto& row : r.lr_table)
    table.push_back({{"width", row.width},
                     {"optimal_lr", opt_json(row.optimal_lr)},
                     {"min_unstable_lr", opt_json(row.min_unstable_lr)}});
  j["lr_table"] = table;
  j["optimal_lr"] = {{"fit", fit_json(r.optimal_lr_fit)}, {"excluded", r.optimal_lr_excluded}};
  j["min_unstable_lr"] = {{"fit", fit_json(r.min_unstable_lr_fit)},
                          {"excluded", r.min_unstable_lr_excluded}};
  json ex = json::array();
  for (const auto& e : r.exponents)
    ex.push_back({{"quantity", e.quantity},
                  {"layer", e.layer ? json(*e.layer) : json(nullptr)},
                  {"step", e.step},
                  {"lr_index", e.lr_index},
                  {"base_lr", e.base_lr},
                  {"fit", fit_json(e.fit)},
                  {"excluded", e.excluded}});
  j["exponents"] = ex;
  return j;
}

std::string to_markdown(const ExponentReport& r) {
  std::ostringstream s;
  s << "# Exponent report: " << r.name << "\n\n";
  s << "Fits use widths >= " << r.min_fit_width << ". Objective: " << r.objective
    << ". Unstable means " << r.instability << ".\n\n";
  s << "| width | optimal lr | min unstable lr |\n|---|---|---|\n";
  for (const auto& row : r.lr_table)
    s << "| " << row.width << " | " << (row.optimal_lr ? fmt(*row.optimal_lr) : "-") << " | "
      << (row.min_unstable_lr ? fmt(*row.min_unstable_lr) : "-") << " |\n";
  auto fit_line = [&](const char* label, const std::optional<PowerLawFit>& f, std::size_t ex) {
    s << "- " << label << ": ";
    if (f)
      s << "exponent " << fmt(f->exponent) << " (r^2 " << fmt(f->r_squared) << ", " << f->points
        << " widths " << f->min_width << "-" << f->max_width << ")";
    else
      s << "not enough points";
    s << ", " << ex << " excluded\n";
  };
  s << "\n";
  fit_line("optimal lr", r.optimal_lr_fit, r.optimal_lr_excluded);
  fit_line("min unstable lr", r.min_unstable_lr_fit, r.min_unstable_lr_excluded);

  s << "\n## Update exponents\n\n| lr index | step | layer | quantity | exponent | r^2 | "
       "points | excluded |\n|---|---|---|---|---|---|---|---|\n";
  for (const auto& e : r.exponents) {
    if (!e.fit) continue;
    s << "| " << e.lr_index << " | " << e.step << " | "
      << (e.layer ? std::to_string(*e.layer) : std::string("-")) << " | " << e.quantity << " | "
      << fmt(e.fit->exponent) << " | " << fmt(e.fit->r_squared) << " | " << e.fit->points
      << " | " << e.excluded << " |\n";
  }
  return s.str();
}

void write_coordcheck_csv(const std::filesystem::path& path, const SweepGrid& grid) {
  struct Acc {
    double eff = 0, prop = 0, dh = 0;
    std::size_t n = 0;
  };
  std::map<std::tuple<std::size_t, std::size_t, std::int64_t, std::size_t>, Acc> acc;
  for (const auto& cell : grid.cells) {
    if (cell.diverged) continue;
    for (const auto& p : cell.probes)
      for (const auto& d : p.layers) {
        auto& a = acc[{cell.width, cell.lr_index, p.step, d.layer}];
        a.eff += d.rcc.effective_rms;
        a.prop += d.rcc.propagating_rms;
        a.dh += d.rcc.delta_h_rms;
        ++a.n;
      }
  }
  std::string text = "width,lr_index,step,layer,seeds,effective_rms,propagating_rms,delta_h_rms\n";
  for (const auto& [key, a] : acc) {
    const auto& [w, li, step, layer] = key;
    const double n = static_cast<double>(a.n);
    text += std::to_string(w) + "," + std::to_string(li) + "," + std::to_string(step) + "," +
            std::to_string(layer) + "," + std::to_string(a.n) + "," + format_double(a.eff / n) +
            "," + format_double(a.prop / n) + "," + format_double(a.dh / n) + "\n";
  }
  write_text_atomic(path, text);
}

ExponentReport write_report(const std::filesystem::path& dir) {
  const SweepGrid grid = load_sweep(dir);
  ExponentReport rep = exponent_report(grid);
  write_text_atomic(dir / "report.json", to_json(rep).dump(2) + "\n");
  write_text_atomic(dir / "report.md", to_markdown(rep));
  write_coordcheck_csv(dir / "coordcheck.csv", grid);
  return rep;
}

}  // namespace widthlab
