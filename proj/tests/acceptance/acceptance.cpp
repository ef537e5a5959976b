// Acceptance runner. Prints one PASS/FAIL line per criterion; exits non-zero
// if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "widthlab/config.hpp"
#include "widthlab/diagnostics.hpp"
#include "widthlab/exponent_report.hpp"
#include "widthlab/loss.hpp"
#include "widthlab/multi_index.hpp"
#include "widthlab/network.hpp"
#include "widthlab/optimizer.hpp"
#include "widthlab/parameterization.hpp"
#include "widthlab/power_law.hpp"
#include "widthlab/sweep.hpp"
#include "widthlab/uv_model.hpp"

using namespace widthlab;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kGradRel = 1e-5;
constexpr double kGradAbs = 1e-6;
constexpr double kRccRel = 1e-9;
constexpr double kUvRel = 1e-8;
constexpr double kUvExpTol = 0.1;
constexpr double kFig4InputTarget = -1.0, kFig4InputTol = 0.25;
constexpr double kFig4HiddenTol = 0.15;
constexpr double kFig4OutputTarget = 0.5, kFig4OutputTol = 0.2;
constexpr double kLogitExpMin = 0.3;
constexpr double kMinUnstableTarget = -1.0, kMinUnstableTol = 0.2;
constexpr double kOptimalLo = -1.2, kOptimalHi = -0.8;
constexpr double kMupOptimalTol = 0.25;
constexpr double kMupUpdateTol = 0.15;
constexpr double kAdamTol = 0.2;
constexpr double kAdamInputMax = -0.5;
constexpr double kAlignTarget = 1.0, kAlignTol = 0.15;
constexpr double kAlignOpTol = 1e-9;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "" : "!") << what << "; ";
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

fs::path recipes_dir;
fs::path out_root;

ExperimentConfig recipe(const std::string& file) {
  return parse_experiment(read_json_file(recipes_dir / file));
}

SweepGrid sweep(const ExperimentConfig& c) {
  SweepOptions o;
  o.resume = false;
  if (!out_root.empty()) o.out_dir = out_root / c.name;
  return run_sweep(c, o);
}

std::optional<double> exponent(const ExponentReport& r, const std::string& q,
                               std::optional<std::size_t> layer, std::int64_t step,
                               std::size_t lr_index = 0) {
  const ExponentEntry* e = r.find(q, layer, step, lr_index);
  if (e == nullptr || !e->fit) return std::nullopt;
  return e->fit->exponent;
}

void check_exponent(Outcome& o, const ExponentReport& r, const std::string& q, std::size_t layer,
                    std::int64_t step, std::size_t lr_index, double lo, double hi) {
  const auto e = exponent(r, q, layer, step, lr_index);
  const std::string label = q + " L" + std::to_string(layer) + " t" + std::to_string(step);
  if (!e) {
    o.check(false, label + " missing");
    return;
  }
  o.check(*e >= lo && *e <= hi, label + "=" + fmt(*e) + " in [" + fmt(lo) + "," + fmt(hi) + "]");
}

// 1. Backprop against central finite differences on random configurations.
Outcome gradient_correctness() {
  Outcome o;
  Rng rng(2024, streams::kTest);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1)) %
                    (hi - lo + 1);
  };
  std::size_t checked = 0, failed = 0;
  double worst = 0.0;
  for (int combo = 0; combo < 50; ++combo) {
    Architecture a;
    a.d_in = pick(1, 12);
    a.width = pick(2, 64);
    a.d_out = pick(2, 5);
    a.depth = pick(2, 4);
    switch (combo % 3) {
      case 0: a.activation = Activation::relu(); break;
      case 1: a.activation = Activation::identity(); break;
      default: a.activation = Activation::smooth_relu(0.2 + rng.uniform()); break;
    }
    const LossKind loss = static_cast<LossKind>((combo / 3) % 3);
    PresetSettings s;
    s.depth = a.depth;
    const Network net = Network::initialize(a, resolve_preset(s), 100 + combo);
    const std::size_t batch = pick(1, 4);
    const Matrix x = gaussian_matrix(rng, batch, a.d_in, 1.0);
    Matrix y(batch, a.d_out);
    for (std::size_t i = 0; i < batch; ++i) y(i, pick(0, a.d_out - 1)) = 1.0;

    auto loss_of = [&](const Network& n) { return loss_and_chi(loss, forward(n, x).logits, y).loss; };
    const ForwardTrace t = forward(net, x);
    const auto grads = backward(net, t, loss_and_chi(loss, t.logits, y).chi);
    for (std::size_t l = 0; l < a.depth; ++l) {
      for (std::size_t idx = 0; idx < net.weight(l).size(); ++idx) {
        Network plus = net, minus = net;
        const double w = net.weight(l).data()[idx];
        const double h = 1e-6 * std::max(1.0, std::abs(w));
        plus.weight(l).data()[idx] = w + h;
        minus.weight(l).data()[idx] = w - h;
        const double fd = (loss_of(plus) - loss_of(minus)) / (2.0 * h);
        const double g = grads[l].data()[idx];
        const double err = std::abs(g - fd);
        const double scale = std::max(std::abs(g), std::abs(fd));
        ++checked;
        if (err > std::max(kGradRel * scale, kGradAbs)) ++failed;
        if (scale > 0.0) worst = std::max(worst, std::min(err / scale, err / kGradAbs * kGradRel));
      }
    }
  }
  o.check(failed == 0, std::to_string(failed) + "/" + std::to_string(checked) + " entries off");
  o.detail << "worst scaled error " << fmt(worst);
  return o;
}

// 2. RCC decomposition residual on every probe of a width-512 run.
Outcome rcc_identity() {
  Outcome o;
  ExperimentConfig c;
  c.name = "rcc_identity";
  c.data.n_train = 1000;
  c.data.n_test = 10;
  c.widths = {512};
  c.preset = "sp";
  c.alpha = 0.5;
  c.lrs = {0.05};
  c.steps = 200;
  c.probe_steps = {1, 2, 5, 10, 20, 50, 100, 150, 200};
  c.seeds = {0};
  const SplitDataset data = load_data(c.data);
  const CellRun run = run_cell(c, data.train, 512, 0, 0);
  double worst = 0.0;
  std::size_t probes = 0;
  for (const auto& p : run.result.probes) {
    ++probes;
    for (const auto& l : p.layers) worst = std::max(worst, l.rcc.max_relative_residual);
  }
  o.check(!run.result.diverged, "run finite");
  o.check(probes == c.probe_steps.size() + 1, std::to_string(probes) + " probes");
  o.check(worst <= kRccRel, "max residual " + fmt(worst));
  return o;
}

// 3. Closed-form uv recursion against explicit weight training.
Outcome uv_oracle() {
  Outcome o;
  double worst = 0.0;
  bool complete = true;
  for (UvParamKind kind : {UvParamKind::kSP, UvParamKind::kMuP, UvParamKind::kNTP}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const std::size_t n = 16 + 50 * seed;
      const double eta = kind == UvParamKind::kSP ? 0.5 / static_cast<double>(n) : 0.05;
      const double x[1] = {1.0};
      Rng rng(seed, streams::kUvInit);
      const UvInit init = uv_init(rng, {kind, 0.0}, n, 1, x, 1.0, eta);
      const UvTrajectory a = uv_closed_form(init.state, 50);
      const UvTrajectory b = uv_explicit_train(init.weights, {kind, 0.0}, eta, x, 1.0, 50);
      if (a.points.size() != 51 || b.points.size() != 51) {
        complete = false;
        continue;
      }
      for (std::size_t t = 0; t <= 50; ++t) {
        for (auto [p, q] : {std::pair{a.points[t].f, b.points[t].f},
                            std::pair{a.points[t].lambda, b.points[t].lambda}}) {
          const double scale = std::max(std::abs(p), std::abs(q));
          if (scale > 0.0) worst = std::max(worst, std::abs(p - q) / scale);
        }
      }
    }
  }
  o.check(complete, "all 60 trajectories complete");
  o.check(worst <= kUvRel, "max relative gap " + fmt(worst));
  return o;
}

// 4. uv-model maximal stable rate across widths.
Outcome uv_stability() {
  Outcome o;
  const UvExperimentConfig c = parse_uv_experiment(read_json_file(recipes_dir / "uv_stability.json"));
  const auto grid = log_grid(c.eta_range.lo, c.eta_range.hi, c.eta_range.per_decade);
  UvStabilityOptions opts;
  opts.steps = c.steps;
  opts.x = c.x;
  opts.y = c.y;
  opts.seeds = c.seeds;
  opts.seed = c.seed;
  opts.chi_growth_limit = c.chi_growth_limit;
  for (auto [kind, target] : {std::pair{UvParamKind::kSP, -1.0}, std::pair{UvParamKind::kMuP, 0.0}}) {
    std::vector<ScalingPoint> pts;
    for (std::size_t n : c.widths)
      if (const auto eta = uv_max_stable_lr({kind, 0.0}, n, grid, opts))
        pts.push_back({static_cast<double>(n), *eta});
    const std::string name = to_string(UvParam{kind, 0.0});
    if (pts.size() != c.widths.size()) {
      o.check(false, name + " missing widths");
      continue;
    }
    const double e = power_law_fit(pts).exponent;
    o.check(std::abs(e - target) <= kUvExpTol, name + " exponent " + fmt(e));
  }
  return o;
}

// 5. Effective-update exponents in SP at alpha = 1/2.
Outcome coordinate_check() {
  Outcome o;
  const ExperimentConfig c = recipe("coordcheck_sp.json");
  const ExponentReport r = exponent_report(sweep(c));
  for (std::int64_t t : c.probe_steps) {
    check_exponent(o, r, "effective_rms", 0, t, 0, kFig4InputTarget - kFig4InputTol,
                   kFig4InputTarget + kFig4InputTol);
    check_exponent(o, r, "effective_rms", 1, t, 0, -kFig4HiddenTol, kFig4HiddenTol);
    check_exponent(o, r, "effective_rms", 2, t, 0, kFig4OutputTarget - kFig4OutputTol,
                   kFig4OutputTarget + kFig4OutputTol);
  }
  return o;
}

// 6. MSE diverges at large width; CE stays finite with growing logits.
Outcome loss_regimes() {
  Outcome o;
  const SweepGrid mse = sweep(recipe("regimes_mse.json"));
  for (const auto& cell : mse.cells)
    if (cell.width >= 1024)
      o.check(cell.diverged, "mse n=" + std::to_string(cell.width) + " seed " +
                                 std::to_string(cell.seed) + " diverged");
  const ExperimentConfig ce_cfg = recipe("regimes_ce.json");
  const SweepGrid ce = sweep(ce_cfg);
  bool finite = true;
  double max_chi = 0.0;
  for (const auto& cell : ce.cells) {
    finite = finite && !cell.diverged && std::isfinite(cell.final_loss);
    max_chi = std::max(max_chi, cell.max_abs_chi);
  }
  o.check(finite, "ce losses finite");
  o.check(max_chi <= 1.0, "ce max |chi| " + fmt(max_chi));
  const ExponentReport r = exponent_report(ce);
  const auto e = exponent(r, "logit_rms", std::nullopt, ce_cfg.steps);
  o.check(e && *e >= kLogitExpMin, "ce logit_rms exponent " + (e ? fmt(*e) : "missing"));
  return o;
}

// 7. Learning-rate exponents for SGD with MSE.
Outcome mse_lr_exponents() {
  Outcome o;
  const ExponentReport r = exponent_report(sweep(recipe("mse_lr_sweep.json")));
  if (r.min_unstable_lr_fit) {
    const double e = r.min_unstable_lr_fit->exponent;
    o.check(std::abs(e - kMinUnstableTarget) <= kMinUnstableTol, "min unstable exponent " + fmt(e));
  } else {
    o.check(false, "min unstable fit missing");
  }
  if (r.optimal_lr_fit) {
    const double e = r.optimal_lr_fit->exponent;
    o.check(e >= kOptimalLo && e <= kOptimalHi, "optimal exponent " + fmt(e));
  } else {
    o.check(false, "optimal fit missing");
  }
  return o;
}

// 8. muP control: width-independent optimum and updates.
Outcome mup_control() {
  Outcome o;
  const ExperimentConfig c = recipe("mup_control.json");
  const SweepGrid g = sweep(c);
  const ExponentReport r = exponent_report(g);
  if (!r.optimal_lr_fit) {
    o.check(false, "optimal fit missing");
    return o;
  }
  o.check(std::abs(r.optimal_lr_fit->exponent) <= kMupOptimalTol,
          "optimal exponent " + fmt(r.optimal_lr_fit->exponent));
  // Update exponents at the base-width optimum.
  std::optional<double> base_opt;
  for (const auto& row : r.lr_table)
    if (row.width == g.widths.front()) base_opt = row.optimal_lr;
  std::size_t idx = 0;
  if (base_opt) {
    for (std::size_t i = 0; i < g.base_lrs.size(); ++i)
      if (std::abs(g.base_lrs[i] - *base_opt) < std::abs(g.base_lrs[idx] - *base_opt)) idx = i;
  }
  o.detail << "lr " << fmt(g.base_lrs[idx]) << "; ";
  for (std::int64_t t : c.probe_steps)
    for (std::size_t l = 0; l < c.depth; ++l)
      check_exponent(o, r, "effective_rms", l, t, idx, -kMupUpdateTol, kMupUpdateTol);
  return o;
}

// 9. Adam with a global 1/n rate.
Outcome adam_rule() {
  Outcome o;
  const ExperimentConfig c = recipe("adam_rule.json");
  const ExponentReport r = exponent_report(sweep(c));
  for (std::int64_t t : c.probe_steps) {
    check_exponent(o, r, "effective_rms", 0, t, 0, -std::numeric_limits<double>::infinity(),
                   kAdamInputMax);
    check_exponent(o, r, "effective_rms", 1, t, 0, -kAdamTol, kAdamTol);
    check_exponent(o, r, "effective_rms", 2, t, 0, -kAdamTol, kAdamTol);
  }
  return o;
}

// 10. One-step alignment exponents and rank-one readout exactness.
Outcome alignment() {
  Outcome o;
  const ExperimentConfig c = recipe("align_one_step.json");
  const ExponentReport r = exponent_report(sweep(c));
  for (std::size_t l : {1u, 2u})
    check_exponent(o, r, "align_rms_update", l, 1, 0, kAlignTarget - kAlignTol,
                   kAlignTarget + kAlignTol);

  const SplitDataset data = load_data(c.data);
  const Dataset one = data.train.slice(0, 1);
  double worst = 0.0;
  for (std::size_t n : c.widths) {
    const ParamSpec spec = resolve_preset(preset_settings(c, c.lrs.front()));
    Network net = Network::initialize(architecture(c, n, one.d_in(), one.d_out()), spec, 0);
    const ForwardTrace t = forward(net, one.inputs);
    const LossResult lr = loss_and_chi(train_options(c).loss, t.logits, one.targets);
    if (!sgd_step(net, backward(net, t, lr.chi), spec)) {
      o.check(false, "step failed at n=" + std::to_string(n));
      continue;
    }
    const auto a = alignment_op(net.delta(c.depth - 1), t.layer_input(c.depth - 1));
    worst = std::max(worst, a ? std::abs(*a - 1.0) : 1.0);
  }
  o.check(worst <= kAlignOpTol, "readout alpha-op |a-1| " + fmt(worst));
  return o;
}

// 11. Invariant and fuzz suites of the unit tests.
Outcome property_suites() {
  Outcome o;
  // Width-scaling experiments are covered by the criteria above.
  const std::string filter =
      "--gtest_filter=-Sweep.LargestRateAtLargestWidthIsUnstable:"
      "Trainer.MseWithConstantRateDivergesAtLargeWidth:"
      "Trainer.CrossEntropyStaysFiniteWhileLogitsGrow:"
      "Trainer.MseLogitUpdateGrowsAsWidthToOneMinusAlpha:"
      "Diagnose.HiddenUpdateAlignmentGrowsLinearlyInWidth:"
      "UvStability.WidthExponents:UvLimit.*";
  std::istringstream list(WIDTHLAB_PROPERTY_SUITES);
  std::string bin;
  while (std::getline(list, bin, ',')) {
    const std::string cmd = "\"" + bin + "\" " + filter + " --gtest_brief=1 > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    o.check(rc == 0, fs::path(bin).filename().string());
  }
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"widthlab acceptance criteria"};
  std::vector<int> only;
  std::string recipes = WIDTHLAB_RECIPES_DIR;
  std::string out;
  app.add_option("--only", only, "Criteria to run (1-11)");
  app.add_option("--recipes", recipes, "Recipe directory");
  app.add_option("--out", out, "Keep sweep results under this directory");
  CLI11_PARSE(app, argc, argv);
  recipes_dir = recipes;
  out_root = out;

  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness},
      {2, "rcc identity", rcc_identity},
      {3, "uv oracle equivalence", uv_oracle},
      {4, "uv max-stable-lr exponents", uv_stability},
      {5, "sp coordinate check", coordinate_check},
      {6, "mse/ce regime contrast", loss_regimes},
      {7, "mse learning-rate exponents", mse_lr_exponents},
      {8, "mup control", mup_control},
      {9, "adam rule", adam_rule},
      {10, "alignment exponents", alignment},
      {11, "property suites", property_suites},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!r.pass) ++failures;
    std::printf("%s criterion %d (%s) [%.1fs]: %s\n", r.pass ? "PASS" : "FAIL", c.id, c.name,
                secs, r.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
