#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "test_helpers.hpp"
#include "widthlab/exponent_report.hpp"
#include "widthlab/lr_analysis.hpp"
#include "widthlab/power_law.hpp"
#include "widthlab/run_io.hpp"
#include "widthlab/sweep.hpp"

using namespace widthlab;
using widthlab::testing::TempDir;

namespace fs = std::filesystem;

namespace {

CellAggregate cell(std::size_t width, std::size_t idx, double lr, double acc, double loss,
                   bool diverged = false) {
  CellAggregate c;
  c.width = width;
  c.lr_index = idx;
  c.base_lr = lr;
  c.lr = lr;
  c.mean_accuracy = acc;
  c.mean_loss = loss;
  c.diverged = diverged;
  c.seeds = 1;
  return c;
}

std::vector<CellAggregate> half_decade(const std::vector<double>& acc,
                                       const std::vector<bool>& diverged) {
  std::vector<CellAggregate> out;
  const std::vector<double> lrs = log_grid(1e-3, 1.0, 2);
  for (std::size_t i = 0; i < acc.size(); ++i)
    out.push_back(cell(256, i, lrs[i], acc[i], 1.0 - acc[i], diverged[i]));
  return out;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.name = "tiny";
  c.data.n_train = 128;
  c.data.n_test = 16;
  c.data.d_in = 10;
  c.widths = {16, 32};
  c.preset = "sp";
  c.alpha = 0.5;
  c.base_width = 16;
  c.lrs = {0.05, 0.5};
  c.steps = 6;
  c.batch_size = 16;
  c.probe_steps = {1, 6};
  c.probe_size = 16;
  c.seeds = {0, 1};
  c.min_fit_width = 16;
  return c;
}

std::string bytes(const fs::path& p) { return read_text(p); }

}  // namespace

TEST(MinUnstableLr, AllStableIsMissing) {
  const auto cells = half_decade({0.6, 0.7, 0.8, 0.8, 0.7, 0.6, 0.6},
                                 {false, false, false, false, false, false, false});
  EXPECT_FALSE(min_unstable_lr(cells, 256, {}).has_value());
}

TEST(MinUnstableLr, FirstDivergentRateAboveStableRegion) {
  const auto cells = half_decade({0.6, 0.7, 0.8, 0.0, 0.0, 0.0, 0.0},
                                 {false, false, false, true, true, true, true});
  const double lr = *min_unstable_lr(cells, 256, {});
  EXPECT_NEAR(lr, std::sqrt(10.0) * 0.01, 1e-12);
  EXPECT_FALSE(min_unstable_lr(cells, 512, {}).has_value());
}

TEST(MinUnstableLr, StricterFloorNeverRaisesRate) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Rng rng(s, streams::kTest);
    std::vector<double> acc;
    std::vector<bool> div;
    for (int i = 0; i < 7; ++i) {
      acc.push_back(rng.uniform());
      div.push_back(rng.uniform() < 0.15);
    }
    const auto cells = half_decade(acc, div);
    const double lo = rng.uniform(), hi = lo + 0.5 * rng.uniform();
    for (bool from_opt : {false, true}) {
      InstabilityCriterion loose{lo, from_opt, Objective::kAccuracy};
      InstabilityCriterion strict{hi, from_opt, Objective::kAccuracy};
      const auto a = min_unstable_lr(cells, 256, loose);
      const auto b = min_unstable_lr(cells, 256, strict);
      if (a) {
        ASSERT_TRUE(b.has_value());
        EXPECT_LE(*b, *a);
      }
    }
  }
}

TEST(OptimalLr, Examples) {
  const std::vector<CellAggregate> one{cell(64, 0, 0.1, 0.7, 0.3)};
  EXPECT_EQ(*optimal_lr(one, 64, Objective::kAccuracy), 0.1);
  const auto peaked = half_decade({0.5, 0.6, 0.8, 0.7, 0.6, 0.5, 0.5},
                                  {false, false, false, false, false, false, false});
  EXPECT_NEAR(*optimal_lr(peaked, 256, Objective::kAccuracy), 0.01, 1e-12);
  EXPECT_NEAR(*optimal_lr(peaked, 256, Objective::kLoss), 0.01, 1e-12);
  const auto tied = half_decade({0.8, 0.8, 0.1, 0.1, 0.1, 0.1, 0.1},
                                {false, false, false, false, false, false, false});
  EXPECT_NEAR(*optimal_lr(tied, 256, Objective::kAccuracy), 1e-3, 1e-15);
  const std::vector<CellAggregate> dead{cell(64, 0, 0.1, 0.9, 0.1, true)};
  EXPECT_FALSE(optimal_lr(dead, 64, Objective::kAccuracy).has_value());
}

TEST(OptimalLr, InvariantUnderMonotoneRescaling) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Rng rng(s, streams::kTest);
    std::vector<double> acc;
    std::vector<bool> div;
    for (int i = 0; i < 7; ++i) {
      acc.push_back(rng.uniform());
      div.push_back(rng.uniform() < 0.2);
    }
    auto cells = half_decade(acc, div);
    const auto before = optimal_lr(cells, 256, Objective::kAccuracy);
    for (auto& c : cells) c.mean_accuracy = std::exp(3.0 * c.mean_accuracy) - 7.0;
    EXPECT_EQ(optimal_lr(cells, 256, Objective::kAccuracy), before);
  }
}

TEST(PowerLaw, WidthRelabelingKeepsExponent) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Rng rng(s, streams::kTest);
    std::vector<ScalingPoint> pts, scaled;
    const double k = 0.1 + 10.0 * rng.uniform();
    for (double w : {256.0, 512.0, 1024.0, 2048.0}) {
      const double v = std::exp(rng.normal());
      pts.push_back({w, v});
      scaled.push_back({k * w, v});
    }
    EXPECT_NEAR(power_law_fit(pts).exponent, power_law_fit(scaled).exponent, 1e-9);
  }
}

TEST(Sweep, ReportedRateFollowsAxisConvention) {
  ExperimentConfig c = small_config();
  EXPECT_DOUBLE_EQ(reported_lr(c, 0.4, 64), 0.2);
  c.preset = "mup";
  EXPECT_DOUBLE_EQ(reported_lr(c, 0.4, 64), 0.4);
}

TEST(Sweep, SingleCellEqualsDirectTraining) {
  ExperimentConfig c = small_config();
  c.widths = {16};
  c.lrs = {0.1};
  c.seeds = {3};
  const SweepGrid grid = run_sweep(c);
  ASSERT_EQ(grid.cells.size(), 1u);

  const SplitDataset data = load_data(c.data);
  const ParamSpec spec = resolve_preset(preset_settings(c, 0.1));
  Network net = Network::initialize(architecture(c, 16, data.train.d_in(), data.train.d_out()),
                                    spec, 3);
  OptimizerState opt = OptimizerState::sgd();
  const RunMetrics m = train(net, opt, spec, data.train, train_options(c));
  const Evaluation ev = evaluate(net, data.train, LossKind::kCrossEntropy);
  EXPECT_EQ(grid.cells[0].final_loss, ev.loss);
  EXPECT_EQ(grid.cells[0].final_accuracy, ev.accuracy);
  EXPECT_EQ(grid.cells[0].probes.size(), m.probes.size());
}

TEST(Sweep, DeterministicAndResumable) {
  TempDir a("sweep_a"), b("sweep_b");
  const ExperimentConfig c = small_config();
  SweepOptions oa;
  oa.out_dir = a.path();
  run_sweep(c, oa);
  write_report(a.path());

  SweepOptions ob;
  ob.out_dir = b.path();
  ob.jobs = 3;
  run_sweep(c, ob);
  for (const char* f : {"grid.csv", "manifest.json"})
    EXPECT_EQ(bytes(a.path() / f), bytes(b.path() / f)) << f;

  fs::remove(b.path() / "cells" / cell_id(32, 1, 1) / "summary.json");
  fs::remove(b.path() / "grid.csv");
  std::size_t reused = 0;
  ob.on_cell = [&](const CellResult&, bool r) { reused += r ? 1 : 0; };
  run_sweep(c, ob);
  EXPECT_EQ(reused, 7u);
  write_report(b.path());
  for (const char* f : {"grid.csv", "report.json", "report.md", "coordcheck.csv"})
    EXPECT_EQ(bytes(a.path() / f), bytes(b.path() / f)) << f;
}

TEST(Sweep, ReportIsPureFunctionOfStoredResults) {
  TempDir dir("report");
  SweepOptions o;
  o.out_dir = dir.path();
  const SweepGrid grid = run_sweep(small_config(), o);
  const ExponentReport direct = exponent_report(grid);
  write_report(dir.path());
  const std::string first = bytes(dir.path() / "report.json");
  write_report(dir.path());
  EXPECT_EQ(bytes(dir.path() / "report.json"), first);
  EXPECT_EQ(to_json(exponent_report(load_sweep(dir.path()))).dump(), to_json(direct).dump());
}

TEST(Sweep, LargestRateAtLargestWidthIsUnstable) {
  ExperimentConfig c;
  c.name = "grid";
  c.data.n_train = 1000;
  c.data.n_test = 16;
  c.widths = {64, 128, 256, 512};
  c.alpha = 0.0;
  c.lr_range = LrRange{0.01, 50.0, 2};
  c.steps = 30;
  c.seeds = {0};
  c.min_fit_width = 64;
  const SweepGrid grid = run_sweep(c);
  EXPECT_EQ(grid.base_lrs.size(), 8u);
  const auto cells = aggregate_cells(grid);
  const auto lr = min_unstable_lr(cells, 512, instability_criterion(c));
  ASSERT_TRUE(lr.has_value());
  EXPECT_LE(*lr, grid.base_lrs.back());
}

TEST(ExponentReport, RecoversSyntheticPowerLaws) {
  SweepGrid grid;
  grid.config = small_config();
  grid.config.min_fit_width = 1;
  grid.widths = {128, 256, 512, 1024};
  grid.base_lrs = {0.1};
  grid.seeds = {0};
  const double exps[] = {-1.0, 0.0, 0.5};
  for (std::size_t w : grid.widths) {
    CellResult r;
    r.width = w;
    r.seed = 0;
    r.base_lr = r.lr = 0.1;
    r.final_accuracy = 1.0 - 1.0 / static_cast<double>(w);
    DiagnosticRecord d;
    d.step = 5;
    d.logit_rms = 3.0 * std::pow(static_cast<double>(w), 0.25);
    for (std::size_t l = 0; l < 3; ++l) {
      LayerDiagnostics ld;
      ld.layer = l;
      ld.rcc.effective_rms = 2.0 * std::pow(static_cast<double>(w), exps[l]);
      ld.align_rms_update = std::pow(static_cast<double>(w), 1.0);
      d.layers.push_back(ld);
    }
    r.probes.push_back(d);
    grid.cells.push_back(r);
  }
  const ExponentReport rep = exponent_report(grid);
  for (std::size_t l = 0; l < 3; ++l) {
    const ExponentEntry* e = rep.find("effective_rms", l, 5, 0);
    ASSERT_NE(e, nullptr);
    EXPECT_NEAR(e->fit->exponent, exps[l], 1e-12);
    EXPECT_EQ(e->fit->points, 4u);
    EXPECT_NEAR(rep.find("align_rms_update", l, 5, 0)->fit->exponent, 1.0, 1e-12);
    EXPECT_EQ(rep.find("align_op_update", l, 5, 0)->excluded, 4u);
  }
  EXPECT_NEAR(rep.find("logit_rms", std::nullopt, 5, 0)->fit->exponent, 0.25, 1e-12);
  EXPECT_NEAR(rep.optimal_lr_fit->exponent, 0.0, 1e-12);
  EXPECT_FALSE(rep.min_unstable_lr_fit.has_value());
}

TEST(ExponentReport, DivergedSeedsAndSmallWidthsAreExcluded) {
  SweepGrid grid;
  grid.config = small_config();
  grid.config.min_fit_width = 256;
  grid.widths = {128, 256, 512, 1024};
  grid.base_lrs = {0.1};
  grid.seeds = {0};
  for (std::size_t w : grid.widths) {
    CellResult r;
    r.width = w;
    r.base_lr = r.lr = 0.1;
    r.diverged = w == 1024;
    DiagnosticRecord d;
    d.step = 1;
    d.logit_rms = static_cast<double>(w);
    r.probes.push_back(d);
    grid.cells.push_back(r);
  }
  const ExponentReport rep = exponent_report(grid);
  const ExponentEntry* e = rep.find("logit_rms", std::nullopt, 1, 0);
  EXPECT_EQ(e->excluded, 2u);
  EXPECT_EQ(e->fit->points, 2u);
  EXPECT_NEAR(e->fit->exponent, 1.0, 1e-12);
  ASSERT_TRUE(rep.min_unstable_lr_fit.has_value() || rep.lr_table[3].min_unstable_lr.has_value());
  EXPECT_NEAR(*rep.lr_table[3].min_unstable_lr, 0.1, 1e-15);
}
