#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_helpers.hpp"
#include "widthlab/config.hpp"
#include "widthlab/run_io.hpp"

using namespace widthlab;
using nlohmann::json;
using widthlab::testing::TempDir;

namespace fs = std::filesystem;

TEST(Config, DefaultsForEmptyObject) {
  const ExperimentConfig c = parse_experiment(json::object());
  EXPECT_EQ(c.depth, 3u);
  EXPECT_EQ(c.data.n_train, 1000u);
  EXPECT_EQ(c.data.n_test, 10000u);
  EXPECT_EQ(c.data.d_in, 100u);
  EXPECT_EQ(c.seeds.size(), 4u);
  EXPECT_EQ(c.base_width, 256.0);
  EXPECT_EQ(c.accuracy_floor, 0.54);
  EXPECT_EQ(c.adam.beta2, 0.999);
}

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
  EXPECT_THROW(parse_experiment({{"widht", {256}}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"data", {{"ntrain", 5}}}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"adam", {{"eps", 1e-8}}}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"lr_range", {{"lo", 0.1}, {"step", 2}}}}), ConfigError);
  EXPECT_THROW(parse_uv_experiment({{"sedes", 3}}), ConfigError);
}

TEST(Config, RejectsWrongTypesAndValues) {
  EXPECT_THROW(parse_experiment({{"steps", "ten"}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"widths", json::array()}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"preset", "mu"}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"preset", "ntp"}, {"optimizer", "adam"}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"lrs", {0.1}}, {"lr_range", {{"lo", 0.1}}}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"lrs", {-0.1}}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"objective", "f1"}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"depth", 1}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"data", {{"kind", "imagenet"}}}}), ConfigError);
  EXPECT_THROW(parse_experiment({{"activation", "sigma_gelu"}}), ConfigError);
  EXPECT_THROW(parse_experiment(json::array()), ConfigError);
  EXPECT_THROW(parse_uv_experiment({{"params", {"abc"}}}), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = parse_experiment({{"name", "x"},
                                         {"widths", {32, 64}},
                                         {"preset", "sp"},
                                         {"alpha", 0.5},
                                         {"lr_range", {{"lo", 0.01}, {"hi", 1.0}, {"per_decade", 4}}},
                                         {"probe_steps", {1, 5}}});
  const json j = to_json(c);
  EXPECT_EQ(to_json(parse_experiment(j)), j);
  EXPECT_EQ(lr_grid(c).size(), 9u);
  const UvExperimentConfig u = parse_uv_experiment({{"widths", {8, 16}}, {"steps", 20}});
  EXPECT_EQ(to_json(parse_uv_experiment(to_json(u))), to_json(u));
}

TEST(Config, DerivedSettings) {
  const ExperimentConfig c = parse_experiment(
      {{"preset", "mup"}, {"optimizer", "adam"}, {"loss", "mse"}, {"depth", 4}, {"steps", 7}});
  const PresetSettings s = preset_settings(c, 0.3);
  EXPECT_EQ(s.preset.kind, PresetKind::kMuP);
  EXPECT_EQ(s.optimizer, OptimizerKind::kAdam);
  EXPECT_EQ(s.base_lr, 0.3);
  EXPECT_EQ(architecture(c, 64, 10, 2).depth, 4u);
  EXPECT_EQ(train_options(c).loss, LossKind::kMse);
  EXPECT_EQ(train_options(c).steps, 7);
  EXPECT_EQ(lr_axis_exponent(c), 0.0);
}

TEST(Config, ReadJsonFileNamesThePath) {
  TempDir dir("cfg");
  write_text_atomic(dir.path() / "bad.json", "{ not json");
  try {
    read_json_file(dir.path() / "bad.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
  }
  EXPECT_THROW(read_json_file(dir.path() / "missing.json"), ConfigError);
}

TEST(Config, ShippedRecipesParse) {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(WIDTHLAB_RECIPES_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const json j = read_json_file(entry.path());
    if (j.contains("params")) EXPECT_NO_THROW(parse_uv_experiment(j)) << entry.path();
    else EXPECT_NO_THROW(parse_experiment(j)) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 8u);
}

TEST(RunIo, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) {
    EXPECT_EQ(*parse_optional(format_double(v)), v);
  }
  EXPECT_EQ(format_optional(std::nullopt), "NA");
  EXPECT_FALSE(parse_optional("NA").has_value());
}

TEST(RunIo, DiagnosticsCsvRoundTrip) {
  TempDir dir("diag");
  DiagnosticRecord r;
  r.step = 4;
  r.logit_rms = 1.5;
  r.delta_logit_rms = 0.25;
  for (std::size_t l = 0; l < 2; ++l) {
    LayerDiagnostics d;
    d.layer = l;
    d.rcc.effective_rms = 0.1 * static_cast<double>(l + 1);
    d.align_rms_update = 3.0;
    if (l == 0) d.sparsity = 0.5;
    r.layers.push_back(d);
  }
  write_diagnostics_csv(dir.path() / "d.csv", {r});
  const auto back = read_diagnostics_csv(dir.path() / "d.csv");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].step, 4);
  EXPECT_EQ(back[0].logit_rms, 1.5);
  ASSERT_EQ(back[0].layers.size(), 2u);
  EXPECT_EQ(back[0].layers[1].rcc.effective_rms, 0.2);
  EXPECT_EQ(back[0].layers[0].sparsity, 0.5);
  EXPECT_FALSE(back[0].layers[1].sparsity.has_value());
  EXPECT_FALSE(back[0].layers[0].align_op_update.has_value());
}
