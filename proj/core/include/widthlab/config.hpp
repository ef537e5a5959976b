#pragma once

// Experiment configuration and its strict JSON schema. Unknown keys at any
// level are rejected.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "widthlab/dataset.hpp"
#include "widthlab/loss.hpp"
#include "widthlab/multi_index.hpp"
#include "widthlab/network.hpp"
#include "widthlab/optimizer.hpp"
#include "widthlab/parameterization.hpp"
#include "widthlab/trainer.hpp"

namespace widthlab {

struct DataSpec {
  /// "multi_index", "mnist", "cifar10" or "file" (a persisted dataset).
  std::string kind = "multi_index";
  std::uint64_t seed = 0;
  std::size_t n_train = 1000;
  std::size_t n_test = 10000;
  std::size_t d_in = 100;
  std::string images;
  std::string labels;
  std::vector<std::string> batches;
  std::string path;
};

struct LrRange {
  double lo = 1e-4;
  double hi = 1.0;
  std::size_t per_decade = 2;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DataSpec data;

  std::size_t depth = 3;
  std::vector<std::size_t> widths{256};
  std::string activation = "relu";
  double activation_sigma = 0.0;

  std::string preset = "sp";
  double alpha = 0.0;
  double c_phi = 2.0;
  double base_width = 256.0;

  std::string loss = "ce";
  std::string optimizer = "sgd";
  AdamSettings adam;

  /// Base learning rates eta; the rate applied at width n follows the
  /// preset's exponents relative to base_width. Either list or range.
  std::vector<double> lrs;
  std::optional<LrRange> lr_range;

  std::int64_t steps = 100;
  std::size_t batch_size = 64;
  std::vector<std::int64_t> probe_steps;
  std::size_t probe_size = 64;
  std::int64_t log_every = 1;
  bool op_norms = false;
  /// Samples used for the final loss/accuracy; 0 means the whole training set.
  std::size_t eval_samples = 0;

  std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  double divergence_loss = 50.0;
  /// Instability floor on final accuracy for softmax losses; negative disables.
  double accuracy_floor = 0.54;
  /// "accuracy" or "loss".
  std::string objective = "accuracy";
  std::size_t min_fit_width = 256;
  std::string output = "";
};

ExperimentConfig parse_experiment(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
/// Semantic checks beyond the schema (names resolve, grids non-empty, ...).
void validate(const ExperimentConfig& c);

/// Resolved learning-rate grid (list or range).
std::vector<double> lr_grid(const ExperimentConfig& c);

PresetSettings preset_settings(const ExperimentConfig& c, double base_lr);
Architecture architecture(const ExperimentConfig& c, std::size_t width, std::size_t d_in,
                          std::size_t d_out);
TrainOptions train_options(const ExperimentConfig& c);
/// Width exponent of the reported learning rate: alpha for SP, else 0.
double lr_axis_exponent(const ExperimentConfig& c);

/// Loads or generates the training set (and the test set when applicable).
SplitDataset load_data(const DataSpec& spec);

struct UvExperimentConfig {
  std::string name = "uvmodel";
  std::vector<std::string> params{"sp", "mup", "ntp"};
  std::vector<std::size_t> widths{64, 256, 1024, 4096, 16384};
  LrRange eta_range{1e-6, 10.0, 40};
  std::size_t steps = 1000;
  std::size_t seeds = 4;
  std::uint64_t seed = 0;
  double x = 1.0;
  double y = 1.0;
  double chi_growth_limit = 10.0;

  std::vector<std::size_t> limit_widths{64, 256, 1024, 4096, 16384, 65536};
  std::size_t limit_steps = 10;
  std::size_t limit_seeds = 100;
  std::vector<double> limit_etas{0.001, 0.01};
  std::string output = "";
};

UvExperimentConfig parse_uv_experiment(const nlohmann::json& j);
nlohmann::json to_json(const UvExperimentConfig& c);

/// Reads a JSON file; errors name the path.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace widthlab
