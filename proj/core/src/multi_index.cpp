#include "widthlab/multi_index.hpp"

#include <cmath>
#include <string>

#include "widthlab/parameterization.hpp"
#include "widthlab/rng.hpp"

namespace widthlab {

int multi_index_teacher(std::span<const double> xi) {
  if (xi.size() < 2) throw ConfigError("multi-index teacher needs d_in >= 2");
  const double a = xi[0], b = xi[1];
  const double s = (a > 0.0 || b > 0.0) ? a - b : b - a;
  return s < 0.0 ? -1 : 1;
}

Dataset gen_multi_index_split(std::uint64_t seed, std::size_t n, std::size_t d_in,
                              std::uint64_t split) {
  if (d_in < 2) throw ConfigError("multi-index: d_in must be >= 2");
  if (n == 0) throw ConfigError("multi-index: sample count must be >= 1");
  Rng rng(seed, stream_id(streams::kData, split));
  Dataset out;
  out.inputs = Matrix(n, d_in);
  out.targets = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.inputs.row(i);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& v : row) {
        v = rng.normal();
        norm2 += v * v;
      }
    } while (!(norm2 > 0.0));
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : row) v *= inv;
    out.targets(i, multi_index_teacher(row) > 0 ? 0 : 1) = 1.0;
  }
  out.name = split == 0 ? "multi_index_train" : "multi_index_test";
  out.provenance = "multi_index seed=" + std::to_string(seed) + " split=" +
                   std::to_string(split) + " d_in=" + std::to_string(d_in);
  return out;
}

SplitDataset gen_multi_index(const MultiIndexConfig& cfg) {
  return {gen_multi_index_split(cfg.seed, cfg.n_train, cfg.d_in, 0),
          gen_multi_index_split(cfg.seed, cfg.n_test, cfg.d_in, 1)};
}

}  // namespace widthlab
