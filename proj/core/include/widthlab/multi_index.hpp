#pragma once

// Binary multi-index teacher data. Covariates are uniform on the unit
// sphere in d_in dimensions; the label depends only on (xi_1, xi_2):
//   sign(xi_1 - xi_2)  if xi_1 > 0 or xi_2 > 0
//   sign(xi_2 - xi_1)  otherwise
// with a zero teacher output mapped to +1. Label +1 is class 0, -1 is class 1.

#include <cstddef>
#include <cstdint>
#include <span>

#include "widthlab/dataset.hpp"

namespace widthlab {

struct MultiIndexConfig {
  std::uint64_t seed = 0;
  std::size_t n_train = 1000;
  std::size_t n_test = 10000;
  std::size_t d_in = 100;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
};

/// +1 or -1.
int multi_index_teacher(std::span<const double> xi);

/// Train and test draw from separate streams of the same seed.
SplitDataset gen_multi_index(const MultiIndexConfig& cfg);

/// n samples from stream stream_id(kData, split).
Dataset gen_multi_index_split(std::uint64_t seed, std::size_t n, std::size_t d_in,
                              std::uint64_t split);

}  // namespace widthlab
