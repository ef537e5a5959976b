#pragma once

// Counter-based pseudo-random numbers.
//
// A generator is identified by (seed, stream). Draw i is
//   splitmix64(splitmix64(key_lo + i * golden) ^ key_hi)
// where (key_lo, key_hi) are splitmix64 digests of seed and stream. Distinct
// streams never share a counter sequence, so giving every (run, layer,
// purpose) its own stream id keeps training draws fixed when diagnostics
// start consuming randomness.
//
// Normals use the Box-Muller transform; both outputs of a pair are used.

#include <cstdint>

#include "widthlab/matrix.hpp"

namespace widthlab {

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal.
  double normal() noexcept;

  /// Independent generator sharing this seed, on a derived stream.
  Rng substream(std::uint64_t id) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_lo_;
  std::uint64_t key_hi_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Stable stream id for a (purpose, index) pair.
std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t index) noexcept;

namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kData = 2;
inline constexpr std::uint64_t kProbe = 3;
inline constexpr std::uint64_t kSpectral = 4;
inline constexpr std::uint64_t kUvInit = 5;
inline constexpr std::uint64_t kUvData = 6;
inline constexpr std::uint64_t kTest = 99;
}  // namespace streams

/// rows x cols matrix with i.i.d. N(0, variance) entries.
Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double variance);

}  // namespace widthlab
