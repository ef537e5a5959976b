#include "widthlab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace widthlab {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t index) noexcept {
  return splitmix64(purpose * 0x100000001B3ULL ^ splitmix64(index));
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed),
      stream_(stream),
      key_lo_(splitmix64(seed ^ 0xA0761D6478BD642FULL)),
      key_hi_(splitmix64(stream ^ 0xE7037ED1A0B428DBULL) ^ splitmix64(seed)) {}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t c = counter_++;
  return splitmix64(splitmix64(key_lo_ + c * kGolden) ^ key_hi_);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Rng Rng::substream(std::uint64_t id) const noexcept {
  return Rng(seed_, splitmix64(stream_ ^ splitmix64(id + 0x632BE59BD9B4E019ULL)));
}

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double variance) {
  if (!(variance >= 0.0)) throw std::invalid_argument("gaussian_matrix: variance must be >= 0");
  Matrix m(rows, cols);
  if (variance == 0.0) return m;
  const double sd = std::sqrt(variance);
  for (double& v : m.values()) v = sd * rng.normal();
  return m;
}

}  // namespace widthlab
