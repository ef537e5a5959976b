#pragma once

// In-memory labelled datasets and the on-disk dataset format.
//
// Dataset file (little-endian):
//   0   8   magic "WLDATA01"
//   8   8   u64 samples
//   16  8   u64 d_in
//   24  8   u64 d_out
//   32  4   u32 name length, then that many UTF-8 bytes
//   ..  4   u32 provenance length, then bytes
//   ..      inputs  (samples x d_in, row-major f64)
//   ..      targets (samples x d_out, row-major f64)

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "widthlab/matrix.hpp"

namespace widthlab {

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Matrix inputs;   // samples x d_in
  Matrix targets;  // samples x d_out, one-hot rows
  std::string name;
  std::string provenance;

  std::size_t samples() const noexcept { return inputs.rows(); }
  std::size_t d_in() const noexcept { return inputs.cols(); }
  std::size_t d_out() const noexcept { return targets.cols(); }

  /// Rows [begin, begin + count) wrapping around the end.
  Dataset slice(std::size_t begin, std::size_t count) const;
};

/// One-hot rows, finite inputs, matching sample counts.
void validate(const Dataset& data);

/// Index of the largest entry of each row; ties go to the lowest index.
std::size_t argmax_row(const Matrix& m, std::size_t row);

void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

/// Hands out consecutive batches in draw order, wrapping at the end.
class BatchStream {
 public:
  explicit BatchStream(const Dataset& data) : data_(&data) {}
  Dataset next(std::size_t batch_size);
  std::size_t position() const noexcept { return cursor_; }

 private:
  const Dataset* data_;
  std::size_t cursor_ = 0;
};

}  // namespace widthlab
