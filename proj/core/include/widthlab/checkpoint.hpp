#pragma once

// Weight checkpoint format (all integers and floats little-endian):
//
//   offset  size  field
//   0       8     magic "WLCKPT01"
//   8       4     u32 depth (number of weight matrices)
//   12      4     u32 activation (0 relu, 1 identity, 2 sigma_gelu)
//   16      8     f64 activation sigma (0 unless sigma_gelu)
//   24      8     u64 d_in
//   32      8     u64 width
//   40      8     u64 d_out
//   48      4     u32 flags (bit 0: initial weights follow)
//   52      4     u32 reserved, 0
//   56      ...   current weights, layer by layer, row-major f64
//   ...     ...   initial weights in the same layout, if flagged

#include <filesystem>
#include <stdexcept>

#include "widthlab/network.hpp"

namespace widthlab {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     bool include_initial = true);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace widthlab
