#pragma once

// Loaders for the IDX (MNIST) and CIFAR-10 binary formats.
//
// IDX: 2 zero bytes, type code (0x08 = unsigned byte), rank, then rank
// big-endian u32 dimensions, then the payload. CIFAR-10: 3073-byte records,
// one label byte (0..9) followed by 3072 channel-major pixel bytes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "widthlab/dataset.hpp"

namespace widthlab {

struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

IdxTensor load_idx(const std::filesystem::path& path);

/// Images scaled by 1/255 and flattened; labels one-hot over 10 classes.
Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels);

Dataset load_cifar10_bin(const std::vector<std::filesystem::path>& batches);

}  // namespace widthlab
