#include "widthlab/vision.hpp"

#include <fstream>
#include <iterator>
#include <string>

namespace widthlab {

namespace {

constexpr std::size_t kClasses = 10;
constexpr std::size_t kCifarPixels = 3072;

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

std::string fnv1a_hex(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return s;
}

void set_label(Dataset& d, std::size_t row, std::uint8_t label, const std::string& where) {
  if (label >= kClasses)
    throw LoadError(where + ": label out of range (" + std::to_string(label) + ")");
  d.targets(row, label) = 1.0;
}

}  // namespace

IdxTensor load_idx(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const std::string where = path.string();
  if (bytes.size() < 4) throw LoadError(where + ": truncated IDX header");
  if (bytes[0] != 0 || bytes[1] != 0) throw LoadError(where + ": bad IDX magic");
  if (bytes[2] != 0x08) throw LoadError(where + ": unsupported IDX element type (need ubyte)");
  const std::size_t rank = bytes[3];
  if (rank == 0) throw LoadError(where + ": IDX rank 0");
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) throw LoadError(where + ": truncated IDX header");
  IdxTensor t;
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    t.dims.push_back(be32(bytes, 4 + 4 * i));
    count *= t.dims.back();
  }
  if (bytes.size() - header != count) {
    throw LoadError(where + ": IDX payload has " + std::to_string(bytes.size() - header) +
                    " bytes, header implies " + std::to_string(count));
  }
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxTensor img = load_idx(images);
  const IdxTensor lab = load_idx(labels);
  if (img.dims.size() < 2) throw LoadError(images.string() + ": expected rank >= 2 images");
  if (lab.dims.size() != 1) throw LoadError(labels.string() + ": expected rank-1 labels");
  const std::size_t n = img.dims[0];
  if (lab.dims[0] != n) throw LoadError("image and label counts differ");
  if (n == 0) throw LoadError(images.string() + ": no samples");
  const std::size_t d = img.data.size() / n;
  Dataset out;
  out.inputs = Matrix(n, d);
  out.targets = Matrix(n, kClasses);
  for (std::size_t i = 0; i < img.data.size(); ++i) out.inputs.data()[i] = img.data[i] / 255.0;
  for (std::size_t i = 0; i < n; ++i) set_label(out, i, lab.data[i], labels.string());
  out.name = "mnist";
  out.provenance = "idx images=" + images.filename().string() +
                   " fnv1a=" + fnv1a_hex(img.data) + " labels=" + labels.filename().string() +
                   " fnv1a=" + fnv1a_hex(lab.data);
  return out;
}

Dataset load_cifar10_bin(const std::vector<std::filesystem::path>& batches) {
  if (batches.empty()) throw LoadError("cifar10: no batch files given");
  constexpr std::size_t record = 1 + kCifarPixels;
  std::vector<std::vector<std::uint8_t>> files;
  std::size_t n = 0;
  std::string provenance = "cifar10_bin";
  for (const auto& p : batches) {
    auto bytes = read_all(p);
    if (bytes.empty() || bytes.size() % record != 0) {
      throw LoadError(p.string() + ": size " + std::to_string(bytes.size()) +
                      " is not a multiple of the 3073-byte record");
    }
    n += bytes.size() / record;
    provenance += " " + p.filename().string() + " fnv1a=" + fnv1a_hex(bytes);
    files.push_back(std::move(bytes));
  }
  Dataset out;
  out.inputs = Matrix(n, kCifarPixels);
  out.targets = Matrix(n, kClasses);
  std::size_t row = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& bytes = files[f];
    for (std::size_t off = 0; off < bytes.size(); off += record, ++row) {
      set_label(out, row, bytes[off], batches[f].string());
      auto dst = out.inputs.row(row);
      for (std::size_t j = 0; j < kCifarPixels; ++j) dst[j] = bytes[off + 1 + j] / 255.0;
    }
  }
  out.name = "cifar10";
  out.provenance = provenance;
  return out;
}

}  // namespace widthlab
