#include "widthlab/dataset.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"

namespace widthlab {

namespace {
constexpr std::array<char, 8> kMagic = {'W', 'L', 'D', 'A', 'T', 'A', '0', '1'};

void write_string(std::ostream& os, const std::string& s) {
  detail::write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const char* what) {
  const std::uint32_t len = detail::read_u32(is, what);
  if (len > (1u << 20)) throw LoadError(std::string("implausible string length for ") + what);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw LoadError(std::string("truncated file while reading ") + what);
  return s;
}
}  // namespace

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (count == 0) throw ShapeError("Dataset::slice: empty slice");
  const std::size_t n = samples();
  Dataset out;
  out.inputs = Matrix(count, d_in());
  out.targets = Matrix(count, d_out());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src = (begin + i) % n;
    std::copy(inputs.row(src).begin(), inputs.row(src).end(), out.inputs.row(i).begin());
    std::copy(targets.row(src).begin(), targets.row(src).end(), out.targets.row(i).begin());
  }
  out.name = name;
  out.provenance = provenance;
  return out;
}

void validate(const Dataset& data) {
  if (data.inputs.empty() || data.targets.empty()) throw LoadError("dataset is empty");
  if (data.inputs.rows() != data.targets.rows())
    throw LoadError("dataset: input and target sample counts differ");
  if (!all_finite(data.inputs)) throw LoadError("dataset: non-finite input");
  for (std::size_t i = 0; i < data.targets.rows(); ++i) {
    double sum = 0.0;
    for (double v : data.targets.row(i)) {
      if (v != 0.0 && v != 1.0) throw LoadError("dataset: target row is not one-hot");
      sum += v;
    }
    if (sum != 1.0) throw LoadError("dataset: target row is not one-hot");
  }
}

std::size_t argmax_row(const Matrix& m, std::size_t row) {
  const auto r = m.row(row);
  std::size_t best = 0;
  for (std::size_t j = 1; j < r.size(); ++j)
    if (r[j] > r[best]) best = j;
  return best;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw LoadError("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  detail::write_u64(os, data.samples());
  detail::write_u64(os, data.d_in());
  detail::write_u64(os, data.d_out());
  write_string(os, data.name);
  write_string(os, data.provenance);
  for (double v : data.inputs.values()) detail::write_f64(os, v);
  for (double v : data.targets.values()) detail::write_f64(os, v);
  if (!os) throw LoadError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open " + path.string());
  try {
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) throw LoadError("bad dataset magic in " + path.string());
    const std::uint64_t n = detail::read_u64(is, "samples");
    const std::uint64_t d_in = detail::read_u64(is, "d_in");
    const std::uint64_t d_out = detail::read_u64(is, "d_out");
    if (n == 0 || d_in == 0 || d_out == 0) throw LoadError("dataset header has a zero dimension");
    Dataset data;
    data.name = read_string(is, "name");
    data.provenance = read_string(is, "provenance");
    data.inputs = Matrix(n, d_in);
    data.targets = Matrix(n, d_out);
    for (double& v : data.inputs.values()) v = detail::read_f64(is, "inputs");
    for (double& v : data.targets.values()) v = detail::read_f64(is, "targets");
    is.peek();
    if (!is.eof()) throw LoadError("trailing bytes after dataset payload");
    validate(data);
    return data;
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

Dataset BatchStream::next(std::size_t batch_size) {
  Dataset b = data_->slice(cursor_, batch_size);
  cursor_ = (cursor_ + batch_size) % data_->samples();
  return b;
}

}  // namespace widthlab
