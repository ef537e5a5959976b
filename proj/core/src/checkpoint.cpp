#include "widthlab/checkpoint.hpp"

#include <array>
#include <fstream>

#include "binary_io.hpp"

namespace widthlab {

namespace {

constexpr std::array<char, 8> kMagic = {'W', 'L', 'C', 'K', 'P', 'T', '0', '1'};

void write_matrices(std::ostream& os, const std::vector<Matrix>& ms) {
  for (const auto& m : ms)
    for (double v : m.values()) detail::write_f64(os, v);
}

std::vector<Matrix> read_matrices(std::istream& is, const Architecture& arch) {
  std::vector<Matrix> ms;
  for (std::size_t l = 0; l < arch.depth; ++l) {
    Matrix m(arch.fan_out(l), arch.fan_in(l));
    for (double& v : m.values()) v = detail::read_f64(is, "weights");
    ms.push_back(std::move(m));
  }
  return ms;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     bool include_initial) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open " + path.string() + " for writing");
  const Architecture& a = net.arch();
  os.write(kMagic.data(), kMagic.size());
  detail::write_u32(os, static_cast<std::uint32_t>(a.depth));
  detail::write_u32(os, static_cast<std::uint32_t>(a.activation.kind));
  detail::write_f64(os, a.activation.sigma);
  detail::write_u64(os, a.d_in);
  detail::write_u64(os, a.width);
  detail::write_u64(os, a.d_out);
  detail::write_u32(os, include_initial ? 1u : 0u);
  detail::write_u32(os, 0u);
  write_matrices(os, net.weights());
  if (include_initial) write_matrices(os, net.initial_weights());
  if (!os) throw CheckpointError("write failed for " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path.string());
  try {
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) throw CheckpointError("bad checkpoint magic in " + path.string());
    Architecture a;
    a.depth = detail::read_u32(is, "depth");
    const std::uint32_t act = detail::read_u32(is, "activation");
    const double sigma = detail::read_f64(is, "sigma");
    if (act > 2) throw CheckpointError("unknown activation code in " + path.string());
    a.activation = {static_cast<ActivationKind>(act), sigma};
    a.d_in = detail::read_u64(is, "d_in");
    a.width = detail::read_u64(is, "width");
    a.d_out = detail::read_u64(is, "d_out");
    const std::uint32_t flags = detail::read_u32(is, "flags");
    (void)detail::read_u32(is, "reserved");
    validate(a);
    auto weights = read_matrices(is, a);
    if (flags & 1u) {
      auto initial = read_matrices(is, a);
      return Network(a, std::move(weights), std::move(initial));
    }
    return Network(a, std::move(weights));
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace widthlab
