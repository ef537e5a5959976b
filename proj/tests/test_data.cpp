#include <cmath>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "test_helpers.hpp"
#include "widthlab/dataset.hpp"
#include "widthlab/multi_index.hpp"
#include "widthlab/parameterization.hpp"
#include "widthlab/vision.hpp"

using namespace widthlab;
using widthlab::testing::TempDir;

namespace fs = std::filesystem;

namespace {

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream os(p, std::ios::binary);
  os.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::vector<std::uint8_t> idx_header(std::vector<std::uint32_t> dims) {
  std::vector<std::uint8_t> b{0, 0, 0x08, static_cast<std::uint8_t>(dims.size())};
  for (std::uint32_t d : dims)
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(d >> s));
  return b;
}

int label_of(const Dataset& d, std::size_t i) { return argmax_row(d.targets, i) == 0 ? 1 : -1; }

}  // namespace

TEST(Teacher, UpperRegionCompares) {
  std::vector<double> xi(5, 0.0);
  xi[0] = 0.6;
  xi[1] = -0.2;
  EXPECT_EQ(multi_index_teacher(xi), 1);
  xi[0] = 0.1;
  xi[1] = 0.4;
  EXPECT_EQ(multi_index_teacher(xi), -1);
}

TEST(Teacher, LowerQuadrantIsMirrored) {
  std::vector<double> xi{-0.6, -0.2, 0.3};
  EXPECT_EQ(multi_index_teacher(xi), 1);
  xi = {-0.1, -0.5, 0.3};
  EXPECT_EQ(multi_index_teacher(xi), -1);
}

TEST(Teacher, TieMapsToPlusOne) {
  std::vector<double> xi{0.3, 0.3, 0.0};
  EXPECT_EQ(multi_index_teacher(xi), 1);
}

TEST(Teacher, NegationMirrorsQuadrants) {
  Rng rng(3, streams::kTest);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> xi{rng.normal(), rng.normal(), rng.normal()};
    if (xi[0] == xi[1]) continue;
    const std::vector<double> neg{-xi[0], -xi[1], xi[2]};
    const bool same_sign = (xi[0] > 0.0) == (xi[1] > 0.0);
    EXPECT_EQ(multi_index_teacher(neg), same_sign ? multi_index_teacher(xi)
                                                  : -multi_index_teacher(xi));
  }
}

TEST(MultiIndex, UnitNormCovariatesAndOneHotTargets) {
  const SplitDataset s = gen_multi_index({7, 300, 200, 50});
  EXPECT_EQ(s.train.samples(), 300u);
  EXPECT_EQ(s.test.samples(), 200u);
  EXPECT_EQ(s.train.d_in(), 50u);
  EXPECT_EQ(s.train.d_out(), 2u);
  for (const Dataset* d : {&s.train, &s.test}) {
    validate(*d);
    for (std::size_t i = 0; i < d->samples(); ++i) {
      EXPECT_NEAR(std::sqrt(dot(d->inputs.row(i), d->inputs.row(i))), 1.0, 1e-12);
      EXPECT_EQ(label_of(*d, i), multi_index_teacher(d->inputs.row(i)));
    }
  }
  EXPECT_NE(s.train.inputs.row(0)[0], s.test.inputs.row(0)[0]);
}

TEST(MultiIndex, DeterministicInSeed) {
  const SplitDataset a = gen_multi_index({11, 50, 10, 20});
  const SplitDataset b = gen_multi_index({11, 50, 10, 20});
  const SplitDataset c = gen_multi_index({12, 50, 10, 20});
  EXPECT_EQ(a.train.inputs, b.train.inputs);
  EXPECT_EQ(a.test.targets, b.test.targets);
  EXPECT_NE(a.train.inputs, c.train.inputs);
}

TEST(MultiIndex, ClassesAreBalanced) {
  const Dataset d = gen_multi_index_split(0, 10000, 100, 0);
  double plus = 0.0;
  for (std::size_t i = 0; i < d.samples(); ++i) plus += d.targets(i, 0);
  EXPECT_GE(plus / 1e4, 0.45);
  EXPECT_LE(plus / 1e4, 0.55);
}

TEST(MultiIndex, RejectsTooFewDimensions) {
  EXPECT_THROW(gen_multi_index({0, 10, 10, 1}), ConfigError);
}

TEST(Dataset, SliceWrapsAround) {
  const Dataset d = gen_multi_index_split(1, 10, 4, 0);
  const Dataset s = d.slice(8, 4);
  ASSERT_EQ(s.samples(), 4u);
  EXPECT_EQ(s.inputs.row(0)[0], d.inputs.row(8)[0]);
  EXPECT_EQ(s.inputs.row(2)[1], d.inputs.row(0)[1]);
  EXPECT_EQ(s.targets.row(3)[0], d.targets.row(1)[0]);
  BatchStream stream(d);
  stream.next(6);
  const Dataset b = stream.next(6);
  EXPECT_EQ(b.inputs.row(4)[0], d.inputs.row(0)[0]);
  EXPECT_EQ(stream.position(), 2u);
}

TEST(Dataset, FileRoundTrip) {
  TempDir dir("dataset");
  Dataset d = gen_multi_index_split(2, 33, 7, 1);
  d.name = "mi";
  d.provenance = "seed=2";
  save_dataset(dir.path() / "d.bin", d);
  const Dataset back = load_dataset(dir.path() / "d.bin");
  EXPECT_EQ(back.inputs, d.inputs);
  EXPECT_EQ(back.targets, d.targets);
  EXPECT_EQ(back.name, "mi");
  EXPECT_EQ(back.provenance, "seed=2");
  fs::resize_file(dir.path() / "d.bin", fs::file_size(dir.path() / "d.bin") - 8);
  EXPECT_THROW(load_dataset(dir.path() / "d.bin"), LoadError);
}

TEST(Dataset, RejectsNonOneHotTargets) {
  Dataset d = gen_multi_index_split(2, 5, 3, 0);
  d.targets(2, 0) = 0.5;
  EXPECT_THROW(validate(d), LoadError);
}

TEST(Idx, TwoImageFixture) {
  TempDir dir("idx");
  std::vector<std::uint8_t> img = idx_header({2, 2, 3});
  for (std::uint8_t v : {0, 51, 102, 153, 204, 255, 255, 0, 1, 2, 3, 4}) img.push_back(v);
  std::vector<std::uint8_t> lab = idx_header({2});
  lab.push_back(7);
  lab.push_back(0);
  write_bytes(dir.path() / "img", img);
  write_bytes(dir.path() / "lab", lab);

  const IdxTensor t = load_idx(dir.path() / "img");
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{2, 2, 3}));
  EXPECT_EQ(t.data.size(), 12u);
  const Dataset d = load_mnist(dir.path() / "img", dir.path() / "lab");
  ASSERT_EQ(d.samples(), 2u);
  EXPECT_EQ(d.d_in(), 6u);
  EXPECT_EQ(d.d_out(), 10u);
  EXPECT_DOUBLE_EQ(d.inputs(0, 1), 0.2);
  EXPECT_EQ(d.inputs(0, 5), 1.0);
  EXPECT_EQ(d.inputs(1, 0), 1.0);
  EXPECT_EQ(d.targets(0, 7), 1.0);
  EXPECT_EQ(d.targets(1, 0), 1.0);
}

TEST(Idx, RejectsMalformedFiles) {
  TempDir dir("idx_bad");
  std::vector<std::uint8_t> img = idx_header({2, 2, 2});
  img.resize(img.size() + 7);
  write_bytes(dir.path() / "short", img);
  EXPECT_THROW(load_idx(dir.path() / "short"), LoadError);
  std::vector<std::uint8_t> magic = idx_header({1});
  magic[0] = 1;
  magic.push_back(0);
  write_bytes(dir.path() / "magic", magic);
  EXPECT_THROW(load_idx(dir.path() / "magic"), LoadError);

  std::vector<std::uint8_t> good = idx_header({1, 1, 1});
  good.push_back(9);
  std::vector<std::uint8_t> lab = idx_header({1});
  lab.push_back(10);
  write_bytes(dir.path() / "img", good);
  write_bytes(dir.path() / "lab", lab);
  try {
    load_mnist(dir.path() / "img", dir.path() / "lab");
    FAIL() << "expected a load error";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("label out of range"), std::string::npos);
  }
}

TEST(Cifar, RecordsRoundTrip) {
  TempDir dir("cifar");
  std::vector<std::uint8_t> bytes;
  for (std::uint8_t label : {3, 9}) {
    bytes.push_back(label);
    for (int i = 0; i < 3072; ++i) bytes.push_back(static_cast<std::uint8_t>((i + label) % 256));
  }
  write_bytes(dir.path() / "b1.bin", bytes);
  write_bytes(dir.path() / "b2.bin", std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 3073));
  const Dataset d = load_cifar10_bin({dir.path() / "b1.bin", dir.path() / "b2.bin"});
  ASSERT_EQ(d.samples(), 3u);
  EXPECT_EQ(d.d_in(), 3072u);
  EXPECT_EQ(d.targets(0, 3), 1.0);
  EXPECT_EQ(d.targets(1, 9), 1.0);
  EXPECT_EQ(d.targets(2, 3), 1.0);
  EXPECT_DOUBLE_EQ(d.inputs(1, 246), 1.0);
  EXPECT_DOUBLE_EQ(d.inputs(0, 2), 5.0 / 255.0);

  bytes[3073] = 10;
  write_bytes(dir.path() / "bad.bin", bytes);
  EXPECT_THROW(load_cifar10_bin({dir.path() / "bad.bin"}), LoadError);
  bytes.pop_back();
  write_bytes(dir.path() / "trunc.bin", bytes);
  EXPECT_THROW(load_cifar10_bin({dir.path() / "trunc.bin"}), LoadError);
}
