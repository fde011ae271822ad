#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "rirforge/nn/checkpoint.hpp"
#include "rirforge/nn/optimizer.hpp"
#include "test_support.hpp"

namespace rirforge::nn {
namespace {

using rirforge::testing::expect_kind;
using rirforge::testing::scratch_dir;

ParameterSet single(std::vector<double> values) {
  ParameterSet p;
  p.names = {"w"};
  const std::size_t n = values.size();
  p.tensors = {Tensor({n}, std::move(values))};
  return p;
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  ParameterSet w = single({1.0, -2.0, 0.5});
  AdamState state;
  AdamConfig cfg;
  cfg.clip_norm = 0.0;
  adam_step(w, single({0.3, -0.01, 0.0}), state, cfg);
  // With bias correction the first update is lr * g / (|g| + eps').
  EXPECT_NEAR(w.tensors[0].data[0], 1.0 - 1e-4, 1e-11);
  EXPECT_NEAR(w.tensors[0].data[1], -2.0 + 1e-4, 1e-9);
  EXPECT_EQ(w.tensors[0].data[2], 0.5);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, MatchesScalarRecurrence) {
  ParameterSet w = single({0.7});
  AdamState state;
  AdamConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.clip_norm = 0.0;
  double x = 0.7, m = 0.0, v = 0.0;
  for (int t = 1; t <= 20; ++t) {
    const double g = 2.0 * x - 0.3 * std::sin(t);
    adam_step(w, single({g}), state, cfg);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 1e-2 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(w.tensors[0].data[0], x, 1e-14);
  }
}

TEST(Adam, MismatchedGradientsThrow) {
  ParameterSet w = single({1.0});
  ParameterSet g = single({1.0});
  g.names = {"other"};
  AdamState state;
  expect_kind(ErrorKind::kShapeMismatch, [&] { adam_step(w, g, state, AdamConfig{}); });
}

TEST(Clip, ScalesToMaxNorm) {
  Gradients g = single({3.0, 4.0});
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.tensors[0].data[0], 0.6, 1e-15);
  EXPECT_NEAR(g.tensors[0].data[1], 0.8, 1e-15);
}

TEST(Clip, LeavesSmallGradientsAlone) {
  Gradients g = single({0.3, 0.4});
  clip_global_norm(g, 1.0);
  EXPECT_EQ(g.tensors[0].data, (std::vector<double>{0.3, 0.4}));
  Gradients big = single({30.0});
  clip_global_norm(big, 0.0);
  EXPECT_EQ(big.tensors[0].data[0], 30.0);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch_dir("checkpoint");
    config_ = UNetConfig::desk();
    config_.input_length = 128;
    const UNet net(config_);
    std::mt19937_64 rng(9);
    checkpoint_.config = config_;
    checkpoint_.params = net.init_params(rng);
    Gradients g = checkpoint_.params.zeros_like();
    for (Tensor& t : g.tensors)
      for (double& v : t.data) v = std::normal_distribution<double>()(rng);
    adam_step(checkpoint_.params, g, checkpoint_.optimizer, AdamConfig{});
    checkpoint_.metadata_json = R"({"seed":5,"note":"x"})";
    path_ = dir_ / "ck.bin";
    save_checkpoint(path_, checkpoint_);
  }

  std::filesystem::path dir_;
  std::filesystem::path path_;
  UNetConfig config_;
  Checkpoint checkpoint_;
};

TEST_F(CheckpointTest, RoundTripIsBitwise) {
  const Checkpoint loaded = load_checkpoint(path_, config_);
  EXPECT_EQ(loaded.config, config_);
  EXPECT_EQ(loaded.params, checkpoint_.params);
  EXPECT_EQ(loaded.optimizer.step, 1);
  EXPECT_EQ(loaded.optimizer.first_moment, checkpoint_.optimizer.first_moment);
  EXPECT_EQ(loaded.optimizer.second_moment, checkpoint_.optimizer.second_moment);
  EXPECT_NE(loaded.metadata_json.find("\"seed\":5"), std::string::npos);
}

TEST_F(CheckpointTest, FileStartsWithVersionAndMagic) {
  const std::string bytes = read_bytes(path_);
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data(), 4);
  EXPECT_EQ(version, kCheckpointVersion);
  EXPECT_EQ(bytes.substr(4, 4), "RIRF");
}

TEST_F(CheckpointTest, SavingTwiceIsByteIdentical) {
  save_checkpoint(dir_ / "again.bin", checkpoint_);
  EXPECT_EQ(read_bytes(path_), read_bytes(dir_ / "again.bin"));
}

TEST_F(CheckpointTest, TruncatedFileIsCorrupt) {
  const std::string bytes = read_bytes(path_);
  for (std::size_t keep : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    write_bytes(dir_ / "cut.bin", bytes.substr(0, keep));
    expect_kind(ErrorKind::kCorruptCheckpoint, [&] { load_checkpoint(dir_ / "cut.bin"); });
  }
}

TEST_F(CheckpointTest, BadMagicIsCorrupt) {
  std::string bytes = read_bytes(path_);
  bytes[5] = 'X';
  write_bytes(dir_ / "magic.bin", bytes);
  expect_kind(ErrorKind::kCorruptCheckpoint, [&] { load_checkpoint(dir_ / "magic.bin"); });
}

TEST_F(CheckpointTest, UnknownVersionIsRejected) {
  std::string bytes = read_bytes(path_);
  bytes[0] = 9;
  write_bytes(dir_ / "version.bin", bytes);
  expect_kind(ErrorKind::kVersionMismatch, [&] { load_checkpoint(dir_ / "version.bin"); });
}

TEST_F(CheckpointTest, TamperedConfigHashIsRejected) {
  std::string bytes = read_bytes(path_);
  const std::size_t at = bytes.find("\"config_hash\":\"");
  ASSERT_NE(at, std::string::npos);
  char& digit = bytes[at + 15];
  digit = digit == '0' ? '1' : '0';
  write_bytes(dir_ / "hash.bin", bytes);
  expect_kind(ErrorKind::kVersionMismatch, [&] { load_checkpoint(dir_ / "hash.bin"); });
}

TEST_F(CheckpointTest, ExpectedConfigMustMatch) {
  UNetConfig other = config_;
  other.base_channels = 4;
  expect_kind(ErrorKind::kVersionMismatch, [&] { load_checkpoint(path_, other); });
}

TEST_F(CheckpointTest, MissingFileIsIoError) {
  expect_kind(ErrorKind::kIoError, [&] { load_checkpoint(dir_ / "absent.bin"); });
}

}  // namespace
}  // namespace rirforge::nn
