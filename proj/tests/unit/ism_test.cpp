#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <tuple>

#include "rirforge/error.hpp"
#include "rirforge/ism.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace rirforge {
namespace {

using testing::lattice_oracle;
using Key = testing::LatticeKey;

struct Scene {
  Room room;
  SourcePose src;
  ReceiverPose rcv;
};

Scene random_scene(std::mt19937_64& rng) {
  const SamplingRanges ranges;
  Scene s;
  s.room = sample_room(ranges, rng);
  s.src.position = sample_position(s.room, ranges.wall_margin, rng);
  s.rcv.position = sample_position(s.room, ranges.wall_margin, rng);
  return s;
}

TEST(EnumerateImages, OrderZeroIsTheSource) {
  std::mt19937_64 rng(1);
  const Scene s = random_scene(rng);
  const auto images = enumerate_images(s.room, s.src, 0);
  ASSERT_EQ(images.size(), 1u);
  EXPECT_EQ(images[0].position, s.src.position);
  EXPECT_EQ(images[0].amplitude, 1.0);
  EXPECT_EQ(images[0].order, 0);
}

TEST(EnumerateImages, OrderOneHasSevenImages) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    const Scene s = random_scene(rng);
    EXPECT_EQ(enumerate_images(s.room, s.src, 1).size(), 7u);
  }
}

TEST(EnumerateImages, MatchesLatticeOracle) {
  std::mt19937_64 rng(3);
  for (int room = 0; room < 5; ++room) {
    const Scene s = random_scene(rng);
    for (int order = 0; order <= 6; ++order) {
      const auto oracle = lattice_oracle(s.room, s.src.position, order);
      const auto images = enumerate_images(s.room, s.src, order);
      ASSERT_EQ(images.size(), oracle.size()) << "order " << order;
      for (const ImageSource& img : images) {
        const Key key{img.lattice[0], img.lattice[1], img.lattice[2],
                      img.parity[0],  img.parity[1],  img.parity[2]};
        const auto it = oracle.find(key);
        ASSERT_NE(it, oracle.end());
        EXPECT_EQ(img.order, it->second.order);
        EXPECT_NEAR(img.amplitude, it->second.amplitude, 1e-12);
        for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(img.position[a], it->second.position[a], 1e-12);
      }
    }
  }
}

TEST(EnumerateImages, AmplitudesInUnitInterval) {
  std::mt19937_64 rng(4);
  const Scene s = random_scene(rng);
  for (const ImageSource& img : enumerate_images(s.room, s.src, 5)) {
    EXPECT_GT(img.amplitude, 0.0);
    EXPECT_LE(img.amplitude, 1.0);
  }
}

TEST(EnumerateImages, StrictlyNestedInOrder) {
  std::mt19937_64 rng(5);
  const Scene s = random_scene(rng);
  for (int order = 0; order < 6; ++order) {
    EXPECT_LT(enumerate_images(s.room, s.src, order).size(),
              enumerate_images(s.room, s.src, order + 1).size());
  }
}

TEST(EnumerateImages, SourceOutsideThrows) {
  Room room{{4.0, 5.0, 3.0}, {0.1, 0.1, 0.1, 0.1, 0.1, 0.1}};
  testing::expect_kind(ErrorKind::kInvalidGeometry,
                       [&] { enumerate_images(room, SourcePose{{5.0, 1.0, 1.0}}, 2); });
}

TEST(EnumerateImages, InvalidRoomThrows) {
  Room room{{4.0, 0.0, 3.0}, {0.1, 0.1, 0.1, 0.1, 0.1, 0.1}};
  testing::expect_kind(ErrorKind::kInvalidGeometry,
                       [&] { enumerate_images(room, SourcePose{{1.0, 1.0, 1.0}}, 2); });
}

TEST(RenderRir, IntegerDelayPeak) {
  const int fs = 16000;
  const double c = 343.0;
  const double d = c / fs * 100.0;
  const std::vector<ImageSource> images{{{d, 0.0, 0.0}, 1.0, 0, {}, {}}};
  const Rir rir = render_rir(images, ReceiverPose{{0.0, 0.0, 0.0}}, fs, 400, c);
  const double expected = 1.0 / (4.0 * std::numbers::pi * d);
  EXPECT_NEAR(rir.samples[100], expected, 1e-6);
  for (std::size_t n = 0; n < rir.size(); ++n) {
    if (n != 100) EXPECT_NEAR(rir.samples[n], 0.0, 1e-6);
  }
}

TEST(RenderRir, EmptyImageListIsSilent) {
  const Rir rir = render_rir({}, ReceiverPose{{1.0, 1.0, 1.0}}, 16000, 64);
  EXPECT_EQ(rir.samples, std::vector<double>(64, 0.0));
}

TEST(RenderRir, InverseDistanceLaw) {
  const int fs = 16000;
  const double c = 343.0;
  const double d = c / fs * 100.0;
  const std::vector<ImageSource> images{{{d, 0.0, 0.0}, 1.0, 0, {}, {}},
                                        {{0.0, 2.0 * d, 0.0}, 1.0, 1, {}, {}}};
  const Rir rir = render_rir(images, ReceiverPose{{0.0, 0.0, 0.0}}, fs, 400, c);
  EXPECT_NEAR(rir.samples[200] / rir.samples[100], 0.5, 1e-9);
}

TEST(RenderRir, CoincidentImageThrows) {
  const std::vector<ImageSource> images{{{1.0, 1.0, 1.0}, 1.0, 0, {}, {}}};
  testing::expect_kind(ErrorKind::kCoincidentPoints,
                       [&] { render_rir(images, ReceiverPose{{1.0, 1.0, 1.0}}, 16000, 64); });
}

TEST(RenderRir, ContributionsBeyondLengthDropped) {
  const std::vector<ImageSource> images{{{100.0, 0.0, 0.0}, 1.0, 0, {}, {}}};
  const Rir rir = render_rir(images, ReceiverPose{{0.0, 0.0, 0.0}}, 16000, 64);
  EXPECT_EQ(rir.samples, std::vector<double>(64, 0.0));
}

TEST(FractionalDelay, IntegerDelayIsNearDelta) {
  const DelayKernel k = fractional_delay(50.0);
  EXPECT_EQ(k.first_index, 10);
  EXPECT_NEAR(k.taps[40], 1.0, 1e-15);
  EXPECT_NEAR(k.taps[39], 0.0, 1e-15);
}

TEST(Simulate, OrderZeroIsSingleAlignedPulse) {
  std::mt19937_64 rng(6);
  const Scene s = random_scene(rng);
  const Rir rir = simulate(s.room, s.src, s.rcv, 0, 16000, 4096);
  ASSERT_EQ(rir.size(), 4096u);
  EXPECT_EQ(first_arrival_index(rir.samples), 40u);
  double peak = 0.0;
  for (double v : rir.samples) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 1.0, 1e-12);
  // beyond the kernel support there is nothing
  for (std::size_t n = 40 + kFractionalDelayTaps; n < rir.size(); ++n) EXPECT_EQ(rir.samples[n], 0.0);
}

TEST(Simulate, HighOrderConditionerIsNotTruncated) {
  std::mt19937_64 rng(7);
  const Scene s = random_scene(rng);
  const Rir rir = simulate(s.room, s.src, s.rcv, 7, 16000, 24576);
  double late = 0.0;
  for (std::size_t n = 1280; n < rir.size(); ++n) late += rir.samples[n] * rir.samples[n];
  EXPECT_GT(late, 0.0);
}

TEST(Simulate, OrderDifferenceOracle) {
  std::mt19937_64 rng(8);
  const Scene s = random_scene(rng);
  const int fs = 16000;
  const std::size_t len = 8192;
  const auto images7 = enumerate_images(s.room, s.src, 7);
  std::vector<ImageSource> high;
  for (const ImageSource& img : images7) {
    if (img.order >= 6) high.push_back(img);
  }
  const Rir full7 = render_rir(images7, s.rcv, fs, len);
  const Rir part = render_rir(high, s.rcv, fs, len);
  const Rir full5 = render_rir(enumerate_images(s.room, s.src, 5), s.rcv, fs, len);
  for (std::size_t n = 0; n < len; ++n) {
    EXPECT_NEAR(full7.samples[n] - part.samples[n], full5.samples[n], 1e-9);
  }
}

TEST(Simulate, EnergyGrowsWithOrder) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 3; ++trial) {
    const Scene s = random_scene(rng);
    double previous = 0.0;
    for (int order = 0; order <= 5; ++order) {
      const Rir rir = render_rir(enumerate_images(s.room, s.src, order), s.rcv, 16000, 8192);
      double energy = 0.0;
      for (double v : rir.samples) energy += v * v;
      EXPECT_GE(energy, previous);
      previous = energy;
    }
  }
}

TEST(Simulate, DirectArrivalTime) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Scene s = random_scene(rng);
    const int fs = 16000;
    const SimulateOptions raw{false, false};
    const Rir rir = simulate(s.room, s.src, s.rcv, 0, fs, 8192, raw);
    std::size_t peak = 0;
    for (std::size_t n = 0; n < rir.size(); ++n) {
      if (std::abs(rir.samples[n]) > std::abs(rir.samples[peak])) peak = n;
    }
    const double expected = distance(s.src.position, s.rcv.position) * fs / s.room.speed_of_sound;
    EXPECT_LE(std::abs(static_cast<double>(peak) - expected), 0.5);
  }
}

TEST(Simulate, PairSharesTimeAxis) {
  std::mt19937_64 rng(11);
  const Scene s = random_scene(rng);
  const RirPair pair = simulate_pair(s.room, s.src, s.rcv, 3, 16000, 4096);
  EXPECT_EQ(first_arrival_index(pair.target.samples), 40u);
  // The conditioner's images are a subset of the target's, so early on the two
  // agree until the first order-4 reflection.
  EXPECT_NEAR(pair.target.samples[40], pair.conditioner.samples[40], 1e-9);
}

TEST(TruncateWindow, EightyMillisecondsAtSixteenKilohertz) {
  Rir rir{std::vector<double>(2000, 1.0), 16000};
  const Rir out = truncate_window(rir, 0.080);
  EXPECT_EQ(out.samples[1279], 1.0);
  EXPECT_EQ(out.samples[1280], 0.0);
  EXPECT_EQ(out.samples[1999], 0.0);
}

TEST(TruncateWindow, LongWindowIsIdentity) {
  Rir rir{std::vector<double>(100, 0.5), 16000};
  EXPECT_EQ(truncate_window(rir, 1.0).samples, rir.samples);
}

TEST(TruncateWindow, Boundary) {
  Rir a{std::vector<double>(2000, 0.0), 16000};
  a.samples[1279] = 1.0;
  EXPECT_EQ(truncate_window(a, 0.080).samples[1279], 1.0);
  Rir b{std::vector<double>(2000, 0.0), 16000};
  b.samples[1280] = 1.0;
  EXPECT_EQ(truncate_window(b, 0.080).samples[1280], 0.0);
}

TEST(SampleRoomConfigs, EmptyForZeroCount) {
  std::mt19937_64 rng(12);
  EXPECT_TRUE(sample_room_configs(0, rng).empty());
}

TEST(SampleRoomConfigs, Deterministic) {
  std::mt19937_64 a(13);
  std::mt19937_64 b(13);
  const auto x = sample_room_configs(20, a);
  const auto y = sample_room_configs(20, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].room.dims, y[i].room.dims);
    EXPECT_EQ(x[i].room.absorption, y[i].room.absorption);
    EXPECT_EQ(x[i].source.position, y[i].source.position);
    EXPECT_EQ(x[i].receiver.position, y[i].receiver.position);
  }
}

TEST(SampleRoomConfigs, MarginsAlwaysSatisfied) {
  std::mt19937_64 rng(14);
  const SamplingRanges ranges;
  for (const RoomConfig& c : sample_room_configs(1000, rng, ranges)) {
    EXPECT_GE(wall_clearance(c.room, c.source.position), ranges.wall_margin);
    EXPECT_GE(wall_clearance(c.room, c.receiver.position), ranges.wall_margin);
    for (double a : c.room.absorption) {
      EXPECT_GE(a, ranges.absorption_min);
      EXPECT_LE(a, ranges.absorption_max);
    }
  }
}

TEST(SampleRoomConfigs, InfeasibleMarginThrows) {
  std::mt19937_64 rng(15);
  SamplingRanges ranges;
  ranges.wall_margin = 5.0;  // larger than half of every dimension
  ranges.max_retries = 10;
  testing::expect_kind(ErrorKind::kInfeasibleGeometry, [&] { sample_room_configs(1, rng, ranges); });
}

}  // namespace
}  // namespace rirforge
