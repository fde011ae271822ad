#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "rirforge/signal.hpp"

namespace rirforge {

inline constexpr double kDefaultSpeedOfSound = 343.0;
inline constexpr int kFractionalDelayTaps = 81;
inline constexpr double kMinImageDistance = 1e-6;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](std::size_t axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  double& operator[](std::size_t axis) { return axis == 0 ? x : axis == 1 ? y : z; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double distance(const Vec3& a, const Vec3& b);

// Wall order: x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
struct Room {
  Vec3 dims;
  std::array<double, 6> absorption{};  // energy absorption per wall, in (0, 1)
  double speed_of_sound = kDefaultSpeedOfSound;
};

// Throws kInvalidGeometry on non-positive dims, out-of-range absorption or
// non-positive speed of sound.
void validate(const Room& room);

// Smallest distance from `p` to any wall; negative when outside.
double wall_clearance(const Room& room, const Vec3& p);

struct SourcePose {
  Vec3 position;
};

struct ReceiverPose {
  Vec3 position;
};

struct ImageSource {
  Vec3 position;
  double amplitude = 1.0;
  int order = 0;
  // Lattice coordinates; (m, q) per axis. Handy for subset comparisons.
  std::array<int, 3> lattice{};
  std::array<int, 3> parity{};
};

// All mirror images of `src` with total reflection order <= max_order. When
// max_distance is finite, images farther than it from `around` are dropped.
std::vector<ImageSource> enumerate_images(
    const Room& room, const SourcePose& src, int max_order,
    double max_distance = std::numeric_limits<double>::infinity(),
    const Vec3& around = {});

// Windowed-sinc fractional delay tap values for a delay of `delay` samples,
// evaluated at integer offsets. Returns the first tap index and the taps.
struct DelayKernel {
  std::ptrdiff_t first_index = 0;
  std::array<double, kFractionalDelayTaps> taps{};
};
DelayKernel fractional_delay(double delay);

Rir render_rir(const std::vector<ImageSource>& images, const ReceiverPose& rcv,
               int sample_rate, std::size_t length,
               double speed_of_sound = kDefaultSpeedOfSound);

struct SimulateOptions {
  bool align = true;
  bool normalize = true;
  double keep_seconds = kDefaultKeepSeconds;
};

// Order-limited simulation followed by the standard preprocessing. The raw
// render is long enough to hold the direct-path delay before alignment.
Rir simulate(const Room& room, const SourcePose& src, const ReceiverPose& rcv,
             int max_order, int sample_rate, std::size_t length,
             const SimulateOptions& options = {});

// Reflection order large enough that every image arriving within `length`
// samples is included.
int covering_order(const Room& room, const SourcePose& src, const ReceiverPose& rcv,
                   int sample_rate, std::size_t length);

// Full-length target: every image whose arrival lands inside the response.
Rir simulate_full(const Room& room, const SourcePose& src, const ReceiverPose& rcv,
                  int sample_rate, std::size_t length,
                  const SimulateOptions& options = {});

// Full-order target and order-limited conditioner rendered on one time axis,
// then preprocessed together (shared alignment shift and peak scale).
RirPair simulate_pair(const Room& room, const SourcePose& src, const ReceiverPose& rcv,
                      int conditioner_order, int sample_rate, std::size_t length,
                      double keep_seconds = kDefaultKeepSeconds);

Rir truncate_window(const Rir& rir, double window_seconds);

struct SamplingRanges {
  Vec3 dims_min{3.0, 3.0, 2.4};
  Vec3 dims_max{10.0, 8.0, 4.0};
  double absorption_min = 0.02;
  double absorption_max = 0.40;
  double wall_margin = 0.5;
  double speed_of_sound = kDefaultSpeedOfSound;
  int max_retries = 1000;
};

struct RoomConfig {
  Room room;
  SourcePose source;
  ReceiverPose receiver;
};

// Uniform position strictly inside the room with the given margin.
// Throws kInfeasibleGeometry if the room is too small for the margin.
Vec3 sample_position(const Room& room, double margin, std::mt19937_64& rng,
                     int max_retries = 1000);
Room sample_room(const SamplingRanges& ranges, std::mt19937_64& rng);

std::vector<RoomConfig> sample_room_configs(std::size_t count, std::mt19937_64& rng,
                                            const SamplingRanges& ranges = {});

}  // namespace rirforge
