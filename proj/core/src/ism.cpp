#include "rirforge/ism.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rirforge/error.hpp"

namespace rirforge {
namespace {

// One axis of the image lattice: coordinate plus reflection counts against
// the wall at 0 and the wall at L.
struct AxisImage {
  double coord;
  int order;
  double gain;
  int m;
  int q;
};

std::vector<AxisImage> axis_images(double source, double length, double beta_low,
                                   double beta_high, int max_order, double center,
                                   double max_distance) {
  std::vector<AxisImage> out;
  const int bound = max_order + 1;
  for (int m = -bound; m <= bound; ++m) {
    for (int q = 0; q <= 1; ++q) {
      const int low_hits = std::abs(m - q);
      const int high_hits = std::abs(m);
      const int order = low_hits + high_hits;
      if (order > max_order) continue;
      const double coord = (q == 0 ? source : -source) + 2.0 * m * length;
      if (std::abs(coord - center) > max_distance) continue;
      const double gain = std::pow(beta_low, low_hits) * std::pow(beta_high, high_hits);
      out.push_back({coord, order, gain, m, q});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const AxisImage& a, const AxisImage& b) { return a.order < b.order; });
  return out;
}

void require_inside(const Room& room, const Vec3& p, const char* what) {
  if (wall_clearance(room, p) <= 0.0) {
    throw Error(ErrorKind::kInvalidGeometry, std::string(what) + " lies outside the room");
  }
}

}  // namespace

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void validate(const Room& room) {
  for (std::size_t axis = 0; axis < 3; ++axis) {
    if (!(room.dims[axis] > 0.0)) {
      throw Error(ErrorKind::kInvalidGeometry, "room dimensions must be positive");
    }
  }
  for (double a : room.absorption) {
    if (!(a > 0.0 && a < 1.0)) {
      throw Error(ErrorKind::kInvalidGeometry, "wall absorption must lie in (0, 1)");
    }
  }
  if (!(room.speed_of_sound > 0.0)) {
    throw Error(ErrorKind::kInvalidGeometry, "speed of sound must be positive");
  }
}

double wall_clearance(const Room& room, const Vec3& p) {
  double clearance = std::numeric_limits<double>::infinity();
  for (std::size_t axis = 0; axis < 3; ++axis) {
    clearance = std::min({clearance, p[axis], room.dims[axis] - p[axis]});
  }
  return clearance;
}

std::vector<ImageSource> enumerate_images(const Room& room, const SourcePose& src,
                                          int max_order, double max_distance,
                                          const Vec3& around) {
  validate(room);
  if (max_order < 0) throw Error(ErrorKind::kInvalidArgument, "max_order must be >= 0");
  require_inside(room, src.position, "source");

  std::array<std::vector<AxisImage>, 3> axes;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const double beta_low = std::sqrt(1.0 - room.absorption[2 * axis]);
    const double beta_high = std::sqrt(1.0 - room.absorption[2 * axis + 1]);
    axes[axis] = axis_images(src.position[axis], room.dims[axis], beta_low, beta_high,
                             max_order, around[axis], max_distance);
  }

  const bool prune = std::isfinite(max_distance);
  const double max_distance_sq = max_distance * max_distance;
  std::vector<ImageSource> images;
  for (const AxisImage& ix : axes[0]) {
    for (const AxisImage& iy : axes[1]) {
      if (ix.order + iy.order > max_order) break;  // sorted by order
      for (const AxisImage& iz : axes[2]) {
        const int order = ix.order + iy.order + iz.order;
        if (order > max_order) break;
        const Vec3 position{ix.coord, iy.coord, iz.coord};
        if (prune) {
          const double dx = position.x - around.x;
          const double dy = position.y - around.y;
          const double dz = position.z - around.z;
          if (dx * dx + dy * dy + dz * dz > max_distance_sq) continue;
        }
        images.push_back({position, ix.gain * iy.gain * iz.gain, order,
                          {ix.m, iy.m, iz.m}, {ix.q, iy.q, iz.q}});
      }
    }
  }
  return images;
}

DelayKernel fractional_delay(double delay) {
  constexpr int kHalf = kFractionalDelayTaps / 2;
  constexpr double kWindowWidth = kFractionalDelayTaps;
  DelayKernel kernel;
  const auto center = static_cast<std::ptrdiff_t>(std::llround(delay));
  kernel.first_index = center - kHalf;
  for (int k = 0; k < kFractionalDelayTaps; ++k) {
    const double x = static_cast<double>(kernel.first_index + k) - delay;
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double window = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * x / kWindowWidth));
    kernel.taps[k] = sinc * window;
  }
  return kernel;
}

Rir render_rir(const std::vector<ImageSource>& images, const ReceiverPose& rcv,
               int sample_rate, std::size_t length, double speed_of_sound) {
  if (length == 0) throw Error(ErrorKind::kInvalidArgument, "length must be > 0");
  if (sample_rate <= 0 || !(speed_of_sound > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "sample rate and speed of sound must be positive");
  }
  Rir out{std::vector<double>(length, 0.0), sample_rate};
  const auto size = static_cast<std::ptrdiff_t>(length);
  const double samples_per_meter = sample_rate / speed_of_sound;
  for (const ImageSource& image : images) {
    const double d = distance(image.position, rcv.position);
    if (d < kMinImageDistance) {
      throw Error(ErrorKind::kCoincidentPoints, "image source coincides with the receiver");
    }
    const double delay = d * samples_per_meter;
    if (delay - kFractionalDelayTaps / 2 >= static_cast<double>(size)) continue;
    const double gain = image.amplitude / (4.0 * std::numbers::pi * d);
    const DelayKernel kernel = fractional_delay(delay);
    for (int k = 0; k < kFractionalDelayTaps; ++k) {
      const std::ptrdiff_t n = kernel.first_index + k;
      if (n >= 0 && n < size) out.samples[n] += gain * kernel.taps[k];
    }
  }
  return out;
}

namespace {

std::size_t raw_length_for(const Room& room, const SourcePose& src, const ReceiverPose& rcv,
                           int sample_rate, std::size_t length) {
  const double direct_delay =
      distance(src.position, rcv.position) * sample_rate / room.speed_of_sound;
  return length + static_cast<std::size_t>(std::ceil(direct_delay)) +
         kFractionalDelayTaps;
}

Rir finish(Rir raw, std::size_t length, const SimulateOptions& options) {
  if (options.align) raw = align_direct_path(raw, options.keep_seconds);
  raw = fit_length(raw, length);
  if (options.normalize) raw = normalize_peak(raw);
  return raw;
}

}  // namespace

Rir simulate(const Room& room, const SourcePose& src, const ReceiverPose& rcv,
             int max_order, int sample_rate, std::size_t length,
             const SimulateOptions& options) {
  require_inside(room, rcv.position, "receiver");
  const auto images = enumerate_images(room, src, max_order);
  const std::size_t raw_length = raw_length_for(room, src, rcv, sample_rate, length);
  return finish(render_rir(images, rcv, sample_rate, raw_length, room.speed_of_sound),
                length, options);
}

int covering_order(const Room& room, const SourcePose& src, const ReceiverPose& rcv,
                   int sample_rate, std::size_t length) {
  const std::size_t raw_length = raw_length_for(room, src, rcv, sample_rate, length);
  const double reach = static_cast<double>(raw_length) * room.speed_of_sound / sample_rate;
  // An image with o reflections along an axis sits at least (o - 1) * L away
  // along that axis.
  int order = 0;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    order += static_cast<int>(std::ceil(reach / room.dims[axis])) + 1;
  }
  return order;
}

Rir simulate_full(const Room& room, const SourcePose& src, const ReceiverPose& rcv,
                  int sample_rate, std::size_t length, const SimulateOptions& options) {
  require_inside(room, rcv.position, "receiver");
  const std::size_t raw_length = raw_length_for(room, src, rcv, sample_rate, length);
  const double reach = (static_cast<double>(raw_length) + kFractionalDelayTaps) *
                       room.speed_of_sound / sample_rate;
  const int order = covering_order(room, src, rcv, sample_rate, length);
  const auto images = enumerate_images(room, src, order, reach, rcv.position);
  return finish(render_rir(images, rcv, sample_rate, raw_length, room.speed_of_sound),
                length, options);
}

RirPair simulate_pair(const Room& room, const SourcePose& src, const ReceiverPose& rcv,
                      int conditioner_order, int sample_rate, std::size_t length,
                      double keep_seconds) {
  require_inside(room, rcv.position, "receiver");
  const std::size_t raw_length = raw_length_for(room, src, rcv, sample_rate, length);
  const double reach = (static_cast<double>(raw_length) + kFractionalDelayTaps) *
                       room.speed_of_sound / sample_rate;
  const int full_order = covering_order(room, src, rcv, sample_rate, length);
  const Rir target = render_rir(enumerate_images(room, src, full_order, reach, rcv.position),
                                rcv, sample_rate, raw_length, room.speed_of_sound);
  const Rir conditioner = render_rir(enumerate_images(room, src, conditioner_order), rcv,
                                     sample_rate, raw_length, room.speed_of_sound);
  return preprocess_pair(target, conditioner, length, keep_seconds);
}

Rir truncate_window(const Rir& rir, double window_seconds) {
  if (!(window_seconds > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "window_seconds must be > 0");
  }
  Rir out = rir;
  const auto cut = static_cast<std::size_t>(std::llround(window_seconds * rir.sample_rate));
  for (std::size_t n = cut; n < out.size(); ++n) out.samples[n] = 0.0;
  return out;
}

Vec3 sample_position(const Room& room, double margin, std::mt19937_64& rng,
                     int max_retries) {
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Vec3 p;
    bool feasible = true;
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const double lo = margin;
      const double hi = room.dims[axis] - margin;
      if (!(hi > lo)) {
        feasible = false;
        break;
      }
      p[axis] = std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    if (!feasible) break;
    if (wall_clearance(room, p) >= margin) return p;
  }
  throw Error(ErrorKind::kInfeasibleGeometry, "no position satisfies the wall margin");
}

Room sample_room(const SamplingRanges& ranges, std::mt19937_64& rng) {
  Room room;
  room.speed_of_sound = ranges.speed_of_sound;
  for (int attempt = 0; attempt < ranges.max_retries; ++attempt) {
    for (std::size_t axis = 0; axis < 3; ++axis) {
      room.dims[axis] = std::uniform_real_distribution<double>(ranges.dims_min[axis],
                                                               ranges.dims_max[axis])(rng);
    }
    for (double& a : room.absorption) {
      a = std::uniform_real_distribution<double>(ranges.absorption_min,
                                                 ranges.absorption_max)(rng);
    }
    bool fits = true;
    for (std::size_t axis = 0; axis < 3; ++axis) {
      fits = fits && room.dims[axis] > 2.0 * ranges.wall_margin;
    }
    if (fits) {
      validate(room);
      return room;
    }
  }
  throw Error(ErrorKind::kInfeasibleGeometry,
              "sampled rooms cannot accommodate the wall margin");
}

std::vector<RoomConfig> sample_room_configs(std::size_t count, std::mt19937_64& rng,
                                            const SamplingRanges& ranges) {
  std::vector<RoomConfig> configs;
  configs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RoomConfig config;
    config.room = sample_room(ranges, rng);
    config.source.position =
        sample_position(config.room, ranges.wall_margin, rng, ranges.max_retries);
    config.receiver.position =
        sample_position(config.room, ranges.wall_margin, rng, ranges.max_retries);
    configs.push_back(config);
  }
  return configs;
}

}  // namespace rirforge
