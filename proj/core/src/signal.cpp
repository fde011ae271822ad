#include "rirforge/signal.hpp"

#include <algorithm>
#include <cmath>

#include "rirforge/error.hpp"

namespace rirforge {
namespace {

double peak_abs(std::span<const double> x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  return peak;
}

}  // namespace

bool all_finite(std::span<const double> samples) {
  return std::all_of(samples.begin(), samples.end(),
                     [](double v) { return std::isfinite(v); });
}

Rir normalize_peak(const Rir& rir) {
  const double peak = peak_abs(rir.samples);
  if (peak == 0.0) {
    throw Error(ErrorKind::kAllZeroSignal, "cannot peak-normalize a zero signal");
  }
  Rir out = rir;
  for (double& v : out.samples) v /= peak;
  return out;
}

std::size_t first_arrival_index(std::span<const double> samples,
                                double threshold) {
  const double peak = peak_abs(samples);
  if (peak == 0.0) {
    throw Error(ErrorKind::kAllZeroSignal, "no arrival in a zero signal");
  }
  const double level = threshold * peak;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    if (std::abs(samples[n]) >= level) return n;
  }
  return samples.size() - 1;  // unreachable: the peak itself satisfies the test
}

std::ptrdiff_t alignment_shift(const Rir& rir, double keep_seconds) {
  if (keep_seconds < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "keep_seconds must be >= 0");
  }
  const auto arrival = static_cast<std::ptrdiff_t>(first_arrival_index(rir.samples));
  const auto target =
      static_cast<std::ptrdiff_t>(std::llround(keep_seconds * rir.sample_rate));
  return target - arrival;
}

Rir shift_samples(const Rir& rir, std::ptrdiff_t shift) {
  const auto size = static_cast<std::ptrdiff_t>(rir.size());
  Rir out{std::vector<double>(rir.size(), 0.0), rir.sample_rate};
  for (std::ptrdiff_t n = 0; n < size; ++n) {
    const std::ptrdiff_t src = n - shift;
    if (src >= 0 && src < size) out.samples[n] = rir.samples[src];
  }
  return out;
}

Rir align_direct_path(const Rir& rir, double keep_seconds) {
  return shift_samples(rir, alignment_shift(rir, keep_seconds));
}

Rir fit_length(const Rir& rir, std::size_t length) {
  if (length == 0) throw Error(ErrorKind::kInvalidArgument, "length must be > 0");
  Rir out = rir;
  out.samples.resize(length, 0.0);
  return out;
}

Edc compute_edc(std::span<const double> samples, double floor_db) {
  const std::size_t size = samples.size();
  std::vector<double> energy(size, 0.0);
  // Backward accumulation keeps every tail sum exact up to rounding instead of
  // subtracting prefix sums from the total.
  double acc = 0.0;
  for (std::size_t n = size; n-- > 0;) {
    acc += samples[n] * samples[n];
    energy[n] = acc;
  }
  if (size == 0 || energy[0] == 0.0) {
    throw Error(ErrorKind::kAllZeroSignal, "EDC of a zero-energy signal");
  }

  Edc edc;
  edc.floor_db = floor_db;
  edc.values_db.resize(size);
  const double total = energy[0];
  for (std::size_t n = 0; n < size; ++n) {
    if (energy[n] == 0.0) {
      edc.values_db[n] = floor_db;
    } else {
      edc.values_db[n] = std::max(10.0 * std::log10(energy[n] / total), floor_db);
    }
  }
  edc.values_db[0] = 0.0;
  return edc;
}

Rir preprocess(const Rir& rir, std::size_t length, double keep_seconds) {
  return normalize_peak(fit_length(align_direct_path(rir, keep_seconds), length));
}

RirPair preprocess_pair(const Rir& target, const Rir& conditioner, std::size_t length,
                        double keep_seconds) {
  if (target.size() != conditioner.size() || target.sample_rate != conditioner.sample_rate) {
    throw Error(ErrorKind::kShapeMismatch, "target and conditioner use different time axes");
  }
  const std::ptrdiff_t shift = alignment_shift(target, keep_seconds);
  RirPair out{fit_length(shift_samples(target, shift), length),
              fit_length(shift_samples(conditioner, shift), length)};
  const double peak = peak_abs(out.target.samples);
  if (peak == 0.0) {
    throw Error(ErrorKind::kAllZeroSignal, "target is zero after fitting the length");
  }
  for (double& v : out.target.samples) v /= peak;
  for (double& v : out.conditioner.samples) v /= peak;
  return out;
}

}  // namespace rirforge
