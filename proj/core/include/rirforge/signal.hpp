#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rirforge {

inline constexpr double kDefaultKeepSeconds = 0.0025;
inline constexpr double kDefaultEdcFloorDb = -60.0;
inline constexpr double kArrivalThreshold = 0.1;

// Single-channel impulse response. Also used for noisy iterates, noise draws
// and conditioners, which share its shape.
struct Rir {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const noexcept { return samples.size(); }
  std::span<const double> view() const noexcept { return samples; }
};

// Normalized Schroeder energy decay curve in dB, clamped at floor_db.
struct Edc {
  std::vector<double> values_db;
  double floor_db = kDefaultEdcFloorDb;
};

// Scales so that max |x| = 1. Throws kAllZeroSignal.
Rir normalize_peak(const Rir& rir);

// First index n with |x[n]| >= threshold * max|x|. Throws kAllZeroSignal.
std::size_t first_arrival_index(std::span<const double> samples,
                                double threshold = kArrivalThreshold);

// Sample shift that moves the first arrival to round(keep_seconds * fs).
std::ptrdiff_t alignment_shift(const Rir& rir, double keep_seconds = kDefaultKeepSeconds);

// Delays by `shift` samples (advances when negative), zero-filling. Length is
// preserved.
Rir shift_samples(const Rir& rir, std::ptrdiff_t shift);

// Shifts the first arrival to round(keep_seconds * fs), zero-filling or
// discarding at the front. Length is preserved.
Rir align_direct_path(const Rir& rir, double keep_seconds = kDefaultKeepSeconds);

// Truncates or zero-pads to exactly `length` samples.
Rir fit_length(const Rir& rir, std::size_t length);

// E[n] = sum_{k>=n} x[k]^2, E_dB[n] = 10 log10(E[n] / E[0]), clamped at the
// floor. Zero tail energy maps straight to the floor.
Edc compute_edc(std::span<const double> samples,
                double floor_db = kDefaultEdcFloorDb);
inline Edc compute_edc(const Rir& rir, double floor_db = kDefaultEdcFloorDb) {
  return compute_edc(rir.view(), floor_db);
}

// Preprocessing applied to every stored RIR: align, fit length, peak-normalize.
Rir preprocess(const Rir& rir, std::size_t length,
               double keep_seconds = kDefaultKeepSeconds);

// Preprocesses a target and a conditioner rendered on the same time axis.
// Both take the target's alignment shift and peak scale so that they stay
// sample-aligned and comparable in level.
struct RirPair {
  Rir target;
  Rir conditioner;
};
RirPair preprocess_pair(const Rir& target, const Rir& conditioner, std::size_t length,
                        double keep_seconds = kDefaultKeepSeconds);

bool all_finite(std::span<const double> samples);

}  // namespace rirforge
