#pragma once

#include <functional>
#include <random>
#include <span>
#include <vector>

namespace rirforge {

inline constexpr double kDefaultScheduleOffset = 0.008;
inline constexpr double kMaxStepNoise = 0.999;

// Precomputed cosine-schedule quantities, indexed by step t = 0..T. Index 0
// holds the clean state: alpha_bar[0] = alpha[0] = 1, sigma[0] = 0.
struct Schedule {
  int steps = 0;
  double offset = kDefaultScheduleOffset;
  std::vector<double> alpha_bar;
  std::vector<double> alpha;
  std::vector<double> sigma;
};

// Throws kInvalidSchedule for steps < 1 or offset outside (0, 1).
Schedule cosine_schedule(int steps, double offset = kDefaultScheduleOffset);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps. t = 0 returns x0.
std::vector<double> forward_diffuse(std::span<const double> x0, int t,
                                    std::span<const double> eps, const Schedule& sched);

struct ReverseCoefficients {
  double clean = 0.0;  // weight on the predicted x0
  double noisy = 0.0;  // weight on x_t
};
ReverseCoefficients reverse_coefficients(int t, const Schedule& sched);

std::vector<double> reverse_mean(std::span<const double> x_t,
                                 std::span<const double> x0_hat, int t,
                                 const Schedule& sched);

// x0_uncond + s (x0_cond - x0_uncond); s == 1 returns x0_cond verbatim.
std::vector<double> cfg_combine(std::span<const double> x0_cond,
                                std::span<const double> x0_uncond, double scale);

// Predicts x0 from (x_t, conditioner, t).
using Denoiser = std::function<std::vector<double>(
    std::span<const double> x_t, std::span<const double> conditioner, int t)>;

// Ancestral sampling from pure noise down to t = 0. With scale > 1 each step
// evaluates the denoiser with the conditioner and with an all-zero one.
std::vector<double> sample(const Denoiser& denoiser, std::span<const double> conditioner,
                           const Schedule& sched, double guidance_scale,
                           std::mt19937_64& rng);

std::vector<double> standard_normal(std::size_t count, std::mt19937_64& rng);

}  // namespace rirforge
