#include "rirforge/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rirforge/error.hpp"

namespace rirforge {
namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorKind::kShapeMismatch, what);
}

void require_step(int t, const Schedule& sched) {
  if (t < 0 || t > sched.steps) {
    throw Error(ErrorKind::kInvalidArgument, "diffusion step out of range");
  }
}

}  // namespace

Schedule cosine_schedule(int steps, double offset) {
  if (steps < 1) throw Error(ErrorKind::kInvalidSchedule, "step count must be >= 1");
  if (!(offset > 0.0 && offset < 1.0)) {
    throw Error(ErrorKind::kInvalidSchedule, "schedule offset must lie in (0, 1)");
  }
  const auto f = [&](int t) {
    const double phase = (static_cast<double>(t) / steps + offset) / (1.0 + offset);
    const double c = std::cos(phase * std::numbers::pi / 2.0);
    return c * c;
  };

  Schedule sched;
  sched.steps = steps;
  sched.offset = offset;
  sched.alpha.assign(steps + 1, 1.0);
  sched.alpha_bar.assign(steps + 1, 1.0);
  sched.sigma.assign(steps + 1, 0.0);

  const double f0 = f(0);
  double previous = 1.0;  // f(0) / f(0)
  for (int t = 1; t <= steps; ++t) {
    const double ideal = f(t) / f0;
    const double beta = std::min(1.0 - ideal / previous, kMaxStepNoise);
    previous = ideal;
    sched.alpha[t] = 1.0 - beta;
    // Accumulate the clipped per-step retentions so that abar_T stays > 0.
    sched.alpha_bar[t] = sched.alpha_bar[t - 1] * sched.alpha[t];
  }
  for (int t = 1; t <= steps; ++t) {
    const double var = (1.0 - sched.alpha_bar[t - 1]) * (1.0 - sched.alpha[t]) /
                       (1.0 - sched.alpha_bar[t]);
    sched.sigma[t] = std::sqrt(var);
  }
  return sched;
}

std::vector<double> forward_diffuse(std::span<const double> x0, int t,
                                    std::span<const double> eps, const Schedule& sched) {
  require_same_size(x0.size(), eps.size(), "x0 and noise differ in length");
  require_step(t, sched);
  const double signal = std::sqrt(sched.alpha_bar[t]);
  const double noise = std::sqrt(1.0 - sched.alpha_bar[t]);
  std::vector<double> out(x0.size());
  for (std::size_t n = 0; n < x0.size(); ++n) out[n] = signal * x0[n] + noise * eps[n];
  return out;
}

ReverseCoefficients reverse_coefficients(int t, const Schedule& sched) {
  if (t < 1 || t > sched.steps) {
    throw Error(ErrorKind::kInvalidArgument, "reverse step must lie in [1, T]");
  }
  const double abar_prev = sched.alpha_bar[t - 1];
  const double abar = sched.alpha_bar[t];
  const double alpha = sched.alpha[t];
  return {std::sqrt(abar_prev) * (1.0 - alpha) / (1.0 - abar),
          std::sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar)};
}

std::vector<double> reverse_mean(std::span<const double> x_t,
                                 std::span<const double> x0_hat, int t,
                                 const Schedule& sched) {
  require_same_size(x_t.size(), x0_hat.size(), "x_t and x0_hat differ in length");
  const ReverseCoefficients k = reverse_coefficients(t, sched);
  std::vector<double> out(x_t.size());
  for (std::size_t n = 0; n < x_t.size(); ++n) out[n] = k.clean * x0_hat[n] + k.noisy * x_t[n];
  return out;
}

std::vector<double> cfg_combine(std::span<const double> x0_cond,
                                std::span<const double> x0_uncond, double scale) {
  require_same_size(x0_cond.size(), x0_uncond.size(),
                    "conditional and unconditional predictions differ in length");
  if (scale == 1.0) return {x0_cond.begin(), x0_cond.end()};
  std::vector<double> out(x0_cond.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = x0_uncond[n] + scale * (x0_cond[n] - x0_uncond[n]);
  }
  return out;
}

std::vector<double> standard_normal(std::size_t count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(count);
  for (double& v : out) v = normal(rng);
  return out;
}

std::vector<double> sample(const Denoiser& denoiser, std::span<const double> conditioner,
                           const Schedule& sched, double guidance_scale,
                           std::mt19937_64& rng) {
  if (guidance_scale < 1.0) {
    throw Error(ErrorKind::kInvalidArgument, "guidance scale must be >= 1");
  }
  const std::size_t length = conditioner.size();
  const std::vector<double> null_condition(length, 0.0);
  std::vector<double> x = standard_normal(length, rng);

  for (int t = sched.steps; t >= 1; --t) {
    std::vector<double> x0_hat = denoiser(x, conditioner, t);
    require_same_size(x0_hat.size(), length, "denoiser output has the wrong length");
    if (guidance_scale != 1.0) {
      const std::vector<double> x0_uncond = denoiser(x, null_condition, t);
      x0_hat = cfg_combine(x0_hat, x0_uncond, guidance_scale);
    }
    std::vector<double> mean = reverse_mean(x, x0_hat, t, sched);
    if (t > 1) {
      const std::vector<double> eps = standard_normal(length, rng);
      for (std::size_t n = 0; n < length; ++n) mean[n] += sched.sigma[t] * eps[n];
    }
    x = std::move(mean);
  }
  return x;
}

}  // namespace rirforge
