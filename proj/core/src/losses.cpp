#include "rirforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rirforge/error.hpp"

namespace rirforge {
namespace {

void require_same_size(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorKind::kShapeMismatch, "prediction and target differ in length");
  }
}

std::vector<double> tail_energy(std::span<const double> x) {
  std::vector<double> energy(x.size());
  double acc = 0.0;
  for (std::size_t n = x.size(); n-- > 0;) {
    acc += x[n] * x[n];
    energy[n] = acc;
  }
  if (energy.empty() || energy[0] == 0.0) {
    throw Error(ErrorKind::kAllZeroSignal, "EDC of a zero-energy signal");
  }
  return energy;
}

// Unclamped dB level of E[n] / E[0]; -inf for zero tail energy.
double level_db(double energy, double total) {
  return energy > 0.0 ? 10.0 * std::log10(energy / total)
                      : -std::numeric_limits<double>::infinity();
}

}  // namespace

void validate(const LossConfig& config) {
  if (!(config.lambda >= 0.0)) throw Error(ErrorKind::kInvalidConfig, "lambda must be >= 0");
  if (!(config.cfg_dropout >= 0.0 && config.cfg_dropout <= 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "cfg dropout must lie in [0, 1]");
  }
}

std::vector<double> edc_weights(std::span<const double> target, double floor_db) {
  const std::vector<double> energy = tail_energy(target);
  std::vector<double> weights(target.size(), 0.0);
  std::size_t count = 0;
  for (std::size_t n = 0; n < target.size(); ++n) {
    if (level_db(energy[n], energy[0]) >= floor_db) {
      weights[n] = 1.0;
      ++count;
    }
  }
  for (double& w : weights) w /= static_cast<double>(count);  // count >= 1 (n = 0)
  return weights;
}

double mse_loss(std::span<const double> prediction, std::span<const double> target) {
  require_same_size(prediction, target);
  double acc = 0.0;
  for (std::size_t n = 0; n < target.size(); ++n) {
    const double d = target[n] - prediction[n];
    acc += d * d;
  }
  return acc / static_cast<double>(target.size());
}

double edc_loss(std::span<const double> prediction, std::span<const double> target,
                double floor_db) {
  require_same_size(prediction, target);
  const std::vector<double> weights = edc_weights(target, floor_db);
  const Edc predicted = compute_edc(prediction, floor_db);
  const Edc reference = compute_edc(target, floor_db);
  double acc = 0.0;
  for (std::size_t n = 0; n < target.size(); ++n) {
    if (weights[n] != 0.0) {
      acc += weights[n] * std::abs(predicted.values_db[n] - reference.values_db[n]);
    }
  }
  return acc;
}

LossTerms loss_terms(std::span<const double> prediction, std::span<const double> target,
                     const LossConfig& config) {
  LossTerms terms;
  terms.mse = mse_loss(prediction, target);
  if (config.lambda != 0.0) terms.edc = edc_loss(prediction, target, config.edc_floor_db);
  terms.total = terms.mse + config.lambda * terms.edc;
  return terms;
}

double total_loss(std::span<const double> prediction, std::span<const double> target,
                  const LossConfig& config) {
  return loss_terms(prediction, target, config).total;
}

LossGradient mse_loss_gradient(std::span<const double> prediction,
                               std::span<const double> target) {
  LossGradient out;
  out.value = mse_loss(prediction, target);
  out.grad.resize(target.size());
  const double scale = 2.0 / static_cast<double>(target.size());
  for (std::size_t n = 0; n < target.size(); ++n) {
    out.grad[n] = scale * (prediction[n] - target[n]);
  }
  return out;
}

LossGradient edc_loss_gradient(std::span<const double> prediction,
                               std::span<const double> target, double floor_db) {
  require_same_size(prediction, target);
  const std::size_t size = target.size();
  const std::vector<double> weights = edc_weights(target, floor_db);
  const std::vector<double> energy = tail_energy(prediction);
  const Edc reference = compute_edc(target, floor_db);
  const double total = energy[0];

  // a[n] = dL / dEhat_dB[n]; zero where the prediction sits on the floor.
  std::vector<double> a(size, 0.0);
  LossGradient out;
  for (std::size_t n = 0; n < size; ++n) {
    if (weights[n] == 0.0) continue;
    const double raw = n == 0 ? 0.0 : level_db(energy[n], total);
    const double clamped = std::max(raw, floor_db);
    const double diff = clamped - reference.values_db[n];
    out.value += weights[n] * std::abs(diff);
    if (raw > floor_db && diff != 0.0) a[n] = weights[n] * (diff > 0.0 ? 1.0 : -1.0);
  }

  // dEhat_dB[n]/dx[k] = (10 / ln 10) (2 x[k] [k >= n] / E[n] - 2 x[k] / E[0])
  double a_total = 0.0;
  for (double v : a) a_total += v;
  const double c = 20.0 / std::numbers::ln10;
  out.grad.resize(size);
  double prefix = 0.0;
  for (std::size_t k = 0; k < size; ++k) {
    if (a[k] != 0.0) prefix += a[k] / energy[k];
    out.grad[k] = c * prediction[k] * (prefix - a_total / total);
  }
  return out;
}

}  // namespace rirforge
