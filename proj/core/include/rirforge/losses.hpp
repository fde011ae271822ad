#pragma once

#include <span>
#include <vector>

#include "rirforge/signal.hpp"

namespace rirforge {

struct LossConfig {
  double lambda = 0.0;  // EDC term scale
  double edc_floor_db = kDefaultEdcFloorDb;
  double cfg_dropout = 0.2;
};

// Throws kInvalidConfig unless lambda >= 0 and 0 <= cfg_dropout <= 1.
void validate(const LossConfig& config);

// Samples where the target's unclamped EDC is at or above the floor, each
// weighted 1 / |mask|; zero elsewhere.
std::vector<double> edc_weights(std::span<const double> target, double floor_db);

double mse_loss(std::span<const double> prediction, std::span<const double> target);
double edc_loss(std::span<const double> prediction, std::span<const double> target,
                double floor_db = kDefaultEdcFloorDb);

struct LossTerms {
  double mse = 0.0;
  double edc = 0.0;
  double total = 0.0;
};

// The EDC term is skipped (reported as 0) when lambda == 0.
LossTerms loss_terms(std::span<const double> prediction, std::span<const double> target,
                     const LossConfig& config);
double total_loss(std::span<const double> prediction, std::span<const double> target,
                  const LossConfig& config);

struct LossGradient {
  double value = 0.0;
  std::vector<double> grad;  // d value / d prediction
};

LossGradient mse_loss_gradient(std::span<const double> prediction,
                               std::span<const double> target);
LossGradient edc_loss_gradient(std::span<const double> prediction,
                               std::span<const double> target,
                               double floor_db = kDefaultEdcFloorDb);

}  // namespace rirforge
