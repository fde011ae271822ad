#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rirforge/signal.hpp"

namespace rirforge {

inline constexpr double kConditionerWindowSeconds = 0.080;
inline constexpr double kRmseReportFloorDb = -120.0;

// First sample after the conditioner window: round(0.080 * fs).
std::size_t k80_for(int sample_rate, double window_seconds = kConditionerWindowSeconds);

// 10 log10(sum_{n<K80} (x_hat - c)^2 / sum_{n<K80} (x - c)^2). Returns -inf
// when the predicted residual is zero. Throws kZeroTargetResidual when the
// target residual is zero.
double rer_early(std::span<const double> prediction, std::span<const double> target,
                 std::span<const double> conditioner, std::size_t k80);

// 20 log10 of the RMS error over n >= K80, floored at -120 dB.
double rmse_late(std::span<const double> prediction, std::span<const double> target,
                 std::size_t k80);

// Mean absolute EDC difference over the target's above-floor region.
double edc_mae(std::span<const double> prediction, std::span<const double> target,
               double floor_db = kDefaultEdcFloorDb);

struct ItemMetrics {
  std::string id;
  std::optional<double> rer_early_db;  // nullopt when undefined
  double rmse_late_db = 0.0;
  double edc_mae_db = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
  std::size_t excluded = 0;
};

struct MetricReport {
  std::vector<ItemMetrics> items;
  MetricSummary rer_early_db;
  MetricSummary rmse_late_db;
  MetricSummary edc_mae_db;
};

// Metrics for one completed RIR. An undefined RER (zero target or predicted
// residual) is stored as nullopt.
ItemMetrics evaluate_item(std::string id, std::span<const double> prediction,
                          std::span<const double> target,
                          std::span<const double> conditioner, std::size_t k80,
                          double floor_db = kDefaultEdcFloorDb);

// Mean and std over finite values; non-finite and missing values are counted
// as excluded.
MetricSummary summarize(std::span<const std::optional<double>> values);

MetricReport build_report(std::vector<ItemMetrics> items);

std::string report_json(const MetricReport& report);
std::string report_csv(const MetricReport& report);
// Parses the per-item CSV written by report_csv.
std::vector<ItemMetrics> parse_report_csv(const std::string& text);

}  // namespace rirforge
