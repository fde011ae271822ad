#include "rirforge/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rirforge/error.hpp"
#include "rirforge/losses.hpp"

namespace rirforge {
namespace {

void require_lengths(std::span<const double> a, std::span<const double> b, std::size_t k80) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kShapeMismatch, "prediction and target differ in length");
  }
  if (k80 > a.size()) throw Error(ErrorKind::kInvalidArgument, "K80 exceeds the signal length");
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

std::size_t k80_for(int sample_rate, double window_seconds) {
  return static_cast<std::size_t>(std::llround(window_seconds * sample_rate));
}

double rer_early(std::span<const double> prediction, std::span<const double> target,
                 std::span<const double> conditioner, std::size_t k80) {
  require_lengths(prediction, target, k80);
  if (conditioner.size() != target.size()) {
    throw Error(ErrorKind::kShapeMismatch, "conditioner differs in length");
  }
  double predicted = 0.0;
  double reference = 0.0;
  for (std::size_t n = 0; n < k80; ++n) {
    const double r_hat = prediction[n] - conditioner[n];
    const double r = target[n] - conditioner[n];
    predicted += r_hat * r_hat;
    reference += r * r;
  }
  if (reference == 0.0) {
    throw Error(ErrorKind::kZeroTargetResidual, "target residual has no energy before K80");
  }
  if (predicted == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(predicted / reference);
}

double rmse_late(std::span<const double> prediction, std::span<const double> target,
                 std::size_t k80) {
  require_lengths(prediction, target, k80);
  if (k80 == target.size()) {
    throw Error(ErrorKind::kInvalidArgument, "no samples after K80");
  }
  double acc = 0.0;
  for (std::size_t n = k80; n < target.size(); ++n) {
    const double d = prediction[n] - target[n];
    acc += d * d;
  }
  const double rms = std::sqrt(acc / static_cast<double>(target.size() - k80));
  if (rms == 0.0) return kRmseReportFloorDb;
  return std::max(20.0 * std::log10(rms), kRmseReportFloorDb);
}

double edc_mae(std::span<const double> prediction, std::span<const double> target,
               double floor_db) {
  return edc_loss(prediction, target, floor_db);
}

ItemMetrics evaluate_item(std::string id, std::span<const double> prediction,
                          std::span<const double> target,
                          std::span<const double> conditioner, std::size_t k80,
                          double floor_db) {
  ItemMetrics item;
  item.id = std::move(id);
  try {
    const double rer = rer_early(prediction, target, conditioner, k80);
    if (std::isfinite(rer)) item.rer_early_db = rer;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kZeroTargetResidual) throw;
  }
  item.rmse_late_db = rmse_late(prediction, target, k80);
  item.edc_mae_db = edc_mae(prediction, target, floor_db);
  return item;
}

MetricSummary summarize(std::span<const std::optional<double>> values) {
  MetricSummary summary;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v && std::isfinite(*v)) {
      sum += *v;
      ++summary.count;
    } else {
      ++summary.excluded;
    }
  }
  if (summary.count == 0) {
    summary.mean = std::numeric_limits<double>::quiet_NaN();
    summary.std = std::numeric_limits<double>::quiet_NaN();
    return summary;
  }
  summary.mean = sum / static_cast<double>(summary.count);
  double var = 0.0;
  for (const auto& v : values) {
    if (v && std::isfinite(*v)) var += (*v - summary.mean) * (*v - summary.mean);
  }
  summary.std = std::sqrt(var / static_cast<double>(summary.count));
  return summary;
}

MetricReport build_report(std::vector<ItemMetrics> items) {
  MetricReport report;
  report.items = std::move(items);
  std::vector<std::optional<double>> rer;
  std::vector<std::optional<double>> rmse;
  std::vector<std::optional<double>> edc;
  for (const ItemMetrics& item : report.items) {
    rer.push_back(item.rer_early_db);
    rmse.push_back(item.rmse_late_db);
    edc.push_back(item.edc_mae_db);
  }
  report.rer_early_db = summarize(rer);
  report.rmse_late_db = summarize(rmse);
  report.edc_mae_db = summarize(edc);
  return report;
}

std::string report_json(const MetricReport& report) {
  const auto summary = [](const MetricSummary& s) {
    nlohmann::ordered_json j;
    j["mean"] = s.count > 0 ? nlohmann::ordered_json(s.mean) : nlohmann::ordered_json();
    j["std"] = s.count > 0 ? nlohmann::ordered_json(s.std) : nlohmann::ordered_json();
    j["count"] = s.count;
    j["excluded"] = s.excluded;
    return j;
  };
  nlohmann::ordered_json j;
  j["summary"]["rer_early_db"] = summary(report.rer_early_db);
  j["summary"]["rmse_late_db"] = summary(report.rmse_late_db);
  j["summary"]["edc_mae_db"] = summary(report.edc_mae_db);
  j["items"] = nlohmann::ordered_json::array();
  for (const ItemMetrics& item : report.items) {
    nlohmann::ordered_json row;
    row["id"] = item.id;
    row["rer_early_db"] =
        item.rer_early_db ? nlohmann::ordered_json(*item.rer_early_db) : nlohmann::ordered_json();
    row["rmse_late_db"] = item.rmse_late_db;
    row["edc_mae_db"] = item.edc_mae_db;
    j["items"].push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string report_csv(const MetricReport& report) {
  std::ostringstream out;
  out << "id,rer_early_db,rmse_late_db,edc_mae_db\n";
  for (const ItemMetrics& item : report.items) {
    out << item.id << ',' << (item.rer_early_db ? format_double(*item.rer_early_db) : "")
        << ',' << format_double(item.rmse_late_db) << ',' << format_double(item.edc_mae_db)
        << '\n';
  }
  return out.str();
}

std::vector<ItemMetrics> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::vector<ItemMetrics> items;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() != 4) throw Error(ErrorKind::kIoError, "malformed metrics row: " + line);
    ItemMetrics item;
    item.id = fields[0];
    if (!fields[1].empty()) item.rer_early_db = std::stod(fields[1]);
    item.rmse_late_db = std::stod(fields[2]);
    item.edc_mae_db = std::stod(fields[3]);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace rirforge
