#include "htwin/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "htwin/errors.hpp"

namespace htwin {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw DataError(std::string(what) + ": length mismatch");
  if (a.empty()) throw DataError(std::string(what) + ": empty input");
}

void check_series(const SimulationSeries& a, const SimulationSeries& b, const char* what) {
  if (a.num_frames() != b.num_frames() || a.num_nodes() != b.num_nodes()) {
    throw DataError(std::string(what) + ": series shapes differ");
  }
}

std::vector<int> all_frames(const SimulationSeries& s, std::span<const int> frames) {
  if (!frames.empty()) {
    for (int f : frames) {
      if (f < 0 || f >= s.num_frames()) throw DataError("metrics: frame index out of range");
    }
    return {frames.begin(), frames.end()};
  }
  std::vector<int> out(static_cast<std::size_t>(s.num_frames()));
  for (int i = 0; i < s.num_frames(); ++i) out[i] = i;
  return out;
}

}  // namespace

double mae(std::span<const double> gt, std::span<const double> predicted) {
  check_lengths(gt, predicted, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) s += std::abs(gt[i] - predicted[i]);
  return s / static_cast<double>(gt.size());
}

double mape(std::span<const double> gt, std::span<const double> predicted) {
  check_lengths(gt, predicted, "mape");
  double s = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == 0.0) throw NumericError("mape: ground truth contains a zero");
    s += std::abs((gt[i] - predicted[i]) / gt[i]);
  }
  return 100.0 * s / static_cast<double>(gt.size());
}

double max_relative_error(std::span<const double> gt, std::span<const double> predicted) {
  check_lengths(gt, predicted, "max_relative_error");
  double m = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == 0.0) throw NumericError("max_relative_error: ground truth contains a zero");
    m = std::max(m, std::abs((gt[i] - predicted[i]) / gt[i]));
  }
  return m;
}

double mean_relative_error(std::span<const double> gt, std::span<const double> predicted) {
  return mape(gt, predicted) / 100.0;
}

double rmse_normalized(const SimulationSeries& gt, const SimulationSeries& predicted,
                       const SimulationSeries& reference, const nn::MinMaxScaler& scaler,
                       std::span<const int> frames) {
  check_series(gt, predicted, "rmse_normalized");
  check_series(gt, reference, "rmse_normalized");
  double s = 0.0;
  long n = 0;
  for (int f : all_frames(gt, frames)) {
    for (int i = 0; i < gt.num_nodes(); ++i) {
      const double ref = reference.frames[f][i];
      const double d = scaler.apply(gt.frames[f][i] - ref, 0) -
                       scaler.apply(predicted.frames[f][i] - ref, 0);
      s += d * d;
      ++n;
    }
  }
  if (n == 0) throw DataError("rmse_normalized: no data");
  return std::sqrt(s / static_cast<double>(n));
}

std::vector<double> error_accumulation_curve(const SimulationSeries& gt,
                                             const SimulationSeries& predicted) {
  check_series(gt, predicted, "error_accumulation_curve");
  std::vector<double> curve;
  curve.reserve(gt.frames.size());
  for (int f = 0; f < gt.num_frames(); ++f) {
    double s = 0.0;
    for (int i = 0; i < gt.num_nodes(); ++i) {
      const double d = gt.frames[f][i] - predicted.frames[f][i];
      s += d * d;
    }
    curve.push_back(std::sqrt(s / std::max(1, gt.num_nodes())));
  }
  return curve;
}

MetricRecord series_metrics(const SimulationSeries& gt, const SimulationSeries& predicted,
                            std::span<const int> frames) {
  check_series(gt, predicted, "series_metrics");
  const std::vector<int> fs = all_frames(gt, frames);
  MetricRecord r;
  for (int f : fs) {
    r.mae += mae(gt.frames[f], predicted.frames[f]);
    r.mape += mape(gt.frames[f], predicted.frames[f]);
  }
  r.mae /= static_cast<double>(fs.size());
  r.mape /= static_cast<double>(fs.size());
  r.scope = Scope::PerSimulation;
  return r;
}

Stat mean_std(std::span<const double> values) {
  if (values.empty()) throw DataError("mean_std: no values");
  Stat s;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) {
    s.mean = values[0];
    return s;
  }
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

AggregateRecord aggregate_over_seeds(std::span<const MetricRecord> records) {
  if (records.empty()) throw DataError("aggregate_over_seeds: no records");
  std::vector<double> v(records.size());
  AggregateRecord a;
  a.n_seeds = static_cast<int>(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) v[i] = records[i].mae;
  a.mae = mean_std(v);
  for (std::size_t i = 0; i < records.size(); ++i) v[i] = records[i].mape;
  a.mape = mean_std(v);
  for (std::size_t i = 0; i < records.size(); ++i) v[i] = records[i].rmse;
  a.rmse = mean_std(v);
  return a;
}

}  // namespace htwin
