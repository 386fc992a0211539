#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "htwin/fem.hpp"
#include "htwin/scaler.hpp"

namespace htwin {

/// Mean absolute error, Kelvin.
double mae(std::span<const double> gt, std::span<const double> predicted);

/// Mean absolute percentage error relative to the ground truth, percent.
double mape(std::span<const double> gt, std::span<const double> predicted);

/// Largest |gt - predicted| / |gt| over nodes (a fraction, not percent).
double max_relative_error(std::span<const double> gt, std::span<const double> predicted);

/// Mean of |gt - predicted| / |gt| over nodes (a fraction).
double mean_relative_error(std::span<const double> gt, std::span<const double> predicted);

/// RMSE of the gap (gt - reference) against (predicted - reference) in the
/// scaler's normalized space, over all nodes of all listed frames.
double rmse_normalized(const SimulationSeries& gt, const SimulationSeries& predicted,
                       const SimulationSeries& reference, const nn::MinMaxScaler& scaler,
                       std::span<const int> frames = {});

/// Per-frame RMSE in Kelvin.
std::vector<double> error_accumulation_curve(const SimulationSeries& gt,
                                             const SimulationSeries& predicted);

enum class Scope { PerFrame, PerSimulation, PerRun };

struct MetricRecord {
  double mae = 0.0;   // K
  double mape = 0.0;  // percent
  double rmse = 0.0;  // normalized space
  Scope scope = Scope::PerSimulation;
  std::uint64_t seed = 0;
};

/// Per-frame MAE/MAPE averaged over the listed frames (all frames when empty).
MetricRecord series_metrics(const SimulationSeries& gt, const SimulationSeries& predicted,
                            std::span<const int> frames = {});

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
};

struct AggregateRecord {
  Stat mae;
  Stat mape;
  Stat rmse;
  int n_seeds = 0;
};

Stat mean_std(std::span<const double> values);
AggregateRecord aggregate_over_seeds(std::span<const MetricRecord> records);

}  // namespace htwin
