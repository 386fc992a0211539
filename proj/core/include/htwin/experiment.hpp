#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "htwin/datasets.hpp"
#include "htwin/metrics.hpp"
#include "htwin/twin.hpp"

namespace htwin {

struct CalibrationResult {
  double gap = 0.0;  // final-frame max node relative gap, as a fraction
  double lower = 0.10;
  double upper = 0.25;
  bool pass = false;
};

CalibrationResult calibration_check(const DatasetBundle& bundle);

/// A dataset named by preset, given inline, or read from a saved bundle.
struct DatasetSource {
  std::optional<std::filesystem::path> bundle_dir;
  DatasetConfig config;
};

struct ExperimentSpec {
  std::string name = "experiment";
  std::string kind = "hybrid";  // or "mgn"
  DatasetSource train;
  std::vector<DatasetSource> evaluate;  // empty: held-out frames / eval designs of `train`
  TrainOptions model;                   // seed field is overridden per seed
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::filesystem::path output;         // empty: nothing written
  int threads = 1;
  bool export_fields = true;
};

ExperimentSpec experiment_spec_from_json(const std::string& text, Scale default_scale = Scale::Desk);
std::string experiment_spec_to_json(const ExperimentSpec& spec);

struct TargetResult {
  std::string target;  // "<dataset>/<design>"
  std::vector<int> eval_frames;
  MetricRecord corrected;
  MetricRecord uncorrected;  // linear solver against ground truth
  double corrected_final_max_rel = 0.0;
  double uncorrected_final_max_rel = 0.0;
  double corrected_final_mean_rel = 0.0;
  double uncorrected_final_mean_rel = 0.0;
  std::vector<double> error_curve;  // per-frame RMSE of the prediction, Kelvin
  std::vector<double> final_prediction;

  double mape_reduction() const { return corrected.mape / uncorrected.mape; }
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  TrainReport report;
  std::vector<TargetResult> targets;
};

struct TargetAggregate {
  AggregateRecord corrected;
  AggregateRecord uncorrected;
};

struct ExperimentResult {
  std::string name;
  std::string kind;
  std::vector<SeedResult> seeds;
  std::map<std::string, TargetAggregate> aggregates;
  bool ok = false;
  std::string failure;

  std::string report_json() const;  // no wall-clock fields
};

/// generate -> train per seed -> evaluate -> aggregate -> export.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Same, on bundles already in memory (`evaluate` is ignored in favor of `eval_bundles`).
ExperimentResult run_experiment_on(const ExperimentSpec& spec, const DatasetBundle& train,
                                   const std::vector<const DatasetBundle*>& eval_bundles);

DatasetBundle materialize(const DatasetSource& source, int threads);

}  // namespace htwin
