#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "htwin/fem.hpp"
#include "htwin/gnn.hpp"
#include "htwin/mesh.hpp"

namespace htwin {

using FrameTargets = std::vector<std::vector<double>>;

/// T_nl(t) - T_lin(t) per frame.
FrameTargets make_gap_targets(const SimulationSeries& linear, const SimulationSeries& nonlinear);

/// (T(t + dt) - T(t)) / dt for frames 0..n-2.
FrameTargets make_increment_targets(const SimulationSeries& nonlinear);

/// One simulated design as seen by the trainer.
struct TrainingCase {
  const Mesh* mesh = nullptr;
  const SimulationSeries* linear = nullptr;     // unused by the MGN baseline
  const SimulationSeries* nonlinear = nullptr;
  std::vector<int> frames;                      // empty: draw a fresh split
};

struct TrainOptions {
  int hidden_dim = 64;
  int message_passing_steps = 10;
  int epochs = 200;
  int batch_frames = 13;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
  double noise_std = 0.0;  // Kelvin, added to input temperatures
  double train_fraction = 0.1;
  bool cosine_lr = false;  // anneal learning_rate to 0 over the epochs
  bool drop_last = false;  // skip a trailing partial batch
  std::uint64_t seed = 1;

  friend bool operator==(const TrainOptions&, const TrainOptions&) = default;
};

std::string train_options_to_json(const TrainOptions& options);
TrainOptions train_options_from_json(const std::string& text, TrainOptions defaults = {});

struct TrainReport {
  std::string kind;  // "hybrid" or "mgn"
  TrainOptions options;
  std::vector<double> epoch_loss;
  int train_samples = 0;
  long optimizer_steps = 0;
  double wall_seconds = 0.0;
  std::map<std::string, double> metrics;

  std::string to_json(bool include_timing = true) const;
};

struct TrainedModel {
  GnnModel model;
  FeatureScalers scalers;
  TrainReport report;
};

/// Learns the linear-to-nonlinear gap from linear-solver input frames.
TrainedModel train_hybrid(std::span<const TrainingCase> cases, const TrainOptions& options);

/// Autoregressive baseline learning temperature increments from ground-truth frames.
TrainedModel train_mgn(std::span<const TrainingCase> cases, const TrainOptions& options);

/// Precomputed connectivity and scaled edge features of one mesh.
struct GraphTemplate {
  std::vector<int> receivers;
  std::vector<int> senders;
  nn::Matrix edge_features;
  std::vector<NodeGroup> groups;
};

GraphTemplate make_graph_template(const Mesh& mesh, const nn::MinMaxScaler& edge_scaler);

GraphSample make_sample(const GraphTemplate& graph, std::span<const double> temperatures,
                        const nn::MinMaxScaler& temperature_scaler);

/// T_lin + denormalized prediction, one forward pass.
std::vector<double> predict_corrected(GnnModel& model, const FeatureScalers& scalers,
                                      std::span<const double> linear_frame, const Mesh& mesh);

/// Corrects every frame of a linear series independently.
SimulationSeries predict_corrected_series(GnnModel& model, const FeatureScalers& scalers,
                                          const SimulationSeries& linear, const Mesh& mesh);

/// T(t + dt) = T(t) + dt * denormalized prediction, Dirichlet nodes re-pinned
/// to t_dirichlet after each step. Returns n_steps + 1 frames.
SimulationSeries rollout_mgn(GnnModel& model, const FeatureScalers& scalers,
                             std::span<const double> initial_frame, const Mesh& mesh,
                             int n_steps, double dt, double t_dirichlet = 298.0);

}  // namespace htwin
