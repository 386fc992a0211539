#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "htwin/autodiff.hpp"
#include "htwin/mesh.hpp"
#include "htwin/mlp.hpp"
#include "htwin/scaler.hpp"

namespace htwin {

/// Normalization statistics shared by featurization and decoding.
struct FeatureScalers {
  nn::MinMaxScaler temperature = nn::empty_scaler(1);  // node input channel, Kelvin
  nn::MinMaxScaler edge = nn::empty_scaler(3);         // [dx, dy, |d|], meters
  nn::MinMaxScaler target = nn::empty_scaler(1);       // regression target

  friend bool operator==(const FeatureScalers&, const FeatureScalers&) = default;
};

/// Featurized graph: one row per node / directed edge.
struct GraphSample {
  nn::Matrix node_features;  // [normalized temperature, one-hot(3)]
  nn::Matrix edge_features;  // [x_i - x_j, ||x_i - x_j||], possibly normalized
  std::vector<int> receivers;  // i of edge (i, j); messages aggregate here
  std::vector<int> senders;    // j of edge (i, j)
  nn::Matrix targets;          // optional, n x out

  int num_nodes() const { return static_cast<int>(node_features.rows()); }
  int num_edges() const { return static_cast<int>(receivers.size()); }
};

inline constexpr int kNodeFeatureDim = 1 + kNodeGroupCount;
inline constexpr int kEdgeFeatureDim = 3;

nn::Matrix build_node_features(std::span<const double> frame, std::span<const NodeGroup> groups,
                               const nn::MinMaxScaler& temperature_scaler);

/// Raw (meters) edge features, one row per directed edge.
nn::Matrix build_edge_features(const Mesh& mesh, const EdgeList& edges);

/// Disjoint union of graphs; node indices of later graphs are offset.
GraphSample batch_graphs(std::span<const GraphSample* const> graphs);

struct GnnConfig {
  int hidden_dim = 64;
  int message_passing_steps = 10;
  int node_feature_dim = kNodeFeatureDim;
  int edge_feature_dim = kEdgeFeatureDim;
  int output_dim = 1;

  friend bool operator==(const GnnConfig&, const GnnConfig&) = default;
};

struct ProcessorLayer {
  nn::MlpParams edge_update;  // [h_e, h_vi, h_vj] -> hidden
  nn::MlpParams node_update;  // [h_v, mean of incoming h_e] -> hidden
};

/// Encoder / processor / decoder network with independent weights per step.
struct GnnModel {
  GnnConfig config;
  nn::MlpParams node_encoder;
  nn::MlpParams edge_encoder;
  std::vector<ProcessorLayer> processor;
  nn::MlpParams decoder;

  /// Fixed enumeration order used by checkpoints and the optimizer:
  /// node encoder, edge encoder, (edge update, node update) per step, decoder.
  std::vector<nn::Tensor2D*> parameters();
  std::size_t parameter_count() const;
  void validate() const;
};

GnnModel init_model(std::uint64_t seed, int hidden_dim = 64, int message_passing_steps = 10,
                    int node_feature_dim = kNodeFeatureDim,
                    int edge_feature_dim = kEdgeFeatureDim, int output_dim = 1);

struct ForwardResult {
  nn::Var encoded_nodes;    // h_v after the encoder
  nn::Var processed_nodes;  // h_v after K message-passing steps
  nn::Var output;           // decoded per-node prediction
};

ForwardResult gnn_forward(nn::Tape& tape, GnnModel& model, const GraphSample& sample);

/// Inference without gradient recording.
nn::Matrix gnn_predict(GnnModel& model, const GraphSample& sample);

}  // namespace htwin
