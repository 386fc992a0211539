#include "htwin/gnn.hpp"

#include <array>
#include <cmath>

#include "htwin/errors.hpp"

namespace htwin {

using nn::Matrix;
using nn::Tape;
using nn::Var;

Matrix build_node_features(std::span<const double> frame, std::span<const NodeGroup> groups,
                           const nn::MinMaxScaler& temperature_scaler) {
  if (frame.size() != groups.size()) {
    throw DataError("build_node_features: frame length does not match node count");
  }
  const auto n = static_cast<Eigen::Index>(frame.size());
  Matrix features = Matrix::Zero(n, kNodeFeatureDim);
  for (Eigen::Index v = 0; v < n; ++v) {
    const int g = static_cast<int>(groups[v]);
    if (g < 0 || g >= kNodeGroupCount) throw DataError("build_node_features: unknown group label");
    features(v, 0) = temperature_scaler.apply(frame[v], 0);
    features(v, 1 + g) = 1.0;
  }
  return features;
}

Matrix build_edge_features(const Mesh& mesh, const EdgeList& edges) {
  Matrix features(static_cast<Eigen::Index>(edges.size()), kEdgeFeatureDim);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Point2 d = mesh.nodes.at(edges[e].i) - mesh.nodes.at(edges[e].j);
    const auto r = static_cast<Eigen::Index>(e);
    features(r, 0) = d.x;
    features(r, 1) = d.y;
    features(r, 2) = std::sqrt(d.x * d.x + d.y * d.y);
  }
  return features;
}

GraphSample batch_graphs(std::span<const GraphSample* const> graphs) {
  if (graphs.empty()) throw DataError("batch_graphs: empty batch");
  Eigen::Index nodes = 0, edges = 0, target_rows = 0;
  for (const GraphSample* g : graphs) {
    nodes += g->num_nodes();
    edges += g->num_edges();
    target_rows += g->targets.rows();
  }
  const bool with_targets = target_rows == nodes && target_rows > 0;
  GraphSample out;
  out.node_features.resize(nodes, graphs[0]->node_features.cols());
  out.edge_features.resize(edges, graphs[0]->edge_features.cols());
  if (with_targets) out.targets.resize(nodes, graphs[0]->targets.cols());
  out.receivers.reserve(edges);
  out.senders.reserve(edges);
  Eigen::Index node_off = 0, edge_off = 0;
  for (const GraphSample* g : graphs) {
    out.node_features.middleRows(node_off, g->num_nodes()) = g->node_features;
    out.edge_features.middleRows(edge_off, g->num_edges()) = g->edge_features;
    if (with_targets) out.targets.middleRows(node_off, g->num_nodes()) = g->targets;
    for (int e = 0; e < g->num_edges(); ++e) {
      out.receivers.push_back(g->receivers[e] + static_cast<int>(node_off));
      out.senders.push_back(g->senders[e] + static_cast<int>(node_off));
    }
    node_off += g->num_nodes();
    edge_off += g->num_edges();
  }
  return out;
}

std::vector<nn::Tensor2D*> GnnModel::parameters() {
  std::vector<nn::Tensor2D*> out;
  auto append = [&out](nn::MlpParams& m) {
    for (nn::Tensor2D* p : m.parameters()) out.push_back(p);
  };
  append(node_encoder);
  append(edge_encoder);
  for (ProcessorLayer& layer : processor) {
    append(layer.edge_update);
    append(layer.node_update);
  }
  append(decoder);
  return out;
}

std::size_t GnnModel::parameter_count() const {
  std::size_t count = 0;
  for (const nn::Tensor2D* p : const_cast<GnnModel*>(this)->parameters()) {
    count += static_cast<std::size_t>(p->value.size());
  }
  return count;
}

void GnnModel::validate() const {
  const int h = config.hidden_dim;
  if (config.message_passing_steps < 1) throw ShapeError("gnn: K must be >= 1");
  if (static_cast<int>(processor.size()) != config.message_passing_steps) {
    throw ShapeError("gnn: processor depth does not match K");
  }
  auto check = [](const nn::MlpParams& m, int in, int out, const char* what) {
    m.validate();
    if (m.input_dim() != in || m.output_dim() != out) {
      throw ShapeError(std::string("gnn: ") + what + " dimensions do not chain");
    }
  };
  check(node_encoder, config.node_feature_dim, h, "node encoder");
  check(edge_encoder, config.edge_feature_dim, h, "edge encoder");
  for (const ProcessorLayer& layer : processor) {
    check(layer.edge_update, 3 * h, h, "edge update");
    check(layer.node_update, 2 * h, h, "node update");
  }
  check(decoder, h, config.output_dim, "decoder");
}

GnnModel init_model(std::uint64_t seed, int hidden_dim, int message_passing_steps,
                    int node_feature_dim, int edge_feature_dim, int output_dim) {
  if (hidden_dim <= 0 || message_passing_steps < 1 || node_feature_dim <= 0 ||
      edge_feature_dim <= 0 || output_dim <= 0) {
    throw ParameterError("init_model: dimensions must be positive and K >= 1");
  }
  Rng rng(seed);
  const int h = hidden_dim;
  GnnModel model;
  model.config = {hidden_dim, message_passing_steps, node_feature_dim, edge_feature_dim,
                  output_dim};
  const auto relu = nn::Activation::ReLU;
  model.node_encoder = nn::make_mlp({node_feature_dim, h, h, h}, relu, true, rng);
  model.edge_encoder = nn::make_mlp({edge_feature_dim, h, h, h}, relu, true, rng);
  for (int k = 0; k < message_passing_steps; ++k) {
    ProcessorLayer layer;
    layer.edge_update = nn::make_mlp({3 * h, h, h, h}, relu, true, rng);
    layer.node_update = nn::make_mlp({2 * h, h, h, h}, relu, true, rng);
    model.processor.push_back(std::move(layer));
  }
  model.decoder = nn::make_mlp({h, h, h, output_dim}, relu, false, rng);
  return model;
}

ForwardResult gnn_forward(Tape& tape, GnnModel& model, const GraphSample& sample) {
  const GnnConfig& cfg = model.config;
  if (sample.node_features.cols() != cfg.node_feature_dim ||
      sample.edge_features.cols() != cfg.edge_feature_dim) {
    throw ShapeError("gnn_forward: feature widths do not match the model");
  }
  if (sample.senders.size() != sample.receivers.size() ||
      static_cast<Eigen::Index>(sample.receivers.size()) != sample.edge_features.rows()) {
    throw ShapeError("gnn_forward: edge arrays are inconsistent");
  }
  const int n = sample.num_nodes();
  for (std::size_t e = 0; e < sample.receivers.size(); ++e) {
    if (sample.receivers[e] < 0 || sample.receivers[e] >= n || sample.senders[e] < 0 ||
        sample.senders[e] >= n) {
      throw ShapeError("gnn_forward: edge references a missing node");
    }
  }
  const int h = cfg.hidden_dim;

  ForwardResult result;
  Var node_h = nn::mlp_forward(tape, model.node_encoder, tape.constant(sample.node_features));
  Var edge_h = nn::mlp_forward(tape, model.edge_encoder, tape.constant(sample.edge_features));
  result.encoded_nodes = node_h;

  for (ProcessorLayer& layer : model.processor) {
    // First edge-update layer applied block-wise: [h_e, h_vi, h_vj] W =
    // h_e W_e + (h_v W_i)[receivers] + (h_v W_j)[senders].
    Var w = tape.parameter(layer.edge_update.layers.front().weight);
    Var product = nn::add_gathered(nn::matmul(edge_h, nn::slice_rows(w, 0, h)),
                                   nn::matmul(node_h, nn::slice_rows(w, h, h)), sample.receivers,
                                   nn::matmul(node_h, nn::slice_rows(w, 2 * h, h)), sample.senders);
    edge_h = nn::add(edge_h, nn::mlp_forward_from_product(tape, layer.edge_update, product));

    Var aggregated = nn::scatter_mean(edge_h, sample.receivers, n);
    const std::array<Var, 2> parts{node_h, aggregated};
    node_h = nn::add(node_h, nn::mlp_forward(tape, layer.node_update, nn::concat_cols(parts)));
  }
  result.processed_nodes = node_h;
  result.output = nn::mlp_forward(tape, model.decoder, node_h);
  return result;
}

Matrix gnn_predict(GnnModel& model, const GraphSample& sample) {
  Tape tape(false);
  return gnn_forward(tape, model, sample).output.value();
}

}  // namespace htwin
