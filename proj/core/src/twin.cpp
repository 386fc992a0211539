#include "htwin/twin.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "htwin/datasets.hpp"
#include "htwin/errors.hpp"
#include "htwin/optim.hpp"
#include "htwin/rng.hpp"
#include "json.hpp"

namespace htwin {

using nlohmann::json;
using nn::Matrix;

FrameTargets make_gap_targets(const SimulationSeries& linear, const SimulationSeries& nonlinear) {
  if (linear.num_frames() != nonlinear.num_frames() ||
      linear.num_nodes() != nonlinear.num_nodes()) {
    throw DataError("gap targets: series have different frame or node counts");
  }
  if (linear.dt != nonlinear.dt) throw DataError("gap targets: series have different dt");
  if (linear.mesh_id != nonlinear.mesh_id) {
    throw DataError("gap targets: series belong to different meshes");
  }
  FrameTargets out(linear.frames.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const auto& a = linear.frames[t];
    const auto& b = nonlinear.frames[t];
    if (a.size() != b.size()) throw DataError("gap targets: ragged frame");
    out[t].resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[t][i] = b[i] - a[i];
  }
  return out;
}

FrameTargets make_increment_targets(const SimulationSeries& nonlinear) {
  if (nonlinear.num_frames() < 2) {
    throw DataError("increment targets: need at least two frames");
  }
  if (!(nonlinear.dt > 0.0)) throw DataError("increment targets: dt must be positive");
  FrameTargets out(nonlinear.frames.size() - 1);
  for (std::size_t t = 0; t < out.size(); ++t) {
    const auto& a = nonlinear.frames[t];
    const auto& b = nonlinear.frames[t + 1];
    out[t].resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[t][i] = (b[i] - a[i]) / nonlinear.dt;
  }
  return out;
}

std::string train_options_to_json(const TrainOptions& o) {
  json j = {{"hidden_dim", o.hidden_dim},
            {"message_passing_steps", o.message_passing_steps},
            {"epochs", o.epochs},
            {"batch_frames", o.batch_frames},
            {"learning_rate", o.learning_rate},
            {"clip_norm", o.clip_norm},
            {"noise_std", o.noise_std},
            {"train_fraction", o.train_fraction},
            {"cosine_lr", o.cosine_lr},
            {"drop_last", o.drop_last},
            {"seed", o.seed}};
  return j.dump();
}

TrainOptions train_options_from_json(const std::string& text, TrainOptions o) {
  try {
    const json j = json::parse(text);
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("hidden_dim", o.hidden_dim);
    get("message_passing_steps", o.message_passing_steps);
    get("epochs", o.epochs);
    get("batch_frames", o.batch_frames);
    get("learning_rate", o.learning_rate);
    get("clip_norm", o.clip_norm);
    get("noise_std", o.noise_std);
    get("train_fraction", o.train_fraction);
    get("cosine_lr", o.cosine_lr);
    get("drop_last", o.drop_last);
    get("seed", o.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train options: ") + e.what());
  }
  return o;
}

std::string TrainReport::to_json(bool include_timing) const {
  json j;
  j["kind"] = kind;
  j["options"] = json::parse(train_options_to_json(options));
  j["epoch_loss"] = epoch_loss;
  j["train_samples"] = train_samples;
  j["optimizer_steps"] = optimizer_steps;
  if (include_timing) j["wall_seconds"] = wall_seconds;
  j["metrics"] = metrics;
  return j.dump(1);
}

GraphTemplate make_graph_template(const Mesh& mesh, const nn::MinMaxScaler& edge_scaler) {
  GraphTemplate g;
  const EdgeList edges = mesh_to_edges(mesh);
  g.receivers.reserve(edges.size());
  g.senders.reserve(edges.size());
  for (const DirectedEdge& e : edges) {
    g.receivers.push_back(e.i);
    g.senders.push_back(e.j);
  }
  g.edge_features = edge_scaler.apply(build_edge_features(mesh, edges));
  g.groups = mesh.groups;
  return g;
}

GraphSample make_sample(const GraphTemplate& graph, std::span<const double> temperatures,
                        const nn::MinMaxScaler& temperature_scaler) {
  GraphSample s;
  s.node_features = build_node_features(temperatures, graph.groups, temperature_scaler);
  s.edge_features = graph.edge_features;
  s.receivers = graph.receivers;
  s.senders = graph.senders;
  return s;
}

namespace {

enum class Kind { Hybrid, Mgn };

struct Sample {
  int case_index = 0;
  const std::vector<double>* input = nullptr;
  GraphSample graph;  // features at the clean input, normalized targets
};

void validate_options(const TrainOptions& o) {
  if (o.epochs < 1) throw ConfigError("training: epochs must be at least 1");
  if (o.batch_frames < 1) throw ConfigError("training: batch_frames must be at least 1");
  if (!(o.train_fraction > 0.0 && o.train_fraction <= 1.0)) {
    throw ConfigError("training: train_fraction must lie in (0, 1]");
  }
  if (!(o.noise_std >= 0.0)) throw ConfigError("training: noise_std must be non-negative");
  if (!(o.clip_norm > 0.0)) throw ConfigError("training: clip_norm must be positive");
  if (!(o.learning_rate > 0.0)) throw ConfigError("training: learning_rate must be positive");
}

void keep_heap_resident() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

TrainedModel train(Kind kind, std::span<const TrainingCase> cases, const TrainOptions& opts) {
  validate_options(opts);
  keep_heap_resident();
  const auto started = std::chrono::steady_clock::now();
  if (cases.empty()) throw ConfigError("training: no training cases");

  TrainedModel result;
  result.report.kind = kind == Kind::Hybrid ? "hybrid" : "mgn";
  result.report.options = opts;

  // Per-case inputs, targets and selected frames.
  std::vector<FrameTargets> targets(cases.size());
  std::vector<std::vector<int>> frames(cases.size());
  std::vector<const std::vector<std::vector<double>>*> inputs(cases.size());
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const TrainingCase& tc = cases[c];
    if (!tc.mesh || !tc.nonlinear || (kind == Kind::Hybrid && !tc.linear)) {
      throw ConfigError("training: incomplete training case");
    }
    if (tc.nonlinear->num_nodes() != tc.mesh->num_nodes()) {
      throw DataError("training: series node count does not match its mesh");
    }
    if (kind == Kind::Hybrid) {
      targets[c] = make_gap_targets(*tc.linear, *tc.nonlinear);
      inputs[c] = &tc.linear->frames;
    } else {
      targets[c] = make_increment_targets(*tc.nonlinear);
      inputs[c] = &tc.nonlinear->frames;
    }
    const int available = static_cast<int>(targets[c].size());
    frames[c] = tc.frames.empty() ? split_frames(available, opts.train_fraction, opts.seed).train
                                  : tc.frames;
    for (int f : frames[c]) {
      if (f < 0 || f >= available) throw ConfigError("training: frame index out of range");
    }
  }

  // Scalers see training data only.
  FeatureScalers& sc = result.scalers;
  std::vector<Matrix> raw_edges(cases.size());
  for (std::size_t c = 0; c < cases.size(); ++c) {
    raw_edges[c] = build_edge_features(*cases[c].mesh, mesh_to_edges(*cases[c].mesh));
    sc.edge.observe(raw_edges[c]);
    for (int f : frames[c]) {
      sc.temperature.observe((*inputs[c])[f], 0);
      sc.target.observe(targets[c][f], 0);
    }
  }

  std::vector<GraphTemplate> templates;
  templates.reserve(cases.size());
  for (const TrainingCase& tc : cases) templates.push_back(make_graph_template(*tc.mesh, sc.edge));

  std::vector<Sample> samples;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    for (int f : frames[c]) {
      Sample s;
      s.case_index = static_cast<int>(c);
      s.input = &(*inputs[c])[f];
      s.graph = make_sample(templates[c], *s.input, sc.temperature);
      const auto& y = targets[c][f];
      s.graph.targets.resize(static_cast<Eigen::Index>(y.size()), 1);
      for (std::size_t i = 0; i < y.size(); ++i) {
        s.graph.targets(static_cast<Eigen::Index>(i), 0) = sc.target.apply(y[i], 0);
      }
      samples.push_back(std::move(s));
    }
  }
  if (samples.empty()) throw ConfigError("training: empty training set");
  result.report.train_samples = static_cast<int>(samples.size());

  result.model = init_model(opts.seed, opts.hidden_dim, opts.message_passing_steps);
  std::vector<nn::Tensor2D*> params = result.model.parameters();
  nn::AdamState adam;
  adam.lr = opts.learning_rate;

  Rng order_rng(opts.seed ^ 0x6a09e667f3bcc908ULL);
  Rng noise_rng(opts.seed ^ 0xbb67ae8584caa73bULL);
  std::vector<int> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::vector<GraphSample> noisy;
  std::vector<const GraphSample*> batch;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    if (opts.cosine_lr) {
      adam.lr = 0.5 * opts.learning_rate *
                (1.0 + std::cos(std::numbers::pi * epoch / static_cast<double>(opts.epochs)));
    }
    order_rng.shuffle(std::span<int>(order));
    double loss_sum = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opts.batch_frames)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(opts.batch_frames));
      if (opts.drop_last && start > 0 && stop - start < static_cast<std::size_t>(opts.batch_frames)) {
        break;
      }
      batch.clear();
      noisy.clear();
      noisy.reserve(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const Sample& s = samples[order[k]];
        if (opts.noise_std > 0.0) {
          GraphSample g = s.graph;
          const auto& t = *s.input;
          for (std::size_t i = 0; i < t.size(); ++i) {
            g.node_features(static_cast<Eigen::Index>(i), 0) =
                sc.temperature.apply(t[i] + noise_rng.normal(0.0, opts.noise_std), 0);
          }
          noisy.push_back(std::move(g));
          batch.push_back(&noisy.back());
        } else {
          batch.push_back(&s.graph);
        }
      }
      const GraphSample merged = batch_graphs(batch);
      nn::zero_grads(params);
      nn::Tape tape;
      const ForwardResult fwd = gnn_forward(tape, result.model, merged);
      const nn::Var loss = nn::mse_loss(fwd.output, merged.targets);
      const double lv = loss.value()(0, 0);
      if (!std::isfinite(lv)) {
        throw NumericError("training: non-finite loss at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      nn::clip_gradients(params, opts.clip_norm);
      nn::adam_step(adam, params);
      loss_sum += lv;
      ++n_batches;
      ++result.report.optimizer_steps;
    }
    result.report.epoch_loss.push_back(loss_sum / n_batches);
  }
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<double> decode(const Matrix& out, const nn::MinMaxScaler& target) {
  std::vector<double> y(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) y[i] = target.invert(out(i, 0), 0);
  return y;
}

}  // namespace

TrainedModel train_hybrid(std::span<const TrainingCase> cases, const TrainOptions& options) {
  return train(Kind::Hybrid, cases, options);
}

TrainedModel train_mgn(std::span<const TrainingCase> cases, const TrainOptions& options) {
  return train(Kind::Mgn, cases, options);
}

std::vector<double> predict_corrected(GnnModel& model, const FeatureScalers& scalers,
                                      std::span<const double> linear_frame, const Mesh& mesh) {
  if (static_cast<int>(linear_frame.size()) != mesh.num_nodes()) {
    throw DataError("predict_corrected: frame does not match the mesh");
  }
  const GraphTemplate g = make_graph_template(mesh, scalers.edge);
  std::vector<double> y =
      decode(gnn_predict(model, make_sample(g, linear_frame, scalers.temperature)),
             scalers.target);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += linear_frame[i];
  return y;
}

SimulationSeries predict_corrected_series(GnnModel& model, const FeatureScalers& scalers,
                                          const SimulationSeries& linear, const Mesh& mesh) {
  if (linear.num_nodes() != mesh.num_nodes()) {
    throw DataError("predict_corrected: series does not match the mesh");
  }
  const GraphTemplate g = make_graph_template(mesh, scalers.edge);
  SimulationSeries out = linear;
  for (auto& frame : out.frames) {
    const std::vector<double> y =
        decode(gnn_predict(model, make_sample(g, frame, scalers.temperature)), scalers.target);
    for (std::size_t i = 0; i < y.size(); ++i) frame[i] += y[i];
  }
  return out;
}

SimulationSeries rollout_mgn(GnnModel& model, const FeatureScalers& scalers,
                             std::span<const double> initial_frame, const Mesh& mesh,
                             int n_steps, double dt, double t_dirichlet) {
  if (n_steps < 1) throw ConfigError("rollout: n_steps must be at least 1");
  if (!(dt > 0.0)) throw ConfigError("rollout: dt must be positive");
  if (static_cast<int>(initial_frame.size()) != mesh.num_nodes()) {
    throw DataError("rollout: initial frame does not match the mesh");
  }
  const GraphTemplate g = make_graph_template(mesh, scalers.edge);
  SimulationSeries out;
  out.dt = dt;
  out.t_init = initial_frame.empty() ? t_dirichlet : initial_frame[0];
  out.t_dirichlet = t_dirichlet;
  out.frames.emplace_back(initial_frame.begin(), initial_frame.end());
  for (int step = 1; step <= n_steps; ++step) {
    const std::vector<double>& state = out.frames.back();
    const std::vector<double> rate =
        decode(gnn_predict(model, make_sample(g, state, scalers.temperature)), scalers.target);
    std::vector<double> next(state.size());
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = mesh.groups[i] == NodeGroup::DirichletBC ? t_dirichlet : state[i] + dt * rate[i];
      if (!std::isfinite(next[i])) {
        throw NumericError("rollout: non-finite state at step " + std::to_string(step));
      }
    }
    out.frames.push_back(std::move(next));
  }
  return out;
}

}  // namespace htwin
