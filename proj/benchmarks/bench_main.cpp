#include <benchmark/benchmark.h>

#include "htwin/delaunay.hpp"
#include "htwin/fem.hpp"
#include "htwin/gnn.hpp"
#include "htwin/optim.hpp"
#include "htwin/rng.hpp"
#include "htwin/twin.hpp"

using namespace htwin;

namespace {

Mesh plate(int n) {
  return label_nodes(generate_regular_grid(n, n, 1.0, 1.0), BoundarySegment{Side::Top, {}, {}},
                     BoundarySegment{Side::Left, {}, {}});
}

void BM_Delaunay(benchmark::State& state) {
  Rng rng(1);
  std::vector<Point2> pts(static_cast<std::size_t>(state.range(0)));
  for (Point2& p : pts) p = {rng.uniform(), rng.uniform()};
  for (auto _ : state) benchmark::DoNotOptimize(delaunay_triangulate(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Delaunay)->Arg(250)->Arg(1000)->Arg(4000)->Complexity();

void BM_LinearTransient(benchmark::State& state) {
  const Mesh mesh = plate(static_cast<int>(state.range(0)));
  const LoadField load = strip_load(mesh, 15000.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_linear_transient(mesh, Material{}, load, 20, 0.025));
  }
}
BENCHMARK(BM_LinearTransient)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_NonlinearTransient(benchmark::State& state) {
  const Mesh mesh = plate(static_cast<int>(state.range(0)));
  const LoadField load = strip_load(mesh, 15000.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_nonlinear_transient(mesh, Material{}, load, 20, 0.025));
  }
}
BENCHMARK(BM_NonlinearTransient)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

// One optimizer step on a 13-frame batch of a 15x15 plate.
void BM_GnnTrainStep(benchmark::State& state) {
  const Mesh mesh = plate(15);
  const int hidden = static_cast<int>(state.range(0));
  GnnModel model = init_model(1, hidden, 10);
  const nn::MinMaxScaler edges = nn::minmax_fit(build_edge_features(mesh, mesh_to_edges(mesh)));
  const GraphTemplate g = make_graph_template(mesh, edges);
  Rng rng(2);
  std::vector<GraphSample> frames;
  for (int f = 0; f < 13; ++f) {
    std::vector<double> t(mesh.num_nodes());
    for (double& v : t) v = rng.uniform(298.0, 400.0);
    GraphSample s = make_sample(g, t, nn::MinMaxScaler{{298.0}, {400.0}});
    s.targets = nn::Matrix::Random(mesh.num_nodes(), 1);
    frames.push_back(std::move(s));
  }
  std::vector<const GraphSample*> ptrs;
  for (const GraphSample& s : frames) ptrs.push_back(&s);
  const GraphSample batch = batch_graphs(ptrs);
  std::vector<nn::Tensor2D*> params = model.parameters();
  nn::AdamState adam;
  for (auto _ : state) {
    nn::zero_grads(params);
    nn::Tape tape;
    const nn::Var loss = nn::mse_loss(gnn_forward(tape, model, batch).output, batch.targets);
    tape.backward(loss);
    nn::clip_gradients(params, 1.0);
    nn::adam_step(adam, params);
  }
}
BENCHMARK(BM_GnnTrainStep)->Arg(8)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_GnnInference(benchmark::State& state) {
  const Mesh mesh = plate(static_cast<int>(state.range(0)));
  GnnModel model = init_model(1, 64, 10);
  const nn::MinMaxScaler edges = nn::minmax_fit(build_edge_features(mesh, mesh_to_edges(mesh)));
  const GraphSample s = make_sample(make_graph_template(mesh, edges),
                                    std::vector<double>(mesh.num_nodes(), 320.0),
                                    nn::MinMaxScaler{{298.0}, {400.0}});
  for (auto _ : state) benchmark::DoNotOptimize(gnn_predict(model, s));
}
BENCHMARK(BM_GnnInference)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
