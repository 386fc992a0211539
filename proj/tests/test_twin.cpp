#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "htwin/checkpoint.hpp"
#include "htwin/errors.hpp"
#include "htwin/twin.hpp"
#include "test_util.hpp"

using namespace htwin;

namespace {

struct Plate {
  Mesh mesh;
  SimulationSeries linear;
  SimulationSeries nonlinear;
};

const Plate& plate() {
  static const Plate p = [] {
    Plate out;
    out.mesh = label_nodes(generate_regular_grid(6, 6, 1.0, 1.0), BoundarySegment{Side::Top, {}, {}},
                           BoundarySegment{Side::Left, {}, {}});
    Material mat;
    mat.k0 = 0.5;
    SolverOptions opts;
    opts.mesh_id = "plate";
    const LoadField load = strip_load(out.mesh, 15000.0);
    out.linear = solve_linear_transient(out.mesh, mat, load, 30, 0.025, opts);
    out.nonlinear = solve_nonlinear_transient(out.mesh, mat, load, 30, 0.025, opts);
    return out;
  }();
  return p;
}

TrainOptions tiny_options() {
  TrainOptions o;
  o.hidden_dim = 8;
  o.message_passing_steps = 2;
  o.epochs = 3;
  o.batch_frames = 4;
  o.train_fraction = 0.5;
  o.seed = 5;
  return o;
}

std::vector<TrainingCase> plate_cases() {
  const Plate& p = plate();
  return {TrainingCase{&p.mesh, &p.linear, &p.nonlinear, {}}};
}

SimulationSeries series_of(std::vector<std::vector<double>> frames, double dt = 0.025) {
  SimulationSeries s;
  s.frames = std::move(frames);
  s.dt = dt;
  return s;
}

// Decoder that ignores its input and emits `value` in normalized space.
void make_constant(GnnModel& model, double value) {
  model.decoder.layers.back().weight.value.setZero();
  model.decoder.layers.back().bias.value.setConstant(value);
}

}  // namespace

TEST_CASE("gap targets") {
  const auto y = make_gap_targets(series_of({{300.0, 310.0}, {305.0, 320.0}}),
                                  series_of({{300.0, 311.5}, {306.0, 330.0}}));
  REQUIRE(y.size() == 2);
  CHECK(y[0] == std::vector<double>{0.0, 1.5});
  CHECK(y[1] == std::vector<double>{1.0, 10.0});

  CHECK_THROWS_AS(make_gap_targets(series_of({{1.0}}), series_of({{1.0}, {2.0}})), DataError);
  CHECK_THROWS_AS(make_gap_targets(series_of({{1.0}}, 0.1), series_of({{1.0}}, 0.2)), DataError);
  SimulationSeries other = series_of({{1.0}});
  other.mesh_id = "elsewhere";
  CHECK_THROWS_AS(make_gap_targets(series_of({{1.0}}), other), DataError);
}

TEST_CASE("increment targets") {
  const auto y = make_increment_targets(series_of({{300.0, 298.0}, {310.0, 298.0}, {310.0, 299.0}}));
  REQUIRE(y.size() == 2);
  CHECK(y[0][0] == doctest::Approx(400.0));
  CHECK(y[0][1] == 0.0);
  CHECK(y[1][0] == 0.0);
  CHECK(y[1][1] == doctest::Approx(40.0));
  CHECK_THROWS_AS(make_increment_targets(series_of({{300.0}})), DataError);
  CHECK_THROWS_AS(make_increment_targets(series_of({{300.0}, {301.0}}, 0.0)), DataError);
}

TEST_CASE("train options json") {
  TrainOptions o = tiny_options();
  o.noise_std = 10.0;
  o.learning_rate = 2e-4;
  o.cosine_lr = true;
  o.drop_last = true;
  CHECK(train_options_from_json(train_options_to_json(o)) == o);
  const TrainOptions partial = train_options_from_json(R"({"epochs": 7})");
  CHECK(partial.epochs == 7);
  CHECK(partial.hidden_dim == TrainOptions{}.hidden_dim);
  CHECK_THROWS_AS(train_options_from_json("{"), ConfigError);
  CHECK_THROWS_AS(train_options_from_json(R"({"epochs": "many"})"), ConfigError);
}

TEST_CASE("training rejects bad setups") {
  const auto cases = plate_cases();
  auto with = [](auto edit) {
    TrainOptions o = tiny_options();
    edit(o);
    return o;
  };
  CHECK_THROWS_AS(train_hybrid(cases, with([](TrainOptions& o) { o.epochs = 0; })), ConfigError);
  CHECK_THROWS_AS(train_hybrid(cases, with([](TrainOptions& o) { o.batch_frames = 0; })), ConfigError);
  CHECK_THROWS_AS(train_hybrid(cases, with([](TrainOptions& o) { o.train_fraction = 0.0; })), ConfigError);
  CHECK_THROWS_AS(train_hybrid(cases, with([](TrainOptions& o) { o.train_fraction = 1.5; })), ConfigError);
  CHECK_THROWS_AS(train_hybrid(cases, with([](TrainOptions& o) { o.noise_std = -1.0; })), ConfigError);
  CHECK_THROWS_AS(train_hybrid(cases, with([](TrainOptions& o) { o.clip_norm = 0.0; })), ConfigError);
  CHECK_THROWS_AS(train_hybrid(cases, with([](TrainOptions& o) { o.learning_rate = 0.0; })), ConfigError);
  CHECK_THROWS_AS(train_hybrid({}, tiny_options()), ConfigError);

  const Plate& p = plate();
  const std::vector<TrainingCase> no_linear{TrainingCase{&p.mesh, nullptr, &p.nonlinear, {}}};
  CHECK_THROWS_AS(train_hybrid(no_linear, tiny_options()), ConfigError);
  CHECK_NOTHROW(train_mgn(no_linear, with([](TrainOptions& o) { o.epochs = 1; })));
  const std::vector<TrainingCase> bad_frame{TrainingCase{&p.mesh, &p.linear, &p.nonlinear, {0, 31}}};
  CHECK_THROWS_AS(train_hybrid(bad_frame, tiny_options()), ConfigError);
  // The increment series has one frame fewer, so the last frame is out of range for MGN.
  const std::vector<TrainingCase> last{TrainingCase{&p.mesh, &p.linear, &p.nonlinear, {30}}};
  CHECK_NOTHROW(train_hybrid(last, with([](TrainOptions& o) { o.epochs = 1; })));
  CHECK_THROWS_AS(train_mgn(last, tiny_options()), ConfigError);
  const Mesh small = generate_regular_grid(3, 3, 1.0, 1.0);
  const std::vector<TrainingCase> mismatch{TrainingCase{&small, &p.linear, &p.nonlinear, {}}};
  CHECK_THROWS_AS(train_hybrid(mismatch, tiny_options()), DataError);
}

TEST_CASE("training is deterministic in the seed") {
  const auto cases = plate_cases();
  TrainedModel a = train_hybrid(cases, tiny_options());
  TrainedModel b = train_hybrid(cases, tiny_options());
  CHECK(a.report.epoch_loss == b.report.epoch_loss);
  CHECK(a.scalers == b.scalers);
  CHECK(checkpoint_to_json(a.model, a.scalers, "gap") == checkpoint_to_json(b.model, b.scalers, "gap"));
  CHECK(a.report.to_json(false) == b.report.to_json(false));
  CHECK(a.report.to_json(false).find("wall_seconds") == std::string::npos);

  TrainOptions other = tiny_options();
  other.seed = 6;
  TrainedModel c = train_hybrid(cases, other);
  CHECK(c.report.epoch_loss != a.report.epoch_loss);

  // Annealing leaves the first epoch alone and changes the later ones.
  TrainOptions annealed = tiny_options();
  annealed.cosine_lr = true;
  TrainedModel f = train_hybrid(cases, annealed);
  CHECK(f.report.epoch_loss.front() == a.report.epoch_loss.front());
  CHECK(f.report.epoch_loss.back() != a.report.epoch_loss.back());

  TrainOptions noisy = tiny_options();
  noisy.noise_std = 5.0;
  TrainedModel d = train_mgn(cases, noisy);
  TrainedModel e = train_mgn(cases, noisy);
  CHECK(d.report.epoch_loss == e.report.epoch_loss);
  CHECK(d.report.kind == "mgn");
}

TEST_CASE("training bookkeeping") {
  const Plate& p = plate();
  const std::vector<TrainingCase> cases{TrainingCase{&p.mesh, &p.linear, &p.nonlinear, {3, 9, 20}}};
  TrainOptions o = tiny_options();
  o.batch_frames = 2;
  o.epochs = 4;
  const TrainedModel m = train_hybrid(cases, o);
  CHECK(m.report.train_samples == 3);
  CHECK(m.report.optimizer_steps == 8);
  CHECK(m.report.epoch_loss.size() == 4);

  o.drop_last = true;
  CHECK(train_hybrid(cases, o).report.optimizer_steps == 4);
  o.batch_frames = 3;
  CHECK(train_hybrid(cases, o).report.optimizer_steps == 4);

  // Scalers are fit on the listed frames only.
  double lo = 1e9, hi = -1e9, glo = 1e9, ghi = -1e9;
  for (int f : {3, 9, 20}) {
    for (int v = 0; v < p.mesh.num_nodes(); ++v) {
      lo = std::min(lo, p.linear.frames[f][v]);
      hi = std::max(hi, p.linear.frames[f][v]);
      const double g = p.nonlinear.frames[f][v] - p.linear.frames[f][v];
      glo = std::min(glo, g);
      ghi = std::max(ghi, g);
    }
  }
  CHECK(m.scalers.temperature.min[0] == lo);
  CHECK(m.scalers.temperature.max[0] == hi);
  CHECK(m.scalers.target.min[0] == glo);
  CHECK(m.scalers.target.max[0] == ghi);
}

TEST_CASE("hybrid training reduces the loss") {
  TrainOptions o = tiny_options();
  o.epochs = 40;
  o.train_fraction = 1.0;
  const TrainedModel m = train_hybrid(plate_cases(), o);
  CHECK(m.report.epoch_loss.back() < 0.2 * m.report.epoch_loss.front());
}

TEST_CASE("corrected prediction") {
  const Plate& p = plate();
  GnnModel model = init_model(3, 8, 2);
  FeatureScalers sc;
  sc.temperature = nn::MinMaxScaler{{298.0}, {400.0}};
  sc.edge = nn::minmax_fit(build_edge_features(p.mesh, mesh_to_edges(p.mesh)));
  sc.target = nn::MinMaxScaler{{0.0}, {10.0}};

  SUBCASE("stateless and frame-wise") {
    const auto a = predict_corrected(model, sc, p.linear.frames[10], p.mesh);
    predict_corrected(model, sc, p.linear.frames[25], p.mesh);
    CHECK(predict_corrected(model, sc, p.linear.frames[10], p.mesh) == a);
    const SimulationSeries all = predict_corrected_series(model, sc, p.linear, p.mesh);
    CHECK(all.num_frames() == p.linear.num_frames());
    for (int f : {0, 10, 30}) {
      const auto one = predict_corrected(model, sc, p.linear.frames[f], p.mesh);
      for (int v = 0; v < p.mesh.num_nodes(); ++v) CHECK(all.frames[f][v] == doctest::Approx(one[v]).epsilon(1e-12));
    }
  }
  SUBCASE("adds the decoded gap to the linear frame") {
    make_constant(model, 0.5);
    const auto y = predict_corrected(model, sc, p.linear.frames[12], p.mesh);
    for (int v = 0; v < p.mesh.num_nodes(); ++v) CHECK(y[v] == doctest::Approx(p.linear.frames[12][v] + 5.0));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(predict_corrected(model, sc, std::vector<double>(3, 300.0), p.mesh), DataError);
    const Mesh small = generate_regular_grid(3, 3, 1.0, 1.0);
    CHECK_THROWS_AS(predict_corrected_series(model, sc, p.linear, small), DataError);
  }
}

TEST_CASE("autoregressive rollout") {
  const Plate& p = plate();
  GnnModel model = init_model(4, 8, 2);
  FeatureScalers sc;
  sc.temperature = nn::MinMaxScaler{{298.0}, {400.0}};
  sc.edge = nn::minmax_fit(build_edge_features(p.mesh, mesh_to_edges(p.mesh)));
  sc.target = nn::MinMaxScaler{{0.0}, {40.0}};
  make_constant(model, 0.25);  // 10 K/s everywhere

  const std::vector<double> start(p.mesh.num_nodes(), 298.0);
  const SimulationSeries r = rollout_mgn(model, sc, start, p.mesh, 8, 0.5);
  REQUIRE(r.num_frames() == 9);
  CHECK(r.frames[0] == start);
  for (int step = 0; step <= 8; ++step) {
    for (int v = 0; v < p.mesh.num_nodes(); ++v) {
      const double expected = p.mesh.groups[v] == NodeGroup::DirichletBC ? 298.0 : 298.0 + 5.0 * step;
      CHECK(r.frames[step][v] == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(rollout_mgn(model, sc, start, p.mesh, 0, 0.5), ConfigError);
  CHECK_THROWS_AS(rollout_mgn(model, sc, start, p.mesh, 3, 0.0), ConfigError);
  CHECK_THROWS_AS(rollout_mgn(model, sc, std::vector<double>(4, 298.0), p.mesh, 3, 0.5), DataError);

  make_constant(model, 1e308);
  CHECK_THROWS_AS(rollout_mgn(model, sc, start, p.mesh, 3, 0.5), NumericError);
}

TEST_CASE("checkpoint round trip") {
  const TrainedModel m = train_hybrid(plate_cases(), tiny_options());
  GnnModel model = m.model;
  test::TempDir dir;
  const auto path = dir.path / "model.json";
  save_checkpoint(model, m.scalers, "gap", path);
  Checkpoint back = load_checkpoint(path);
  CHECK(back.target_kind == "gap");
  CHECK(back.scalers == m.scalers);
  CHECK(back.model.config == model.config);
  const Plate& p = plate();
  CHECK(predict_corrected(back.model, back.scalers, p.linear.frames[7], p.mesh) ==
        predict_corrected(model, m.scalers, p.linear.frames[7], p.mesh));
  CHECK(checkpoint_to_json(back.model, back.scalers, "gap") == checkpoint_to_json(model, m.scalers, "gap"));

  CHECK_THROWS_AS(checkpoint_from_json("{}"), DataError);
  CHECK_THROWS_AS(checkpoint_from_json("not json"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "missing.json"), IoError);
}
