#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "htwin/errors.hpp"
#include "htwin/experiment.hpp"
#include "htwin/exporters.hpp"
#include "htwin/hash.hpp"
#include "htwin/metrics.hpp"
#include "test_util.hpp"
#include "json.hpp"

using namespace htwin;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SimulationSeries series_of(std::vector<std::vector<double>> frames) {
  SimulationSeries s;
  s.frames = std::move(frames);
  s.dt = 0.1;
  return s;
}

DatasetConfig tiny_dataset() {
  DatasetConfig c = make_preset("A2", Scale::Desk);
  c.name = "tiny";
  c.mesh.grid_nodes = 5;
  c.n_steps = 20;
  c.seeds = {1, 2};
  c.train_fraction = 0.5;
  return c;
}

ExperimentSpec tiny_experiment() {
  ExperimentSpec s;
  s.name = "tiny";
  s.train.config = tiny_dataset();
  s.model.hidden_dim = 8;
  s.model.message_passing_steps = 2;
  s.model.epochs = 3;
  s.model.batch_frames = 4;
  s.model.train_fraction = 0.5;
  s.seeds = {1, 2};
  return s;
}

}  // namespace

TEST_CASE("pointwise metrics") {
  const std::vector<double> gt{100.0, 200.0};
  CHECK(mape(gt, std::vector<double>{101.5, 201.0}) == doctest::Approx(1.0));
  CHECK(mape(std::vector<double>{100.0}, std::vector<double>{101.5}) == doctest::Approx(1.5));
  CHECK(mape(std::vector<double>{200.0}, std::vector<double>{199.0}) == doctest::Approx(0.5));
  CHECK(mae(gt, std::vector<double>{101.5, 201.0}) == doctest::Approx(1.25));
  CHECK(max_relative_error(gt, std::vector<double>{90.0, 210.0}) == doctest::Approx(0.1));
  CHECK(mean_relative_error(gt, std::vector<double>{90.0, 210.0}) == doctest::Approx(0.075));
  CHECK(mape(gt, gt) == 0.0);

  CHECK_THROWS_AS(mae(gt, std::vector<double>{1.0}), DataError);
  CHECK_THROWS_AS(mape(std::vector<double>{}, std::vector<double>{}), DataError);
  CHECK_THROWS_AS(mape(std::vector<double>{0.0}, std::vector<double>{1.0}), NumericError);
  CHECK_THROWS_AS(max_relative_error(std::vector<double>{0.0}, std::vector<double>{1.0}), NumericError);
}

TEST_CASE("series metrics") {
  const SimulationSeries gt = series_of({{100.0, 100.0}, {200.0, 200.0}});
  const SimulationSeries pred = series_of({{101.0, 99.0}, {204.0, 200.0}});
  const MetricRecord all = series_metrics(gt, pred);
  CHECK(all.mae == doctest::Approx((1.0 + 2.0) / 2.0));
  CHECK(all.mape == doctest::Approx((1.0 + 1.0) / 2.0));
  const std::vector<int> only_last{1};
  CHECK(series_metrics(gt, pred, only_last).mae == doctest::Approx(2.0));
  CHECK_THROWS_AS(series_metrics(gt, pred, std::vector<int>{2}), DataError);
  CHECK_THROWS_AS(series_metrics(gt, series_of({{1.0}})), DataError);

  const std::vector<double> curve = error_accumulation_curve(gt, pred);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0] == doctest::Approx(1.0));
  CHECK(curve[1] == doctest::Approx(std::sqrt(8.0)));

  // Gap space: reference 100 everywhere, scaler over [0, 10].
  const SimulationSeries ref = series_of({{100.0, 100.0}, {100.0, 100.0}});
  const nn::MinMaxScaler sc{{0.0}, {10.0}};
  const SimulationSeries g2 = series_of({{105.0, 100.0}, {110.0, 100.0}});
  const SimulationSeries p2 = series_of({{104.0, 100.0}, {110.0, 102.0}});
  CHECK(rmse_normalized(g2, p2, ref, sc) == doctest::Approx(std::sqrt((0.01 + 0.04) / 4.0)));
  CHECK(rmse_normalized(g2, g2, ref, sc) == 0.0);
}

TEST_CASE("aggregation over seeds") {
  const std::vector<double> v{1.0, 3.0};
  const Stat s = mean_std(v);
  CHECK(s.mean == 2.0);
  CHECK(s.std == 1.0);
  const Stat c = mean_std(std::vector<double>{0.1, 0.1, 0.1});
  CHECK(c.mean == 0.1);
  CHECK(c.std == 0.0);
  CHECK_THROWS_AS(mean_std(std::vector<double>{}), DataError);

  std::vector<MetricRecord> r(2);
  r[0].mape = 1.0;
  r[1].mape = 3.0;
  r[0].mae = r[1].mae = 4.0;
  const AggregateRecord a = aggregate_over_seeds(r);
  CHECK(a.n_seeds == 2);
  CHECK(a.mape.mean == 2.0);
  CHECK(a.mape.std == 1.0);
  CHECK(a.mae.std == 0.0);
  CHECK_THROWS_AS(aggregate_over_seeds(std::vector<MetricRecord>{}), DataError);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  test::TempDir dir;
  std::ofstream(dir.path / "abc.txt", std::ios::binary) << "abc";
  CHECK(sha256_file(dir.path / "abc.txt") == sha256_hex("abc"));
  CHECK_THROWS_AS(sha256_file(dir.path / "missing"), IoError);
}

TEST_CASE("vtk export") {
  const Mesh mesh = generate_regular_grid(2, 2, 1.0, 1.0);
  test::TempDir dir;
  const auto path = dir.path / "sub" / "field.vtk";
  export_field_vtk(mesh, std::vector<double>{1.0, 2.0, 3.0, 4.5}, path, "temperature");
  const std::string text = slurp(path);
  CHECK(text.rfind("# vtk DataFile Version 3.0\ntemperature\nASCII\nDATASET UNSTRUCTURED_GRID\n", 0) == 0);
  CHECK(text.find("POINTS 4 double") != std::string::npos);
  CHECK(text.find("CELLS 2 8") != std::string::npos);
  CHECK(text.find("CELL_TYPES 2\n5\n5\n") != std::string::npos);
  CHECK(text.find("SCALARS temperature double 1\nLOOKUP_TABLE default\n1\n2\n3\n4.5\n") != std::string::npos);
  CHECK_THROWS_AS(export_field_vtk(mesh, std::vector<double>{1.0}, path), DataError);

  export_error_fields(mesh, std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 2, 3.9}, dir.path / "e");
  CHECK(std::filesystem::exists(dir.path / "e_error.vtk"));
  CHECK(std::filesystem::exists(dir.path / "e_log_error.vtk"));
}

TEST_CASE("log error field") {
  const std::vector<double> e{0.0, -0.01, 100.0};
  const std::vector<double> l = log_error_field(e);
  CHECK(l[0] == doctest::Approx(-2.0));
  CHECK(l[1] == doctest::Approx(-2.0));
  CHECK(l[2] == doctest::Approx(2.0));
}

TEST_CASE("csv round trip") {
  test::TempDir dir;
  Table t;
  t.header = {"frame", "rmse"};
  t.rows = {{0.0, 0.125}, {1.0, 1.0 / 3.0}};
  export_csv(t, dir.path / "c.csv");
  const Table back = read_csv(dir.path / "c.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);

  Table bad = t;
  bad.rows.push_back({1.0});
  CHECK_THROWS_AS(export_csv(bad, dir.path / "bad.csv"), DataError);
  std::ofstream(dir.path / "junk.csv") << "a,b\n1,zz\n";
  CHECK_THROWS_AS(read_csv(dir.path / "junk.csv"), DataError);
  std::ofstream(dir.path / "empty.csv") << "";
  CHECK_THROWS_AS(read_csv(dir.path / "empty.csv"), DataError);
  CHECK_THROWS_AS(read_csv(dir.path / "none.csv"), IoError);
}

TEST_CASE("calibration check") {
  DatasetConfig c = tiny_dataset();
  c.material.beta = 0.0;
  const CalibrationResult flat = calibration_check(build_dataset(c));
  CHECK(flat.gap == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_FALSE(flat.pass);
  CHECK(flat.lower == 0.10);
  CHECK(flat.upper == 0.25);
}

TEST_CASE("experiment spec json") {
  const ExperimentSpec s = experiment_spec_from_json(
      R"({"name": "x", "kind": "mgn", "dataset": "A1", "evaluate": ["A3", {"bundle": "/tmp/b"}],
          "model": {"hidden_dim": 16, "epochs": 5}, "noise_std": 10.0, "seeds": [4]})");
  CHECK(s.kind == "mgn");
  CHECK(s.train.config == make_preset("A1", Scale::Desk));
  CHECK(s.evaluate.size() == 2);
  CHECK(s.evaluate[1].bundle_dir == std::filesystem::path("/tmp/b"));
  CHECK(s.model.hidden_dim == 16);
  CHECK(s.model.noise_std == 10.0);
  CHECK(s.seeds == std::vector<std::uint64_t>{4});
  const ExperimentSpec again = experiment_spec_from_json(experiment_spec_to_json(s));
  CHECK(again.model == s.model);
  CHECK(again.train.config == s.train.config);

  CHECK(experiment_spec_from_json(R"({"dataset": "A2", "scale": "full"})").train.config.scale == Scale::Full);
  CHECK_THROWS_AS(experiment_spec_from_json(R"({"dataset": "A1", "seeds": []})"), ConfigError);
  CHECK_THROWS_AS(experiment_spec_from_json(R"({"dataset": "A1", "kind": "cnn"})"), ConfigError);
  CHECK_THROWS_AS(experiment_spec_from_json(R"({"kind": "hybrid"})"), ConfigError);
  CHECK_THROWS_AS(experiment_spec_from_json("{"), ConfigError);
  CHECK_THROWS_AS(experiment_spec_from_json(R"({"dataset": "Q7"})"), ConfigError);
}

TEST_CASE("experiment runs") {
  SUBCASE("zero seeds is a configuration error") {
    ExperimentSpec s = tiny_experiment();
    s.seeds.clear();
    CHECK_THROWS_AS(run_experiment(s), ConfigError);
  }
  SUBCASE("hybrid on held-out frames") {
    test::TempDir dir;
    ExperimentSpec s = tiny_experiment();
    s.output = dir.path / "run";
    const ExperimentResult r = run_experiment(s);
    REQUIRE(r.ok);
    REQUIRE(r.seeds.size() == 2);
    const TargetResult& t = r.seeds[0].targets.at(0);
    CHECK(t.target == "tiny/A2");
    CHECK(t.eval_frames.size() == 11);
    CHECK(t.uncorrected.mape > 0.0);
    CHECK(r.aggregates.at("tiny/A2").corrected.n_seeds == 2);
    for (const char* f : {"spec.json", "report.json", "timing.json", "manifest.json"}) {
      CHECK(std::filesystem::exists(s.output / f));
    }
    CHECK(r.report_json().find("seconds") == std::string::npos);

    // Every listed artifact hashes to the recorded digest.
    const auto manifest = nlohmann::json::parse(slurp(s.output / "manifest.json"));
    CHECK(manifest.at("files").size() > 3);
    for (const auto& [rel, digest] : manifest.at("files").items()) {
      CHECK(sha256_file(s.output / rel) == digest.get<std::string>());
    }

    // A rerun into a fresh directory reproduces the report byte for byte.
    ExperimentSpec again = s;
    again.output = dir.path / "rerun";
    run_experiment(again);
    CHECK(slurp(again.output / "report.json") == slurp(s.output / "report.json"));
    CHECK(slurp(again.output / "manifest.json") == slurp(s.output / "manifest.json"));
  }
  SUBCASE("parallel seeds match sequential seeds") {
    ExperimentSpec s = tiny_experiment();
    s.export_fields = false;
    const std::string sequential = run_experiment(s).report_json();
    s.threads = 2;
    CHECK(run_experiment(s).report_json() == sequential);
  }
  SUBCASE("failed training is reported, not thrown") {
    ExperimentSpec s = tiny_experiment();
    s.model.learning_rate = -1.0;
    const ExperimentResult r = run_experiment(s);
    CHECK_FALSE(r.ok);
    CHECK(r.failure.find("learning_rate") != std::string::npos);
    CHECK(r.report_json().find("\"failed\"") != std::string::npos);
  }
  SUBCASE("missing bundle") {
    ExperimentSpec s = tiny_experiment();
    s.train.bundle_dir = "/nonexistent/bundle";
    const ExperimentResult r = run_experiment(s);
    CHECK_FALSE(r.ok);
    CHECK(r.failure.find("generate") == 0);
  }
}
