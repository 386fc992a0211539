// htwin: command-line front end for dataset generation, training and evaluation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "htwin/checkpoint.hpp"
#include "htwin/datasets.hpp"
#include "htwin/errors.hpp"
#include "htwin/experiment.hpp"
#include "htwin/exporters.hpp"
#include "htwin/metrics.hpp"
#include "htwin/twin.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace htwin;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string scale = "desk";
  std::string out = "htwin_out";
  int threads = 1;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

const DesignData& pick_design(const DatasetBundle& b, const std::string& id) {
  if (id.empty()) return b.designs.front();
  for (const DesignData& d : b.designs) {
    if (d.spec.id == id) return d;
  }
  throw ConfigError("bundle has no design '" + id + "'");
}

int cmd_generate(const Globals& g, const std::string& preset) {
  DatasetConfig cfg;
  if (!g.config.empty()) {
    json j = json::parse(read_file(g.config));
    if (!j.contains("scale")) j["scale"] = g.scale;
    cfg = dataset_config_from_json(j.dump());
  } else if (!preset.empty()) {
    cfg = make_preset(preset, parse_scale(g.scale));
  } else {
    throw UsageError("generate: give --preset or --config");
  }
  if (g.seed_given) cfg.seeds = {g.seed};
  const DatasetBundle bundle = build_dataset(cfg, g.threads);
  save_bundle(bundle, g.out);
  std::printf("wrote bundle %s (%zu designs, %d frames) to %s\n", cfg.name.c_str(),
              bundle.designs.size(), bundle.designs.front().linear.num_frames(), g.out.c_str());
  return 0;
}

int cmd_train(const Globals& g, const std::string& bundle_dir, const std::string& kind,
              TrainOptions opts) {
  if (!g.config.empty()) opts = train_options_from_json(read_file(g.config), opts);
  opts.seed = g.seed;
  const DatasetBundle bundle = load_bundle(bundle_dir);
  ExperimentSpec spec;
  spec.name = bundle.config.name + "_" + kind;
  spec.kind = kind;
  spec.model = opts;
  spec.seeds = {g.seed};
  spec.output = g.out;
  spec.threads = g.threads;
  spec.export_fields = false;
  const ExperimentResult r = run_experiment_on(spec, bundle, {});
  if (!r.ok) {
    std::fprintf(stderr, "training failed: %s\n", r.failure.c_str());
    return 1;
  }
  const SeedResult& s = r.seeds.front();
  std::printf("trained %s model, seed %llu: %ld steps, final loss %.4e, %.1f s\n", kind.c_str(),
              static_cast<unsigned long long>(s.seed), s.report.optimizer_steps,
              s.report.epoch_loss.back(), s.report.wall_seconds);
  std::printf("checkpoint: %s\n", (fs::path(g.out) / ("seed_" + std::to_string(s.seed)) /
                                   "model.json").string().c_str());
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& bundle_dir, const std::string& model_path,
                 const std::string& design_id) {
  const DatasetBundle bundle = load_bundle(bundle_dir);
  Checkpoint ck = load_checkpoint(model_path);
  if (ck.target_kind != "gap") throw ConfigError("evaluate: expects a gap (hybrid) checkpoint");
  json out = json::array();
  fs::create_directories(g.out);
  for (const DesignData& d : bundle.designs) {
    if (!design_id.empty() && d.spec.id != design_id) continue;
    const Mesh& mesh = bundle.mesh_of(d);
    const SimulationSeries pred = predict_corrected_series(ck.model, ck.scalers, d.linear, mesh);
    const MetricRecord c = series_metrics(d.nonlinear, pred);
    const MetricRecord u = series_metrics(d.nonlinear, d.linear);
    const double cmax = max_relative_error(d.nonlinear.frames.back(), pred.frames.back());
    const double umax = max_relative_error(d.nonlinear.frames.back(), d.linear.frames.back());
    out.push_back({{"design", d.spec.id},
                   {"corrected", {{"mae", c.mae}, {"mape", c.mape}}},
                   {"uncorrected", {{"mae", u.mae}, {"mape", u.mape}}},
                   {"final_frame_max_rel", {{"corrected", cmax}, {"uncorrected", umax}}}});
    std::printf("%-14s MAPE %.4f%% (uncorrected %.4f%%)  final max rel %.4f (uncorrected %.4f)\n",
                d.spec.id.c_str(), c.mape, u.mape, cmax, umax);
    const std::vector<double> curve = error_accumulation_curve(d.nonlinear, pred);
    Table t{{"frame", "rmse"}, {}};
    for (std::size_t f = 0; f < curve.size(); ++f) t.rows.push_back({double(f), curve[f]});
    export_csv(t, fs::path(g.out) / (d.spec.id + "_error_curve.csv"));
    export_field_vtk(mesh, pred.frames.back(), fs::path(g.out) / (d.spec.id + "_corrected.vtk"),
                     "temperature");
    export_error_fields(mesh, d.nonlinear.frames.back(), pred.frames.back(),
                        fs::path(g.out) / d.spec.id);
  }
  write_file(fs::path(g.out) / "metrics.json", out.dump(1) + "\n");
  return 0;
}

int cmd_rollout(const Globals& g, const std::string& bundle_dir, const std::string& model_path,
                const std::string& design_id, int steps) {
  const DatasetBundle bundle = load_bundle(bundle_dir);
  Checkpoint ck = load_checkpoint(model_path);
  if (ck.target_kind != "increment") {
    throw ConfigError("rollout: expects an increment (mgn) checkpoint");
  }
  const DesignData& d = pick_design(bundle, design_id);
  const SimulationSeries& gt = d.nonlinear;
  const int n = steps > 0 ? std::min(steps, gt.num_frames() - 1) : gt.num_frames() - 1;
  SimulationSeries roll = rollout_mgn(ck.model, ck.scalers, gt.frames.front(), bundle.mesh_of(d),
                                      n, gt.dt, gt.t_dirichlet);
  roll.mesh_id = d.mesh_id;
  roll.material = gt.material;
  fs::create_directories(g.out);
  save_series_binary(roll, fs::path(g.out) / "rollout.bin");
  export_series_csv(roll, fs::path(g.out) / "rollout.csv");
  SimulationSeries ref = gt;
  ref.frames.resize(roll.frames.size());
  const std::vector<double> curve = error_accumulation_curve(ref, roll);
  Table t{{"frame", "rmse"}, {}};
  for (std::size_t f = 0; f < curve.size(); ++f) t.rows.push_back({double(f), curve[f]});
  export_csv(t, fs::path(g.out) / "error_curve.csv");
  std::printf("rolled out %d steps on %s; final-frame RMSE %.4f K\n", n, d.spec.id.c_str(),
              curve.back());
  return 0;
}

int cmd_report(const Globals& g) {
  if (g.config.empty()) throw UsageError("report: --config <experiment spec> is required");
  ExperimentSpec spec = experiment_spec_from_json(read_file(g.config), parse_scale(g.scale));
  if (g.seed_given) spec.seeds = {g.seed};
  if (spec.output.empty()) spec.output = g.out;
  spec.threads = g.threads;
  const ExperimentResult r = run_experiment(spec);
  for (const auto& [target, a] : r.aggregates) {
    std::printf("%-20s corrected MAPE %.4f +- %.4f %%   uncorrected %.4f %%   (%d seeds)\n",
                target.c_str(), a.corrected.mape.mean, a.corrected.mape.std,
                a.uncorrected.mape.mean, a.corrected.n_seeds);
  }
  std::printf("report: %s\n", (spec.output / "report.json").string().c_str());
  if (!r.ok) std::fprintf(stderr, "experiment failed: %s\n", r.failure.c_str());
  return r.ok ? 0 : 1;
}

int cmd_calibrate(const Globals& g, const std::string& bundle_dir, const std::string& preset) {
  DatasetBundle bundle;
  if (!bundle_dir.empty()) {
    bundle = load_bundle(bundle_dir);
  } else if (!preset.empty()) {
    bundle = build_dataset(make_preset(preset, parse_scale(g.scale)), g.threads);
  } else {
    throw UsageError("calibrate: give --bundle or --preset");
  }
  const CalibrationResult c = calibration_check(bundle);
  std::printf("%s: final-frame max relative gap %.2f%% (window %.0f%%..%.0f%%): %s\n",
              bundle.config.name.c_str(), 100.0 * c.gap, 100.0 * c.lower, 100.0 * c.upper,
              c.pass ? "PASS" : "FAIL");
  return c.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid thermal twin workbench"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Configuration document (JSON)");
  app.add_option_function<std::uint64_t>(
      "--seed",
      [&g](std::uint64_t s) {
        g.seed = s;
        g.seed_given = true;
      },
      "Random seed");
  app.add_option("--scale", g.scale, "Dataset scale")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string preset, bundle_dir, model_path, design_id, kind = "hybrid";
  int steps = 0;
  TrainOptions opts;

  CLI::App* gen = app.add_subcommand("generate", "Build a dataset bundle");
  gen->add_option("--preset", preset, "Preset name (A1..A8, B1, B2)");

  CLI::App* train = app.add_subcommand("train", "Train a hybrid or baseline model");
  train->add_option("--bundle", bundle_dir, "Bundle directory")->required();
  train->add_option("--kind", kind, "Model kind")
      ->check(CLI::IsMember({"hybrid", "mgn"}))
      ->capture_default_str();
  train->add_option("--epochs", opts.epochs)->capture_default_str();
  train->add_option("--hidden", opts.hidden_dim)->capture_default_str();
  train->add_option("--steps-mp", opts.message_passing_steps, "Message-passing steps")
      ->capture_default_str();
  train->add_option("--fraction", opts.train_fraction, "Training frame fraction")
      ->capture_default_str();
  train->add_option("--noise", opts.noise_std, "Input noise std (K)")->capture_default_str();
  train->add_option("--lr", opts.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--batch", opts.batch_frames, "Frames per batch")->capture_default_str();
  train->add_flag("--cosine-lr", opts.cosine_lr, "Cosine-anneal the learning rate");
  train->add_flag("--drop-last", opts.drop_last, "Skip a trailing partial batch");

  CLI::App* eval = app.add_subcommand("evaluate", "Evaluate a hybrid checkpoint on a bundle");
  eval->add_option("--bundle", bundle_dir)->required();
  eval->add_option("--model", model_path)->required();
  eval->add_option("--design", design_id);

  CLI::App* roll = app.add_subcommand("rollout", "Autoregressive rollout of a baseline checkpoint");
  roll->add_option("--bundle", bundle_dir)->required();
  roll->add_option("--model", model_path)->required();
  roll->add_option("--design", design_id);
  roll->add_option("--steps", steps, "Number of steps (default: full horizon)");

  CLI::App* report = app.add_subcommand("report", "Run an experiment spec end to end");

  CLI::App* calib = app.add_subcommand("calibrate", "Check the linear-vs-nonlinear gap window");
  calib->add_option("--bundle", bundle_dir);
  calib->add_option("--preset", preset);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(g, preset);
    if (*train) return cmd_train(g, bundle_dir, kind, opts);
    if (*eval) return cmd_evaluate(g, bundle_dir, model_path, design_id);
    if (*roll) return cmd_rollout(g, bundle_dir, model_path, design_id, steps);
    if (*report) return cmd_report(g);
    if (*calib) return cmd_calibrate(g, bundle_dir, preset);
  } catch (const htwin::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
