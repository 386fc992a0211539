#include "htwin/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include "htwin/checkpoint.hpp"
#include "htwin/errors.hpp"
#include "htwin/exporters.hpp"
#include "htwin/hash.hpp"
#include "json.hpp"

namespace htwin {

using nlohmann::json;

CalibrationResult calibration_check(const DatasetBundle& bundle) {
  CalibrationResult r;
  r.gap = final_frame_max_relative_gap(bundle);
  r.pass = r.gap >= r.lower && r.gap <= r.upper;
  return r;
}

namespace {

DatasetSource source_from(const json& j, Scale default_scale) {
  DatasetSource s;
  if (j.is_string()) {
    s.config = make_preset(j.get<std::string>(), default_scale);
    return s;
  }
  if (j.contains("bundle")) {
    s.bundle_dir = j.at("bundle").get<std::string>();
    return s;
  }
  json copy = j;
  if (!copy.contains("scale")) copy["scale"] = to_string(default_scale);
  s.config = dataset_config_from_json(copy.dump());
  return s;
}

json source_json(const DatasetSource& s) {
  if (s.bundle_dir) return {{"bundle", s.bundle_dir->string()}};
  return json::parse(dataset_config_to_json(s.config));
}

json metric_json(const MetricRecord& m) {
  return {{"mae", m.mae}, {"mape", m.mape}, {"rmse", m.rmse}};
}

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

json aggregate_json(const AggregateRecord& a) {
  return {{"mae", stat_json(a.mae)},
          {"mape", stat_json(a.mape)},
          {"rmse", stat_json(a.rmse)},
          {"n_seeds", a.n_seeds}};
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) {
      c = '_';
    }
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

struct EvalTarget {
  std::string name;
  const Mesh* mesh = nullptr;
  const DesignData* design = nullptr;
  bool held_out_frames = false;  // evaluate on the complement of the training split
};

bool has_roles(const DatasetBundle& b) {
  return std::any_of(b.designs.begin(), b.designs.end(),
                     [](const DesignData& d) { return !d.spec.role.empty(); });
}

std::vector<const DesignData*> training_designs(const DatasetBundle& b) {
  if (!has_roles(b)) {
    std::vector<const DesignData*> all;
    for (const DesignData& d : b.designs) all.push_back(&d);
    return all;
  }
  return b.with_role("train");
}

std::vector<EvalTarget> eval_targets(const DatasetBundle& train,
                                     const std::vector<const DatasetBundle*>& evals) {
  std::vector<EvalTarget> out;
  auto add_bundle = [&out](const DatasetBundle& b, bool same_as_train) {
    const bool roles = has_roles(b);
    for (const DesignData& d : b.designs) {
      if (roles && d.spec.role != "eval") continue;
      EvalTarget t;
      t.name = b.config.name + "/" + d.spec.id;
      t.mesh = &b.mesh_of(d);
      t.design = &d;
      t.held_out_frames = same_as_train && !roles;
      out.push_back(t);
    }
  };
  if (evals.empty()) {
    add_bundle(train, true);
  } else {
    for (const DatasetBundle* b : evals) add_bundle(*b, false);
  }
  if (out.empty()) throw ConfigError("experiment: no evaluation targets");
  return out;
}

TargetResult evaluate_target(const std::string& kind, TrainedModel& tm, const EvalTarget& t,
                             const FrameSplit& split) {
  const SimulationSeries& lin = t.design->linear;
  const SimulationSeries& gt = t.design->nonlinear;
  TargetResult r;
  r.target = t.name;
  if (t.held_out_frames && !split.eval.empty()) {
    r.eval_frames = split.eval;
  } else {
    r.eval_frames.resize(static_cast<std::size_t>(gt.num_frames()));
    for (int i = 0; i < gt.num_frames(); ++i) r.eval_frames[i] = i;
  }
  SimulationSeries pred =
      kind == "mgn" ? rollout_mgn(tm.model, tm.scalers, gt.frames.front(), *t.mesh,
                                  gt.num_frames() - 1, gt.dt, gt.t_dirichlet)
                    : predict_corrected_series(tm.model, tm.scalers, lin, *t.mesh);
  r.corrected = series_metrics(gt, pred, r.eval_frames);
  r.uncorrected = series_metrics(gt, lin, r.eval_frames);
  const nn::MinMaxScaler& rs = kind == "mgn" ? tm.scalers.temperature : tm.scalers.target;
  r.corrected.rmse = rmse_normalized(gt, pred, lin, rs, r.eval_frames);
  r.uncorrected.rmse = rmse_normalized(gt, lin, lin, rs, r.eval_frames);
  r.corrected_final_max_rel = max_relative_error(gt.frames.back(), pred.frames.back());
  r.uncorrected_final_max_rel = max_relative_error(gt.frames.back(), lin.frames.back());
  r.corrected_final_mean_rel = mean_relative_error(gt.frames.back(), pred.frames.back());
  r.uncorrected_final_mean_rel = mean_relative_error(gt.frames.back(), lin.frames.back());
  r.error_curve = error_accumulation_curve(gt, pred);
  r.final_prediction = pred.frames.back();
  return r;
}

void export_seed(const std::filesystem::path& dir, const std::string& kind, TrainedModel& tm,
                 const std::vector<EvalTarget>& targets, const SeedResult& sr,
                 bool export_fields) {
  std::filesystem::create_directories(dir);
  save_checkpoint(tm.model, tm.scalers, kind == "mgn" ? "increment" : "gap", dir / "model.json");
  write_text(dir / "train_report.json", sr.report.to_json(false) + "\n");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const EvalTarget& t = targets[i];
    const TargetResult& r = sr.targets[i];
    const std::string stem = safe_name(t.name);
    Table curve{{"frame", "rmse"}, {}};
    for (std::size_t f = 0; f < r.error_curve.size(); ++f) {
      curve.rows.push_back({static_cast<double>(f), r.error_curve[f]});
    }
    export_csv(curve, dir / (stem + "_error_curve.csv"));
    if (!export_fields) continue;
    const auto& gt = t.design->nonlinear.frames.back();
    const auto& lin = t.design->linear.frames.back();
    const auto& pred = r.final_prediction;
    export_field_vtk(*t.mesh, gt, dir / (stem + "_final_gt.vtk"), "temperature");
    export_field_vtk(*t.mesh, lin, dir / (stem + "_final_linear.vtk"), "temperature");
    export_field_vtk(*t.mesh, pred, dir / (stem + "_final_predicted.vtk"), "temperature");
    export_error_fields(*t.mesh, gt, pred, dir / (stem + "_final_predicted"));
    export_error_fields(*t.mesh, gt, lin, dir / (stem + "_final_linear"));
  }
}

void write_manifest(const std::filesystem::path& root) {
  json files = json::object();
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), root);
    if (rel == "manifest.json" || rel == "timing.json") continue;
    paths.push_back(rel);
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& rel : paths) files[rel.generic_string()] = sha256_file(root / rel);
  write_text(root / "manifest.json", json{{"files", files}}.dump(1) + "\n");
}

}  // namespace

ExperimentSpec experiment_spec_from_json(const std::string& text, Scale default_scale) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
  try {
    ExperimentSpec s;
    if (j.contains("scale")) default_scale = parse_scale(j.at("scale").get<std::string>());
    s.name = j.value("name", s.name);
    s.kind = j.value("kind", s.kind);
    if (s.kind != "hybrid" && s.kind != "mgn") {
      throw ConfigError("experiment spec: kind must be hybrid or mgn");
    }
    s.train = source_from(j.at("dataset"), default_scale);
    if (j.contains("evaluate")) {
      for (const json& e : j.at("evaluate")) s.evaluate.push_back(source_from(e, default_scale));
    }
    if (j.contains("model")) s.model = train_options_from_json(j.at("model").dump(), s.model);
    if (j.contains("train_fraction")) s.model.train_fraction = j.at("train_fraction").get<double>();
    if (j.contains("noise_std")) s.model.noise_std = j.at("noise_std").get<double>();
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (s.seeds.empty()) throw ConfigError("experiment spec: at least one seed is required");
    if (j.contains("output")) s.output = j.at("output").get<std::string>();
    s.threads = j.value("threads", s.threads);
    s.export_fields = j.value("export_fields", s.export_fields);
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
}

std::string experiment_spec_to_json(const ExperimentSpec& s) {
  json evals = json::array();
  for (const DatasetSource& e : s.evaluate) evals.push_back(source_json(e));
  json j = {{"name", s.name},
            {"kind", s.kind},
            {"dataset", source_json(s.train)},
            {"evaluate", evals},
            {"model", json::parse(train_options_to_json(s.model))},
            {"seeds", s.seeds},
            {"export_fields", s.export_fields}};
  return j.dump(1);
}

std::string ExperimentResult::report_json() const {
  json seeds_j = json::array();
  for (const SeedResult& s : seeds) {
    json targets = json::array();
    for (const TargetResult& t : s.targets) {
      targets.push_back({{"target", t.target},
                         {"n_eval_frames", t.eval_frames.size()},
                         {"corrected", metric_json(t.corrected)},
                         {"uncorrected", metric_json(t.uncorrected)},
                         {"mape_reduction", t.mape_reduction()},
                         {"final_frame",
                          {{"corrected_max_rel", t.corrected_final_max_rel},
                           {"uncorrected_max_rel", t.uncorrected_final_max_rel},
                           {"corrected_mean_rel", t.corrected_final_mean_rel},
                           {"uncorrected_mean_rel", t.uncorrected_final_mean_rel}}}});
    }
    json sj = {{"seed", s.seed}, {"status", s.ok ? "ok" : "failed"}, {"targets", targets}};
    if (!s.ok) sj["failure"] = s.failure;
    if (!s.report.epoch_loss.empty()) {
      sj["train"] = {{"epochs", s.report.epoch_loss.size()},
                     {"final_loss", s.report.epoch_loss.back()},
                     {"optimizer_steps", s.report.optimizer_steps},
                     {"train_samples", s.report.train_samples}};
    }
    seeds_j.push_back(std::move(sj));
  }
  json agg = json::object();
  for (const auto& [name, a] : aggregates) {
    agg[name] = {{"corrected", aggregate_json(a.corrected)},
                 {"uncorrected", aggregate_json(a.uncorrected)},
                 {"mape_reduction", a.corrected.mape.mean / a.uncorrected.mape.mean}};
  }
  json j = {{"name", name}, {"kind", kind}, {"status", ok ? "ok" : "failed"},
            {"seeds", seeds_j}, {"aggregate", agg}};
  if (!ok) j["failure"] = failure;
  return j.dump(1);
}

DatasetBundle materialize(const DatasetSource& source, int threads) {
  if (source.bundle_dir) return load_bundle(*source.bundle_dir);
  return build_dataset(source.config, threads);
}

ExperimentResult run_experiment_on(const ExperimentSpec& spec, const DatasetBundle& train,
                                   const std::vector<const DatasetBundle*>& eval_bundles) {
  if (spec.seeds.empty()) throw ConfigError("experiment: at least one seed is required");
  if (spec.kind != "hybrid" && spec.kind != "mgn") {
    throw ConfigError("experiment: kind must be hybrid or mgn");
  }
  ExperimentResult result;
  result.name = spec.name;
  result.kind = spec.kind;
  result.seeds.resize(spec.seeds.size());
  std::vector<double> seconds(spec.seeds.size(), 0.0);

  const std::vector<const DesignData*> train_designs = training_designs(train);
  const std::vector<EvalTarget> targets = eval_targets(train, eval_bundles);

  auto run_seed = [&](std::size_t k) {
    const auto started = std::chrono::steady_clock::now();
    SeedResult& sr = result.seeds[k];
    sr.seed = spec.seeds[k];
    try {
      TrainOptions opts = spec.model;
      opts.seed = sr.seed;
      FrameSplit split;
      std::vector<TrainingCase> cases;
      for (const DesignData* d : train_designs) {
        TrainingCase c;
        c.mesh = &train.mesh_of(*d);
        c.linear = &d->linear;
        c.nonlinear = &d->nonlinear;
        split = split_frames(d->nonlinear.num_frames(), opts.train_fraction, sr.seed);
        c.frames = split.train;
        if (spec.kind == "mgn") {
          std::erase(c.frames, d->nonlinear.num_frames() - 1);
          if (c.frames.empty()) c.frames.push_back(0);
        }
        cases.push_back(std::move(c));
      }
      TrainedModel tm = spec.kind == "mgn" ? train_mgn(cases, opts) : train_hybrid(cases, opts);
      sr.report = tm.report;
      for (const EvalTarget& t : targets) {
        sr.targets.push_back(evaluate_target(spec.kind, tm, t, split));
      }
      if (!sr.targets.empty()) {
        sr.report.metrics["mape"] = sr.targets.front().corrected.mape;
        sr.report.metrics["mae"] = sr.targets.front().corrected.mae;
        sr.report.metrics["rmse"] = sr.targets.front().corrected.rmse;
      }
      if (!spec.output.empty()) {
        export_seed(spec.output / ("seed_" + std::to_string(sr.seed)), spec.kind, tm, targets, sr,
                    spec.export_fields);
      }
      sr.ok = true;
    } catch (const std::exception& e) {
      sr.ok = false;
      sr.failure = e.what();
    }
    seconds[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  const int n_threads = std::clamp(spec.threads, 1, static_cast<int>(spec.seeds.size()));
  if (n_threads == 1) {
    for (std::size_t k = 0; k < spec.seeds.size(); ++k) run_seed(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < spec.seeds.size(); k = next++) run_seed(k);
      });
    }
    for (auto& th : pool) th.join();
  }

  result.ok = std::all_of(result.seeds.begin(), result.seeds.end(),
                          [](const SeedResult& s) { return s.ok; });
  if (!result.ok) {
    for (const SeedResult& s : result.seeds) {
      if (!s.ok) {
        result.failure = "seed " + std::to_string(s.seed) + ": " + s.failure;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::vector<MetricRecord> corrected, uncorrected;
    for (const SeedResult& s : result.seeds) {
      if (!s.ok) continue;
      MetricRecord c = s.targets[i].corrected;
      c.seed = s.seed;
      c.scope = Scope::PerRun;
      corrected.push_back(c);
      MetricRecord u = s.targets[i].uncorrected;
      u.seed = s.seed;
      u.scope = Scope::PerRun;
      uncorrected.push_back(u);
    }
    if (corrected.empty()) continue;
    result.aggregates[targets[i].name] = {aggregate_over_seeds(corrected),
                                          aggregate_over_seeds(uncorrected)};
  }

  if (!spec.output.empty()) {
    std::filesystem::create_directories(spec.output);
    write_text(spec.output / "spec.json", experiment_spec_to_json(spec) + "\n");
    write_text(spec.output / "report.json", result.report_json() + "\n");
    json timing = json::object();
    for (std::size_t k = 0; k < spec.seeds.size(); ++k) {
      timing[std::to_string(spec.seeds[k])] = {
          {"seconds", seconds[k]}, {"train_seconds", result.seeds[k].report.wall_seconds}};
    }
    write_text(spec.output / "timing.json", timing.dump(1) + "\n");
    write_manifest(spec.output);
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.seeds.empty()) throw ConfigError("experiment: at least one seed is required");
  DatasetBundle train;
  std::vector<DatasetBundle> evals;
  try {
    train = materialize(spec.train, spec.threads);
    for (const DatasetSource& e : spec.evaluate) evals.push_back(materialize(e, spec.threads));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    ExperimentResult failed;
    failed.name = spec.name;
    failed.kind = spec.kind;
    failed.failure = std::string("generate: ") + e.what();
    if (!spec.output.empty()) {
      write_text(spec.output / "report.json", failed.report_json() + "\n");
    }
    return failed;
  }
  if (!spec.output.empty()) {
    save_bundle(train, spec.output / "bundles" / safe_name(train.config.name));
    for (const DatasetBundle& b : evals) {
      save_bundle(b, spec.output / "bundles" / safe_name(b.config.name));
    }
  }
  std::vector<const DatasetBundle*> ptrs;
  for (const DatasetBundle& b : evals) ptrs.push_back(&b);
  return run_experiment_on(spec, train, ptrs);
}

}  // namespace htwin
