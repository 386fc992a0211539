#include "htwin/datasets.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "htwin/errors.hpp"
#include "htwin/hash.hpp"
#include "htwin/rng.hpp"
#include "json.hpp"

namespace htwin {

using nlohmann::json;

namespace {

constexpr const char* kBundleFormat = "htwin-bundle/1";
constexpr const char* kGeneratorVersion = "htwin 0.1.0";

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

DesignSpec strip_design(std::string id, double to_fraction, double power) {
  DesignSpec d;
  d.id = std::move(id);
  d.load.kind = LoadSpec::Kind::Strip;
  d.load.power = power;
  d.load.to_fraction = to_fraction;
  return d;
}

// Interior grid nodes in shuffled order, accepted greedily while they keep the
// minimum separation from every center chosen so far.
std::vector<int> pick_gaussian_centers(const Mesh& mesh, int count, double separation,
                                       std::uint64_t seed) {
  double xmin = mesh.nodes[0].x, xmax = xmin, ymin = mesh.nodes[0].y, ymax = ymin;
  for (const Point2& p : mesh.nodes) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double tol = 1e-9 * std::max(xmax - xmin, ymax - ymin);
  std::vector<int> candidates;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const Point2 p = mesh.nodes[v];
    if (p.x - xmin > tol && xmax - p.x > tol && p.y - ymin > tol && ymax - p.y > tol) {
      candidates.push_back(v);
    }
  }
  Rng rng(seed);
  rng.shuffle(std::span<int>(candidates));
  std::vector<int> centers;
  for (int v : candidates) {
    const bool far = std::all_of(centers.begin(), centers.end(), [&](int c) {
      return norm(mesh.nodes[c] - mesh.nodes[v]) >= separation;
    });
    if (far) centers.push_back(v);
    if (static_cast<int>(centers.size()) == count) break;
  }
  if (static_cast<int>(centers.size()) < count) {
    throw ConfigError("cannot place " + std::to_string(count) +
                      " Gaussian centers with the requested separation");
  }
  return centers;
}

const char* shape_name(ShapeSpec::Kind k) {
  return k == ShapeSpec::Kind::Rectangle ? "rectangle" : "lshape";
}
const char* mesh_name(MeshSpec::Kind k) {
  switch (k) {
    case MeshSpec::Kind::Regular: return "regular";
    case MeshSpec::Kind::Irregular: return "irregular";
    case MeshSpec::Kind::Submesh: return "submesh";
  }
  return "";
}
const char* load_name(LoadSpec::Kind k) {
  return k == LoadSpec::Kind::Strip ? "boundary_strip" : "gaussian";
}

json config_json(const DatasetConfig& c) {
  json designs = json::array();
  for (const DesignSpec& d : c.designs) {
    designs.push_back({{"id", d.id},
                       {"role", d.role},
                       {"shape",
                        {{"kind", shape_name(d.shape.kind)},
                         {"width", d.shape.width},
                         {"height", d.shape.height},
                         {"a", d.shape.a},
                         {"b", d.shape.b}}},
                       {"load",
                        {{"kind", load_name(d.load.kind)},
                         {"power", d.load.power},
                         {"from_fraction", d.load.from_fraction},
                         {"to_fraction", d.load.to_fraction},
                         {"center", d.load.center},
                         {"sigma_fraction", d.load.sigma_fraction}}}});
  }
  return {{"name", c.name},
          {"scale", to_string(c.scale)},
          {"mesh",
           {{"kind", mesh_name(c.mesh.kind)},
            {"grid_nodes", c.mesh.grid_nodes},
            {"edge_length", c.mesh.edge_length},
            {"keep_fraction", c.mesh.keep_fraction},
            {"seed", c.mesh.seed}}},
          {"designs", std::move(designs)},
          {"n_steps", c.n_steps},
          {"dt", c.dt},
          {"material",
           {{"rho_cp", c.material.rho_cp},
            {"k0", c.material.k0},
            {"beta", c.material.beta},
            {"t0", c.material.t0}}},
          {"seeds", c.seeds},
          {"train_fraction", c.train_fraction}};
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

DatasetConfig config_from(const json& j) {
  DatasetConfig c;
  if (j.contains("preset")) {
    c = make_preset(j.at("preset").get<std::string>(),
                    parse_scale(value_or<std::string>(j, "scale", "desk")));
  }
  c.name = value_or<std::string>(j, "name", c.name);
  if (j.contains("scale")) c.scale = parse_scale(j.at("scale").get<std::string>());
  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    const std::string kind = value_or<std::string>(m, "kind", mesh_name(c.mesh.kind));
    if (kind == "regular") c.mesh.kind = MeshSpec::Kind::Regular;
    else if (kind == "irregular") c.mesh.kind = MeshSpec::Kind::Irregular;
    else if (kind == "submesh") c.mesh.kind = MeshSpec::Kind::Submesh;
    else throw ConfigError("dataset: unknown mesh kind '" + kind + "'");
    c.mesh.grid_nodes = value_or(m, "grid_nodes", c.mesh.grid_nodes);
    c.mesh.edge_length = value_or(m, "edge_length", c.mesh.edge_length);
    c.mesh.keep_fraction = value_or(m, "keep_fraction", c.mesh.keep_fraction);
    c.mesh.seed = value_or(m, "seed", c.mesh.seed);
  }
  if (j.contains("designs")) {
    c.designs.clear();
    for (const json& dj : j.at("designs")) {
      DesignSpec d;
      d.id = dj.at("id").get<std::string>();
      d.role = value_or<std::string>(dj, "role", "");
      if (dj.contains("shape")) {
        const json& s = dj.at("shape");
        const std::string kind = value_or<std::string>(s, "kind", "rectangle");
        if (kind == "rectangle") d.shape.kind = ShapeSpec::Kind::Rectangle;
        else if (kind == "lshape") d.shape.kind = ShapeSpec::Kind::LShape;
        else throw ConfigError("dataset: unknown shape kind '" + kind + "'");
        d.shape.width = value_or(s, "width", d.shape.width);
        d.shape.height = value_or(s, "height", d.shape.height);
        d.shape.a = value_or(s, "a", d.shape.a);
        d.shape.b = value_or(s, "b", d.shape.b);
      }
      if (dj.contains("load")) {
        const json& l = dj.at("load");
        const std::string kind = value_or<std::string>(l, "kind", "boundary_strip");
        if (kind == "boundary_strip") d.load.kind = LoadSpec::Kind::Strip;
        else if (kind == "gaussian") d.load.kind = LoadSpec::Kind::Gaussian;
        else throw ConfigError("dataset: unknown load kind '" + kind + "'");
        d.load.power = value_or(l, "power", d.load.power);
        d.load.from_fraction = value_or(l, "from_fraction", d.load.from_fraction);
        d.load.to_fraction = value_or(l, "to_fraction", d.load.to_fraction);
        d.load.center = value_or(l, "center", d.load.center);
        d.load.sigma_fraction = value_or(l, "sigma_fraction", d.load.sigma_fraction);
      }
      c.designs.push_back(std::move(d));
    }
  }
  c.n_steps = value_or(j, "n_steps", c.n_steps);
  c.dt = value_or(j, "dt", c.dt);
  if (j.contains("material")) {
    const json& m = j.at("material");
    c.material.rho_cp = value_or(m, "rho_cp", c.material.rho_cp);
    c.material.k0 = value_or(m, "k0", c.material.k0);
    c.material.beta = value_or(m, "beta", c.material.beta);
    c.material.t0 = value_or(m, "t0", c.material.t0);
  }
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.train_fraction = value_or(j, "train_fraction", c.train_fraction);
  c.validate();
  return c;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// Checks presence and content hash of one bundle artifact.
void verify_artifact(const std::filesystem::path& dir, const json& entry) {
  const std::filesystem::path path = dir / entry.at("file").get<std::string>();
  if (!std::filesystem::exists(path)) {
    throw IoError("bundle is missing artifact " + path.string());
  }
  const std::string expected = entry.at("sha256").get<std::string>();
  const std::string actual = sha256_file(path);
  if (actual != expected) {
    throw IntegrityError("hash mismatch for " + path.string() + ": manifest " + expected +
                         ", file " + actual);
  }
}

}  // namespace

Scale parse_scale(std::string_view text) {
  if (text == "desk") return Scale::Desk;
  if (text == "full") return Scale::Full;
  throw ConfigError("unknown scale '" + std::string(text) + "' (expected desk or full)");
}

std::string to_string(Scale scale) { return scale == Scale::Desk ? "desk" : "full"; }

void DatasetConfig::validate() const {
  if (designs.empty()) throw ConfigError("dataset '" + name + "': no designs");
  if (n_steps < 1) throw ConfigError("dataset '" + name + "': n_steps must be at least 1");
  if (!(dt > 0.0)) throw ConfigError("dataset '" + name + "': dt must be positive");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("dataset '" + name + "': train_fraction must lie in (0, 1]");
  }
  material.validate();
  std::set<std::string> ids;
  for (const DesignSpec& d : designs) {
    if (d.id.empty()) throw ConfigError("dataset '" + name + "': empty design id");
    if (!ids.insert(d.id).second) {
      throw ConfigError("dataset '" + name + "': duplicate design id '" + d.id + "'");
    }
    if (d.load.power < 0.0) throw ConfigError("design " + d.id + ": negative power");
    if (d.load.kind == LoadSpec::Kind::Gaussian && d.load.center < 0) {
      throw ConfigError("design " + d.id + ": Gaussian load needs a center node");
    }
    if (d.shape.kind == ShapeSpec::Kind::LShape && mesh.kind == MeshSpec::Kind::Regular) {
      throw ConfigError("design " + d.id + ": L-shapes need an irregular mesh");
    }
  }
}

std::vector<std::string> preset_names() {
  return {"A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "B1", "B2"};
}

DatasetConfig make_preset(std::string_view name, Scale scale) {
  const bool desk = scale == Scale::Desk;
  DatasetConfig c;
  c.name = std::string(name);
  c.scale = scale;
  c.n_steps = desk ? 400 : 4000;
  c.dt = desk ? 2.5e-2 : 2.5e-3;
  const double coarse = desk ? 0.07 : 0.05;
  const double fine = desk ? 0.05 : 0.035;
  c.mesh.grid_nodes = desk ? 15 : 30;

  if (name.size() == 2 && name[0] == 'A' && name[1] >= '1' && name[1] <= '8') {
    const int idx = name[1] - '1';
    const bool half = idx % 2 == 0;
    switch (idx / 2) {
      case 0: c.mesh.kind = MeshSpec::Kind::Regular; break;
      case 1:
        c.mesh.kind = MeshSpec::Kind::Irregular;
        c.mesh.edge_length = coarse;
        break;
      case 2:
        c.mesh.kind = MeshSpec::Kind::Irregular;
        c.mesh.edge_length = fine;
        break;
      default:
        c.mesh.kind = MeshSpec::Kind::Submesh;
        c.mesh.edge_length = fine;
        c.mesh.keep_fraction = 0.4;
        break;
    }
    c.designs.push_back(strip_design(c.name, half ? 0.5 : 1.0, 15000.0));
    return c;
  }
  if (name == "B1") {
    c.n_steps = 200;
    c.dt = 5e-2;
    c.mesh.kind = MeshSpec::Kind::Regular;
    const int n_train = desk ? 10 : 40;
    const int n_eval = desk ? 3 : 10;
    const Mesh grid = generate_regular_grid(c.mesh.grid_nodes, c.mesh.grid_nodes, 1.0, 1.0);
    const std::vector<int> centers =
        pick_gaussian_centers(grid, n_train + n_eval, 0.1, c.mesh.seed + 1000);
    for (int d = 0; d < n_train + n_eval; ++d) {
      DesignSpec s;
      char id[16];
      std::snprintf(id, sizeof id, "B1_%02d", d);
      s.id = id;
      s.role = d < n_train ? "train" : "eval";
      s.load.kind = LoadSpec::Kind::Gaussian;
      s.load.power = 6000.0;
      s.load.center = centers[d];
      c.designs.push_back(std::move(s));
    }
    return c;
  }
  if (name == "B2") {
    c.mesh.kind = MeshSpec::Kind::Irregular;
    c.mesh.edge_length = coarse;
    auto add = [&](double a, double b, const char* role) {
      DesignSpec s = strip_design("L_a" + fmt2(a) + "_b" + fmt2(b), 1.0, 6000.0);
      s.shape.kind = ShapeSpec::Kind::LShape;
      s.shape.a = a;
      s.shape.b = b;
      s.role = role;
      c.designs.push_back(std::move(s));
    };
    for (double v : {0.4, 0.6, 1.0, 1.2}) add(v, v, "train");
    add(0.8, 0.8, "eval");
    add(0.5, 0.5, "eval");
    add(0.4, 1.2, "eval");
    add(1.0, 0.4, "eval");
    return c;
  }
  throw ConfigError("unknown dataset preset '" + std::string(name) + "'");
}

std::string dataset_config_to_json(const DatasetConfig& config) {
  return config_json(config).dump(1);
}

DatasetConfig dataset_config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("dataset config: ") + e.what());
  }
}

std::string config_hash(const DatasetConfig& config) {
  return sha256_hex(config_json(config).dump());
}

FrameSplit split_frames(int n_frames, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("split: fraction must lie in (0, 1]");
  }
  if (n_frames < 1) throw ConfigError("split: no frames");
  const int n_train =
      std::max(1, static_cast<int>(std::floor(fraction * n_frames + 1e-9)));
  std::vector<int> order(static_cast<std::size_t>(n_frames));
  for (int i = 0; i < n_frames; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<int>(order));
  FrameSplit split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.eval.assign(order.begin() + n_train, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.eval.begin(), split.eval.end());
  return split;
}

const Mesh& DatasetBundle::mesh_of(const DesignData& design) const {
  auto it = meshes.find(design.mesh_id);
  if (it == meshes.end()) throw DataError("bundle has no mesh '" + design.mesh_id + "'");
  return it->second;
}

std::vector<const DesignData*> DatasetBundle::with_role(std::string_view role) const {
  std::vector<const DesignData*> out;
  for (const DesignData& d : designs) {
    if (d.spec.role == role) out.push_back(&d);
  }
  return out;
}

Mesh build_design_mesh(const DatasetConfig& config, const DesignSpec& design) {
  const ShapeSpec& s = design.shape;
  Mesh mesh;
  if (s.kind == ShapeSpec::Kind::LShape) {
    if (config.mesh.kind == MeshSpec::Kind::Regular) {
      throw ConfigError("design " + design.id + ": L-shapes need an irregular mesh");
    }
    mesh = generate_lshape(s.a, s.b, s.width, config.mesh.edge_length, config.mesh.seed);
  } else if (config.mesh.kind == MeshSpec::Kind::Regular) {
    mesh = generate_regular_grid(config.mesh.grid_nodes, config.mesh.grid_nodes, s.width,
                                 s.height);
  } else {
    const Polygon rect{{{0.0, 0.0}, {s.width, 0.0}, {s.width, s.height}, {0.0, s.height}}};
    mesh = generate_irregular_mesh(rect, config.mesh.edge_length, config.mesh.seed);
  }
  const Region bc = BoundarySegment{Side::Left, std::nullopt, std::nullopt};
  Region load;
  if (design.load.kind == LoadSpec::Kind::Gaussian) {
    load = SingleNode{design.load.center};
  } else {
    BoundarySegment top{Side::Top, std::nullopt, std::nullopt};
    if (design.load.from_fraction > 0.0) top.from = design.load.from_fraction * s.width;
    if (design.load.to_fraction < 1.0) top.to = design.load.to_fraction * s.width;
    load = top;
  }
  return label_nodes(mesh, load, bc);
}

SimulationSeries restrict_series(const SimulationSeries& series, std::span<const int> nodes) {
  SimulationSeries out = series;
  for (auto& frame : out.frames) {
    std::vector<double> kept;
    kept.reserve(nodes.size());
    for (int v : nodes) {
      if (v < 0 || v >= static_cast<int>(frame.size())) {
        throw DataError("restrict_series: node index out of range");
      }
      kept.push_back(frame[v]);
    }
    frame = std::move(kept);
  }
  return out;
}

namespace {

struct BuiltDesign {
  Mesh mesh;
  DesignData data;
};

BuiltDesign build_design(const DatasetConfig& config, const DesignSpec& spec) {
  BuiltDesign out;
  Mesh mesh = build_design_mesh(config, spec);
  LoadField load = spec.load.kind == LoadSpec::Kind::Gaussian
                       ? gaussian_load(mesh, spec.load.center,
                                       spec.load.sigma_fraction * spec.shape.width,
                                       spec.load.power)
                       : strip_load(mesh, spec.load.power);
  SolverOptions opts;
  opts.mesh_id = spec.id;
  out.data.spec = spec;
  out.data.mesh_id = spec.id;
  try {
    out.data.linear = solve_linear_transient(mesh, config.material, load, config.n_steps,
                                             config.dt, opts);
    out.data.nonlinear = solve_nonlinear_transient(mesh, config.material, load,
                                                   config.n_steps, config.dt, opts);
  } catch (const SolverError& e) {
    throw SolverError("design " + spec.id + ": " + e.what());
  }
  if (config.mesh.kind == MeshSpec::Kind::Submesh) {
    const std::vector<int> kept =
        submesh_node_selection(mesh, config.mesh.keep_fraction, config.mesh.seed);
    out.mesh = extract_submesh(mesh, config.mesh.keep_fraction, config.mesh.seed);
    out.data.linear = restrict_series(out.data.linear, kept);
    out.data.nonlinear = restrict_series(out.data.nonlinear, kept);
    out.data.parent_nodes = kept;
  } else {
    out.mesh = std::move(mesh);
  }
  return out;
}

}  // namespace

DatasetBundle build_dataset(const DatasetConfig& config, int threads) {
  config.validate();
  const std::size_t n = config.designs.size();
  std::vector<BuiltDesign> built(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        built[i] = build_design(config, config.designs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(threads, 1, static_cast<int>(n));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  DatasetBundle bundle;
  bundle.config = config;
  bundle.config_hash = config_hash(config);
  bundle.generator_version = kGeneratorVersion;
  for (BuiltDesign& b : built) {
    bundle.meshes.emplace(b.data.mesh_id, std::move(b.mesh));
    bundle.designs.push_back(std::move(b.data));
  }
  const int n_frames = bundle.designs.front().linear.num_frames();
  for (std::uint64_t seed : config.seeds) {
    bundle.splits[seed] = split_frames(n_frames, config.train_fraction, seed);
  }
  return bundle;
}

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  json manifest;
  manifest["format"] = kBundleFormat;
  manifest["generator_version"] = bundle.generator_version;
  manifest["config"] = config_json(bundle.config);
  manifest["config_hash"] = bundle.config_hash;
  manifest["seeds"] = bundle.config.seeds;

  json meshes = json::object();
  for (const auto& [id, mesh] : bundle.meshes) {
    const std::string file = "mesh_" + id + ".json";
    save_mesh(mesh, directory / file);
    meshes[id] = {{"file", file}, {"sha256", sha256_file(directory / file)}};
  }
  manifest["meshes"] = std::move(meshes);

  json designs = json::array();
  for (const DesignData& d : bundle.designs) {
    const std::string sub = "design_" + d.spec.id;
    std::filesystem::create_directories(directory / sub);
    json entry = {{"id", d.spec.id}, {"mesh_id", d.mesh_id}, {"role", d.spec.role}};
    if (!d.parent_nodes.empty()) entry["parent_nodes"] = d.parent_nodes;
    for (const auto& [key, series] :
         {std::pair<const char*, const SimulationSeries*>{"linear", &d.linear},
          {"nonlinear", &d.nonlinear}}) {
      const std::string file = sub + "/" + key + ".bin";
      save_series_binary(*series, directory / file);
      entry[key] = {{"file", file}, {"sha256", sha256_file(directory / file)}};
    }
    designs.push_back(std::move(entry));
  }
  manifest["designs"] = std::move(designs);

  json splits = json::object();
  for (const auto& [seed, split] : bundle.splits) {
    splits[std::to_string(seed)] = {{"train", split.train}, {"eval", split.eval}};
  }
  manifest["splits"] = std::move(splits);
  write_text(directory / "manifest.json", manifest.dump(1) + "\n");
}

DatasetBundle load_bundle(const std::filesystem::path& directory) {
  const std::filesystem::path manifest_path = directory / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw IoError("bundle is missing artifact " + manifest_path.string());
  }
  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path));
  } catch (const json::exception& e) {
    throw DataError(std::string("bundle manifest: ") + e.what());
  }
  try {
    if (manifest.at("format").get<std::string>() != kBundleFormat) {
      throw DataError("bundle manifest: unsupported format");
    }
    DatasetBundle bundle;
    bundle.config = config_from(manifest.at("config"));
    bundle.config_hash = manifest.at("config_hash").get<std::string>();
    if (config_hash(bundle.config) != bundle.config_hash) {
      throw IntegrityError("bundle manifest: config hash does not match the stored config");
    }
    bundle.generator_version = manifest.at("generator_version").get<std::string>();
    for (const auto& [id, entry] : manifest.at("meshes").items()) {
      verify_artifact(directory, entry);
      bundle.meshes.emplace(id, load_mesh(directory / entry.at("file").get<std::string>()));
    }
    const auto& specs = bundle.config.designs;
    for (const json& entry : manifest.at("designs")) {
      DesignData d;
      const std::string id = entry.at("id").get<std::string>();
      auto spec = std::find_if(specs.begin(), specs.end(),
                               [&](const DesignSpec& s) { return s.id == id; });
      if (spec == specs.end()) throw DataError("bundle manifest: unknown design '" + id + "'");
      d.spec = *spec;
      d.mesh_id = entry.at("mesh_id").get<std::string>();
      if (!bundle.meshes.count(d.mesh_id)) {
        throw DataError("bundle manifest: design '" + id + "' references missing mesh");
      }
      if (entry.contains("parent_nodes")) {
        d.parent_nodes = entry.at("parent_nodes").get<std::vector<int>>();
      }
      verify_artifact(directory, entry.at("linear"));
      verify_artifact(directory, entry.at("nonlinear"));
      d.linear = load_series_binary(directory / entry.at("linear").at("file").get<std::string>());
      d.nonlinear =
          load_series_binary(directory / entry.at("nonlinear").at("file").get<std::string>());
      if (d.linear.num_frames() != d.nonlinear.num_frames() ||
          d.linear.num_nodes() != d.nonlinear.num_nodes() || d.linear.dt != d.nonlinear.dt) {
        throw DataError("bundle: design '" + id + "' has unpaired series");
      }
      bundle.designs.push_back(std::move(d));
    }
    for (const auto& [seed, entry] : manifest.at("splits").items()) {
      FrameSplit split;
      split.train = entry.at("train").get<std::vector<int>>();
      split.eval = entry.at("eval").get<std::vector<int>>();
      bundle.splits[std::stoull(seed)] = std::move(split);
    }
    return bundle;
  } catch (const json::exception& e) {
    throw DataError(std::string("bundle manifest: ") + e.what());
  }
}

double final_frame_max_relative_gap(const DatasetBundle& bundle) {
  double gap = 0.0;
  for (const DesignData& d : bundle.designs) {
    const auto& lin = d.linear.frames.back();
    const auto& gt = d.nonlinear.frames.back();
    for (std::size_t i = 0; i < gt.size(); ++i) {
      gap = std::max(gap, std::abs(gt[i] - lin[i]) / std::abs(gt[i]));
    }
  }
  return gap;
}

}  // namespace htwin
