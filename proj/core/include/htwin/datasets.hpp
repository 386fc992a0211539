#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "htwin/fem.hpp"
#include "htwin/mesh.hpp"

namespace htwin {

enum class Scale { Desk, Full };

Scale parse_scale(std::string_view text);
std::string to_string(Scale scale);

struct ShapeSpec {
  enum class Kind { Rectangle, LShape };
  Kind kind = Kind::Rectangle;
  double width = 1.0;   // rectangle width, or L-shape base
  double height = 1.0;  // rectangle only
  double a = 1.0;       // L-shape multipliers
  double b = 1.0;

  friend bool operator==(const ShapeSpec&, const ShapeSpec&) = default;
};

struct MeshSpec {
  enum class Kind { Regular, Irregular, Submesh };
  Kind kind = Kind::Regular;
  int grid_nodes = 15;         // regular: nodes per side
  double edge_length = 0.07;   // irregular, and the parent of a submesh
  double keep_fraction = 0.4;  // submesh
  std::uint64_t seed = 1;

  friend bool operator==(const MeshSpec&, const MeshSpec&) = default;
};

struct LoadSpec {
  enum class Kind { Strip, Gaussian };
  Kind kind = Kind::Strip;
  double power = 15000.0;  // W m^-3; peak value for a Gaussian
  // Strip: portion of the top boundary, as fractions of the width.
  double from_fraction = 0.0;
  double to_fraction = 1.0;
  // Gaussian: center node and width as a fraction of the plate width.
  int center = -1;
  double sigma_fraction = 0.15;

  friend bool operator==(const LoadSpec&, const LoadSpec&) = default;
};

struct DesignSpec {
  std::string id;
  ShapeSpec shape;
  LoadSpec load;
  std::string role;  // "train", "eval" or empty

  friend bool operator==(const DesignSpec&, const DesignSpec&) = default;
};

/// Declarative description of one dataset. Dirichlet nodes are the left edge.
struct DatasetConfig {
  std::string name;
  Scale scale = Scale::Desk;
  MeshSpec mesh;
  std::vector<DesignSpec> designs;
  int n_steps = 400;
  double dt = 2.5e-2;
  Material material;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double train_fraction = 0.1;

  void validate() const;
  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

std::vector<std::string> preset_names();

/// Named dataset (A1..A8, B1, B2) at the requested scale.
DatasetConfig make_preset(std::string_view name, Scale scale);

std::string dataset_config_to_json(const DatasetConfig& config);
DatasetConfig dataset_config_from_json(const std::string& text);
std::string config_hash(const DatasetConfig& config);

struct FrameSplit {
  std::vector<int> train;
  std::vector<int> eval;

  friend bool operator==(const FrameSplit&, const FrameSplit&) = default;
};

/// Seeded uniform sample of floor(fraction * n) frames (at least one); eval is the
/// complement. Both sorted.
FrameSplit split_frames(int n_frames, double fraction, std::uint64_t seed);

struct DesignData {
  DesignSpec spec;
  std::string mesh_id;
  SimulationSeries linear;
  SimulationSeries nonlinear;
  std::vector<int> parent_nodes;  // submesh datasets: kept parent node indices

  friend bool operator==(const DesignData&, const DesignData&) = default;
};

struct DatasetBundle {
  DatasetConfig config;
  std::map<std::string, Mesh> meshes;
  std::vector<DesignData> designs;
  std::map<std::uint64_t, FrameSplit> splits;  // per seed
  std::string config_hash;
  std::string generator_version;

  const Mesh& mesh_of(const DesignData& design) const;
  std::vector<const DesignData*> with_role(std::string_view role) const;

  friend bool operator==(const DatasetBundle&, const DatasetBundle&) = default;
};

/// Labeled mesh for one design (before any submesh extraction).
Mesh build_design_mesh(const DatasetConfig& config, const DesignSpec& design);

/// Keeps the listed nodes of every frame.
SimulationSeries restrict_series(const SimulationSeries& series, std::span<const int> nodes);

/// Generates meshes and runs both solvers for every design, `threads` designs at a time.
DatasetBundle build_dataset(const DatasetConfig& config, int threads = 1);

/// Layout: manifest.json, mesh_<id>.json, design_<id>/{linear,nonlinear}.bin
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& directory);
DatasetBundle load_bundle(const std::filesystem::path& directory);

/// Largest |T_nl - T_lin| / T_nl over the nodes of the final frame, over all designs.
double final_frame_max_relative_gap(const DatasetBundle& bundle);

}  // namespace htwin
