#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "htwin/mesh.hpp"
#include "htwin/sparse.hpp"

namespace htwin {

/// Thermal properties; conductivity k(T) = k0 / (1 + beta (T - t0)).
struct Material {
  double rho_cp = 30.0;   // J m^-3 K^-1
  double k0 = 0.5;        // W m^-1 K^-1
  double beta = 1.2e-3;   // K^-1
  double t0 = 298.0;      // K

  void validate() const;
  friend bool operator==(const Material&, const Material&) = default;
};

double conductivity(double temperature, const Material& material);

/// Volumetric source: nodal values plus the triangles it is integrated over.
struct LoadField {
  std::vector<double> q_v;     // W m^-3, one per node
  std::vector<char> support;   // one flag per triangle
};

/// Uniform source of `power` over the heat-source strip: triangles whose
/// vertices are all HeatSource nodes, or, when there are none, triangles
/// touching a HeatSource node.
LoadField strip_load(const Mesh& mesh, double power);

LoadField gaussian_load(const Mesh& mesh, int center, double sigma, double p_max);

/// 3x3 P1 stiffness of one triangle with uniform conductivity k.
std::array<std::array<double, 3>, 3> element_stiffness(Point2 a, Point2 b, Point2 c, double k);

struct SystemMatrices {
  std::vector<double> lumped_mass;  // diagonal of M
  CsrMatrix stiffness;              // K
};

SystemMatrices assemble_system(const Mesh& mesh, const Material& material,
                               std::span<const double> node_conductivity);

std::vector<double> load_vector(const Mesh& mesh, const LoadField& load);

struct SimulationSeries {
  std::string mesh_id;
  std::vector<std::vector<double>> frames;  // frames[t][node], Kelvin
  double dt = 0.0;
  double t_init = 298.0;
  double t_dirichlet = 298.0;
  Material material;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int num_nodes() const { return frames.empty() ? 0 : static_cast<int>(frames[0].size()); }

  friend bool operator==(const SimulationSeries&, const SimulationSeries&) = default;
};

struct SolverOptions {
  double t_init = 298.0;
  double t_dirichlet = 298.0;
  double cg_tolerance = 1e-10;
  double picard_tolerance = 1e-8;
  int picard_max_iterations = 50;
  std::string mesh_id;
};

/// Backward Euler with constant conductivity k0. Returns n_steps + 1 frames.
SimulationSeries solve_linear_transient(const Mesh& mesh, const Material& material,
                                        const LoadField& load, int n_steps, double dt,
                                        const SolverOptions& options = {});

/// Backward Euler with Picard iteration on k(T) inside every step.
SimulationSeries solve_nonlinear_transient(const Mesh& mesh, const Material& material,
                                           const LoadField& load, int n_steps, double dt,
                                           const SolverOptions& options = {});

// Series persistence: little-endian binary and a one-row-per-frame CSV.
void save_series_binary(const SimulationSeries& series, const std::filesystem::path& path);
SimulationSeries load_series_binary(const std::filesystem::path& path);
void export_series_csv(const SimulationSeries& series, const std::filesystem::path& path);

}  // namespace htwin
