#include "htwin/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "htwin/errors.hpp"

namespace htwin {

void Material::validate() const {
  if (!(rho_cp > 0.0)) throw ParameterError("material: rho_cp must be positive");
  if (!(k0 > 0.0)) throw ParameterError("material: k0 must be positive");
  if (!(beta >= 0.0)) throw ParameterError("material: beta must be non-negative");
}

double conductivity(double temperature, const Material& material) {
  const double denom = 1.0 + material.beta * (temperature - material.t0);
  if (!(denom > 0.0)) {
    std::ostringstream msg;
    msg << "conductivity: 1 + beta (T - T0) = " << denom << " at T = " << temperature;
    throw NumericError(msg.str());
  }
  return material.k0 / denom;
}

LoadField strip_load(const Mesh& mesh, double power) {
  if (!(power >= 0.0)) throw ParameterError("strip_load: power must be non-negative");
  LoadField load;
  load.q_v.assign(mesh.nodes.size(), 0.0);
  load.support.assign(mesh.triangles.size(), 0);
  auto is_source = [&](int v) { return mesh.groups[v] == NodeGroup::HeatSource; };

  bool any_full = false;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    if (is_source(tri[0]) && is_source(tri[1]) && is_source(tri[2])) {
      load.support[t] = 1;
      any_full = true;
    }
  }
  if (!any_full) {
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const Triangle& tri = mesh.triangles[t];
      if (is_source(tri[0]) || is_source(tri[1]) || is_source(tri[2])) load.support[t] = 1;
    }
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (!load.support[t]) continue;
    for (int v : mesh.triangles[t]) load.q_v[v] = power;
  }
  return load;
}

LoadField gaussian_load(const Mesh& mesh, int center, double sigma, double p_max) {
  if (center < 0 || center >= mesh.num_nodes()) {
    throw ParameterError("gaussian_load: center node out of range");
  }
  if (!(sigma > 0.0)) throw ParameterError("gaussian_load: sigma must be positive");
  LoadField load;
  load.support.assign(mesh.triangles.size(), 1);
  load.q_v.resize(mesh.nodes.size());
  const Point2 c = mesh.nodes[center];
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const Point2 d = mesh.nodes[v] - c;
    load.q_v[v] = p_max * std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * sigma * sigma));
  }
  return load;
}

std::array<std::array<double, 3>, 3> element_stiffness(Point2 a, Point2 b, Point2 c, double k) {
  const double area = signed_area(a, b, c);
  if (!(area > 0.0)) throw GeometryError("element_stiffness: degenerate or clockwise triangle");
  const std::array<double, 3> gx{b.y - c.y, c.y - a.y, a.y - b.y};
  const std::array<double, 3> gy{c.x - b.x, a.x - c.x, b.x - a.x};
  std::array<std::array<double, 3>, 3> ke{};
  const double s = k / (4.0 * area);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) ke[i][j] = s * (gx[i] * gx[j] + gy[i] * gy[j]);
  }
  return ke;
}

SystemMatrices assemble_system(const Mesh& mesh, const Material& material,
                               std::span<const double> node_conductivity) {
  if (static_cast<int>(node_conductivity.size()) != mesh.num_nodes()) {
    throw DataError("assemble_system: conductivity field size mismatch");
  }
  SystemMatrices sys;
  sys.lumped_mass.assign(mesh.nodes.size(), 0.0);
  sys.stiffness = CsrMatrix::from_mesh(mesh);
  for (const Triangle& tri : mesh.triangles) {
    const Point2 a = mesh.nodes[tri[0]];
    const Point2 b = mesh.nodes[tri[1]];
    const Point2 c = mesh.nodes[tri[2]];
    const double k_elem =
        (node_conductivity[tri[0]] + node_conductivity[tri[1]] + node_conductivity[tri[2]]) / 3.0;
    if (!(k_elem > 0.0)) throw NumericError("assemble_system: non-positive conductivity");
    const auto ke = element_stiffness(a, b, c, k_elem);
    const double share = material.rho_cp * signed_area(a, b, c) / 3.0;
    for (int i = 0; i < 3; ++i) {
      sys.lumped_mass[tri[i]] += share;
      for (int j = 0; j < 3; ++j) sys.stiffness.add(tri[i], tri[j], ke[i][j]);
    }
  }
  return sys;
}

std::vector<double> load_vector(const Mesh& mesh, const LoadField& load) {
  if (load.q_v.size() != mesh.nodes.size() || load.support.size() != mesh.triangles.size()) {
    throw DataError("load_vector: load field does not match mesh");
  }
  std::vector<double> f(mesh.nodes.size(), 0.0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (!load.support[t]) continue;
    const Triangle& tri = mesh.triangles[t];
    const double area = mesh.triangle_area(static_cast<int>(t));
    const double q0 = load.q_v[tri[0]], q1 = load.q_v[tri[1]], q2 = load.q_v[tri[2]];
    f[tri[0]] += area / 12.0 * (2.0 * q0 + q1 + q2);
    f[tri[1]] += area / 12.0 * (q0 + 2.0 * q1 + q2);
    f[tri[2]] += area / 12.0 * (q0 + q1 + 2.0 * q2);
  }
  return f;
}

namespace {

class ImplicitStepper {
 public:
  ImplicitStepper(const Mesh& mesh, const LoadField& load, double dt, const SolverOptions& opts)
      : mesh_(mesh), dt_(dt), opts_(opts), force_(load_vector(mesh, load)) {
    constrained_.resize(mesh.nodes.size());
    for (int v = 0; v < mesh.num_nodes(); ++v) {
      constrained_[v] = mesh.groups[v] == NodeGroup::DirichletBC;
    }
    for (double q : load.q_v) {
      if (!(q >= 0.0)) throw ParameterError("load field values must be non-negative");
    }
  }

  /// Solves (M + dt K) T = M T_prev + dt F with Dirichlet rows eliminated.
  std::vector<double> step(const SystemMatrices& sys, const std::vector<double>& previous,
                           const std::vector<double>& guess, int step_index) const {
    const int n = mesh_.num_nodes();
    CsrMatrix a = sys.stiffness;
    auto vals = a.values();
    for (double& v : vals) v *= dt_;
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) {
      a.add(i, i, sys.lumped_mass[i]);
      rhs[i] = sys.lumped_mass[i] * previous[i] + dt_ * force_[i];
    }
    const auto rs = a.row_start();
    const auto cols = a.cols();
    for (int i = 0; i < n; ++i) {
      for (int k = rs[i]; k < rs[i + 1]; ++k) {
        const int j = cols[k];
        if (constrained_[i]) {
          vals[k] = (i == j) ? 1.0 : 0.0;
        } else if (constrained_[j]) {
          rhs[i] -= vals[k] * opts_.t_dirichlet;
          vals[k] = 0.0;
        }
      }
      if (constrained_[i]) rhs[i] = opts_.t_dirichlet;
    }
    std::vector<double> x = guess;
    for (int i = 0; i < n; ++i) {
      if (constrained_[i]) x[i] = opts_.t_dirichlet;
    }
    const CgResult res = conjugate_gradient(a, rhs, x, opts_.cg_tolerance, 10 * n);
    if (!res.converged) {
      std::ostringstream msg;
      msg << "linear solve did not converge at step " << step_index << " after "
          << res.iterations << " iterations (relative residual " << res.relative_residual << ")";
      throw SolverError(msg.str());
    }
    return x;
  }

 private:
  const Mesh& mesh_;
  double dt_;
  SolverOptions opts_;
  std::vector<double> force_;
  std::vector<char> constrained_;
};

SimulationSeries make_series(const Material& material, double dt, const SolverOptions& opts,
                             int n_nodes) {
  SimulationSeries s;
  s.mesh_id = opts.mesh_id;
  s.dt = dt;
  s.t_init = opts.t_init;
  s.t_dirichlet = opts.t_dirichlet;
  s.material = material;
  std::vector<double> initial(n_nodes, opts.t_init);
  s.frames.push_back(std::move(initial));
  return s;
}

void check_inputs(const Mesh& mesh, const Material& material, int n_steps, double dt) {
  material.validate();
  if (n_steps < 1) throw ParameterError("transient solve: n_frames must be >= 1");
  if (!(dt > 0.0)) throw ParameterError("transient solve: dt must be positive");
  if (std::none_of(mesh.groups.begin(), mesh.groups.end(),
                   [](NodeGroup g) { return g == NodeGroup::DirichletBC; })) {
    throw ConfigError("transient solve: mesh has no Dirichlet nodes");
  }
}

}  // namespace

SimulationSeries solve_linear_transient(const Mesh& mesh, const Material& material,
                                        const LoadField& load, int n_steps, double dt,
                                        const SolverOptions& options) {
  check_inputs(mesh, material, n_steps, dt);
  const ImplicitStepper stepper(mesh, load, dt, options);
  const std::vector<double> k(mesh.nodes.size(), material.k0);
  const SystemMatrices sys = assemble_system(mesh, material, k);
  SimulationSeries series = make_series(material, dt, options, mesh.num_nodes());
  for (int s = 1; s <= n_steps; ++s) {
    const std::vector<double>& prev = series.frames.back();
    series.frames.push_back(stepper.step(sys, prev, prev, s));
  }
  return series;
}

SimulationSeries solve_nonlinear_transient(const Mesh& mesh, const Material& material,
                                           const LoadField& load, int n_steps, double dt,
                                           const SolverOptions& options) {
  check_inputs(mesh, material, n_steps, dt);
  const ImplicitStepper stepper(mesh, load, dt, options);
  SimulationSeries series = make_series(material, dt, options, mesh.num_nodes());
  const int n = mesh.num_nodes();
  std::vector<double> k(n);
  for (int s = 1; s <= n_steps; ++s) {
    const std::vector<double> prev = series.frames.back();
    std::vector<double> candidate = prev;
    bool converged = false;
    double change = 0.0;
    for (int it = 0; it < options.picard_max_iterations; ++it) {
      for (int i = 0; i < n; ++i) k[i] = conductivity(candidate[i], material);
      const SystemMatrices sys = assemble_system(mesh, material, k);
      std::vector<double> next = stepper.step(sys, prev, candidate, s);
      double diff = 0.0;
      double scale = 0.0;
      for (int i = 0; i < n; ++i) {
        diff = std::max(diff, std::abs(next[i] - candidate[i]));
        scale = std::max(scale, std::abs(next[i]));
      }
      change = diff / std::max(scale, 1e-300);
      candidate = std::move(next);
      if (change < options.picard_tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "Picard iteration did not converge at step " << s << " (relative change " << change
          << ")";
      throw SolverError(msg.str());
    }
    series.frames.push_back(std::move(candidate));
  }
  return series;
}

}  // namespace htwin
