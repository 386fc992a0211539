#include "htwin/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "htwin/delaunay.hpp"
#include "htwin/errors.hpp"
#include "htwin/rng.hpp"

namespace htwin {

double Mesh::triangle_area(int t) const {
  const Triangle& tri = triangles[t];
  return signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

double Mesh::area() const {
  double total = 0.0;
  for (int t = 0; t < num_triangles(); ++t) total += triangle_area(t);
  return total;
}

void Mesh::validate() const {
  const int n = num_nodes();
  if (static_cast<int>(groups.size()) != n) {
    throw GeometryError("mesh: groups size does not match node count");
  }
  std::vector<char> used(n, 0);
  for (int t = 0; t < num_triangles(); ++t) {
    for (int v : triangles[t]) {
      if (v < 0 || v >= n) throw GeometryError("mesh: triangle index out of range");
      used[v] = 1;
    }
    const Triangle& tri = triangles[t];
    if (orient2d_sign(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) <= 0) {
      throw GeometryError("mesh: triangle " + std::to_string(t) +
                          " is degenerate or clockwise");
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!used[v]) throw GeometryError("mesh: node " + std::to_string(v) + " is in no triangle");
  }
}

Mesh generate_regular_grid(int nx, int ny, double width, double height) {
  if (nx < 2 || ny < 2) throw ParameterError("regular grid: nx and ny must be >= 2");
  if (!(width > 0.0) || !(height > 0.0)) {
    throw ParameterError("regular grid: width and height must be positive");
  }
  Mesh mesh;
  mesh.nodes.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.nodes.push_back({width * i / (nx - 1), height * j / (ny - 1)});
    }
  }
  auto id = [nx](int i, int j) { return j * nx + i; };
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  mesh.groups.assign(mesh.nodes.size(), NodeGroup::Interior);
  return mesh;
}

namespace {

Polygon counterclockwise(Polygon poly) {
  double twice = 0.0;
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = poly.vertices[i];
    const Point2& q = poly.vertices[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  if (twice < 0.0) std::reverse(poly.vertices.begin(), poly.vertices.end());
  return poly;
}

Point2 centroid(const std::vector<Point2>& pts, const Triangle& t) {
  return {(pts[t[0]].x + pts[t[1]].x + pts[t[2]].x) / 3.0,
          (pts[t[0]].y + pts[t[1]].y + pts[t[2]].y) / 3.0};
}

}  // namespace

Mesh generate_irregular_mesh(const Polygon& domain, double target_edge_length,
                             std::uint64_t seed) {
  if (!(target_edge_length > 0.0)) {
    throw ParameterError("irregular mesh: target edge length must be positive");
  }
  if (!domain.is_simple()) throw GeometryError("irregular mesh: polygon is not simple");
  const Polygon poly = counterclockwise(domain);
  const double h = target_edge_length;

  Mesh mesh;
  const std::size_t nv = poly.vertices.size();
  for (std::size_t e = 0; e < nv; ++e) {
    const Point2 a = poly.vertices[e];
    const Point2 b = poly.vertices[(e + 1) % nv];
    const int segments = std::max(1, static_cast<int>(std::ceil(norm(b - a) / h - 1e-9)));
    for (int k = 0; k < segments; ++k) {
      const double t = static_cast<double>(k) / segments;
      mesh.nodes.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }

  double xmin = poly.vertices[0].x, xmax = xmin;
  double ymin = poly.vertices[0].y, ymax = ymin;
  for (const Point2& p : poly.vertices) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }

  // Interior points keep more than half an edge length from the boundary so
  // no boundary segment is encroached and the triangulation conforms to it.
  Rng rng(seed);
  const int ni = static_cast<int>(std::floor((xmax - xmin) / h));
  const int nj = static_cast<int>(std::floor((ymax - ymin) / h));
  for (int j = 1; j <= nj; ++j) {
    for (int i = 1; i <= ni; ++i) {
      const double jx = rng.uniform(-0.25 * h, 0.25 * h);
      const double jy = rng.uniform(-0.25 * h, 0.25 * h);
      const Point2 p{xmin + i * h + jx, ymin + j * h + jy};
      if (!poly.contains(p)) continue;
      if (poly.distance_to_boundary(p) <= 0.5 * h * (1.0 + 1e-9)) continue;
      mesh.nodes.push_back(p);
    }
  }

  const std::vector<Triangle> all = delaunay_triangulate(mesh.nodes);
  for (const Triangle& t : all) {
    if (poly.contains(centroid(mesh.nodes, t))) mesh.triangles.push_back(t);
  }
  mesh.groups.assign(mesh.nodes.size(), NodeGroup::Interior);
  mesh.validate();
  return mesh;
}

Polygon lshape_polygon(double a, double b, double base) {
  const double arm_height = a * 0.5 * base;
  const double arm_width = b * 0.5 * base;
  return Polygon{{{0.0, 0.0},
                  {arm_width, 0.0},
                  {arm_width, base - arm_height},
                  {base, base - arm_height},
                  {base, base},
                  {0.0, base}}};
}

Mesh generate_lshape(double a, double b, double base, double target_edge_length,
                     std::uint64_t seed) {
  if (!(a >= 0.4 && a <= 1.2) || !(b >= 0.4 && b <= 1.2)) {
    throw ParameterError("L-shape: a and b must lie in [0.4, 1.2]");
  }
  if (!(base > 0.0)) throw ParameterError("L-shape: base must be positive");
  Mesh mesh = generate_irregular_mesh(lshape_polygon(a, b, base), target_edge_length, seed);
  mesh.domain_params = std::array<double, 2>{a, b};
  return mesh;
}

std::vector<int> submesh_node_selection(const Mesh& mesh, double keep_fraction,
                                        std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ParameterError("submesh: keep_fraction must lie in (0, 1]");
  }
  const int n = mesh.num_nodes();
  const int target =
      static_cast<int>(std::ceil(keep_fraction * n - 1e-9 * n));
  std::vector<int> kept;
  std::vector<int> candidates;
  for (int v = 0; v < n; ++v) {
    (mesh.groups[v] == NodeGroup::Interior ? candidates : kept).push_back(v);
  }
  Rng rng(seed);
  rng.shuffle(std::span<int>(candidates));
  const int extra = std::max(0, target - static_cast<int>(kept.size()));
  kept.insert(kept.end(), candidates.begin(),
              candidates.begin() + std::min<int>(extra, candidates.size()));
  std::sort(kept.begin(), kept.end());
  return kept;
}

Mesh extract_submesh(const Mesh& mesh, double keep_fraction, std::uint64_t seed) {
  const std::vector<int> kept = submesh_node_selection(mesh, keep_fraction, seed);
  if (kept.size() < 3) throw GeometryError("submesh: fewer than 3 nodes kept");
  Mesh sub;
  sub.domain_params = mesh.domain_params;
  for (int v : kept) {
    sub.nodes.push_back(mesh.nodes[v]);
    sub.groups.push_back(mesh.groups[v]);
  }
  sub.triangles = delaunay_triangulate(sub.nodes);
  sub.validate();
  return sub;
}

std::vector<int> nodes_in_region(const Mesh& mesh, const Region& region) {
  std::vector<int> out;
  if (const auto* single = std::get_if<SingleNode>(&region)) {
    if (single->node < 0 || single->node >= mesh.num_nodes()) {
      throw ConfigError("region: node index out of range");
    }
    out.push_back(single->node);
    return out;
  }
  const auto& seg = std::get<BoundarySegment>(region);
  double xmin = mesh.nodes.at(0).x, xmax = xmin;
  double ymin = mesh.nodes.at(0).y, ymax = ymin;
  for (const Point2& p : mesh.nodes) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double tol = 1e-9 * std::max(xmax - xmin, ymax - ymin);
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const Point2 p = mesh.nodes[v];
    bool on_side = false;
    double along = 0.0;
    switch (seg.side) {
      case Side::Left: on_side = std::abs(p.x - xmin) <= tol; along = p.y; break;
      case Side::Right: on_side = std::abs(p.x - xmax) <= tol; along = p.y; break;
      case Side::Bottom: on_side = std::abs(p.y - ymin) <= tol; along = p.x; break;
      case Side::Top: on_side = std::abs(p.y - ymax) <= tol; along = p.x; break;
    }
    if (!on_side) continue;
    if (seg.from && along < *seg.from - tol) continue;
    if (seg.to && along > *seg.to + tol) continue;
    out.push_back(v);
  }
  return out;
}

Mesh label_nodes(const Mesh& mesh, const Region& load_region, const Region& bc_region) {
  const std::vector<int> bc = nodes_in_region(mesh, bc_region);
  if (bc.empty()) throw ConfigError("label_nodes: boundary-condition region matches no node");
  const std::vector<int> load = nodes_in_region(mesh, load_region);
  Mesh out = mesh;
  out.groups.assign(mesh.nodes.size(), NodeGroup::Interior);
  for (int v : load) out.groups[v] = NodeGroup::HeatSource;
  for (int v : bc) out.groups[v] = NodeGroup::DirichletBC;
  return out;
}

EdgeList mesh_to_edges(const Mesh& mesh) {
  EdgeList edges;
  edges.reserve(mesh.triangles.size() * 6);
  for (const Triangle& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int u = t[e];
      const int v = t[(e + 1) % 3];
      edges.push_back({u, v});
      edges.push_back({v, u});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace htwin
