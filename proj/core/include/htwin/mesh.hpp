#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "htwin/geometry.hpp"

namespace htwin {

/// Node role; the numeric value is the one-hot slot and the file encoding.
enum class NodeGroup : std::uint8_t { Interior = 0, HeatSource = 1, DirichletBC = 2 };

inline constexpr int kNodeGroupCount = 3;

/// 2D triangular mesh shared by the FEM solver and the graph network.
struct Mesh {
  std::vector<Point2> nodes;
  std::vector<Triangle> triangles;  // counterclockwise
  std::vector<NodeGroup> groups;    // one label per node
  std::optional<std::array<double, 2>> domain_params;  // (a, b) for L-shapes

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  double area() const;

  /// Throws GeometryError if any structural invariant is violated.
  void validate() const;

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

/// Directed edge (i, j); the edge belongs to receiver i and sender j.
struct DirectedEdge {
  int i = 0;
  int j = 0;

  friend auto operator<=>(const DirectedEdge&, const DirectedEdge&) = default;
};

using EdgeList = std::vector<DirectedEdge>;

enum class Side { Left, Right, Bottom, Top };

/// Nodes on one side of the mesh bounding box, optionally restricted to an
/// interval of the coordinate running along that side.
struct BoundarySegment {
  Side side = Side::Left;
  std::optional<double> from;  // lower bound on the along-side coordinate
  std::optional<double> to;    // upper bound on the along-side coordinate
};

/// A single node (the Gaussian center in load-position datasets).
struct SingleNode {
  int node = 0;
};

using Region = std::variant<BoundarySegment, SingleNode>;

Mesh generate_regular_grid(int nx, int ny, double width, double height);

Mesh generate_irregular_mesh(const Polygon& domain, double target_edge_length,
                             std::uint64_t seed);

/// L-shaped plate of side `base`: the upper arm spans the full width with
/// height a*base/2 and the left arm spans the full height with width b*base/2.
Mesh generate_lshape(double a, double b, double base, double target_edge_length,
                     std::uint64_t seed);

Polygon lshape_polygon(double a, double b, double base);

Mesh extract_submesh(const Mesh& mesh, double keep_fraction, std::uint64_t seed);

/// Returns the indices of the parent nodes kept by extract_submesh, ascending.
std::vector<int> submesh_node_selection(const Mesh& mesh, double keep_fraction,
                                        std::uint64_t seed);

std::vector<int> nodes_in_region(const Mesh& mesh, const Region& region);

/// BC labels win over load labels on overlap.
Mesh label_nodes(const Mesh& mesh, const Region& load_region, const Region& bc_region);

EdgeList mesh_to_edges(const Mesh& mesh);

std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);

}  // namespace htwin
