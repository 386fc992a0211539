#include "htwin/delaunay.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "htwin/errors.hpp"

namespace htwin {

std::vector<Triangle> delaunay_triangulate(std::span<const Point2> points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw GeometryError("delaunay: need at least 3 points");

  double xmin = points[0].x, xmax = points[0].x;
  double ymin = points[0].y, ymax = points[0].y;
  for (const Point2& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double extent = std::max({xmax - xmin, ymax - ymin, 1e-300});
  const double cx = 0.5 * (xmin + xmax);
  const double cy = 0.5 * (ymin + ymax);
  const double big = 1e5 * extent;

  // Super-triangle vertices live after the input points.
  std::vector<Point2> all(points.begin(), points.end());
  all.push_back({cx - 3.0 * big, cy - big});
  all.push_back({cx + 3.0 * big, cy - big});
  all.push_back({cx, cy + 3.0 * big});

  std::vector<Triangle> tris{{n, n + 1, n + 2}};
  std::vector<std::size_t> cavity;
  std::unordered_map<std::uint64_t, int> edge_count;
  std::vector<std::pair<int, int>> boundary;

  auto key = [](int u, int v) {
    const auto a = static_cast<std::uint32_t>(std::min(u, v));
    const auto b = static_cast<std::uint32_t>(std::max(u, v));
    return (static_cast<std::uint64_t>(a) << 32) | b;
  };

  for (int pi = 0; pi < n; ++pi) {
    const Point2 p = all[pi];
    cavity.clear();
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const Triangle& tri = tris[t];
      if (incircle_sign(all[tri[0]], all[tri[1]], all[tri[2]], p) > 0) cavity.push_back(t);
    }
    if (cavity.empty()) throw GeometryError("delaunay: point not inside triangulation");

    edge_count.clear();
    for (std::size_t t : cavity) {
      const Triangle& tri = tris[t];
      for (int e = 0; e < 3; ++e) ++edge_count[key(tri[e], tri[(e + 1) % 3])];
    }
    boundary.clear();
    for (std::size_t t : cavity) {
      const Triangle& tri = tris[t];
      for (int e = 0; e < 3; ++e) {
        const int u = tri[e];
        const int v = tri[(e + 1) % 3];
        if (edge_count[key(u, v)] == 1) boundary.emplace_back(u, v);
      }
    }
    for (const auto& [u, v] : boundary) {
      if (all[u] == p || all[v] == p) throw GeometryError("delaunay: duplicate point");
    }

    // Remove cavity triangles (descending order keeps indices valid).
    std::sort(cavity.begin(), cavity.end(), std::greater<>());
    for (std::size_t t : cavity) {
      tris[t] = tris.back();
      tris.pop_back();
    }
    for (const auto& [u, v] : boundary) {
      if (orient2d_sign(all[u], all[v], p) <= 0) {
        throw GeometryError("delaunay: degenerate cavity");
      }
      tris.push_back({u, v, pi});
    }
  }

  std::vector<Triangle> out;
  out.reserve(tris.size());
  for (const Triangle& t : tris) {
    if (t[0] >= n || t[1] >= n || t[2] >= n) continue;
    out.push_back(t);
  }
  // Canonical ordering: rotate so the smallest index leads, then sort.
  for (Triangle& t : out) {
    const auto lead = std::min_element(t.begin(), t.end()) - t.begin();
    std::rotate(t.begin(), t.begin() + lead, t.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace htwin
