#pragma once

#include <span>
#include <vector>

#include "htwin/geometry.hpp"

namespace htwin {

/// Delaunay triangulation of the convex hull of a point set (Bowyer-Watson with
/// exact predicates). Returned triangles are counterclockwise and index into
/// `points`. Duplicate points raise GeometryError.
std::vector<Triangle> delaunay_triangulate(std::span<const Point2> points);

}  // namespace htwin
