#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace htwin {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }

using Triangle = std::array<int, 3>;

/// Sign of the orientation determinant, computed exactly.
/// > 0 when (a, b, c) turn counterclockwise.
int orient2d_sign(Point2 a, Point2 b, Point2 c);

/// Sign of the in-circle determinant, computed exactly.
/// > 0 when d lies strictly inside the circle through the counterclockwise
/// triangle (a, b, c).
int incircle_sign(Point2 a, Point2 b, Point2 c, Point2 d);

/// Floating-point in-circle determinant (not exact); used for tolerance checks.
double incircle_value(Point2 a, Point2 b, Point2 c, Point2 d);

double signed_area(Point2 a, Point2 b, Point2 c);

/// Simple polygon given by its vertices in order (either orientation).
struct Polygon {
  std::vector<Point2> vertices;

  double area() const;
  bool contains(Point2 p) const;
  double distance_to_boundary(Point2 p) const;
  bool is_simple() const;
};

double segment_distance(Point2 p, Point2 a, Point2 b);

}  // namespace htwin
