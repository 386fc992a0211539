#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "htwin/errors.hpp"
#include "htwin/geometry.hpp"

namespace htwin {
namespace {

// Exact floating-point expansions: a value is the exact sum of its components,
// stored in increasing order of magnitude and nonoverlapping.
using Expansion = std::vector<double>;

inline void two_sum(double a, double b, double& x, double& y) {
  x = a + b;
  const double bv = x - a;
  const double av = x - bv;
  y = (a - av) + (b - bv);
}

inline void two_product(double a, double b, double& x, double& y) {
  x = a * b;
  y = std::fma(a, b, -x);
}

Expansion grow(const Expansion& e, double b) {
  Expansion h;
  h.reserve(e.size() + 1);
  double q = b;
  for (double ei : e) {
    double sum = 0.0;
    double err = 0.0;
    two_sum(q, ei, sum, err);
    if (err != 0.0) h.push_back(err);
    q = sum;
  }
  if (q != 0.0 || h.empty()) h.push_back(q);
  return h;
}

Expansion add(const Expansion& a, const Expansion& b) {
  Expansion out = a;
  for (double bi : b) out = grow(out, bi);
  return out;
}

Expansion negate(Expansion e) {
  for (double& v : e) v = -v;
  return e;
}

Expansion diff(double a, double b) {
  double x = 0.0;
  double y = 0.0;
  two_sum(a, -b, x, y);
  Expansion e;
  if (y != 0.0) e.push_back(y);
  e.push_back(x);
  return e;
}

Expansion scale(const Expansion& e, double b) {
  Expansion out;
  for (double ei : e) {
    double x = 0.0;
    double y = 0.0;
    two_product(ei, b, x, y);
    out = grow(out, y);
    out = grow(out, x);
  }
  return out;
}

Expansion mul(const Expansion& a, const Expansion& b) {
  Expansion out;
  for (double bi : b) out = add(out, scale(a, bi));
  return out;
}

int sign_of(const Expansion& e) {
  for (auto it = e.rbegin(); it != e.rend(); ++it) {
    if (*it > 0.0) return 1;
    if (*it < 0.0) return -1;
  }
  return 0;
}

int orient_exact(Point2 a, Point2 b, Point2 c) {
  const Expansion acx = diff(a.x, c.x);
  const Expansion bcy = diff(b.y, c.y);
  const Expansion acy = diff(a.y, c.y);
  const Expansion bcx = diff(b.x, c.x);
  return sign_of(add(mul(acx, bcy), negate(mul(acy, bcx))));
}

int incircle_exact(Point2 a, Point2 b, Point2 c, Point2 d) {
  const Expansion adx = diff(a.x, d.x);
  const Expansion ady = diff(a.y, d.y);
  const Expansion bdx = diff(b.x, d.x);
  const Expansion bdy = diff(b.y, d.y);
  const Expansion cdx = diff(c.x, d.x);
  const Expansion cdy = diff(c.y, d.y);

  const Expansion alift = add(mul(adx, adx), mul(ady, ady));
  const Expansion blift = add(mul(bdx, bdx), mul(bdy, bdy));
  const Expansion clift = add(mul(cdx, cdx), mul(cdy, cdy));

  const Expansion bc = add(mul(bdx, cdy), negate(mul(bdy, cdx)));
  const Expansion ca = add(mul(cdx, ady), negate(mul(cdy, adx)));
  const Expansion ab = add(mul(adx, bdy), negate(mul(ady, bdx)));

  return sign_of(add(add(mul(alift, bc), mul(blift, ca)), mul(clift, ab)));
}

}  // namespace

int orient2d_sign(Point2 a, Point2 b, Point2 c) {
  const double left = (a.x - c.x) * (b.y - c.y);
  const double right = (a.y - c.y) * (b.x - c.x);
  const double det = left - right;
  const double bound = 1e-15 * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return orient_exact(a, b, c);
}

double incircle_value(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  return alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) +
         clift * (adx * bdy - ady * bdx);
}

int incircle_sign(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double det = alift * (bdx * cdy - bdy * cdx) +
                     blift * (cdx * ady - cdy * adx) +
                     clift * (adx * bdy - ady * bdx);
  const double permanent =
      alift * (std::abs(bdx * cdy) + std::abs(bdy * cdx)) +
      blift * (std::abs(cdx * ady) + std::abs(cdy * adx)) +
      clift * (std::abs(adx * bdy) + std::abs(ady * bdx));
  const double bound = 1e-14 * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return incircle_exact(a, b, c, d);
}

double signed_area(Point2 a, Point2 b, Point2 c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const Point2 ap = p - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 0.0 ? (ap.x * ab.x + ap.y * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - Point2{a.x + t * ab.x, a.y + t * ab.y});
}

double Polygon::area() const {
  double twice = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = vertices[i];
    const Point2& q = vertices[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(twice);
}

bool Polygon::contains(Point2 p) const {
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = vertices[i];
    const Point2& b = vertices[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double Polygon::distance_to_boundary(Point2 p) const {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, segment_distance(p, vertices[i], vertices[(i + 1) % n]));
  }
  return best;
}

bool Polygon::is_simple() const {
  const std::size_t n = vertices.size();
  if (n < 3) return false;
  auto segments_cross = [](Point2 a, Point2 b, Point2 c, Point2 d) {
    const int o1 = orient2d_sign(a, b, c);
    const int o2 = orient2d_sign(a, b, d);
    const int o3 = orient2d_sign(c, d, a);
    const int o4 = orient2d_sign(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    auto on_segment = [](Point2 p, Point2 q, Point2 r) {
      return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) &&
             std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
    };
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = vertices[i];
    const Point2 b = vertices[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_cross(a, b, vertices[j], vertices[(j + 1) % n])) return false;
    }
  }
  return true;
}

}  // namespace htwin
