#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmr/geom2d.hpp"

namespace mmr::geom {

double signed_area(std::span<const Point2> ring) {
  double twice = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    twice += cross(ring[i], ring[(i + 1) % n]);
  }
  return 0.5 * twice;
}

Polygon::Polygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) {
    throw Error(ErrorCode::kInvalidInput, "polygon needs at least 3 vertices");
  }
  for (const auto& v : vertices_) {
    if (!v.allFinite()) {
      throw Error(ErrorCode::kInvalidInput, "non-finite polygon vertex");
    }
  }
  const double a = signed_area(vertices_);
  if (std::abs(a) <= kEps * kEps) {
    throw Error(ErrorCode::kInvalidInput, "polygon has zero area");
  }
  if (a < 0.0) std::reverse(vertices_.begin(), vertices_.end());
}

double Polygon::area() const { return signed_area(vertices_); }

double Polygon::perimeter() const {
  double len = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    len += (vertex(i + 1) - vertex(i)).norm();
  }
  return len;
}

Point2 Polygon::centroid() const {
  Point2 c = Point2::Zero();
  double twice = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double w = cross(vertex(i), vertex(i + 1));
    c += (vertex(i) + vertex(i + 1)) * w;
    twice += w;
  }
  return c / (3.0 * twice);
}

bool Polygon::is_convex() const {
  for (std::size_t i = 0; i < size(); ++i) {
    const Point2 e0 = vertex(i + 1) - vertex(i);
    const Point2 e1 = vertex(i + 2) - vertex(i + 1);
    if (cross(e0, e1) < -kEps * (e0.norm() + e1.norm())) return false;
  }
  return true;
}

bool Polygon::is_simple() const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      const Point2& a = vertex(i);
      const Point2& b = vertex(i + 1);
      const Point2& c = vertex(j);
      const Point2& d = vertex(j + 1);
      if (segments_cross_properly(a, b, c, d)) return false;
      if (point_segment_distance(c, a, b) <= kEps ||
          point_segment_distance(d, a, b) <= kEps ||
          point_segment_distance(a, c, d) <= kEps ||
          point_segment_distance(b, c, d) <= kEps) {
        return false;
      }
    }
  }
  return true;
}

Polygon make_rectangle(double x0, double y0, double x1, double y1) {
  return Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

Polygon make_regular_polygon(const Point2& center, double circumradius,
                             int sides, double phase) {
  std::vector<Point2> v;
  v.reserve(sides);
  for (int k = 0; k < sides; ++k) {
    const double t = phase + 2.0 * std::numbers::pi * k / sides;
    v.emplace_back(center + circumradius * Point2(std::cos(t), std::sin(t)));
  }
  return Polygon(std::move(v));
}

HalfPlane HalfPlane::normalized() const {
  const double n = a.norm();
  if (!(n > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "half-plane normal is zero");
  }
  return {a / n, b / n};
}

double point_segment_distance(const Point2& p, const Point2& a,
                              const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double boundary_distance(const Polygon& poly, const Point2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    best = std::min(best, point_segment_distance(p, poly.vertex(i),
                                                 poly.vertex(i + 1)));
  }
  return best;
}

namespace {

// Crossing-number test; boundary points give an unspecified answer.
bool crossing_number_inside(const Polygon& poly, const Point2& p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

bool polygon_contains(const Polygon& poly, const Point2& p) {
  if (poly.size() < 3) {
    throw Error(ErrorCode::kInvalidInput, "degenerate polygon");
  }
  if (boundary_distance(poly, p) <= kEps) return true;
  return crossing_number_inside(poly, p);
}

bool polygon_strictly_contains(const Polygon& poly, const Point2& p) {
  if (poly.size() < 3) {
    throw Error(ErrorCode::kInvalidInput, "degenerate polygon");
  }
  if (boundary_distance(poly, p) <= kEps) return false;
  return crossing_number_inside(poly, p);
}

bool segments_cross_properly(const Point2& a, const Point2& b,
                             const Point2& c, const Point2& d) {
  const double lab = (b - a).norm();
  const double lcd = (d - c).norm();
  if (lab <= kEps || lcd <= kEps) return false;
  const double dc = cross(b - a, c - a) / lab;
  const double dd = cross(b - a, d - a) / lab;
  const double da = cross(d - c, a - c) / lcd;
  const double db = cross(d - c, b - c) / lcd;
  const bool split_cd = (dc > kEps && dd < -kEps) || (dc < -kEps && dd > kEps);
  const bool split_ab = (da > kEps && db < -kEps) || (da < -kEps && db > kEps);
  return split_cd && split_ab;
}

std::vector<Point2> remove_degenerate_vertices(std::vector<Point2> ring) {
  bool changed = true;
  while (changed && ring.size() >= 3) {
    changed = false;
    // repeated points
    std::vector<Point2> out;
    out.reserve(ring.size());
    for (const auto& p : ring) {
      if (out.empty() || (p - out.back()).norm() > kEps) out.push_back(p);
    }
    while (out.size() > 1 && (out.front() - out.back()).norm() <= kEps) {
      out.pop_back();
    }
    if (out.size() != ring.size()) changed = true;
    ring = std::move(out);
    if (ring.size() < 3) break;
    // collinear or spike vertices
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const std::size_t n = ring.size();
      const Point2& prev = ring[(i + n - 1) % n];
      const Point2& cur = ring[i];
      const Point2& next = ring[(i + 1) % n];
      const Point2 chord = next - prev;
      const double len = chord.norm();
      // collinear vertex, or the tip of a zero-width spike
      const double dist =
          len <= kEps ? 0.0 : std::abs(cross(chord, cur - prev)) / len;
      if (dist <= kEps) {
        ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return ring;
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point2& a, const Point2& b) {
                          return (a - b).norm() <= kEps;
                        }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    const auto& p = pts[i];
    while (k >= t && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<std::size_t> concave_vertex_indices(const Polygon& poly) {
  std::vector<std::size_t> idx;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e0 = poly.vertex(i) - poly.vertex(i + n - 1);
    const Point2 e1 = poly.vertex(i + 1) - poly.vertex(i);
    const double l0 = e0.norm();
    const double l1 = e1.norm();
    if (l0 <= kEps || l1 <= kEps) continue;
    // sine of the turning angle; negative means a right turn on a CCW ring
    if (cross(e0, e1) / (l0 * l1) < -kEps) idx.push_back(i);
  }
  return idx;
}

std::vector<Point2> concave_vertices(const Polygon& poly) {
  std::vector<Point2> out;
  for (auto i : concave_vertex_indices(poly)) out.push_back(poly[i]);
  return out;
}

std::vector<HalfPlane> halfplanes_of(const Polygon& convex) {
  std::vector<HalfPlane> rows;
  rows.reserve(convex.size());
  for (std::size_t i = 0; i < convex.size(); ++i) {
    const Point2 e = convex.vertex(i + 1) - convex.vertex(i);
    if (e.norm() <= kEps) continue;
    // outward normal of a CCW edge is (e_y, -e_x)
    HalfPlane h{Eigen::Vector2d(e.y(), -e.x()), 0.0};
    h.b = h.a.dot(convex.vertex(i));
    rows.push_back(h.normalized());
  }
  return rows;
}

}  // namespace mmr::geom
