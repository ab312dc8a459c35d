#pragma once

// Planar geometry used by the offline planner: polygons, half-planes,
// ellipses, visibility queries, dilation and boolean union.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mmr/error.hpp"

namespace mmr::geom {

using Point2 = Eigen::Vector2d;

/// Absolute tolerance (meters) for every geometric predicate.
inline constexpr double kEps = 1e-9;
/// Inputs to boolean operations are snapped to this grid.
inline constexpr double kSnapGrid = 1e-12;
/// Default number of sides of the circumscribed disc used for dilation.
inline constexpr int kDiscSides = 16;

inline double cross(const Point2& a, const Point2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Simple polygon with counter-clockwise vertex order. The closing edge is
/// implied.
class Polygon {
 public:
  Polygon() = default;

  /// Takes ownership of the vertex list; clockwise input is reversed. Throws
  /// invalid-input for fewer than three vertices or zero area.
  explicit Polygon(std::vector<Point2> vertices);

  const std::vector<Point2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point2& operator[](std::size_t i) const { return vertices_[i]; }
  const Point2& vertex(std::size_t i) const {
    return vertices_[i % vertices_.size()];
  }
  bool empty() const { return vertices_.empty(); }

  double area() const;
  double perimeter() const;
  Point2 centroid() const;
  bool is_convex() const;
  /// O(n^2) check that no two non-adjacent edges touch.
  bool is_simple() const;

 private:
  std::vector<Point2> vertices_;
};

double signed_area(std::span<const Point2> ring);

Polygon make_rectangle(double x0, double y0, double x1, double y1);
Polygon make_regular_polygon(const Point2& center, double circumradius,
                             int sides, double phase = 0.0);

/// Feasible set {x : a^T x <= b}.
struct HalfPlane {
  Eigen::Vector2d a = Eigen::Vector2d::UnitX();
  double b = 0.0;

  double slack(const Point2& p) const { return b - a.dot(p); }
  bool contains(const Point2& p, double tol = kEps) const {
    return a.dot(p) <= b + tol * a.norm();
  }
  /// Same set with ||a|| = 1.
  HalfPlane normalized() const;
};

/// kappa(C, d) = { C xbar + d : ||xbar|| <= 1 } with C symmetric positive
/// definite, C = R^T diag(a, b) R.
struct Ellipse {
  Eigen::Matrix2d C = Eigen::Matrix2d::Identity();
  Point2 d = Point2::Zero();

  /// R maps world directions into the ellipse frame.
  static Ellipse from_axes(const Eigen::Matrix2d& R, double a, double b,
                           const Point2& d);

  /// ||C^{-1}(x - d)||; equals one on the boundary.
  double level(const Point2& x) const;
  /// Boundary point at parameter angle t.
  Point2 boundary_point(double t) const;
  /// Semi-axes sorted so that first >= second.
  std::pair<double, double> semi_axes() const;
};

/// Distance from p to the closed segment [a, b].
double point_segment_distance(const Point2& p, const Point2& a,
                              const Point2& b);
/// Distance from p to the polygon boundary.
double boundary_distance(const Polygon& poly, const Point2& p);

/// True if p is inside poly or on its boundary (within kEps).
bool polygon_contains(const Polygon& poly, const Point2& p);
/// True if p is inside poly and farther than kEps from its boundary.
bool polygon_strictly_contains(const Polygon& poly, const Point2& p);

/// Minkowski sum of poly with a regular disc_sides-gon circumscribing the
/// disc of radius r.
Polygon dilate_polygon(const Polygon& poly, double r,
                       int disc_sides = kDiscSides);

/// Points of poly at least r from its boundary (inward offset). A non-convex
/// polygon may split into several components.
std::vector<Polygon> erode_polygon(const Polygon& poly, double r,
                                   int disc_sides = kDiscSides);

/// Pairwise-disjoint polygons covering the union of the inputs. Holes are
/// filled.
std::vector<Polygon> union_polygons(std::span<const Polygon> polys);

/// Union that also reports whether any hole had to be filled.
std::vector<Polygon> union_polygons(std::span<const Polygon> polys,
                                    bool* had_holes);

/// True if the segment pq avoids every obstacle interior and stays inside the
/// boundary. Touching an obstacle vertex or edge counts as visible.
bool mutually_visible(const Point2& p, const Point2& q,
                      std::span<const Polygon> obstacles,
                      const Polygon& boundary);

/// Obstacle and boundary vertices visible from p, sorted by angle about p
/// (ties by distance).
std::vector<Point2> visible_vertices(const Point2& p,
                                     std::span<const Polygon> obstacles,
                                     const Polygon& boundary);

/// Region visible from p: visible vertices plus the shadow points where rays
/// grazing a vertex hit the next obstacle or wall.
Polygon visibility_polygon(const Point2& p, std::span<const Polygon> obstacles,
                           const Polygon& boundary);

/// Tangent half-plane of e at the boundary point x_star. The half-plane holds
/// the whole ellipse and its boundary line passes through x_star.
HalfPlane ellipse_tangent_halfplane(const Ellipse& e, const Point2& x_star);

/// Ellipse with fixed orientation R, semi-major a and center d whose boundary
/// passes through x_star; only the minor semi-axis is solved for.
Ellipse fit_ellipse_minor_axis(const Eigen::Matrix2d& R, double a,
                               const Point2& d, const Point2& x_star);

/// Minor semi-axis that fit_ellipse_minor_axis would produce, or a negative
/// value when the fit is degenerate.
double minor_axis_for(const Eigen::Matrix2d& R, double a, const Point2& d,
                      const Point2& x_star);

/// Scales e0 about its center so that x_star lies on the boundary.
Ellipse dilate_ellipse_to_point(const Ellipse& e0, const Point2& x_star);

/// Reflex vertices (interior angle greater than pi).
std::vector<Point2> concave_vertices(const Polygon& poly);
std::vector<std::size_t> concave_vertex_indices(const Polygon& poly);

/// poly intersected with h. For non-convex input the intersection may split;
/// the component with the largest area is returned.
Polygon clip_polygon(const Polygon& poly, const HalfPlane& h);
/// As above, but keeps the component containing (or closest to) keep.
Polygon clip_polygon(const Polygon& poly, const HalfPlane& h,
                     const Point2& keep);

/// Half-plane form of a convex polygon, one normalized row per edge.
std::vector<HalfPlane> halfplanes_of(const Polygon& convex);

/// Drops repeated vertices and vertices within kEps of the line through
/// their neighbours.
std::vector<Point2> remove_degenerate_vertices(std::vector<Point2> ring);

/// Snap a coordinate to the boolean-op grid.
inline double snap(double v) {
  return std::round(v / kSnapGrid) * kSnapGrid;
}

/// Convex hull (counter-clockwise, no collinear points).
std::vector<Point2> convex_hull(std::vector<Point2> pts);

/// Proper crossing of the open segments ab and cd (strictly transversal,
/// each endpoint farther than kEps from the other line).
bool segments_cross_properly(const Point2& a, const Point2& b,
                             const Point2& c, const Point2& d);

}  // namespace mmr::geom
