#pragma once

// Offline planning: dilated visibility graph, shortest path, per-segment
// free-space polygons, convex corridors and the smoothed reference curve.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "mmr/geom2d.hpp"

namespace mmr::plan {

using geom::Point2;
using geom::Polygon;

struct Environment {
  Polygon boundary;
  std::vector<Polygon> obstacles;
  Point2 start = Point2::Zero();
  Point2 goal = Point2::Zero();
};

/// Obstacles grown by the formation radius and merged, plus the boundary
/// shrunk by the same radius.
struct DilatedMap {
  std::vector<Polygon> obstacles;
  Polygon boundary;

  bool is_free(const Point2& p) const;
};

DilatedMap build_dilated_map(const Environment& env, double r_f,
                             int disc_sides = geom::kDiscSides);

struct VisibilityGraph {
  struct Edge {
    std::size_t from;
    std::size_t to;
    double weight;
  };
  /// Node 0 is the start, node 1 the goal.
  std::vector<Point2> nodes;
  std::vector<Edge> edges;

  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency() const;
};

/// All-pairs edge test, parallel over source nodes. Edge order is
/// independent of the thread count.
VisibilityGraph build_visibility_graph(const DilatedMap& map,
                                       const Point2& start, const Point2& goal);
/// Single-threaded reference of the above.
VisibilityGraph build_visibility_graph_serial(const DilatedMap& map,
                                              const Point2& start,
                                              const Point2& goal);

/// A* from node 0 to node 1. Returns node indices. Throws no-path.
std::vector<std::size_t> shortest_path_indices(const VisibilityGraph& graph);

std::vector<Point2> plan_shortest_path(const Environment& env, double r_f);

double path_length(std::span<const Point2> path);

/// Union of the visibility polygons of both segment endpoints against the
/// undilated obstacles. If the union has a hole, the larger endpoint polygon
/// is returned instead.
Polygon segment_concave_polygon(std::size_t seg_index,
                                std::span<const Point2> path,
                                const Environment& env);

/// {x : A x <= b} with unit-norm rows.
struct ConvexRegion {
  Eigen::MatrixX2d A;
  Eigen::VectorXd b;

  static ConvexRegion from_halfplanes(std::span<const geom::HalfPlane> hs);
  static ConvexRegion from_polygon(const Polygon& convex);

  std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
  /// min_j (b_j - a_j^T p); nonnegative inside.
  double slack(const Point2& p) const;
  bool contains(const Point2& p, double tol = geom::kEps) const {
    return slack(p) >= -tol;
  }
  /// Vertex form, by clipping a large box with every row.
  Polygon to_polygon() const;
};

/// Iteration record of convexify.
struct ConvexifyTrace {
  std::vector<std::size_t> reflex_counts;  // before the first and after each cut
  std::size_t ellipse_cuts = 0;
  std::size_t fallback_cuts = 0;
};

/// Removes the reflex vertices of concave by cuts tangent to ellipses grown
/// around the segment. Throws invalid-input if the segment is not inside the
/// polygon or a reflex vertex lies on the segment.
ConvexRegion convexify(const Polygon& concave, const Point2& seg_a,
                       const Point2& seg_b, double r_f,
                       ConvexifyTrace* trace = nullptr);

/// The convexified polygon itself; convexify() returns its half-planes.
Polygon convexify_polygon(const Polygon& concave, const Point2& seg_a,
                          const Point2& seg_b, double r_f,
                          ConvexifyTrace* trace = nullptr);

/// Path vertices plus one point per corridor change, placed so that every
/// three consecutive control points lie in a single corridor. Throws
/// corridor-gap when consecutive corridors do not overlap on the path.
std::vector<Point2> insert_control_points(std::span<const Point2> path,
                                          std::span<const ConvexRegion> corridors);

/// Chain of quadratic Bezier pieces through the midpoints of the control
/// polygon, parameterized by normalized arc length.
class ReferenceCurve {
 public:
  ReferenceCurve() = default;
  explicit ReferenceCurve(std::vector<Point2> control_points);

  /// Point at normalized arc length c in [0, 1].
  Point2 at(double c) const;
  /// Point at arc length s in [0, length()].
  Point2 at_length(double s) const;
  double length() const { return total_; }
  const std::vector<Point2>& control_points() const { return control_; }

  struct Piece {
    Point2 p0, p1, p2;
    Point2 eval(double t) const {
      const double u = 1.0 - t;
      return u * u * p0 + 2.0 * u * t * p1 + t * t * p2;
    }
    Point2 deriv(double t) const {
      return 2.0 * (1.0 - t) * (p1 - p0) + 2.0 * t * (p2 - p1);
    }
    /// Arc length over [0, t].
    double length(double t = 1.0) const;
  };
  const std::vector<Piece>& pieces() const { return pieces_; }

 private:
  std::vector<Point2> control_;
  std::vector<Piece> pieces_;
  std::vector<double> cumulative_;  // arc length at the start of each piece
  double total_ = 0.0;
};

ReferenceCurve smooth_reference(std::vector<Point2> control_points);

/// Points at arc-length spacing v_op * T_c, plus the goal if a remainder is
/// left.
std::vector<Point2> discretize_reference(const ReferenceCurve& curve,
                                         double v_op, double T_c);

struct GlobalPlan {
  std::vector<Point2> path;
  std::vector<ConvexRegion> corridors;  // one per path segment
  std::vector<Point2> control_points;
  ReferenceCurve reference;
  std::vector<Point2> samples;          // discretized reference
  std::vector<std::size_t> sample_corridor;
};

/// Corridor index per sample: advances to the next corridor as soon as the
/// sample enters it. Throws corridor-gap if a sample is in no corridor.
std::vector<std::size_t> assign_corridors(std::span<const Point2> samples,
                                          std::span<const ConvexRegion> corridors);

GlobalPlan plan_global(const Environment& env, double r_f, double v_op,
                       double T_c);

}  // namespace mmr::plan
