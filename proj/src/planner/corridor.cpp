#include <algorithm>
#include <cmath>
#include <limits>

#include "mmr/global_planner.hpp"

namespace mmr::plan {

using geom::HalfPlane;

Polygon segment_concave_polygon(std::size_t seg_index,
                                std::span<const Point2> path,
                                const Environment& env) {
  if (seg_index + 1 >= path.size()) {
    throw Error(ErrorCode::kInvalidInput, "segment index out of range");
  }
  const Point2& a = path[seg_index];
  const Point2& b = path[seg_index + 1];
  const std::vector<Polygon> views{
      geom::visibility_polygon(a, env.obstacles, env.boundary),
      geom::visibility_polygon(b, env.obstacles, env.boundary)};

  bool holes = false;
  auto merged = geom::union_polygons(views, &holes);
  if (!holes && merged.size() == 1) return merged.front();
  return views[0].area() >= views[1].area() ? views[0] : views[1];
}

// ---------------------------------------------------------------------------

ConvexRegion ConvexRegion::from_halfplanes(std::span<const HalfPlane> hs) {
  ConvexRegion r;
  r.A.resize(static_cast<Eigen::Index>(hs.size()), 2);
  r.b.resize(static_cast<Eigen::Index>(hs.size()));
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const auto h = hs[i].normalized();
    r.A.row(static_cast<Eigen::Index>(i)) = h.a.transpose();
    r.b(static_cast<Eigen::Index>(i)) = h.b;
  }
  return r;
}

ConvexRegion ConvexRegion::from_polygon(const Polygon& convex) {
  const auto hs = geom::halfplanes_of(convex);
  return from_halfplanes(hs);
}

double ConvexRegion::slack(const Point2& p) const {
  if (A.rows() == 0) return std::numeric_limits<double>::infinity();
  return (b - A * p).minCoeff();
}

Polygon ConvexRegion::to_polygon() const {
  constexpr double kBox = 1e5;
  Polygon poly = geom::make_rectangle(-kBox, -kBox, kBox, kBox);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    poly = geom::clip_polygon(poly, HalfPlane{A.row(i).transpose(), b(i)});
  }
  return poly;
}

// ---------------------------------------------------------------------------

namespace {

// Cut through x_star perpendicular to the segment, keeping the midpoint side.
HalfPlane perpendicular_cut(const Point2& mid, const Point2& dir,
                            const Point2& x_star) {
  const double side = (x_star - mid).dot(dir) >= 0.0 ? 1.0 : -1.0;
  HalfPlane h;
  h.a = side * dir;
  h.b = h.a.dot(x_star);
  return h;
}

}  // namespace

Polygon convexify_polygon(const Polygon& concave, const Point2& seg_a,
                          const Point2& seg_b, double r_f,
                          ConvexifyTrace* trace) {
  const Point2 mid = 0.5 * (seg_a + seg_b);
  for (const Point2& p : {seg_a, seg_b, mid}) {
    if (!geom::polygon_contains(concave, p)) {
      throw Error(ErrorCode::kInvalidInput, "segment is not inside the polygon");
    }
  }
  ConvexifyTrace local;
  ConvexifyTrace& tr = trace ? *trace : local;
  tr = {};

  Polygon poly(geom::remove_degenerate_vertices(concave.vertices()));
  auto reflex = geom::concave_vertices(poly);
  tr.reflex_counts.push_back(reflex.size());
  if (reflex.empty()) return poly;

  const double len = (seg_b - seg_a).norm();
  const Point2 dir = len > geom::kEps ? Point2((seg_b - seg_a) / len) : Point2::UnitX();
  // R maps world vectors into the ellipse frame (major axis first).
  Eigen::Matrix2d R;
  R << dir.x(), dir.y(), -dir.y(), dir.x();
  const double major = 0.5 * len + r_f;

  auto on_segment = [&](const Point2& v) {
    return geom::point_segment_distance(v, seg_a, seg_b) <= geom::kEps;
  };

  // Seed ellipse: the thinnest one through some reflex vertex, which is the
  // first vertex reached when the minor axis grows from zero.
  std::optional<geom::Ellipse> seed;
  Point2 x_star = reflex.front();
  double best_b = std::numeric_limits<double>::infinity();
  for (const auto& v : reflex) {
    const double b = geom::minor_axis_for(R, major, mid, v);
    if (b > 0.0 && b < best_b) {
      best_b = b;
      x_star = v;
    }
  }
  if (std::isfinite(best_b)) {
    seed = geom::fit_ellipse_minor_axis(R, major, mid, x_star);
  } else {
    // Every reflex vertex is degenerate: take the closest to the segment.
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& v : reflex) {
      const double d = geom::point_segment_distance(v, seg_a, seg_b);
      if (d < best_d) {
        best_d = d;
        x_star = v;
      }
    }
  }

  bool first = true;
  while (!reflex.empty()) {
    if (!first) {
      // Next vertex: the one the seed ellipse reaches first when scaled up.
      double best_s = std::numeric_limits<double>::infinity();
      for (const auto& v : reflex) {
        const double s = seed ? seed->level(v) : geom::point_segment_distance(v, seg_a, seg_b);
        if (s < best_s) {
          best_s = s;
          x_star = v;
        }
      }
    }
    first = false;
    if (on_segment(x_star)) {
      throw Error(ErrorCode::kInvalidInput, "reflex vertex lies on the path segment");
    }

    HalfPlane cut;
    const bool use_ellipse = seed && seed->level(x_star) >= 1.0 - 1e-9;
    if (use_ellipse) {
      const auto grown = geom::dilate_ellipse_to_point(*seed, x_star);
      cut = geom::ellipse_tangent_halfplane(grown, x_star);
      ++tr.ellipse_cuts;
    } else {
      cut = perpendicular_cut(mid, dir, x_star);
      ++tr.fallback_cuts;
    }

    const std::size_t before = reflex.size();
    poly = geom::clip_polygon(poly, cut, mid);
    poly = Polygon(geom::remove_degenerate_vertices(poly.vertices()));
    reflex = geom::concave_vertices(poly);
    if (reflex.size() >= before && use_ellipse) {
      // Numerical tie at the tangent point; a perpendicular cut always drops x*.
      poly = geom::clip_polygon(poly, perpendicular_cut(mid, dir, x_star), mid);
      reflex = geom::concave_vertices(poly);
      ++tr.fallback_cuts;
    }
    tr.reflex_counts.push_back(reflex.size());
    if (reflex.size() >= before) {
      throw Error(ErrorCode::kDegenerateFit, "convexification made no progress");
    }
  }
  return poly;
}

ConvexRegion convexify(const Polygon& concave, const Point2& seg_a,
                       const Point2& seg_b, double r_f, ConvexifyTrace* trace) {
  return ConvexRegion::from_polygon(
      convexify_polygon(concave, seg_a, seg_b, r_f, trace));
}

// ---------------------------------------------------------------------------

namespace {

// Parameter interval [t0, t1] of a + t (b - a), t in [0, 1], inside region.
std::optional<std::pair<double, double>> chord(const ConvexRegion& region,
                                               const Point2& a, const Point2& b) {
  double t0 = 0.0, t1 = 1.0;
  const Point2 d = b - a;
  for (Eigen::Index i = 0; i < region.A.rows(); ++i) {
    const double num = region.b(i) - region.A.row(i).dot(a);
    const double den = region.A.row(i).dot(d);
    if (std::abs(den) <= 1e-15) {
      if (num < -geom::kEps) return std::nullopt;
      continue;
    }
    const double t = num / den;
    if (den > 0) t1 = std::min(t1, t);
    else t0 = std::max(t0, t);
  }
  if (t1 - t0 <= 0.0) return std::nullopt;
  return std::make_pair(t0, t1);
}

void require_shared(const Point2& p, const ConvexRegion& a, const ConvexRegion& b) {
  if (!a.contains(p, 1e-9) || !b.contains(p, 1e-9)) {
    throw Error(ErrorCode::kCorridorGap, "consecutive corridors do not overlap");
  }
}

}  // namespace

std::vector<Point2> insert_control_points(std::span<const Point2> path,
                                          std::span<const ConvexRegion> corridors) {
  if (path.size() < 2 || corridors.size() + 1 != path.size()) {
    throw Error(ErrorCode::kInvalidInput, "need one corridor per path segment");
  }
  const std::size_t segs = corridors.size();
  std::vector<Point2> out{path[0]};
  for (std::size_t i = 0; i < segs; ++i) {
    const bool last_change = i + 2 == segs;
    if (i + 1 < segs && !last_change) {
      // Entering corridor i+1 while still on segment i.
      const auto c = chord(corridors[i + 1], path[i], path[i + 1]);
      if (!c || (c->second - c->first) * (path[i + 1] - path[i]).norm() <= geom::kEps) {
        throw Error(ErrorCode::kCorridorGap, "consecutive corridors do not overlap");
      }
      out.push_back(path[i] + 0.5 * (c->first + c->second) * (path[i + 1] - path[i]));
      require_shared(out.back(), corridors[i], corridors[i + 1]);
    }
    out.push_back(path[i + 1]);
    if (last_change) {
      // Leaving corridor i along the final segment.
      const auto c = chord(corridors[i], path[i + 1], path[i + 2]);
      if (!c || (c->second - c->first) * (path[i + 2] - path[i + 1]).norm() <= geom::kEps) {
        throw Error(ErrorCode::kCorridorGap, "consecutive corridors do not overlap");
      }
      out.push_back(path[i + 1] +
                    0.5 * (c->first + c->second) * (path[i + 2] - path[i + 1]));
      require_shared(out.back(), corridors[i], corridors[i + 1]);
    }
  }
  return out;
}

std::vector<std::size_t> assign_corridors(std::span<const Point2> samples,
                                          std::span<const ConvexRegion> corridors) {
  constexpr double kTol = 1e-7;
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  std::size_t cur = 0;
  for (const auto& p : samples) {
    while (cur + 1 < corridors.size() && corridors[cur + 1].contains(p, kTol)) ++cur;
    if (!corridors[cur].contains(p, kTol)) {
      throw Error(ErrorCode::kCorridorGap, "reference leaves the corridor sequence");
    }
    out.push_back(cur);
  }
  return out;
}

}  // namespace mmr::plan
