#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mmr/geom2d.hpp"

namespace mmr::geom {
namespace {

template <class Fn>
void for_each_edge(std::span<const Polygon> obstacles, const Polygon& boundary,
                   Fn&& fn) {
  for (const auto& o : obstacles) {
    for (std::size_t i = 0; i < o.size(); ++i) fn(o.vertex(i), o.vertex(i + 1));
  }
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    fn(boundary.vertex(i), boundary.vertex(i + 1));
  }
}

bool in_free_space(const Point2& x, std::span<const Polygon> obstacles,
                   const Polygon& boundary) {
  if (!polygon_contains(boundary, x)) return false;
  for (const auto& o : obstacles) {
    if (polygon_strictly_contains(o, x)) return false;
  }
  return true;
}

// Nearest hit of the ray origin + t dir (t > t_min) with any edge.
double cast_ray(const Point2& origin, const Point2& dir, double t_min,
                std::span<const Polygon> obstacles, const Polygon& boundary) {
  double best = std::numeric_limits<double>::infinity();
  for_each_edge(obstacles, boundary, [&](const Point2& a, const Point2& b) {
    const Point2 e = b - a;
    const double denom = cross(dir, e);
    const Point2 w = a - origin;
    if (std::abs(denom) <= 1e-15 * e.norm()) {
      // parallel; collinear overlap starts at the nearer endpoint ahead
      if (std::abs(cross(dir, w)) > kEps) return;
      for (const Point2* v : {&a, &b}) {
        const double t = (*v - origin).dot(dir);
        if (t > t_min) best = std::min(best, t);
      }
      return;
    }
    const double t = cross(w, e) / denom;
    const double s = cross(w, dir) / denom;
    if (t > t_min && s >= -1e-12 && s <= 1.0 + 1e-12) best = std::min(best, t);
  });
  return best;
}

}  // namespace

bool mutually_visible(const Point2& p, const Point2& q,
                      std::span<const Polygon> obstacles,
                      const Polygon& boundary) {
  const Point2 pq = q - p;
  const double len = pq.norm();
  if (len <= kEps) return in_free_space(p, obstacles, boundary);

  bool blocked = false;
  std::vector<double> cuts{0.0, 1.0};
  for_each_edge(obstacles, boundary, [&](const Point2& a, const Point2& b) {
    if (blocked) return;
    if (segments_cross_properly(p, q, a, b)) {
      blocked = true;
      return;
    }
    // Edge endpoints touching the segment split it into sub-intervals.
    for (const Point2* v : {&a, &b}) {
      if (point_segment_distance(*v, p, q) <= kEps) {
        cuts.push_back(std::clamp((*v - p).dot(pq) / (len * len), 0.0, 1.0));
      }
    }
    // Segment endpoints lying on an edge interior.
    for (const Point2* v : {&p, &q}) {
      if (point_segment_distance(*v, a, b) <= kEps) {
        cuts.push_back(v == &p ? 0.0 : 1.0);
      }
    }
  });
  if (blocked) return false;

  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if ((cuts[i + 1] - cuts[i]) * len <= kEps) continue;
    const Point2 mid = p + 0.5 * (cuts[i] + cuts[i + 1]) * pq;
    if (!in_free_space(mid, obstacles, boundary)) return false;
  }
  return true;
}

std::vector<Point2> visible_vertices(const Point2& p,
                                     std::span<const Polygon> obstacles,
                                     const Polygon& boundary) {
  for (const auto& o : obstacles) {
    if (polygon_strictly_contains(o, p)) {
      throw Error(ErrorCode::kInvalidInput, "query point inside an obstacle");
    }
  }
  std::vector<Point2> out;
  auto consider = [&](const Point2& v) {
    if ((v - p).norm() <= kEps) return;
    if (mutually_visible(p, v, obstacles, boundary)) out.push_back(v);
  };
  for (const auto& o : obstacles) {
    for (const auto& v : o.vertices()) consider(v);
  }
  for (const auto& v : boundary.vertices()) consider(v);

  std::sort(out.begin(), out.end(), [&](const Point2& a, const Point2& b) {
    const double ta = std::atan2(a.y() - p.y(), a.x() - p.x());
    const double tb = std::atan2(b.y() - p.y(), b.x() - p.x());
    if (ta != tb) return ta < tb;
    return (a - p).squaredNorm() < (b - p).squaredNorm();
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Point2& a, const Point2& b) {
                          return (a - b).norm() <= kEps;
                        }),
            out.end());
  return out;
}

Polygon visibility_polygon(const Point2& p, std::span<const Polygon> obstacles,
                           const Polygon& boundary) {
  const auto vis = visible_vertices(p, obstacles, boundary);
  if (vis.size() < 2) {
    throw Error(ErrorCode::kInvalidInput, "too few visible vertices");
  }

  struct RayPoint {
    double angle;
    double dist;
    Point2 pt;
  };
  std::vector<RayPoint> pts;
  pts.reserve(2 * vis.size());
  for (const auto& v : vis) {
    const Point2 dir = (v - p).normalized();
    const double dist = (v - p).norm();
    const double angle = std::atan2(dir.y(), dir.x());
    pts.push_back({angle, dist, v});
    // A ray that grazes v continues into free space and casts a shadow edge.
    const double probe = std::max(1e-7, 1e-7 * dist);
    const Point2 beyond = v + probe * dir;
    if (in_free_space(beyond, obstacles, boundary) &&
        mutually_visible(v, beyond, obstacles, boundary)) {
      const double t = cast_ray(p, dir, dist + 0.5 * probe, obstacles, boundary);
      if (std::isfinite(t)) pts.push_back({angle, t, p + t * dir});
    }
  }

  std::stable_sort(pts.begin(), pts.end(),
                   [](const RayPoint& a, const RayPoint& b) {
                     return a.angle < b.angle;
                   });

  // Along a ray carrying several points the ring runs from the depth seen
  // just before the ray to the depth seen just after it. Points beyond both
  // depths sit on a zero-width spike and are dropped.
  auto depth = [&](double angle) {
    return cast_ray(p, Point2(std::cos(angle), std::sin(angle)), 0.0, obstacles,
                    boundary);
  };
  std::vector<Point2> ring;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i + 1;
    while (j < pts.size() && std::abs(pts[j].angle - pts[i].angle) <= 1e-12) ++j;
    std::vector<RayPoint> group(pts.begin() + i, pts.begin() + j);
    std::sort(group.begin(), group.end(),
              [](const RayPoint& a, const RayPoint& b) { return a.dist < b.dist; });
    if (group.size() > 1) {
      const double before = depth(group.front().angle - 1e-7);
      const double after = depth(group.front().angle + 1e-7);
      const double lo = std::min(before, after);
      const double hi = std::max(before, after);
      const double tol = 1e-5 * std::max(1.0, hi);
      std::vector<RayPoint> kept;
      for (const auto& g : group) {
        if (g.dist >= lo - tol && g.dist <= hi + tol) kept.push_back(g);
      }
      if (!kept.empty()) group = std::move(kept);
      if (before > after) std::reverse(group.begin(), group.end());
    }
    for (const auto& g : group) ring.push_back(g.pt);
    i = j;
  }

  ring = remove_degenerate_vertices(std::move(ring));
  if (ring.size() < 3) {
    throw Error(ErrorCode::kEmptyResult, "degenerate visibility polygon");
  }
  return Polygon(std::move(ring));
}

}  // namespace mmr::geom
