// Boolean operations on simple polygons, backed by Boost.Geometry.

#define BOOST_GEOMETRY_NO_ROBUSTNESS
#include <algorithm>
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <cmath>
#include <numbers>

#include "mmr/geom2d.hpp"

namespace bg = boost::geometry;

namespace mmr::geom {
namespace {

using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, /*ClockWise=*/false, /*Closed=*/true>;
using BMulti = bg::model::multi_polygon<BPolygon>;

BPolygon to_boost(const Polygon& poly) {
  BPolygon out;
  for (const auto& v : poly.vertices()) {
    bg::append(out.outer(), BPoint(snap(v.x()), snap(v.y())));
  }
  bg::append(out.outer(), BPoint(snap(poly[0].x()), snap(poly[0].y())));
  bg::correct(out);
  return out;
}

std::vector<Point2> ring_points(const BPolygon::ring_type& ring) {
  std::vector<Point2> pts;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    pts.emplace_back(bg::get<0>(ring[i]), bg::get<1>(ring[i]));
  }
  return pts;
}

// Outer rings of a multipolygon as cleaned Polygons; slivers are dropped.
std::vector<Polygon> outer_rings(const BMulti& multi, bool* had_holes) {
  std::vector<Polygon> out;
  for (const auto& p : multi) {
    if (had_holes && !p.inners().empty()) {
      for (const auto& inner : p.inners()) {
        if (std::abs(bg::area(inner)) > kEps) *had_holes = true;
      }
    }
    auto pts = remove_degenerate_vertices(ring_points(p.outer()));
    if (pts.size() < 3 || std::abs(signed_area(pts)) <= kEps * kEps) continue;
    out.emplace_back(std::move(pts));
  }
  return out;
}

BMulti union_all(std::span<const Polygon> polys) {
  BMulti acc;
  for (const auto& p : polys) {
    BMulti next;
    bg::union_(acc, to_boost(p), next);
    acc = std::move(next);
  }
  return acc;
}

// Sutherland-Hodgman against one half-plane; exact for convex input.
std::vector<Point2> clip_convex_ring(const std::vector<Point2>& ring,
                                     const HalfPlane& h) {
  std::vector<Point2> out;
  const std::size_t n = ring.size();
  const double scale = h.a.norm();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& cur = ring[i];
    const Point2& nxt = ring[(i + 1) % n];
    const double sc = h.slack(cur) / scale;
    const double sn = h.slack(nxt) / scale;
    const bool in_c = sc >= -kEps;
    const bool in_n = sn >= -kEps;
    if (in_c) out.push_back(cur);
    if (in_c != in_n && std::abs(sc - sn) > 0.0) {
      const double t = sc / (sc - sn);
      if (t > 0.0 && t < 1.0) out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

}  // namespace

std::vector<Polygon> union_polygons(std::span<const Polygon> polys,
                                    bool* had_holes) {
  if (had_holes) *had_holes = false;
  if (polys.empty()) return {};
  return outer_rings(union_all(polys), had_holes);
}

std::vector<Polygon> union_polygons(std::span<const Polygon> polys) {
  return union_polygons(polys, nullptr);
}

Polygon dilate_polygon(const Polygon& poly, double r, int disc_sides) {
  if (r < 0.0) throw Error(ErrorCode::kInvalidInput, "negative dilation radius");
  if (disc_sides < 8) throw Error(ErrorCode::kInvalidInput, "disc_sides < 8");
  if (r == 0.0) return poly;

  // Regular n-gon whose edges are tangent to the circle of radius r, with an
  // edge normal along +x.
  const double R = r / std::cos(std::numbers::pi / disc_sides);
  std::vector<Point2> disc;
  for (int k = 0; k < disc_sides; ++k) {
    const double t = (2 * k + 1) * std::numbers::pi / disc_sides;
    disc.emplace_back(R * std::cos(t), R * std::sin(t));
  }

  if (poly.is_convex()) {
    std::vector<Point2> pts;
    for (const auto& v : poly.vertices()) {
      for (const auto& d : disc) pts.push_back(v + d);
    }
    return Polygon(remove_degenerate_vertices(convex_hull(std::move(pts))));
  }

  // P + K = P  u  (edges of P) + K for convex K containing the origin.
  std::vector<Polygon> pieces{poly};
  for (std::size_t i = 0; i < poly.size(); ++i) {
    std::vector<Point2> pts;
    for (const auto& d : disc) {
      pts.push_back(poly.vertex(i) + d);
      pts.push_back(poly.vertex(i + 1) + d);
    }
    pieces.emplace_back(convex_hull(std::move(pts)));
  }
  auto merged = union_polygons(pieces);
  if (merged.empty()) throw Error(ErrorCode::kEmptyResult, "dilation failed");
  auto best = std::max_element(merged.begin(), merged.end(),
                               [](const Polygon& a, const Polygon& b) {
                                 return a.area() < b.area();
                               });
  return *best;
}

std::vector<Polygon> erode_polygon(const Polygon& poly, double r,
                                   int disc_sides) {
  if (r < 0.0) throw Error(ErrorCode::kInvalidInput, "negative erosion radius");
  if (r == 0.0) return {poly};
  if (poly.is_convex()) {
    std::vector<Point2> ring = poly.vertices();
    for (auto h : halfplanes_of(poly)) {
      h.b -= r;
      ring = clip_convex_ring(ring, h);
      if (ring.size() < 3) return {};
    }
    ring = remove_degenerate_vertices(std::move(ring));
    if (ring.size() < 3 || std::abs(signed_area(ring)) <= kEps * kEps) return {};
    return {Polygon(std::move(ring))};
  }
  const double R = r / std::cos(std::numbers::pi / disc_sides);
  BMulti bands;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    std::vector<Point2> pts;
    for (int k = 0; k < disc_sides; ++k) {
      const double t = (2 * k + 1) * std::numbers::pi / disc_sides;
      const Point2 d(R * std::cos(t), R * std::sin(t));
      pts.push_back(poly.vertex(i) + d);
      pts.push_back(poly.vertex(i + 1) + d);
    }
    BMulti next;
    bg::union_(bands, to_boost(Polygon(convex_hull(std::move(pts)))), next);
    bands = std::move(next);
  }
  BMulti out;
  bg::difference(to_boost(poly), bands, out);
  return outer_rings(out, nullptr);
}

namespace {

// All components of poly intersected with h.
std::vector<Polygon> clip_parts(const Polygon& poly, const HalfPlane& h) {
  if (!(h.a.norm() > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "half-plane normal is zero");
  }
  std::vector<Polygon> parts;
  if (poly.is_convex()) {
    auto ring = remove_degenerate_vertices(clip_convex_ring(poly.vertices(), h));
    if (ring.size() >= 3 && std::abs(signed_area(ring)) > kEps * kEps) {
      parts.emplace_back(std::move(ring));
    }
  } else {
    // Half-plane restricted to an enlarged bounding box of the polygon.
    Eigen::AlignedBox2d box;
    for (const auto& v : poly.vertices()) box.extend(v);
    const double margin = 1.0 + box.diagonal().norm();
    const Point2 lo = box.min() - Point2::Constant(margin);
    const Point2 hi = box.max() + Point2::Constant(margin);
    std::vector<Point2> rect{{lo.x(), lo.y()}, {hi.x(), lo.y()},
                             {hi.x(), hi.y()}, {lo.x(), hi.y()}};
    auto cut = clip_convex_ring(rect, h);
    if (cut.size() >= 3 && std::abs(signed_area(cut)) > kEps * kEps) {
      BMulti out;
      bg::intersection(to_boost(poly), to_boost(Polygon(std::move(cut))), out);
      parts = outer_rings(out, nullptr);
    }
  }
  if (parts.empty()) {
    throw Error(ErrorCode::kEmptyResult, "clipped polygon is empty");
  }
  return parts;
}

}  // namespace

Polygon clip_polygon(const Polygon& poly, const HalfPlane& h,
                     const Point2& keep) {
  auto parts = clip_parts(poly, h);
  if (parts.size() == 1) return parts.front();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double d = polygon_contains(parts[i], keep)
                         ? -parts[i].area()
                         : boundary_distance(parts[i], keep);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return parts[best];
}

Polygon clip_polygon(const Polygon& poly, const HalfPlane& h) {
  auto parts = clip_parts(poly, h);
  return *std::max_element(parts.begin(), parts.end(),
                           [](const Polygon& a, const Polygon& b) {
                             return a.area() < b.area();
                           });
}

}  // namespace mmr::geom
