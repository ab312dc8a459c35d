#include <gtest/gtest.h>

#include <functional>
#include <numbers>
#include <random>

#include "mmr/global_planner.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

using namespace mmr;
using namespace mmr::plan;
using geom::make_rectangle;
using geom::Point2;
namespace orc = mmr::testing;

namespace {

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;  // sentinel for "no throw"
}

Environment room(double w = 10, double h = 10) {
  Environment e;
  e.boundary = make_rectangle(0, 0, w, h);
  return e;
}

std::vector<orc::Ring> rings_of(const std::vector<geom::Polygon>& ps) {
  std::vector<orc::Ring> out;
  for (const auto& p : ps) out.push_back(p.vertices());
  return out;
}

// All-pairs shortest distance from node 0 to node 1 with edges decided by the
// brute-force visibility oracle.
double floyd_warshall_oracle(const std::vector<Point2>& nodes,
                             const DilatedMap& map) {
  const std::size_t n = nodes.size();
  const auto obs = rings_of(map.obstacles);
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 1e300));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (orc::brute_visible(nodes[i], nodes[j], obs, map.boundary.vertices())) {
        // a chord through an obstacle between two of its own vertices does
        // not cross an edge; its midpoint is then inside the obstacle
        const Point2 mid = 0.5 * (nodes[i] + nodes[j]);
        bool inside = false;
        for (const auto& o : obs) {
          inside |= orc::inside_ring(o, mid) && orc::ring_boundary_distance(o, mid) > 1e-9;
        }
        if (!inside) d[i][j] = d[j][i] = (nodes[i] - nodes[j]).norm();
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d[0][1];
}

}  // namespace

TEST(DilatedMap, EmptyObstaclesShrinkBoundaryOnly) {
  auto e = room();
  e.start = {5, 5};
  e.goal = {6, 6};
  const auto m = build_dilated_map(e, 0.5);
  EXPECT_TRUE(m.obstacles.empty());
  EXPECT_NEAR(m.boundary.area(), 9.0 * 9.0, 1e-9);
}

TEST(DilatedMap, CloseSquaresMerge) {
  auto e = room();
  e.start = {1, 1};
  e.goal = {9, 9};
  e.obstacles = {make_rectangle(4, 4, 5, 5), make_rectangle(5.1, 4, 6.1, 5)};
  const auto m = build_dilated_map(e, 0.1);
  ASSERT_EQ(m.obstacles.size(), 1u);
  // Both originals and the gap are covered.
  EXPECT_TRUE(geom::polygon_strictly_contains(m.obstacles[0], {5.05, 4.5}));
}

TEST(DilatedMap, EndpointChecks) {
  auto e = room();
  e.obstacles = {make_rectangle(4, 4, 5, 5)};
  e.start = {3, 4.5};
  e.goal = {9, 9};
  EXPECT_NO_THROW(build_dilated_map(e, 0.5));
  EXPECT_EQ(code_of([&] { build_dilated_map(e, 1.5); }), ErrorCode::kInfeasibleEndpoint);
  e.start = {0.2, 5};
  EXPECT_EQ(code_of([&] { build_dilated_map(e, 0.5); }), ErrorCode::kInfeasibleEndpoint);
  EXPECT_EQ(code_of([&] { build_dilated_map(e, -1); }), ErrorCode::kInvalidInput);
}

TEST(ShortestPath, NoObstaclesIsStraight) {
  auto e = room();
  e.start = {1, 1};
  e.goal = {8, 3};
  const auto p = plan_shortest_path(e, 0.3);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR((p[0] - e.start).norm(), 0, 1e-15);
  EXPECT_NEAR((p[1] - e.goal).norm(), 0, 1e-15);
}

TEST(ShortestPath, BlockingSquareBendsAtOneCorner) {
  auto e = room();
  e.obstacles = {make_rectangle(4, 4, 6, 6)};
  e.start = {1, 4.2};
  e.goal = {9, 6.8};
  const double rf = 0.3;
  const auto path = plan_shortest_path(e, rf);
  ASSERT_GE(path.size(), 3u);

  // Oracle: best route through any node, visibility decided independently.
  const auto map = build_dilated_map(e, rf);
  const auto g = build_visibility_graph(map, e.start, e.goal);
  EXPECT_NEAR(path_length(path), floyd_warshall_oracle(g.nodes, map), 1e-9);
}

TEST(ShortestPath, GoalEnclosedHasNoPath) {
  auto e = room();
  // A pocket in the corner sealed by two walls; a closed ring of obstacles
  // would be filled by the union and report a covered goal instead.
  e.obstacles = {make_rectangle(6, 6, 10, 6.5), make_rectangle(6, 6.5, 6.5, 10)};
  e.start = {1, 1};
  e.goal = {8, 8};
  EXPECT_EQ(code_of([&] { plan_shortest_path(e, 0.2); }), ErrorCode::kNoPath);
}

TEST(ShortestPath, ExhaustiveEnumerationOnSmallGraphs) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(1.0, 9.0);
  int scenes = 0;
  while (scenes < 40) {
    // Pre-dilated triangles, so the node set stays at 2 + 6 + 4 = 12.
    DilatedMap map;
    map.boundary = make_rectangle(0, 0, 10, 10);
    for (int k = 0; k < 2; ++k) {
      map.obstacles.emplace_back(orc::random_star(rng, {u(rng), u(rng)}, 3, 0.8, 2.0));
    }
    if (geom::union_polygons(map.obstacles).size() != 2) continue;
    bool inside_box = true;
    for (const auto& o : map.obstacles)
      for (const auto& v : o.vertices()) inside_box &= v.x() > 0 && v.x() < 10 && v.y() > 0 && v.y() < 10;
    if (!inside_box) continue;
    const Point2 s(u(rng), u(rng)), t(u(rng), u(rng));
    if (!map.is_free(s) || !map.is_free(t)) continue;
    ++scenes;

    const auto g = build_visibility_graph(map, s, t);
    ASSERT_LE(g.nodes.size(), 12u);
    const auto adj = g.adjacency();
    // Enumerate every simple path 0 -> 1.
    double best = 1e300;
    std::vector<bool> used(g.nodes.size(), false);
    std::function<void(std::size_t, double)> dfs = [&](std::size_t v, double len) {
      if (len >= best) return;
      if (v == 1) {
        best = len;
        return;
      }
      for (const auto& [w, c] : adj[v]) {
        if (used[w]) continue;
        used[w] = true;
        dfs(w, len + c);
        used[w] = false;
      }
    };
    used[0] = true;
    dfs(0, 0.0);

    double found = 1e300;
    try {
      std::vector<Point2> p;
      for (auto i : shortest_path_indices(g)) p.push_back(g.nodes[i]);
      found = path_length(p);
      for (std::size_t i = 1; i < p.size(); ++i) {
        EXPECT_TRUE(geom::mutually_visible(p[i - 1], p[i], map.obstacles, map.boundary));
      }
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNoPath);
    }
    EXPECT_NEAR(found, best, 1e-9);
    EXPECT_NEAR(best, floyd_warshall_oracle(g.nodes, map), 1e-9);
  }
}

TEST(VisibilityGraph, ParallelMatchesSerial) {
  const auto e = orc::corridor_scene();
  const auto map = build_dilated_map(e, 0.826);
  const auto a = build_visibility_graph(map, e.start, e.goal);
  const auto b = build_visibility_graph_serial(map, e.start, e.goal);
  ASSERT_EQ(a.nodes.size(), b.nodes.size());
  ASSERT_EQ(a.edges.size(), b.edges.size());
  for (std::size_t i = 0; i < a.edges.size(); ++i) {
    EXPECT_EQ(a.edges[i].from, b.edges[i].from);
    EXPECT_EQ(a.edges[i].to, b.edges[i].to);
    EXPECT_EQ(a.edges[i].weight, b.edges[i].weight);
  }
}

TEST(ConcavePolygon, EmptySceneIsBoundary) {
  auto e = room(6, 4);
  const std::vector<Point2> path{{1, 1}, {5, 3}};
  const auto p = segment_concave_polygon(0, path, e);
  EXPECT_NEAR(p.area(), 24.0, 1e-9);
}

TEST(ConcavePolygon, MembershipMatchesVisibilityOracle) {
  const auto e = orc::zigzag_scene();
  const auto path = plan_shortest_path(e, 0.1);
  const auto obs = rings_of(e.obstacles);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 11.0);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto poly = segment_concave_polygon(i, path, e);
    EXPECT_TRUE(poly.is_simple());
    for (int k = 0; k < 3000; ++k) {
      const Point2 x(u(rng), u(rng));
      if (orc::ring_boundary_distance(poly.vertices(), x) < 1e-6) continue;
      bool in_obstacle = false;
      for (const auto& o : obs) in_obstacle |= orc::inside_ring(o, x);
      const bool in_room = orc::inside_ring(e.boundary.vertices(), x);
      const bool seen = in_room && !in_obstacle &&
                        (orc::brute_visible(path[i], x, obs, e.boundary.vertices()) ||
                         orc::brute_visible(path[i + 1], x, obs, e.boundary.vertices()));
      EXPECT_EQ(orc::inside_ring(poly.vertices(), x), seen) << "segment " << i;
    }
  }
}

TEST(Convexify, ConvexInputReturnsItsEdges) {
  const auto rect = make_rectangle(0, 0, 4, 2);
  ConvexifyTrace tr;
  const auto r = convexify(rect, {1, 1}, {3, 1}, 0.2, &tr);
  EXPECT_EQ(r.rows(), 4u);
  EXPECT_EQ(tr.ellipse_cuts + tr.fallback_cuts, 0u);
  for (Eigen::Index i = 0; i < r.A.rows(); ++i) EXPECT_NEAR(r.A.row(i).norm(), 1.0, 1e-12);
}

TEST(Convexify, LShapeNeedsOneCut) {
  const geom::Polygon L({{0, 0}, {4, 0}, {4, 1}, {1, 1}, {1, 4}, {0, 4}});
  const Point2 a(0.5, 0.5), b(3.5, 0.5);
  ConvexifyTrace tr;
  const auto poly = convexify_polygon(L, a, b, 0.2, &tr);
  EXPECT_EQ(tr.ellipse_cuts, 1u);
  EXPECT_EQ(tr.fallback_cuts, 0u);
  EXPECT_EQ(orc::count_reflex_by_angles(poly.vertices()), 0);
  const auto region = ConvexRegion::from_polygon(poly);
  for (double t = 0; t <= 1.0; t += 0.01) EXPECT_TRUE(region.contains(a + t * (b - a), 1e-9));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 4);
  for (int k = 0; k < 1000; ++k) {
    const Point2 x(u(rng), u(rng));
    if (region.slack(x) > 1e-9) {
      EXPECT_TRUE(orc::inside_ring(L.vertices(), x) ||
                  orc::ring_boundary_distance(L.vertices(), x) < 1e-9);
    }
  }
}

TEST(Convexify, RandomStarsTerminateAndStayInside) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ang(0, std::numbers::pi);
  int done = 0;
  while (done < 60) {
    const auto ring = orc::random_star(rng, {0, 0}, 12, 1.0, 3.0);
    const double t = ang(rng);
    const Point2 dir(std::cos(t), std::sin(t));
    const Point2 a = -0.6 * dir, b = 0.6 * dir;
    bool inside = true;
    for (double s = 0; s <= 1.0; s += 0.05) inside &= orc::inside_ring(ring, a + s * (b - a));
    if (!inside) continue;
    ++done;

    ConvexifyTrace tr;
    const auto poly = convexify_polygon(geom::Polygon(ring), a, b, 0.3, &tr);
    EXPECT_EQ(orc::count_reflex_by_angles(poly.vertices()), 0);
    for (std::size_t i = 1; i < tr.reflex_counts.size(); ++i) {
      EXPECT_LT(tr.reflex_counts[i], tr.reflex_counts[i - 1]);
    }
    const auto region = ConvexRegion::from_polygon(poly);
    for (double s = 0; s <= 1.0; s += 0.01) EXPECT_GE(region.slack(a + s * (b - a)), -1e-9);
    std::uniform_real_distribution<double> u(-3, 3);
    int inner = 0;
    for (int k = 0; k < 1000; ++k) {
      const Point2 x(u(rng), u(rng));
      if (region.slack(x) <= 1e-9) continue;
      ++inner;
      EXPECT_TRUE(orc::inside_ring(ring, x) || orc::ring_boundary_distance(ring, x) < 1e-9);
    }
    EXPECT_GT(inner, 0);
  }
}

TEST(Convexify, SegmentOutsideIsRejected) {
  const geom::Polygon L({{0, 0}, {4, 0}, {4, 1}, {1, 1}, {1, 4}, {0, 4}});
  EXPECT_EQ(code_of([&] { convexify(L, {0.5, 0.5}, {3.5, 3.5}, 0.1); }),
            ErrorCode::kInvalidInput);
}

TEST(ControlPoints, SingleCorridorKeepsPath) {
  const std::vector<Point2> path{{0, 0}, {3, 0}};
  const std::vector<ConvexRegion> c{ConvexRegion::from_polygon(make_rectangle(-1, -1, 4, 1))};
  const auto cp = insert_control_points(path, c);
  ASSERT_EQ(cp.size(), 2u);
}

TEST(ControlPoints, TwoCorridorsInsertChordMidpoint) {
  const std::vector<Point2> path{{0, 0}, {4, 0}, {4, 4}};
  const std::vector<ConvexRegion> c{
      ConvexRegion::from_polygon(make_rectangle(-1, -1, 5, 1)),
      ConvexRegion::from_polygon(make_rectangle(3, -1, 5, 5))};
  const auto cp = insert_control_points(path, c);
  ASSERT_EQ(cp.size(), 4u);
  // Last segment (4,0)->(4,4) runs inside corridor 0 up to y = 1.
  EXPECT_NEAR((cp[2] - Point2(4, 0.5)).norm(), 0.0, 1e-12);
  for (std::size_t i = 0; i + 2 < cp.size(); ++i) {
    bool shared = false;
    for (const auto& r : c) {
      shared |= r.contains(cp[i], 1e-9) && r.contains(cp[i + 1], 1e-9) &&
                r.contains(cp[i + 2], 1e-9);
    }
    EXPECT_TRUE(shared) << "window " << i;
  }
}

TEST(ControlPoints, GapIsReported) {
  const std::vector<Point2> path{{0, 0}, {4, 0}, {4, 4}};
  const std::vector<ConvexRegion> c{
      ConvexRegion::from_polygon(make_rectangle(-1, -1, 4, 1)),
      ConvexRegion::from_polygon(make_rectangle(3.5, 1, 5, 5))};
  EXPECT_EQ(code_of([&] { insert_control_points(path, c); }), ErrorCode::kCorridorGap);
}

TEST(GlobalPlan, ZigzagHasFourCorridorsAndValidWindows) {
  const auto e = orc::zigzag_scene();
  const auto plan = plan_global(e, 0.1, 0.15, 0.25);
  ASSERT_EQ(plan.path.size(), 5u);
  ASSERT_EQ(plan.corridors.size(), 4u);
  EXPECT_EQ(plan.control_points.size(), 8u);
  for (std::size_t i = 0; i + 1 < plan.path.size(); ++i) {
    const auto& r = plan.corridors[i];
    EXPECT_GE(r.slack(plan.path[i]), -1e-9);
    EXPECT_GE(r.slack(plan.path[i + 1]), -1e-9);
    EXPECT_GE(r.slack(0.5 * (plan.path[i] + plan.path[i + 1])), -1e-9);
  }
  const auto& cp = plan.control_points;
  for (std::size_t i = 0; i + 2 < cp.size(); ++i) {
    bool shared = false;
    for (const auto& r : plan.corridors) {
      shared |= r.slack(cp[i]) >= -1e-9 && r.slack(cp[i + 1]) >= -1e-9 &&
                r.slack(cp[i + 2]) >= -1e-9;
    }
    EXPECT_TRUE(shared) << "window " << i;
  }
  // Curve sweep: every sample lies in some corridor.
  for (int k = 0; k <= 500; ++k) {
    const Point2 x = plan.reference.at(k / 500.0);
    bool in = false;
    for (const auto& r : plan.corridors) in |= r.slack(x) >= -1e-9;
    EXPECT_TRUE(in) << "sample " << k;
  }
  EXPECT_NEAR((plan.reference.at(0) - e.start).norm(), 0.0, 1e-12);
  EXPECT_NEAR((plan.reference.at(1) - e.goal).norm(), 0.0, 1e-12);
  // Corridors avoid the original obstacles.
  const auto obs = rings_of(e.obstacles);
  for (const auto& r : plan.corridors) {
    for (const auto& v : r.to_polygon().vertices()) {
      for (const auto& o : obs) {
        EXPECT_FALSE(orc::inside_ring(o, v) && orc::ring_boundary_distance(o, v) > 1e-9);
      }
    }
  }
}

TEST(Reference, CollinearAndRightAngle) {
  const auto line = smooth_reference({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  for (int k = 0; k <= 100; ++k) EXPECT_NEAR(line.at(k / 100.0).y(), 0.0, 1e-15);
  EXPECT_NEAR(line.length(), 3.0, 1e-12);

  const auto corner = smooth_reference({{0, 0}, {1, 0}, {1, 1}});
  for (int k = 0; k <= 100; ++k) {
    const Point2 x = corner.at(k / 100.0);
    EXPECT_GE(x.y(), -1e-12);
    EXPECT_LE(x.x(), 1.0 + 1e-12);
    EXPECT_LE(x.y(), x.x() + 1e-12);
  }
  EXPECT_EQ(code_of([] { smooth_reference({{0, 0}}); }), ErrorCode::kInvalidInput);
}

TEST(Reference, C1Continuity) {
  const auto c = smooth_reference({{0, 0}, {2, 0}, {2, 2}, {4, 3}, {6, 1}});
  const auto& ps = c.pieces();
  for (std::size_t i = 1; i < ps.size(); ++i) {
    EXPECT_NEAR((ps[i - 1].p2 - ps[i].p0).norm(), 0.0, 1e-15);
    const Point2 d0 = ps[i - 1].deriv(1.0).normalized();
    const Point2 d1 = ps[i].deriv(0.0).normalized();
    EXPECT_NEAR((d0 - d1).norm(), 0.0, 1e-12);
  }
}

TEST(Discretize, StraightLine) {
  const auto c = smooth_reference({{0, 0}, {1.5, 0}});
  const auto pts = discretize_reference(c, 0.15, 0.25);
  ASSERT_EQ(pts.size(), 41u);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_NEAR((pts[i] - pts[i - 1]).norm(), 0.0375, 1e-12);
  }
  const auto two = discretize_reference(c, 10.0, 1.0);
  EXPECT_EQ(two.size(), 2u);
}

TEST(Discretize, SpacingBoundAndUniformity) {
  const auto e = orc::zigzag_scene();
  const auto plan = plan_global(e, 0.1, 0.15, 0.25);
  const double step = 0.15 * 0.25;
  const auto& s = plan.samples;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double d = (s[i] - s[i - 1]).norm();
    EXPECT_LE(d, step + 1e-9);
    if (i + 1 < s.size()) {
      EXPECT_GE(d, 0.99 * step);
    }
  }
  // Reference window bound over any N_h = 36 consecutive steps.
  for (std::size_t i = 0; i + 36 < s.size(); ++i) {
    double len = 0;
    for (std::size_t k = i; k < i + 36; ++k) len += (s[k + 1] - s[k]).norm();
    EXPECT_LE(len, 0.15 * 9.0 + 1e-9);
  }
  ASSERT_EQ(plan.sample_corridor.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_GE(plan.corridors[plan.sample_corridor[i]].slack(s[i]), -1e-7);
    if (i > 0) {
      EXPECT_GE(plan.sample_corridor[i], plan.sample_corridor[i - 1]);
    }
  }
}
