#include <algorithm>
#include <cmath>
#include <queue>

#include "mmr/global_planner.hpp"

namespace mmr::plan {

bool DilatedMap::is_free(const Point2& p) const {
  if (!geom::polygon_contains(boundary, p)) return false;
  return std::none_of(obstacles.begin(), obstacles.end(), [&](const Polygon& o) {
    return geom::polygon_strictly_contains(o, p);
  });
}

DilatedMap build_dilated_map(const Environment& env, double r_f,
                             int disc_sides) {
  if (!(r_f > 0.0)) throw Error(ErrorCode::kInvalidInput, "r_f must be positive");

  DilatedMap map;
  std::vector<Polygon> grown;
  grown.reserve(env.obstacles.size());
  for (const auto& o : env.obstacles) {
    grown.push_back(geom::dilate_polygon(o, r_f, disc_sides));
  }
  map.obstacles = geom::union_polygons(grown);

  auto shrunk = geom::erode_polygon(env.boundary, r_f, disc_sides);
  if (shrunk.empty()) {
    throw Error(ErrorCode::kInfeasibleEndpoint,
                "workspace vanishes when shrunk by r_f");
  }
  // A non-convex workspace may split; keep the part holding the start.
  auto it = std::find_if(shrunk.begin(), shrunk.end(), [&](const Polygon& p) {
    return geom::polygon_contains(p, env.start);
  });
  if (it == shrunk.end()) {
    throw Error(ErrorCode::kInfeasibleEndpoint,
                "start is closer than r_f to the workspace boundary");
  }
  map.boundary = *it;

  if (!map.is_free(env.start)) {
    throw Error(ErrorCode::kInfeasibleEndpoint, "start is covered by a dilated obstacle");
  }
  if (!map.is_free(env.goal)) {
    throw Error(ErrorCode::kInfeasibleEndpoint, "goal is covered by a dilated obstacle");
  }
  return map;
}

namespace {

std::vector<Point2> graph_nodes(const DilatedMap& map, const Point2& start,
                                const Point2& goal) {
  std::vector<Point2> nodes{start, goal};
  auto add = [&](const Point2& v) {
    if (!map.is_free(v)) return;
    for (const auto& n : nodes) {
      if ((n - v).norm() <= geom::kEps) return;
    }
    nodes.push_back(v);
  };
  for (const auto& o : map.obstacles) {
    for (const auto& v : o.vertices()) add(v);
  }
  for (const auto& v : map.boundary.vertices()) add(v);
  return nodes;
}

std::vector<VisibilityGraph::Edge> edges_from(const DilatedMap& map,
                                              const std::vector<Point2>& nodes,
                                              std::size_t i) {
  std::vector<VisibilityGraph::Edge> out;
  for (std::size_t j = i + 1; j < nodes.size(); ++j) {
    if (geom::mutually_visible(nodes[i], nodes[j], map.obstacles, map.boundary)) {
      const double w = (nodes[j] - nodes[i]).norm();
      if (w > 0.0) out.push_back({i, j, w});
    }
  }
  return out;
}

}  // namespace

VisibilityGraph build_visibility_graph(const DilatedMap& map,
                                       const Point2& start, const Point2& goal) {
  VisibilityGraph g;
  g.nodes = graph_nodes(map, start, goal);
  const auto n = static_cast<std::ptrdiff_t>(g.nodes.size());
  std::vector<std::vector<VisibilityGraph::Edge>> rows(g.nodes.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    rows[i] = edges_from(map, g.nodes, static_cast<std::size_t>(i));
  }
  for (auto& r : rows) g.edges.insert(g.edges.end(), r.begin(), r.end());
  return g;
}

VisibilityGraph build_visibility_graph_serial(const DilatedMap& map,
                                              const Point2& start,
                                              const Point2& goal) {
  VisibilityGraph g;
  g.nodes = graph_nodes(map, start, goal);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    auto r = edges_from(map, g.nodes, i);
    g.edges.insert(g.edges.end(), r.begin(), r.end());
  }
  return g;
}

std::vector<std::vector<std::pair<std::size_t, double>>>
VisibilityGraph::adjacency() const {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(nodes.size());
  for (const auto& e : edges) {
    adj[e.from].emplace_back(e.to, e.weight);
    adj[e.to].emplace_back(e.from, e.weight);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

std::vector<std::size_t> shortest_path_indices(const VisibilityGraph& graph) {
  if (graph.nodes.size() < 2) {
    throw Error(ErrorCode::kInvalidInput, "graph needs start and goal nodes");
  }
  const auto adj = graph.adjacency();
  const Point2 goal = graph.nodes[1];
  const std::size_t n = graph.nodes.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n, kInf);
  std::vector<std::size_t> parent(n, n);
  std::vector<bool> closed(n, false);

  using Entry = std::pair<double, std::size_t>;  // (f, node); ties by index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  cost[0] = 0.0;
  open.emplace((graph.nodes[0] - goal).norm(), 0);
  while (!open.empty()) {
    const auto [f, u] = open.top();
    open.pop();
    if (closed[u]) continue;
    closed[u] = true;
    if (u == 1) break;
    for (const auto& [v, w] : adj[u]) {
      const double c = cost[u] + w;
      if (c < cost[v]) {
        cost[v] = c;
        parent[v] = u;
        open.emplace(c + (graph.nodes[v] - goal).norm(), v);
      }
    }
  }
  if (!closed[1]) throw Error(ErrorCode::kNoPath, "no path from start to goal");

  std::vector<std::size_t> path{1};
  while (path.back() != 0) path.push_back(parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Point2> plan_shortest_path(const Environment& env, double r_f) {
  const auto map = build_dilated_map(env, r_f);
  if ((env.goal - env.start).norm() <= geom::kEps) return {env.start, env.goal};
  const auto graph = build_visibility_graph(map, env.start, env.goal);
  std::vector<Point2> path;
  for (auto i : shortest_path_indices(graph)) path.push_back(graph.nodes[i]);
  return path;
}

double path_length(std::span<const Point2> path) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) len += (path[i] - path[i - 1]).norm();
  return len;
}

}  // namespace mmr::plan
