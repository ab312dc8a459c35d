// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any line fails. --slow adds the five-robot scenario.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "mmr/cli_io.hpp"
#include "support/oracles.hpp"

namespace {

using namespace mmr;
using geom::Point2;
namespace orc = mmr::testing;
using Clock = std::chrono::steady_clock;

// Pinned tolerances.
constexpr int kGeometryScenes = 200;
constexpr double kGeometrySeconds = 30.0;
constexpr double kBoundaryBand = 1e-7;   // samples this close to an edge are skipped
constexpr double kTangentTol = 1e-9;
constexpr int kConvexifyPolygons = 50;
constexpr int kConvexifySamples = 1000;
constexpr double kConvexifySeconds = 10.0;
constexpr double kContainTol = 1e-9;
constexpr int kArcCases = 1000;
constexpr double kArcTol = 1e-8;
constexpr double kEquivarianceTol = 1e-12;
constexpr double kAuditTol = 1e-6;
constexpr double kGoalTol = 0.05;
constexpr double kEndToEndSeconds = 600.0;
constexpr double kEeDeviation = 5e-3;
constexpr double kGraspResidual = 1e-6;
constexpr double kMaxSolve = 4.0;
constexpr double kMeanSolve = 1.5;

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("criterion %-3s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class... A>
std::string format(const char* fmt, A... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

bool near_boundary(const orc::Ring& r, const Point2& x) {
  return orc::ring_boundary_distance(r, x) < kBoundaryBand;
}

// ------------------------------------------------------------------------ 1

struct GeometryTally {
  long visibility = 0, clipping = 0, unions = 0, tangents = 0;
  long checks = 0;
  long total() const { return visibility + clipping + unions + tangents; }
};

// Up to three disjoint four-vertex obstacles (at most 12 vertices).
std::vector<orc::Ring> random_scene(std::mt19937_64& rng, const geom::Polygon& boundary) {
  std::uniform_real_distribution<double> u(1.0, 9.0);
  std::vector<orc::Ring> rings;
  for (int attempt = 0; attempt < 50 && rings.size() < 3; ++attempt) {
    auto r = orc::random_star(rng, {u(rng), u(rng)}, 4, 0.4, 1.2);
    bool clash = false;
    for (const auto& v : r) clash |= !orc::inside_ring(boundary.vertices(), v);
    for (const auto& o : rings) {
      for (std::size_t i = 0; i < r.size() && !clash; ++i) {
        for (std::size_t j = 0; j < o.size() && !clash; ++j) {
          clash = orc::proper_cross(r[i], r[(i + 1) % r.size()], o[j], o[(j + 1) % o.size()]) ||
                  orc::inside_ring(o, r[i]) || orc::inside_ring(r, o[j]);
        }
      }
    }
    if (!clash) rings.push_back(std::move(r));
  }
  return rings;
}

void check_visibility(std::mt19937_64& rng, const geom::Polygon& boundary,
                      const std::vector<orc::Ring>& rings, GeometryTally& t) {
  std::vector<geom::Polygon> obs(rings.begin(), rings.end());
  std::uniform_real_distribution<double> u(0.2, 9.8);
  Point2 p;
  do {
    p = {u(rng), u(rng)};
  } while (std::any_of(rings.begin(), rings.end(),
                       [&](const orc::Ring& r) { return orc::inside_ring(r, p); }));
  const auto listed = geom::visible_vertices(p, obs, boundary);
  std::vector<Point2> all;
  for (const auto& r : rings) all.insert(all.end(), r.begin(), r.end());
  all.insert(all.end(), boundary.vertices().begin(), boundary.vertices().end());
  std::size_t expected = 0;
  for (const auto& v : all) {
    const bool oracle = orc::brute_visible(p, v, rings, boundary.vertices());
    expected += oracle;
    const bool in_list = std::any_of(listed.begin(), listed.end(),
                                     [&](const Point2& w) { return (w - v).norm() < 1e-12; });
    t.visibility += (in_list != oracle);
    t.visibility += (geom::mutually_visible(p, v, obs, boundary) != oracle);
    t.checks += 2;
  }
  t.visibility += (listed.size() != expected);
}

void check_clipping(std::mt19937_64& rng, GeometryTally& t) {
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi), off(-0.8, 0.8),
      box(-1.0, 1.0);
  const auto ring = orc::random_convex(rng, {0, 0}, 8, 1.0);
  const geom::HalfPlane h{{std::cos(ang(rng)), std::sin(ang(rng))}, off(rng)};
  std::optional<orc::Ring> clipped;
  try {
    clipped = geom::clip_polygon(geom::Polygon(ring), h).vertices();
  } catch (const Error&) {
    // empty result
  }
  const double an = h.a.norm();
  for (int k = 0; k < 400; ++k) {
    const Point2 x(box(rng), box(rng));
    if (near_boundary(ring, x) || std::abs(h.a.dot(x) - h.b) < kBoundaryBand * an) continue;
    if (clipped && near_boundary(*clipped, x)) continue;
    const bool oracle = orc::inside_ring(ring, x) && h.a.dot(x) <= h.b;
    const bool got = clipped && orc::inside_ring(*clipped, x);
    t.clipping += (oracle != got);
    ++t.checks;
  }
}

void check_union(std::mt19937_64& rng, GeometryTally& t) {
  std::uniform_real_distribution<double> c(-0.6, 0.6);
  std::vector<orc::Ring> rings;
  std::vector<geom::Polygon> polys;
  for (int k = 0; k < 3; ++k) {
    rings.push_back(orc::random_star(rng, {c(rng), c(rng)}, 4, 0.3, 1.0));
    polys.emplace_back(rings.back());
  }
  bool holes = false;
  const auto out = geom::union_polygons(polys, &holes);
  std::uniform_real_distribution<double> box(-1.7, 1.7);
  for (int k = 0; k < 400; ++k) {
    const Point2 x(box(rng), box(rng));
    bool skip = false;
    for (const auto& r : rings) skip |= near_boundary(r, x);
    for (const auto& p : out) skip |= near_boundary(p.vertices(), x);
    if (skip) continue;
    bool oracle = false, got = false;
    for (const auto& r : rings) oracle |= orc::inside_ring(r, x);
    for (const auto& p : out) got |= orc::inside_ring(p.vertices(), x);
    // Enclosed holes are filled and reported.
    const bool ok = oracle == got || (holes && got && !oracle);
    t.unions += !ok;
    ++t.checks;
  }
}

void check_tangent(std::mt19937_64& rng, GeometryTally& t) {
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi), ax(0.2, 3.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double th = ang(rng);
    Eigen::Matrix2d R;
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const double a = ax(rng), b = ax(rng);
    const auto e = geom::Ellipse::from_axes(R, std::max(a, b), std::min(a, b),
                                            {ax(rng), -ax(rng)});
    const Point2 xs = e.boundary_point(ang(rng));
    const auto h = geom::ellipse_tangent_halfplane(e, xs);
    // Gradient of |C^-1 (x - d)|^2 at x*.
    const Eigen::Matrix2d Ci = e.C.inverse();
    const Eigen::Vector2d g = 2.0 * Ci.transpose() * Ci * (xs - e.d);
    const Eigen::Vector2d n = h.a.normalized(), gn = g.normalized();
    const double scale = std::max(1.0, std::abs(h.b));
    bool ok = std::abs(geom::cross(n, gn)) < kTangentTol && n.dot(gn) > 0.0;
    ok &= std::abs(h.a.dot(xs) - h.b) < kTangentTol * scale;
    for (int k = 0; k < 256; ++k) {
      const Point2 y = e.boundary_point(2 * std::numbers::pi * k / 256);
      ok &= h.a.dot(y) <= h.b + kTangentTol * scale;
    }
    t.tangents += !ok;
    ++t.checks;
  }
}

void criterion_geometry() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  const auto boundary = geom::make_rectangle(0, 0, 10, 10);
  GeometryTally tally;
  for (int scene = 0; scene < kGeometryScenes; ++scene) {
    const auto rings = random_scene(rng, boundary);
    check_visibility(rng, boundary, rings, tally);
    check_clipping(rng, tally);
    check_union(rng, tally);
    check_tangent(rng, tally);
  }
  const double dt = seconds_since(t0);
  report("1", tally.total() == 0 && dt < kGeometrySeconds,
         format("%d scenes, %ld checks, mismatches visibility %ld clip %ld union %ld tangent %ld, "
                "%.1f s (limit %.0f s)",
                kGeometryScenes, tally.checks, tally.visibility, tally.clipping, tally.unions,
                tally.tangents, dt, kGeometrySeconds));
}

// ------------------------------------------------------------------------ 2

void criterion_convexify() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(1.5, 8.5), side(1.0, 9.0);
  constexpr double r_f = 0.2;
  int polygons = 0, envs = 0;
  long not_convex = 0, segment_out = 0, outside = 0, not_decreasing = 0, errors = 0;
  while (polygons < kConvexifyPolygons && envs < 1000) {
    ++envs;
    plan::Environment env;
    env.boundary = geom::make_rectangle(0, 0, 10, 10);
    for (int k = 0; k < 4; ++k) {
      env.obstacles.emplace_back(orc::random_star(rng, {u(rng), u(rng)}, 6, 0.4, 1.4));
    }
    env.start = {0.6, side(rng)};
    env.goal = {9.4, side(rng)};
    std::vector<Point2> path;
    try {
      path = plan::plan_shortest_path(env, r_f);
    } catch (const Error&) {
      continue;  // overlapping obstacles or blocked endpoints
    }
    for (std::size_t i = 0; i + 1 < path.size() && polygons < kConvexifyPolygons; ++i) {
      geom::Polygon concave;
      try {
        concave = plan::segment_concave_polygon(i, path, env);
      } catch (const Error&) {
        continue;
      }
      const auto& in = concave.vertices();
      if (orc::count_reflex_by_angles(in) == 0) continue;
      ++polygons;
      plan::ConvexifyTrace trace;
      geom::Polygon out;
      try {
        out = plan::convexify_polygon(concave, path[i], path[i + 1], r_f, &trace);
      } catch (const Error&) {
        ++errors;
        continue;
      }
      not_convex += orc::count_reflex_by_angles(out.vertices()) != 0;
      const auto region = plan::ConvexRegion::from_polygon(out);
      for (int s = 0; s <= 100; ++s) {
        segment_out += !region.contains(path[i] + (s / 100.0) * (path[i + 1] - path[i]),
                                        kContainTol);
      }
      Eigen::AlignedBox2d box;
      for (const auto& v : out.vertices()) box.extend(v);
      std::uniform_real_distribution<double> bx(box.min().x(), box.max().x()),
          by(box.min().y(), box.max().y());
      for (int s = 0; s < kConvexifySamples;) {
        const Point2 x(bx(rng), by(rng));
        if (region.slack(x) < 0.0) continue;
        ++s;
        outside += !(orc::inside_ring(in, x) || orc::ring_boundary_distance(in, x) < kContainTol);
      }
      const auto& rc = trace.reflex_counts;
      bool dec = !rc.empty() && rc.back() == 0;
      for (std::size_t k = 1; k < rc.size(); ++k) dec &= rc[k] < rc[k - 1];
      not_decreasing += !dec;
    }
  }
  const double dt = seconds_since(t0);
  const long bad = not_convex + segment_out + outside + not_decreasing + errors;
  report("2", polygons >= kConvexifyPolygons && bad == 0 && dt < kConvexifySeconds,
         format("%d concave polygons, %d samples each; reflex left %ld, segment outside %ld, "
                "samples outside input %ld, non-decreasing traces %ld, errors %ld, %.1f s",
                polygons, kConvexifySamples, not_convex, segment_out, outside, not_decreasing,
                errors, dt));
}

// ------------------------------------------------------------------------ 3

void criterion_kinematics() {
  std::mt19937_64 rng(3);
  const auto lim = robot::default_limits(5);
  std::uniform_real_distribution<double> vd(lim.u_lo[0], lim.u_hi[0]),
      wd(lim.u_lo[1], lim.u_hi[1]), ad(-std::numbers::pi, std::numbers::pi),
      td(1e-3, 0.25), pd(-5.0, 5.0);
  double arc_err = 0.0;
  for (int k = 0; k < kArcCases; ++k) {
    robot::MMRState s;
    s.p = {pd(rng), pd(rng)};
    s.phi = ad(rng);
    s.q = Eigen::VectorXd::Zero(5);
    auto u = robot::ControlInput::zero(5);
    u.v = vd(rng);
    u.omega = wd(rng);
    const double T = td(rng);
    const auto n = robot::step_rk4(s, u, T);
    const double th = s.phi + u.omega * T;
    Point2 exact;
    if (std::abs(u.omega) < 1e-12) {
      exact = s.p + u.v * T * Point2(std::cos(s.phi), std::sin(s.phi));
    } else {
      const double r = u.v / u.omega;
      exact = s.p + r * Point2(std::sin(th) - std::sin(s.phi), std::cos(s.phi) - std::cos(th));
    }
    arc_err = std::max({arc_err, (n.p - exact).cwiseAbs().maxCoeff(), std::abs(n.phi - th)});
  }

  const robot::RobotSpec spec;
  std::uniform_real_distribution<double> u01(0, 1);
  double equi_err = 0.0;
  for (int k = 0; k < kArcCases; ++k) {
    robot::MMRState s;
    s.p = {pd(rng), pd(rng)};
    s.phi = ad(rng);
    s.q.resize(static_cast<Eigen::Index>(spec.n_arm()));
    for (Eigen::Index j = 0; j < s.q.size(); ++j) {
      s.q[j] = spec.limits.q_lo[j] + u01(rng) * (spec.limits.q_hi[j] - spec.limits.q_lo[j]);
    }
    const double rot = ad(rng);
    const Point2 shift(pd(rng), pd(rng));
    const Eigen::Rotation2Dd R(rot);
    auto moved = s;
    moved.p = R * s.p + shift;
    moved.phi = s.phi + rot;
    const auto ee = robot::forward_kinematics(s, spec.dh);
    const auto ee_m = robot::forward_kinematics(moved, spec.dh);
    const Point2 expect = R * ee.p.head<2>() + shift;
    equi_err = std::max({equi_err, (ee_m.p.head<2>() - expect).norm(),
                         std::abs(ee_m.p.z() - ee.p.z()),
                         std::abs(robot::wrap_angle(ee_m.yaw - ee.yaw - rot))});
  }
  report("3", arc_err <= kArcTol && equi_err <= kEquivarianceTol,
         format("RK4 vs arc max error %.2e over %d cases (limit %.0e); FK equivariance max error "
                "%.2e (limit %.0e)",
                arc_err, kArcCases, kArcTol, equi_err, kEquivarianceTol));
}

// ------------------------------------------------------------------- 4 to 8

struct AuditTally {
  int converged = 0, at_limit = 0, failed = 0, bad = 0;
  double worst = 0.0, worst_grasp = 0.0;
  bool boxes_ok = true;
};

struct EndToEnd {
  sim::RunResult run;
  AuditTally audit;
  double wall = 0.0;
  std::string csv;
};

EndToEnd run_end_to_end(const sim::Scenario& sc) {
  EndToEnd e;
  const double z_max = sc.model.z_max;
  const auto t0 = Clock::now();
  e.run = sim::run_scenario(
      sc, {}, nullptr, {},
      [&](const nmpc::HorizonProblem& pb, const nmpc::HorizonSolution& sol, bool executed) {
        // Executed iterates that stopped at the iteration limit are audited
        // as well.
        if (!executed) {
          ++e.audit.failed;
          return;
        }
        ++(sol.ok() ? e.audit.converged : e.audit.at_limit);
        const auto a = nmpc::audit_solution(sc.model, pb, sol, z_max);
        e.audit.worst = std::max(e.audit.worst, a.worst());
        e.audit.worst_grasp = std::max(e.audit.worst_grasp, a.grasp);
        e.audit.boxes_ok &= a.boxes_ok;
        e.audit.bad += a.worst() > kAuditTol || !a.boxes_ok;
      });
  e.wall = seconds_since(t0);
  std::ostringstream csv;
  io::write_trajectory_csv(csv, sc.model, e.run.states, e.run.controls, sc.planner.T_c);
  e.csv = csv.str();
  return e;
}

bool nominal_parameters(const nmpc::PlannerConfig& c) {
  return c.v_op == 0.15 && c.T_h == 9.0 && c.T_e == 3.0 && c.T_c == 0.25 && c.d_safe == 0.05 &&
         c.d_safe_dyn == 0.1;
}

int sensed_horizons(const sim::RunMetrics& m) {
  return static_cast<int>(std::count_if(m.horizons.begin(), m.horizons.end(),
                                        [](const nmpc::HorizonRecord& h) { return h.obstacles > 0; }));
}

// The solve-time envelope applies to the two-robot scenario only.
void report_run(const std::string& suffix, const sim::Scenario& sc, const EndToEnd& e,
                bool with_timing) {
  const auto& m = e.run.metrics;
  report("4" + suffix, e.audit.converged > 0 && e.audit.bad == 0,
         format("%d converged and %d iteration-limit horizons audited, %d violating, worst "
                "residual %.2e (limit %.0e), boxes %s; %d failed",
                e.audit.converged, e.audit.at_limit, e.audit.bad, e.audit.worst, kAuditTol,
                e.audit.boxes_ok ? "exact" : "violated", e.audit.failed));

  const Point2 com = e.run.states.back().p.head<2>();
  const double goal_err = (com - sc.environment.goal).norm();
  const bool pos_static = std::all_of(m.d_static.begin(), m.d_static.end(),
                                      [](double d) { return d > 0.0; });
  const bool pos_dynamic = std::all_of(m.d_dynamic.begin(), m.d_dynamic.end(),
                                       [](double d) { return d > 0.0; });
  const int sensed = sensed_horizons(m);
  report("5" + suffix,
         nominal_parameters(sc.planner) && m.completed && pos_static && pos_dynamic &&
             goal_err <= kGoalTol && sensed > 0 && e.wall < kEndToEndSeconds,
         format("%s: completed %s%s, min static margin %.3f m, min dynamic margin %.3f m, "
                "obstacle sensed in %d horizons, CoM %.4f m from goal, %.0f s",
                sc.name.c_str(), m.completed ? "yes" : "no",
                m.diagnostic.empty() ? "" : (" (" + m.diagnostic + ")").c_str(),
                m.min_d_static(), m.min_d_dynamic(), sensed, goal_err, e.wall));

  report("6" + suffix,
         m.max_ee_deviation() <= kEeDeviation && m.max_grasp_residual() <= kGraspResidual &&
             e.audit.worst_grasp <= kGraspResidual,
         format("max EE distance deviation %.2e m (limit %.0e), grasp residual executed %.2e "
                "planned %.2e (limit %.0e)",
                m.max_ee_deviation(), kEeDeviation, m.max_grasp_residual(), e.audit.worst_grasp,
                kGraspResidual));

  const auto st = io::summarize_solve_times({m.solve_times});
  if (!with_timing) {
    std::printf("              solve times over %zu horizons: min %.3f mean %.3f max %.3f s\n",
                st.horizons, st.min, st.mean, st.max);
    return;
  }
  report("7" + suffix, st.horizons > 0 && st.max <= kMaxSolve && st.mean <= kMeanSolve,
         format("%zu horizons, solve time min %.3f mean %.3f max %.3f s (limits mean %.1f, max "
                "%.1f)",
                st.horizons, st.min, st.mean, st.max, kMeanSolve, kMaxSolve));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance run"};
  bool slow = false;
  std::string scenarios = MMR_SCENARIO_DIR;
  app.add_flag("--slow", slow, "Also run the five-robot scenario");
  app.add_option("--scenarios", scenarios, "Scenario directory");
  CLI11_PARSE(app, argc, argv);

  try {
    criterion_geometry();
    criterion_convexify();
    criterion_kinematics();

    const auto sc = io::load_scenario(scenarios + "/corridor_crossing.json");
    const auto first = run_end_to_end(sc);
    report_run("", sc, first, true);
    const auto second = run_end_to_end(sc);
    report("8", first.csv == second.csv && !first.csv.empty(),
           format("trajectory CSVs of two runs: %zu and %zu bytes, %s", first.csv.size(),
                  second.csv.size(), first.csv == second.csv ? "identical" : "different"));

    if (slow) {
      const auto ring = io::load_scenario(scenarios + "/ring5_corridor.json");
      report_run("s", ring, run_end_to_end(ring), false);
    }
  } catch (const std::exception& e) {
    std::printf("aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%s\n", failures == 0 ? "all criteria PASS" : "some criteria FAIL");
  return failures == 0 ? 0 : 1;
}
