#include "mmr/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

namespace mmr::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double min_of(const std::vector<double>& v) {
  double m = kInf;
  for (double x : v) m = std::min(m, x);
  return m;
}

std::vector<robot::Circle> all_circles(const FormationModel& model, const FormationConfig& cfg) {
  const auto c = robot::bounding_circles(model, cfg);
  std::vector<robot::Circle> out = c.base;
  out.insert(out.end(), c.arm.begin(), c.arm.end());
  out.push_back(c.object);
  return out;
}

void sample_ring(const std::vector<Point2>& ring, bool closed, int n, std::vector<Point2>& out) {
  double total = 0.0;
  const std::size_t edges = closed ? ring.size() : ring.size() - 1;
  for (std::size_t i = 0; i < edges; ++i) total += (ring[(i + 1) % ring.size()] - ring[i]).norm();
  if (total <= 0.0) {
    out.push_back(ring.front());
    return;
  }
  const double step = total / (closed ? n : n - 1);
  std::size_t e = 0;
  double start = 0.0;  // arc length at the start of edge e
  for (int k = 0; k < n; ++k) {
    const double s = std::min(k * step, total);
    while (e + 1 < edges) {
      const double len = (ring[(e + 1) % ring.size()] - ring[e]).norm();
      if (s <= start + len) break;
      start += len;
      ++e;
    }
    const Point2& a = ring[e];
    const Point2& b = ring[(e + 1) % ring.size()];
    const double len = (b - a).norm();
    out.push_back(len > 0.0 ? Point2(a + std::clamp((s - start) / len, 0.0, 1.0) * (b - a)) : a);
  }
}

std::vector<Point2> posed(const geom::Polygon& poly, const Point2& p, double yaw) {
  const Eigen::Rotation2Dd R(yaw);
  std::vector<Point2> out;
  for (const auto& v : poly.vertices()) out.push_back(p + R * v);
  return out;
}

}  // namespace

void DynamicObstacle::validate() const {
  if (!(r > 0.0)) throw Error(ErrorCode::kInvalidInput, "obstacle radius must be positive");
  if (!p0.allFinite() || !v.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "obstacle state must be finite");
  }
  if (!(t_start <= t_end)) throw Error(ErrorCode::kInvalidInput, "obstacle window is empty");
}

void Scenario::validate() const {
  model.validate();
  planner.validate();
  for (const auto& o : obstacles) o.validate();
  const auto& env = environment;
  if (env.boundary.empty()) throw Error(ErrorCode::kInvalidInput, "scenario has no boundary");
  if (!geom::polygon_contains(env.boundary, env.start) ||
      !geom::polygon_contains(env.boundary, env.goal)) {
    throw Error(ErrorCode::kInvalidInput, "start and goal must lie inside the boundary");
  }
}

ObstacleWorld::ObstacleWorld(std::vector<DynamicObstacle> obstacles, const SimOptions& options)
    : obstacles_(std::move(obstacles)), scale_(obstacles_.size(), 1.0) {
  if (options.perturb_velocity) {
    if (!(options.perturbation >= 0.0 && options.perturbation < 1.0)) {
      throw Error(ErrorCode::kInvalidInput, "perturbation must lie in [0, 1)");
    }
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> u(1.0 - options.perturbation,
                                             1.0 + options.perturbation);
    for (double& s : scale_) s = u(rng);
  }
}

std::vector<nmpc::DynamicObstacle> ObstacleWorld::truth(double t) const {
  std::vector<nmpc::DynamicObstacle> out;
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    const auto& o = obstacles_[i];
    if (!o.active(t)) continue;
    out.push_back({o.p0 + t * scale_[i] * o.v, scale_[i] * o.v, o.r});
  }
  return out;
}

std::vector<nmpc::DynamicObstacle> ObstacleWorld::feed(double t, const Point2& centre,
                                                       double sensing_radius) const {
  std::vector<nmpc::DynamicObstacle> out;
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    const auto& o = obstacles_[i];
    if (!o.active(t)) continue;
    const Point2 p = o.p0 + t * scale_[i] * o.v;
    if ((p - centre).norm() > sensing_radius) continue;
    out.push_back({p, o.v, o.r});
  }
  return out;
}

std::vector<nmpc::DynamicObstacle> obstacle_feed(double t,
                                                 std::span<const DynamicObstacle> obstacles,
                                                 const Point2& centre, double sensing_radius) {
  return ObstacleWorld({obstacles.begin(), obstacles.end()}, {}).feed(t, centre, sensing_radius);
}

Margins compute_margins(std::span<const robot::Circle> bodies,
                        std::span<const plan::ConvexRegion> corridors,
                        std::span<const nmpc::DynamicObstacle> obstacles) {
  Margins m;
  for (const auto& b : bodies) {
    double best = -kInf;
    for (const auto& reg : corridors) best = std::max(best, reg.slack(b.c) - b.r);
    m.d_static = std::min(m.d_static, best);
    for (const auto& o : obstacles) {
      m.d_dynamic = std::min(m.d_dynamic, (o.p - b.c).norm() - o.r - b.r);
    }
  }
  return m;
}

Margins compute_margins(const FormationModel& model, const FormationConfig& cfg,
                        std::span<const plan::ConvexRegion> corridors,
                        std::span<const nmpc::DynamicObstacle> obstacles) {
  const auto bodies = all_circles(model, cfg);
  return compute_margins(bodies, corridors, obstacles);
}

std::vector<Point2> body_outline_samples(const FormationModel& model, const FormationConfig& cfg,
                                         int per_body) {
  if (per_body < 2) throw Error(ErrorCode::kInvalidInput, "need at least two samples per body");
  std::vector<Point2> out;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& s = cfg.robots[i];
    sample_ring(posed(model.robots[i].footprint, s.p, s.phi), true, per_body, out);
    sample_ring(robot::projected_joints(s, model.robots[i].dh), false, per_body, out);
  }
  sample_ring(posed(model.object_footprint, cfg.p.head<2>(), cfg.psi), true, per_body, out);
  return out;
}

double static_clearance(const plan::Environment& env, std::span<const Point2> samples) {
  double worst = kInf;
  for (const auto& p : samples) {
    double d = geom::boundary_distance(env.boundary, p);
    if (!geom::polygon_contains(env.boundary, p)) d = -d;
    for (const auto& o : env.obstacles) {
      const double od = geom::boundary_distance(o, p);
      d = std::min(d, geom::polygon_contains(o, p) ? -od : od);
    }
    worst = std::min(worst, d);
  }
  return worst;
}

double RunMetrics::min_d_static() const { return min_of(d_static); }
double RunMetrics::min_d_dynamic() const { return min_of(d_dynamic); }

double RunMetrics::max_ee_deviation() const {
  double worst = 0.0;
  for (const auto& row : ee_distance) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      worst = std::max(worst, std::abs(row[j] - ee_distance.front()[j]));
    }
  }
  return worst;
}

double RunMetrics::max_grasp_residual() const {
  double worst = 0.0;
  for (double g : grasp_residual) worst = std::max(worst, g);
  return worst;
}

FormationConfig initial_formation(const Scenario& scenario, const plan::GlobalPlan& plan) {
  double psi = 0.0;
  if (scenario.start_psi) {
    psi = *scenario.start_psi;
  } else if (plan.path.size() >= 2) {
    const Eigen::Vector2d d = plan.path[1] - plan.path[0];
    psi = std::atan2(d.y(), d.x());
  }
  return robot::place_formation(scenario.model, scenario.environment.start, psi);
}

RunResult run_scenario(const Scenario& scenario, const SimOptions& options,
                       const plan::GlobalPlan* plan,
                       const std::function<void(const nmpc::HorizonRecord&)>& log,
                       const nmpc::SolutionObserver& observe) {
  scenario.validate();
  const auto& model = scenario.model;
  const auto& cfg = scenario.planner;
  RunResult res;
  res.plan = plan ? *plan
                  : plan::plan_global(scenario.environment, model.formation_radius(),
                                      cfg.v_op, cfg.T_c);

  const ObstacleWorld world(scenario.obstacles, options);
  const nmpc::ObstacleFeed feed = [&](double t, const FormationConfig& current) {
    return world.feed(t, current.p.head<2>(), cfg.sensing_radius);
  };
  const FormationConfig start = initial_formation(scenario, res.plan);
  const auto drive = nmpc::receding_horizon_drive(
      res.plan, model, start, {scenario.environment.goal, scenario.goal_psi}, cfg, feed, log, observe);

  // Ground truth: replay the executed controls through the same integrator.
  res.states.push_back(start);
  for (std::size_t k = 0; k < drive.controls.size(); ++k) {
    FormationConfig next = drive.states[k + 1];  // the object rides on the grasps
    for (std::size_t i = 0; i < model.size(); ++i) {
      next.robots[i] = robot::step_rk4(res.states[k].robots[i], drive.controls[k][i], cfg.T_c);
      const Eigen::VectorXd d =
          next.robots[i].to_vector() - drive.states[k + 1].robots[i].to_vector();
      res.prediction_mismatch = std::max(res.prediction_mismatch, d.cwiseAbs().maxCoeff());
    }
    res.states.push_back(std::move(next));
  }
  res.controls = drive.controls;

  auto& m = res.metrics;
  m.T_c = cfg.T_c;
  m.completed = drive.completed;
  m.diagnostic = drive.diagnostic;
  m.horizons = drive.horizons;
  for (const auto& h : drive.horizons) m.solve_times.push_back(h.solve_time);
  for (std::size_t k = 0; k < res.states.size(); ++k) {
    const auto& s = res.states[k];
    const double t = k * cfg.T_c;
    m.t.push_back(t);
    const auto obstacles = world.truth(t);
    const auto margins = compute_margins(model, s, res.plan.corridors, obstacles);
    m.d_static.push_back(margins.d_static);
    m.d_dynamic.push_back(margins.d_dynamic);
    const auto samples = body_outline_samples(model, s, 100);
    m.static_clearance.push_back(static_clearance(scenario.environment, samples));
    m.tracking_error.push_back(
        (s.p.head<2>() - res.plan.samples[drive.step_sample[k]]).norm());
    m.object_pose.push_back({s.p.x(), s.p.y(), s.p.z(), s.psi});
    std::vector<Eigen::Vector3d> ee;
    double g = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
      ee.push_back(robot::forward_kinematics(s.robots[i], model.robots[i].dh).p);
      Eigen::Vector4d r = robot::grasp_residual(model, s, i);
      r[3] = robot::wrap_angle(r[3]);
      g = std::max(g, r.cwiseAbs().maxCoeff());
    }
    std::vector<double> dist;
    for (std::size_t i = 0; i < ee.size(); ++i) {
      for (std::size_t j = i + 1; j < ee.size(); ++j) dist.push_back((ee[i] - ee[j]).norm());
    }
    m.ee_distance.push_back(std::move(dist));
    m.grasp_residual.push_back(g);
  }
  m.duration = m.t.back();
  return res;
}

std::vector<RunResult> run_batch(std::span<const Scenario> scenarios, const SimOptions& options) {
  std::vector<RunResult> out(scenarios.size());
  std::vector<std::exception_ptr> errors(scenarios.size());
  const int n = static_cast<int>(scenarios.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    // Exceptions may not leave the parallel region.
    try {
      out[i] = run_scenario(scenarios[i], options);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace mmr::sim
