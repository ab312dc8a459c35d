#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>

#include "mmr/nmpc_planner.hpp"

namespace mmr::nmpc {

namespace {

// Largest audited residual of an executed iterate that did not converge.
constexpr double kAuditTol = 1e-6;

int steps_of(double span, double T_c, const char* what) {
  const double r = span / T_c;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9) {
    throw Error(ErrorCode::kInvalidInput,
                std::string(what) + " must be a positive multiple of T_c");
  }
  return static_cast<int>(n);
}

ControlInput clamp_control(const ControlInput& u, const robot::Limits& lim) {
  Eigen::VectorXd v = u.to_vector();
  // Strictly inside so the interior-point start needs no push.
  v = v.cwiseMax(0.99 * lim.u_lo).cwiseMin(0.99 * lim.u_hi);
  return ControlInput::from_vector(v);
}

// Largest excess of any body circle over the region, margin included.
double body_excess(const FormationModel& model, const FormationConfig& cfg,
                   const plan::ConvexRegion& reg, double margin) {
  const auto circles = robot::bounding_circles(model, cfg);
  std::vector<robot::Circle> all = circles.base;
  all.insert(all.end(), circles.arm.begin(), circles.arm.end());
  all.push_back(circles.object);
  double w = -std::numeric_limits<double>::infinity();
  for (const auto& c : all) {
    for (Eigen::Index j = 0; j < reg.A.rows(); ++j) {
      w = std::max(w, reg.A.row(j).dot(c.c) + c.r + margin - reg.b[j]);
    }
  }
  return w;
}

// Corridor for one step. Candidates run from `floor` to the sample's own
// corridor and, with need_ref, must contain the reference point; the
// sample's corridor is always a candidate. Picks the latest candidate the predicted bodies fit,
// else the one they overshoot least.
int choose_corridor(const plan::GlobalPlan& plan, const FormationModel& model, int sample,
                    int floor, const FormationConfig& predicted, double margin,
                    bool need_ref = true) {
  const int hi = static_cast<int>(plan.sample_corridor[sample]);
  const Point2& ref = plan.samples[sample];
  int best = hi;
  double best_excess = std::numeric_limits<double>::infinity();
  for (int c = hi; c >= std::min(floor, hi); --c) {
    if (need_ref && c != hi && !plan.corridors[c].contains(ref)) break;
    const double w = body_excess(model, predicted, plan.corridors[c], margin);
    if (w <= 0.0) return c;
    if (w < best_excess - 1e-12) {
      best_excess = w;
      best = c;
    }
  }
  return best;
}

}  // namespace

int PlannerConfig::horizon_steps() const { return steps_of(T_h, T_c, "T_h"); }
int PlannerConfig::exec_steps() const { return steps_of(T_e, T_c, "T_e"); }

void PlannerConfig::validate() const {
  if (!(T_c > 0.0)) throw Error(ErrorCode::kInvalidInput, "T_c must be positive");
  if (exec_steps() > horizon_steps()) {
    throw Error(ErrorCode::kInvalidInput, "T_e must not exceed T_h");
  }
  if (!(v_op > 0.0) || d_safe < 0.0 || d_safe_dyn < 0.0 || !(goal_tolerance > 0.0) ||
      sensing_radius < 0.0 || max_failures < 1 || max_iter < 1) {
    throw Error(ErrorCode::kInvalidInput, "planner parameter out of range");
  }
  if ((weights.control.array() < 0.0).any() || (weights.tracking.array() < 0.0).any() ||
      weights.terminal < 0.0) {
    throw Error(ErrorCode::kInvalidInput, "weights must be nonnegative");
  }
}

double AuditReport::worst() const {
  return std::max({dynamics, grasp, corridor, separation, wedge});
}

HorizonSolution initial_guess(const FormationModel& model, const HorizonProblem& problem) {
  const int N = problem.N;
  HorizonSolution g;
  g.states.push_back(problem.initial);
  const double psi = problem.initial.psi;
  for (int k = 1; k <= N; ++k) {
    FormationConfig cfg;
    cfg.psi = psi;
    cfg.p = {problem.reference[k].x(), problem.reference[k].y(), problem.initial.p.z()};
    for (std::size_t i = 0; i < model.size(); ++i) {
      auto [s, z] = robot::place_robot(model, i, problem.reference[k], psi,
                                       problem.initial.robots[i].q);
      // Keep the heading continuous with the start.
      s.phi = problem.initial.robots[i].phi + robot::wrap_angle(s.phi - problem.initial.robots[i].phi);
      cfg.robots.push_back(std::move(s));
    }
    g.states.push_back(std::move(cfg));
  }
  for (int k = 0; k < N; ++k) {
    std::vector<ControlInput> us;
    for (std::size_t i = 0; i < model.size(); ++i) {
      const auto& a = g.states[k].robots[i];
      const auto& b = g.states[k + 1].robots[i];
      ControlInput u;
      const Eigen::Vector2d dir(std::cos(a.phi), std::sin(a.phi));
      u.v = dir.dot(b.p - a.p) / problem.T_c;
      u.omega = (b.phi - a.phi) / problem.T_c;
      u.qdot = (b.q - a.q) / problem.T_c;
      us.push_back(clamp_control(u, model.robots[i].limits));
    }
    g.controls.push_back(std::move(us));
  }
  return g;
}

HorizonSolution shift_solution(const HorizonSolution& s, int steps) {
  const int N = static_cast<int>(s.controls.size());
  HorizonSolution out;
  for (int k = 0; k <= N; ++k) out.states.push_back(s.states[std::min(k + steps, N)]);
  for (int k = 0; k < N; ++k) {
    if (k + steps < N) {
      out.controls.push_back(s.controls[k + steps]);
    } else {
      std::vector<ControlInput> zero;
      for (const auto& u : s.controls.back()) {
        zero.push_back(ControlInput::zero(static_cast<std::size_t>(u.qdot.size())));
      }
      out.controls.push_back(std::move(zero));
    }
  }
  return out;
}

HorizonSolution solve_horizon(const FormationModel& model, const HorizonProblem& problem,
                              const HorizonSolution* warm, const PlannerConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  HorizonNlp nlp_problem(model, problem, config.parallel, model.z_max);
  const HorizonSolution guess = warm ? *warm : initial_guess(model, problem);
  const Eigen::VectorXd x0 = nlp_problem.pack(guess.states, guess.controls);

  nlp::Options opt;
  opt.tol = config.kkt_tol;
  opt.constr_tol = config.constr_tol;
  opt.max_iter = config.max_iter;
  opt.verbose = config.verbose;
  const auto res = nlp::solve(nlp_problem, x0, opt);

  HorizonSolution out;
  nlp_problem.unpack(res.x, out.states, out.controls);
  // The executed trajectory is the RK4 rollout of the planned controls; the
  // object pose comes from the optimiser.
  for (int k = 0; k < problem.N; ++k) {
    for (std::size_t i = 0; i < model.size(); ++i) {
      out.states[k + 1].robots[i] =
          robot::step_rk4(out.states[k].robots[i], out.controls[k][i], problem.T_c);
    }
  }
  out.status = res.status;
  out.objective = res.objective;
  out.kkt_residual = res.kkt_error;
  out.max_constraint_violation = res.max_violation;
  out.iterations = res.iterations;
  out.active_constraints = res.active_ineq;
  out.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

AuditReport audit_solution(const FormationModel& model, const HorizonProblem& problem,
                           const HorizonSolution& sol, double z_max) {
  AuditReport rep;
  const int N = problem.N;
  for (int k = 0; k < N; ++k) {
    for (std::size_t i = 0; i < model.size(); ++i) {
      const auto& s = sol.states[k].robots[i];
      const auto& u = sol.controls[k][i];
      const auto next = robot::step_rk4(s, u, problem.T_c);
      const auto& got = sol.states[k + 1].robots[i];
      rep.dynamics = std::max({rep.dynamics, (next.p - got.p).cwiseAbs().maxCoeff(),
                               std::abs(robot::wrap_angle(next.phi - got.phi)),
                               (next.q - got.q).cwiseAbs().maxCoeff()});
      const auto& lim = model.robots[i].limits;
      const Eigen::VectorXd uv = u.to_vector();
      if ((uv.array() < lim.u_lo.array()).any() || (uv.array() > lim.u_hi.array()).any()) {
        rep.boxes_ok = false;
      }
    }
  }
  for (int k = 1; k <= N; ++k) {
    const auto& cfg = sol.states[k];
    for (std::size_t i = 0; i < model.size(); ++i) {
      Eigen::Vector4d g = robot::grasp_residual(model, cfg, i);
      g[3] = robot::wrap_angle(g[3]);
      rep.grasp = std::max(rep.grasp, g.cwiseAbs().maxCoeff());
      const auto& lim = model.robots[i].limits;
      const auto& q = cfg.robots[i].q;
      if ((q.array() < lim.q_lo.array()).any() || (q.array() > lim.q_hi.array()).any()) {
        rep.boxes_ok = false;
      }
    }
    if (std::isfinite(z_max) && (cfg.p.z() < 0.0 || cfg.p.z() > z_max)) rep.boxes_ok = false;

    const auto circles = robot::bounding_circles(model, cfg);
    std::vector<robot::Circle> all = circles.base;
    all.insert(all.end(), circles.arm.begin(), circles.arm.end());
    all.push_back(circles.object);
    const auto& reg = problem.corridors[k];
    for (const auto& c : all) {
      for (Eigen::Index j = 0; j < reg.A.rows(); ++j) {
        const double excess = reg.A.row(j).dot(c.c) + c.r + problem.d_safe - reg.b[j];
        rep.corridor = std::max(rep.corridor, excess);
      }
      for (const auto& o : problem.obstacles) {
        const double gap = (c.c - o.at(k * problem.T_c)).norm() - (c.r + o.r + problem.d_safe_dyn);
        rep.separation = std::max(rep.separation, -gap);
      }
    }
    if (model.size() < 2) continue;
    const auto planes = robot::wedge_planes(model, cfg);
    const std::size_t n = planes.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& lo = planes[i];
      const auto& hi = planes[(i + 1) % n];
      for (const Point2& v : {circles.base[i].c, circles.arm[i].c}) {
        rep.wedge = std::max({rep.wedge, lo.H.dot(v) - lo.h, hi.h - hi.H.dot(v)});
      }
    }
  }
  return rep;
}

DriveResult receding_horizon_drive(const plan::GlobalPlan& plan, const FormationModel& model,
                                   const FormationConfig& initial, const Goal& goal,
                                   const PlannerConfig& config, const ObstacleFeed& feed,
                                   const std::function<void(const HorizonRecord&)>& log,
                                   const SolutionObserver& observe) {
  config.validate();
  model.validate();
  if (plan.samples.empty() || plan.sample_corridor.size() != plan.samples.size()) {
    throw Error(ErrorCode::kInvalidInput, "global plan has no reference samples");
  }
  const int N = config.horizon_steps();
  const int E = config.exec_steps();
  const int last = static_cast<int>(plan.samples.size()) - 1;

  auto at_goal = [&](const FormationConfig& c) {
    if ((c.p.head<2>() - goal.p).norm() > config.goal_tolerance) return false;
    return !goal.psi ||
           std::abs(robot::wrap_angle(c.psi - *goal.psi)) <= config.goal_yaw_tolerance;
  };
  auto nearest_from = [&](int from, const Point2& p) {
    int best = from;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = from; j <= last; ++j) {
      const double d = (plan.samples[j] - p).squaredNorm();
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    return best;
  };

  DriveResult out;
  FormationConfig current = initial;
  int lambda = nearest_from(0, current.p.head<2>());
  out.states.push_back(current);
  out.step_corridor.push_back(
      choose_corridor(plan, model, lambda, 0, current, config.d_safe));
  out.step_sample.push_back(lambda);

  std::optional<HorizonSolution> warm;
  double t = 0.0;
  int failures = 0;
  constexpr int kStallCycles = 10;
  constexpr double kStallProgress = 0.01;
  std::vector<double> progress;  // distance to goal at the start of each cycle

  while (!at_goal(current)) {
    if (t >= config.max_duration) {
      out.diagnostic = "time limit reached before the goal";
      break;
    }
    const double dist = (current.p.head<2>() - goal.p).norm();
    progress.push_back(dist);
    if (progress.size() > kStallCycles &&
        progress[progress.size() - 1 - kStallCycles] - dist < kStallProgress) {
      out.diagnostic = "no progress towards the goal";
      break;
    }

    lambda = nearest_from(lambda, current.p.head<2>());
    HorizonProblem pb;
    pb.N = N;
    pb.T_c = config.T_c;
    pb.initial = current;
    pb.weights = config.weights;
    pb.d_safe = config.d_safe;
    pb.d_safe_dyn = config.d_safe_dyn;
    for (int k = 0; k <= N; ++k) pb.reference.push_back(plan.samples[std::min(lambda + k, last)]);
    // Corridors follow the predicted motion: the shifted previous solution,
    // or the reference-following guess on a cold start.
    std::vector<int> step_corr(N + 1);
    auto assign_corridors = [&](const std::vector<FormationConfig>& predicted, bool need_ref) {
      step_corr[0] = out.step_corridor.back();
      pb.corridors.assign(1, plan.corridors[step_corr[0]]);
      for (int k = 1; k <= N; ++k) {
        step_corr[k] = choose_corridor(plan, model, std::min(lambda + k, last), step_corr[k - 1],
                                       predicted[k], config.d_safe, need_ref);
        pb.corridors.push_back(plan.corridors[step_corr[k]]);
      }
    };
    assign_corridors(warm ? warm->states : initial_guess(model, pb).states, true);
    if (feed) {
      for (const auto& o : feed(t, current)) {
        if ((o.p - current.p.head<2>()).norm() <= config.sensing_radius) {
          pb.obstacles.push_back(o);
        }
      }
    }

    // Attempts: warm start, cold start, then hold. If nothing converges, the
    // latest attempt that ran out of iterations on an iterate passing the
    // audit is used.
    double spent = 0.0;
    std::optional<std::tuple<HorizonSolution, std::vector<int>, std::vector<plan::ConvexRegion>>>
        fallback;
    auto attempt = [&](const HorizonSolution* start) {
      HorizonSolution s = solve_horizon(model, pb, start, config);
      spent += s.solve_time;
      if (!s.ok() && s.usable()) {
        const auto audit = audit_solution(model, pb, s, model.z_max);
        if (audit.boxes_ok && audit.worst() <= kAuditTol) fallback.emplace(s, step_corr, pb.corridors);
      }
      return s;
    };
    HorizonSolution sol = attempt(warm ? &*warm : nullptr);
    if (!sol.ok() && warm) sol = attempt(nullptr);
    if (!sol.ok()) {
      // Hold: corridors that fit the formation where it stands, started
      // from standstill.
      HorizonSolution hold;
      hold.states.assign(N + 1, current);
      std::vector<ControlInput> stop;
      for (const auto& r : model.robots) stop.push_back(ControlInput::zero(r.n_arm()));
      hold.controls.assign(N, stop);
      assign_corridors(hold.states, false);
      sol = attempt(&hold);
    }
    if (!sol.ok() && fallback) {
      std::tie(sol, step_corr, pb.corridors) = std::move(*fallback);
    }
    const bool execute = sol.ok() || fallback.has_value();
    sol.solve_time = spent;
    if (observe) observe(pb, sol, execute);

    HorizonRecord rec;
    rec.t = t;
    rec.lambda = lambda;
    rec.status = nlp::to_string(sol.status);
    rec.objective = sol.objective;
    rec.kkt_residual = sol.kkt_residual;
    rec.max_violation = sol.max_constraint_violation;
    rec.solve_time = sol.solve_time;
    rec.iterations = sol.iterations;
    rec.active_constraints = sol.active_constraints;
    rec.obstacles = static_cast<int>(pb.obstacles.size());
    out.horizons.push_back(rec);
    if (log) log(rec);

    if (!execute) {
      if (++failures >= config.max_failures) {
        out.diagnostic = "solver failed " + std::to_string(failures) + " horizons in a row";
        break;
      }
      // Stop in place for one execution interval.
      for (int e = 0; e < E; ++e) {
        std::vector<ControlInput> stop;
        for (const auto& r : model.robots) stop.push_back(ControlInput::zero(r.n_arm()));
        out.controls.push_back(std::move(stop));
        out.states.push_back(current);
        out.step_corridor.push_back(out.step_corridor.back());
        out.step_sample.push_back(out.step_sample.back());
      }
      t += E * config.T_c;
      warm.reset();
      continue;
    }
    failures = 0;

    int e = 1;
    for (; e <= E; ++e) {
      current = sol.states[e];
      out.states.push_back(current);
      out.controls.push_back(sol.controls[e - 1]);
      out.step_corridor.push_back(step_corr[e]);
      out.step_sample.push_back(std::min(lambda + e, last));
      if (at_goal(current)) break;
    }
    t += std::min(e, E) * config.T_c;
    warm = shift_solution(sol, E);
  }
  out.completed = at_goal(current);
  return out;
}

}  // namespace mmr::nmpc
