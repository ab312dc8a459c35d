#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mmr/cli_io.hpp"

namespace mmr::io {

namespace {

using geom::Point2;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kInvalidInput, what); }

const Json& need(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  return j.at(key);
}

double num(const Json& j, const char* what) {
  if (!j.is_number()) bad(std::string(what) + " must be a number");
  return j.get<double>();
}

double num_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? num(j.at(key), key) : fallback;
}

// null means "unbounded".
double num_or_inf(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (j.at(key).is_null()) return std::numeric_limits<double>::infinity();
  return num(j.at(key), key);
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Point2 point(const Json& j) {
  if (!j.is_array() || j.size() != 2) bad("a point must be [x, y]");
  return {num(j[0], "coordinate"), num(j[1], "coordinate")};
}

Json point_json(const Point2& p) { return Json::array({p.x(), p.y()}); }

std::vector<Point2> points(const Json& j) {
  if (!j.is_array()) bad("expected a list of points");
  std::vector<Point2> out;
  for (const auto& e : j) out.push_back(point(e));
  return out;
}

Json points_json(const std::vector<Point2>& ps) {
  Json a = Json::array();
  for (const auto& p : ps) a.push_back(point_json(p));
  return a;
}

Eigen::VectorXd vec(const Json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be a list of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = num(j[i], what);
  return v;
}

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

robot::RobotSpec robot_from_json(const Json& j) {
  robot::RobotSpec r;
  if (j.contains("dh")) {
    r.dh.clear();
    for (const auto& row : j.at("dh")) {
      const auto v = vec(row, "dh row");
      if (v.size() != 4) bad("dh rows are [d, a, alpha, theta_offset]");
      r.dh.push_back({v[0], v[1], v[2], v[3]});
    }
    if (r.dh.size() < 2) bad("dh table needs at least one joint and the gripper row");
  }
  const std::size_t n = r.n_arm();
  r.limits = robot::default_limits(n);
  r.home_arm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (j.contains("limits")) {
    const auto& l = j.at("limits");
    if (l.contains("q_lo")) r.limits.q_lo = vec(l.at("q_lo"), "q_lo");
    if (l.contains("q_hi")) r.limits.q_hi = vec(l.at("q_hi"), "q_hi");
    if (l.contains("u_lo")) r.limits.u_lo = vec(l.at("u_lo"), "u_lo");
    if (l.contains("u_hi")) r.limits.u_hi = vec(l.at("u_hi"), "u_hi");
  }
  if (j.contains("footprint")) r.footprint = geom::Polygon(points(j.at("footprint")));
  if (j.contains("grasp")) {
    const auto g = vec(j.at("grasp"), "grasp");
    if (g.size() != 3) bad("grasp must be [x, y, z]");
    r.grasp = g;
  }
  if (j.contains("home_arm")) r.home_arm = vec(j.at("home_arm"), "home_arm");
  r.limits.validate(n);
  if (static_cast<std::size_t>(r.home_arm.size()) != n) bad("home_arm size does not match arm");
  return r;
}

Json robot_to_json(const robot::RobotSpec& r) {
  Json dh = Json::array();
  for (const auto& row : r.dh) dh.push_back({row.d, row.a, row.alpha, row.theta_offset});
  return {{"dh", dh},
          {"limits",
           {{"q_lo", vec_json(r.limits.q_lo)},
            {"q_hi", vec_json(r.limits.q_hi)},
            {"u_lo", vec_json(r.limits.u_lo)},
            {"u_hi", vec_json(r.limits.u_hi)}}},
          {"footprint", points_json(r.footprint.vertices())},
          {"grasp", vec_json(r.grasp)},
          {"home_arm", vec_json(r.home_arm)}};
}

robot::FormationModel model_from_json(const Json& j) {
  robot::FormationModel m = robot::default_two_robot_model();
  if (j.contains("formation")) {
    const auto& f = j.at("formation");
    const std::string kind = need(f, "kind").get<std::string>();
    if (kind == "bar") {
      m = robot::default_two_robot_model();
    } else if (kind == "ring") {
      const double count = num(need(f, "count"), "count");
      if (count < 1 || count != std::floor(count)) bad("ring count must be a positive integer");
      m = robot::ring_model(static_cast<std::size_t>(count), num(need(f, "grasp_radius"), "grasp_radius"),
                            num(need(f, "object_radius"), "object_radius"));
    } else {
      bad("formation kind must be 'bar' or 'ring'");
    }
  }
  if (j.contains("robots")) {
    const auto& rs = j.at("robots");
    if (!rs.is_array() || rs.empty()) bad("robots must be a non-empty list");
    m.robots.clear();
    for (const auto& r : rs) m.robots.push_back(robot_from_json(r));
  }
  if (j.contains("object")) {
    const auto& o = j.at("object");
    if (o.contains("footprint")) m.object_footprint = geom::Polygon(points(o.at("footprint")));
    m.z_max = num_or_inf(o, "z_max", m.z_max);
  }
  return m;
}

nmpc::PlannerConfig planner_from_json(const Json& j, std::size_t n_arm) {
  nmpc::PlannerConfig c;
  c.weights.control = nmpc::Weights::default_control_weights(n_arm);
  if (!j.is_object()) return c;
  c.T_h = num_or(j, "T_h", c.T_h);
  c.T_e = num_or(j, "T_e", c.T_e);
  c.T_c = num_or(j, "T_c", c.T_c);
  c.v_op = num_or(j, "v_op", c.v_op);
  c.d_safe = num_or(j, "d_safe", c.d_safe);
  c.d_safe_dyn = num_or(j, "d_safe_dyn", c.d_safe_dyn);
  c.sensing_radius = num_or(j, "sensing_radius", c.sensing_radius);
  c.goal_tolerance = num_or(j, "goal_tolerance", c.goal_tolerance);
  c.goal_yaw_tolerance = num_or(j, "goal_yaw_tolerance", c.goal_yaw_tolerance);
  c.kkt_tol = num_or(j, "kkt_tol", c.kkt_tol);
  c.constr_tol = num_or(j, "constr_tol", c.constr_tol);
  c.max_iter = static_cast<int>(num_or(j, "max_iter", c.max_iter));
  c.max_failures = static_cast<int>(num_or(j, "max_failures", c.max_failures));
  c.max_duration = num_or(j, "max_duration", c.max_duration);
  if (j.contains("parallel")) {
    if (!j.at("parallel").is_boolean()) bad("parallel must be true or false");
    c.parallel = j.at("parallel").get<bool>();
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.contains("control")) c.weights.control = vec(w.at("control"), "control weights");
    if (w.contains("tracking")) {
      const auto t = vec(w.at("tracking"), "tracking weights");
      if (t.size() != 2) bad("tracking weights are [w_x, w_y]");
      c.weights.tracking = t;
    }
    c.weights.terminal = num_or(w, "terminal", c.weights.terminal);
  }
  return c;
}

Json planner_to_json(const nmpc::PlannerConfig& c) {
  return {{"T_h", c.T_h},
          {"T_e", c.T_e},
          {"T_c", c.T_c},
          {"v_op", c.v_op},
          {"d_safe", c.d_safe},
          {"d_safe_dyn", c.d_safe_dyn},
          {"sensing_radius", c.sensing_radius},
          {"goal_tolerance", c.goal_tolerance},
          {"goal_yaw_tolerance", c.goal_yaw_tolerance},
          {"kkt_tol", c.kkt_tol},
          {"constr_tol", c.constr_tol},
          {"max_iter", c.max_iter},
          {"max_failures", c.max_failures},
          {"max_duration", c.max_duration},
          {"parallel", c.parallel},
          {"weights",
           {{"control", vec_json(c.weights.control)},
            {"tracking", vec_json(c.weights.tracking)},
            {"terminal", c.weights.terminal}}}};
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_num(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return num(j.at(key), key);
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

}  // namespace

sim::Scenario scenario_from_json(const Json& j) {
  try {
    if (!j.is_object()) bad("scenario must be a JSON object");
    sim::Scenario s;
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    const auto& env = need(j, "environment");
    s.environment.boundary = geom::Polygon(points(need(env, "boundary")));
    if (env.contains("obstacles")) {
      for (const auto& o : env.at("obstacles")) s.environment.obstacles.emplace_back(points(o));
    }
    s.environment.start = point(need(env, "start"));
    s.environment.goal = point(need(env, "goal"));
    s.start_psi = optional_num(env, "start_psi");
    s.goal_psi = optional_num(env, "goal_psi");
    s.model = model_from_json(j);
    if (j.contains("dynamic_obstacles")) {
      for (const auto& o : j.at("dynamic_obstacles")) {
        sim::DynamicObstacle d;
        d.p0 = point(need(o, "p0"));
        if (o.contains("v")) d.v = point(o.at("v"));
        d.r = num(need(o, "r"), "r");
        d.t_start = num_or(o, "t_start", d.t_start);
        d.t_end = num_or_inf(o, "t_end", d.t_end);
        s.obstacles.push_back(d);
      }
    }
    s.planner = planner_from_json(j.contains("planner") ? j.at("planner") : Json::object(),
                                  s.model.robots.front().n_arm());
    s.validate();
    return s;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("scenario: ") + e.what());
  }
}

Json scenario_to_json(const sim::Scenario& s) {
  Json obstacles = Json::array();
  for (const auto& o : s.environment.obstacles) obstacles.push_back(points_json(o.vertices()));
  Json robots = Json::array();
  for (const auto& r : s.model.robots) robots.push_back(robot_to_json(r));
  Json dyn = Json::array();
  for (const auto& o : s.obstacles) {
    dyn.push_back({{"p0", point_json(o.p0)},
                   {"v", point_json(o.v)},
                   {"r", o.r},
                   {"t_start", o.t_start},
                   {"t_end", finite_or_null(o.t_end)}});
  }
  return {{"name", s.name},
          {"environment",
           {{"boundary", points_json(s.environment.boundary.vertices())},
            {"obstacles", obstacles},
            {"start", point_json(s.environment.start)},
            {"goal", point_json(s.environment.goal)},
            {"start_psi", optional_json(s.start_psi)},
            {"goal_psi", optional_json(s.goal_psi)}}},
          {"robots", robots},
          {"object",
           {{"footprint", points_json(s.model.object_footprint.vertices())},
            {"z_max", finite_or_null(s.model.z_max)}}},
          {"dynamic_obstacles", dyn},
          {"planner", planner_to_json(s.planner)}};
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) bad("override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) bad("empty key in override '" + path + "'");
    if (node->is_null()) *node = Json::object();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        bad("'" + key + "' is not an index");
      }
      if (idx >= node->size()) bad("index " + key + " out of range in '" + path + "'");
      node = &(*node)[idx];
    } else if (node->is_object()) {
      node = &(*node)[key];
    } else {
      bad("'" + path + "' does not name an object field");
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kInvalidInput, path + " is not valid JSON");
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

sim::Scenario load_scenario(const std::string& path, std::span<const std::string> overrides) {
  Json j = read_json_file(path);
  for (const auto& o : overrides) apply_override(j, o);
  return scenario_from_json(j);
}

std::string scenario_hash(const sim::Scenario& s) { return sha256_hex(scenario_to_json(s).dump()); }

Json plan_to_json(const PlanArtifact& a) {
  Json corridors = Json::array();
  for (const auto& c : a.plan.corridors) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < c.A.rows(); ++i) rows.push_back({c.A(i, 0), c.A(i, 1), c.b[i]});
    corridors.push_back(rows);
  }
  return {{"scenario_sha256", a.scenario_sha256},
          {"r_f", a.r_f},
          {"path", points_json(a.plan.path)},
          {"corridors", corridors},
          {"control_points", points_json(a.plan.control_points)},
          {"samples", points_json(a.plan.samples)},
          {"sample_corridor", a.plan.sample_corridor}};
}

PlanArtifact plan_from_json(const Json& j) {
  try {
    PlanArtifact a;
    a.scenario_sha256 = need(j, "scenario_sha256").get<std::string>();
    a.r_f = num(need(j, "r_f"), "r_f");
    a.plan.path = points(need(j, "path"));
    for (const auto& c : need(j, "corridors")) {
      plan::ConvexRegion reg;
      reg.A.resize(static_cast<Eigen::Index>(c.size()), 2);
      reg.b.resize(static_cast<Eigen::Index>(c.size()));
      for (std::size_t i = 0; i < c.size(); ++i) {
        const auto row = vec(c[i], "corridor row");
        if (row.size() != 3) bad("corridor rows are [a_x, a_y, b]");
        const auto r = static_cast<Eigen::Index>(i);
        reg.A(r, 0) = row[0];
        reg.A(r, 1) = row[1];
        reg.b[r] = row[2];
      }
      a.plan.corridors.push_back(std::move(reg));
    }
    a.plan.control_points = points(need(j, "control_points"));
    a.plan.reference = plan::smooth_reference(a.plan.control_points);
    a.plan.samples = points(need(j, "samples"));
    a.plan.sample_corridor = need(j, "sample_corridor").get<std::vector<std::size_t>>();
    if (a.plan.sample_corridor.size() != a.plan.samples.size()) {
      bad("sample_corridor and samples differ in length");
    }
    for (auto c : a.plan.sample_corridor) {
      if (c >= a.plan.corridors.size()) bad("sample corridor index out of range");
    }
    return a;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("plan artifact: ") + e.what());
  }
}

void check_plan_matches(const PlanArtifact& a, const sim::Scenario& s) {
  if (a.scenario_sha256 != scenario_hash(s)) {
    throw Error(ErrorCode::kStalePlan, "plan artifact was made for a different scenario");
  }
}

std::vector<std::string> trajectory_columns(const robot::FormationModel& model) {
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 0; i < model.size(); ++i) {
    const std::string p = "r" + std::to_string(i) + "_";
    const std::size_t n = model.robots[i].n_arm();
    for (const char* c : {"x", "y", "phi"}) cols.push_back(p + c);
    for (std::size_t a = 0; a < n; ++a) cols.push_back(p + "q_a" + std::to_string(a + 1));
    for (const char* c : {"v", "omega"}) cols.push_back(p + c);
    for (std::size_t a = 0; a < n; ++a) cols.push_back(p + "qd_a" + std::to_string(a + 1));
  }
  for (const char* c : {"obj_x", "obj_y", "obj_z", "obj_psi"}) cols.emplace_back(c);
  return cols;
}

void write_trajectory_csv(std::ostream& os, const robot::FormationModel& model,
                          const std::vector<robot::FormationConfig>& states,
                          const std::vector<std::vector<robot::ControlInput>>& controls,
                          double T_c) {
  const auto cols = trajectory_columns(model);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.12g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < states.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", k * T_c);
    os << buf;
    const auto& s = states[k];
    for (std::size_t i = 0; i < model.size(); ++i) {
      const auto& r = s.robots[i];
      put(r.p.x());
      put(r.p.y());
      put(r.phi);
      for (Eigen::Index a = 0; a < r.q.size(); ++a) put(r.q[a]);
      const auto u = k < controls.size() ? controls[k][i]
                                         : robot::ControlInput::zero(model.robots[i].n_arm());
      put(u.v);
      put(u.omega);
      for (Eigen::Index a = 0; a < u.qdot.size(); ++a) put(u.qdot[a]);
    }
    put(s.p.x());
    put(s.p.y());
    put(s.p.z());
    put(s.psi);
    os << '\n';
  }
}

Json metrics_to_json(const sim::RunMetrics& m) {
  auto trace = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(finite_or_null(x));
    return a;
  };
  Json pose = Json::object();
  const char* names[] = {"x", "y", "z", "psi"};
  for (int c = 0; c < 4; ++c) {
    Json a = Json::array();
    for (const auto& p : m.object_pose) a.push_back(p[c]);
    pose[names[c]] = a;
  }
  Json ee = Json::array();
  for (const auto& row : m.ee_distance) ee.push_back(row);
  Json horizons = Json::array();
  for (const auto& h : m.horizons) {
    horizons.push_back({{"t", h.t},
                        {"lambda", h.lambda},
                        {"status", h.status},
                        {"objective", h.objective},
                        {"kkt_residual", h.kkt_residual},
                        {"max_violation", h.max_violation},
                        {"solve_time", h.solve_time},
                        {"iterations", h.iterations},
                        {"active_constraints", h.active_constraints},
                        {"obstacles", h.obstacles}});
  }
  const auto st = summarize_solve_times({m.solve_times});
  return {{"completed", m.completed},
          {"diagnostic", m.diagnostic},
          {"duration", m.duration},
          {"T_c", m.T_c},
          {"summary",
           {{"min_d_static", finite_or_null(m.min_d_static())},
            {"min_d_dynamic", finite_or_null(m.min_d_dynamic())},
            {"max_ee_deviation", m.max_ee_deviation()},
            {"max_grasp_residual", m.max_grasp_residual()},
            {"solve_time", {{"min", st.min}, {"mean", st.mean}, {"max", st.max}, {"stddev", st.stddev}}}}},
          {"t", m.t},
          {"d_static", trace(m.d_static)},
          {"d_dynamic", trace(m.d_dynamic)},
          {"static_clearance", trace(m.static_clearance)},
          {"tracking_error", m.tracking_error},
          {"object_pose", pose},
          {"ee_distance", ee},
          {"grasp_residual", m.grasp_residual},
          {"solve_times", m.solve_times},
          {"horizons", horizons}};
}

void write_solver_log(std::ostream& os, std::span<const nmpc::HorizonRecord> horizons) {
  for (const auto& h : horizons) {
    const Json j{{"t", h.t},
                 {"lambda", h.lambda},
                 {"status", h.status},
                 {"objective", h.objective},
                 {"kkt_residual", h.kkt_residual},
                 {"max_violation", h.max_violation},
                 {"solve_time", h.solve_time},
                 {"iterations", h.iterations},
                 {"active_constraints", h.active_constraints},
                 {"obstacles", h.obstacles}};
    os << j.dump() << '\n';
  }
}

SolveTimeSummary summarize_solve_times(const std::vector<std::vector<double>>& runs) {
  SolveTimeSummary s;
  s.runs = runs.size();
  double sum = 0.0;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  for (const auto& r : runs) {
    for (double t : r) {
      ++s.horizons;
      sum += t;
      s.min = std::min(s.min, t);
      s.max = std::max(s.max, t);
    }
  }
  if (s.horizons == 0) return SolveTimeSummary{s.runs, 0, 0.0, 0.0, 0.0, 0.0};
  s.mean = sum / static_cast<double>(s.horizons);
  double sq = 0.0;
  for (const auto& r : runs) {
    for (double t : r) sq += (t - s.mean) * (t - s.mean);
  }
  s.stddev = std::sqrt(sq / static_cast<double>(s.horizons));
  return s;
}

std::string format_summary(const SolveTimeSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "runs %zu  horizons %zu\n%-10s %10s %10s %10s %10s\n%-10s %10.3f %10.3f %10.3f %10.3f\n",
                s.runs, s.horizons, "", "min", "mean", "max", "stddev", "solve [s]", s.min, s.mean,
                s.max, s.stddev);
  return buf;
}

}  // namespace mmr::io
