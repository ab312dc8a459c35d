#include "mmr/robot_model.hpp"

#include <algorithm>
#include <numbers>

namespace mmr::robot {

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> grasp_angles(const FormationModel& model) {
  std::vector<double> out;
  for (const auto& r : model.robots) out.push_back(std::atan2(r.grasp.y(), r.grasp.x()));
  return out;
}

// Bisector angles (object frame) of the wedge boundaries; plane i lies
// between grasp i-1 and grasp i.
std::vector<double> plane_angles(const FormationModel& model) {
  const auto g = grasp_angles(model);
  const std::size_t n = g.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double gap = g[i] - g[(i + n - 1) % n];
    while (gap <= 0.0) gap += 2.0 * kPi;
    out[i] = g[i] - 0.5 * gap;
  }
  return out;
}
}  // namespace

std::vector<DHRow> default_dh_table() {
  return {{0.070, 0.0, 0.0, 0.0},   {0.0, 0.0, kPi / 2, 0.0},
          {0.100, 0.0, -kPi, 0.0},  {0.125, 0.0, kPi, 0.0},
          {0.0, 0.120, -kPi / 2, 0.0}, {0.0, 0.0, 0.0, 0.0}};
}

void Limits::validate(std::size_t n_arm) const {
  if (static_cast<std::size_t>(q_lo.size()) != n_arm ||
      static_cast<std::size_t>(q_hi.size()) != n_arm ||
      static_cast<std::size_t>(u_lo.size()) != n_arm + 2 ||
      static_cast<std::size_t>(u_hi.size()) != n_arm + 2) {
    throw Error(ErrorCode::kInvalidInput, "limit vector sizes do not match arm");
  }
  if ((q_lo.array() > q_hi.array()).any() || (u_lo.array() > u_hi.array()).any()) {
    throw Error(ErrorCode::kInvalidInput, "lower limit above upper limit");
  }
}

Limits default_limits(std::size_t n_arm) {
  Limits l;
  l.q_hi = Eigen::VectorXd::Constant(n_arm, 0.5);
  for (std::size_t j = 0; j < std::min<std::size_t>(2, n_arm); ++j) l.q_hi[j] = kPi;
  l.q_lo = -l.q_hi;
  l.u_hi = Eigen::VectorXd::Constant(n_arm + 2, 0.6);
  l.u_hi[0] = 0.4;
  l.u_hi[1] = 0.5;
  l.u_lo = -l.u_hi;
  return l;
}

Eigen::VectorXd MMRState::to_vector() const {
  Eigen::VectorXd x(3 + q.size());
  x << p.x(), p.y(), phi, q;
  return x;
}

MMRState MMRState::from_vector(const Eigen::Ref<const Eigen::VectorXd>& x) {
  MMRState s;
  s.p = {x[0], x[1]};
  s.phi = x[2];
  s.q = x.tail(x.size() - 3);
  return s;
}

Eigen::VectorXd ControlInput::to_vector() const {
  Eigen::VectorXd u(2 + qdot.size());
  u << v, omega, qdot;
  return u;
}

ControlInput ControlInput::from_vector(const Eigen::Ref<const Eigen::VectorXd>& u) {
  ControlInput c;
  c.v = u[0];
  c.omega = u[1];
  c.qdot = u.tail(u.size() - 2);
  return c;
}

ControlInput ControlInput::zero(std::size_t n_arm) {
  ControlInput c;
  c.qdot = Eigen::VectorXd::Zero(n_arm);
  return c;
}

double RobotSpec::base_radius() const {
  double r = 0.0;
  for (const auto& v : footprint.vertices()) r = std::max(r, v.norm());
  return r;
}

double RobotSpec::max_reach() const {
  // Offsets along z only move the EE sideways once some earlier twist has
  // tilted the joint axis off vertical.
  double reach = 0.0;
  bool tilted = false;
  for (const auto& row : dh) {
    reach += std::abs(row.a);
    if (tilted) reach += std::abs(row.d);
    if (std::abs(std::sin(row.alpha)) > 1e-12) tilted = true;
  }
  return reach;
}

double FormationModel::object_radius() const {
  double r = 0.0;
  for (const auto& v : object_footprint.vertices()) r = std::max(r, v.norm());
  return r;
}

double FormationModel::formation_radius() const {
  double body = 0.0;
  for (const auto& r : robots) body = std::max(body, r.base_radius() + r.max_reach());
  return object_radius() + body;
}

void FormationModel::validate() const {
  if (robots.size() < 2) {
    throw Error(ErrorCode::kInvalidInput, "a formation needs at least two robots");
  }
  for (const auto& r : robots) {
    if (r.dh.size() < 2) throw Error(ErrorCode::kInvalidInput, "DH table too short");
    r.limits.validate(r.n_arm());
    if (static_cast<std::size_t>(r.home_arm.size()) != r.n_arm()) {
      throw Error(ErrorCode::kInvalidInput, "home arm size does not match DH table");
    }
  }
  // Grasps must run counter-clockwise around the object, equally spaced.
  const auto g = grasp_angles(*this);
  const double expected = 2.0 * kPi / static_cast<double>(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double gap = g[(i + 1) % g.size()] - g[i];
    while (gap <= 0.0) gap += 2.0 * kPi;
    if (std::abs(gap - expected) > 1e-6) {
      throw Error(ErrorCode::kInvalidInput,
                  "grasp points must be equispaced counter-clockwise");
    }
  }
}

FormationModel default_two_robot_model() {
  FormationModel m;
  RobotSpec front;
  front.grasp = {0.25, 0.0, 0.0};
  RobotSpec rear;
  rear.grasp = {-0.25, 0.0, 0.0};
  m.robots = {front, rear};
  return m;
}

FormationModel ring_model(std::size_t n, double grasp_radius, double object_radius) {
  FormationModel m;
  m.object_footprint = geom::make_regular_polygon({0, 0}, object_radius, 16);
  for (std::size_t i = 0; i < n; ++i) {
    RobotSpec r;
    const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    r.grasp = {grasp_radius * std::cos(a), grasp_radius * std::sin(a), 0.0};
    m.robots.push_back(r);
  }
  return m;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Eigen::VectorXd base_derivative(const MMRState& s, const ControlInput& u) {
  Eigen::VectorXd d(3 + u.qdot.size());
  d << u.v * std::cos(s.phi), u.v * std::sin(s.phi), u.omega, u.qdot;
  return d;
}

MMRState step_rk4(const MMRState& s, const ControlInput& u, double T_c) {
  if (!(T_c > 0.0)) throw Error(ErrorCode::kInvalidInput, "T_c must be positive");
  const auto b = rk4_base<double>(s.p.x(), s.p.y(), s.phi, u.v, u.omega, T_c);
  MMRState out;
  out.p = {b[0], b[1]};
  out.phi = b[2];
  out.q = s.q + T_c * u.qdot;
  return out;
}

EEPose forward_kinematics(const MMRState& s, std::span<const DHRow> dh) {
  std::vector<double> q(s.q.data(), s.q.data() + s.q.size());
  const auto chain = arm_chain<double>(s.p.x(), s.p.y(), s.phi, q, dh);
  const auto& e = chain.ee();
  return {{e[0], e[1], e[2]}, std::atan2(chain.R[1][0], chain.R[0][0])};
}

std::vector<Point2> projected_joints(const MMRState& s, std::span<const DHRow> dh) {
  std::vector<double> q(s.q.data(), s.q.data() + s.q.size());
  const auto chain = arm_chain<double>(s.p.x(), s.p.y(), s.phi, q, dh);
  std::vector<Point2> out;
  for (const auto& o : chain.origins) out.emplace_back(o[0], o[1]);
  return out;
}

Eigen::Vector4d grasp_residual(const FormationModel& model,
                               const FormationConfig& cfg, std::size_t i) {
  const auto& s = cfg.robots.at(i);
  std::vector<double> q(s.q.data(), s.q.data() + s.q.size());
  const auto r = grasp_residual_t<double>(s.p.x(), s.p.y(), s.phi, q, cfg.p.x(),
                                          cfg.p.y(), cfg.p.z(), cfg.psi,
                                          model.robots[i].grasp, model.robots[i].dh);
  return {r[0], r[1], r[2], r[3]};
}

std::pair<MMRState, double> place_robot(const FormationModel& model, std::size_t i,
                                        const Point2& object_xy, double psi,
                                        const Eigen::VectorXd& arm) {
  const auto& spec = model.robots.at(i);
  MMRState local;
  local.q = arm;
  const auto ee = forward_kinematics(local, spec.dh);
  MMRState s;
  s.q = arm;
  s.phi = wrap_angle(psi - ee.yaw);
  const Eigen::Rotation2Dd Rb(s.phi);
  const Eigen::Rotation2Dd Ro(psi);
  const Point2 grasp_xy = object_xy + Ro * spec.grasp.head<2>();
  s.p = grasp_xy - Rb * ee.p.head<2>();
  return {s, ee.p.z() - spec.grasp.z()};
}

FormationConfig place_formation(const FormationModel& model,
                                const Point2& object_xy, double psi) {
  FormationConfig cfg;
  cfg.psi = psi;
  double z = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto [s, zi] = place_robot(model, i, object_xy, psi, model.robots[i].home_arm);
    if (i == 0) {
      z = zi;
    } else if (std::abs(zi - z) > 1e-9) {
      throw Error(ErrorCode::kInvalidInput,
                  "home arm configurations disagree on the object height");
    }
    cfg.robots.push_back(std::move(s));
  }
  cfg.p = {object_xy.x(), object_xy.y(), z};
  return cfg;
}

BoundingCircles bounding_circles(const FormationModel& model,
                                 const FormationConfig& cfg) {
  BoundingCircles out;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& s = cfg.robots.at(i);
    const auto& spec = model.robots[i];
    out.base.push_back({s.p, spec.base_radius()});
    std::vector<double> q(s.q.data(), s.q.data() + s.q.size());
    const auto a = arm_circle_t<double>(s.p.x(), s.p.y(), s.phi, q, spec.dh);
    out.arm.push_back({{a[0], a[1]}, a[2]});
  }
  out.object = {cfg.p.head<2>(), model.object_radius()};
  return out;
}

std::vector<WedgePlane> wedge_planes(const FormationModel& model,
                                     const FormationConfig& cfg) {
  if (model.size() < 2) {
    throw Error(ErrorCode::kInvalidInput, "wedges need at least two robots");
  }
  std::vector<WedgePlane> out;
  const Point2 c = cfg.p.head<2>();
  for (double b : plane_angles(model)) {
    const double beta = b + cfg.psi;
    const Eigen::Vector2d left(-std::sin(beta), std::cos(beta));
    out.push_back({-left, -left.dot(c)});
  }
  return out;
}

std::size_t wedge_of(const FormationModel& model, const FormationConfig& cfg,
                     const Point2& v) {
  const auto planes = wedge_planes(model, cfg);
  const std::size_t n = planes.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& lo = planes[i];
    const auto& hi = planes[(i + 1) % n];
    if (lo.H.dot(v) <= lo.h && hi.H.dot(v) >= hi.h) return i;
  }
  return n;  // only reachable through rounding on a boundary
}

}  // namespace mmr::robot
