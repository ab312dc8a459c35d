#pragma once

// Kinematics of a differential-drive mobile manipulator and of a formation of
// them rigidly grasping one object.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "mmr/error.hpp"
#include "mmr/geom2d.hpp"
#include "mmr/jet.hpp"

namespace mmr::robot {

using geom::Point2;

struct DHRow {
  double d = 0.0;
  double a = 0.0;
  double alpha = 0.0;
  double theta_offset = 0.0;
};

/// Five revolute joints plus a fixed gripper row.
std::vector<DHRow> default_dh_table();

struct Limits {
  Eigen::VectorXd q_lo, q_hi;  // arm joints
  Eigen::VectorXd u_lo, u_hi;  // [v, omega, arm rates...]

  void validate(std::size_t n_arm) const;
};

Limits default_limits(std::size_t n_arm);

struct MMRState {
  Point2 p = Point2::Zero();
  double phi = 0.0;
  Eigen::VectorXd q;

  /// [x, y, phi, q...]
  Eigen::VectorXd to_vector() const;
  static MMRState from_vector(const Eigen::Ref<const Eigen::VectorXd>& x);
};

struct ControlInput {
  double v = 0.0;
  double omega = 0.0;
  Eigen::VectorXd qdot;

  Eigen::VectorXd to_vector() const;
  static ControlInput from_vector(const Eigen::Ref<const Eigen::VectorXd>& u);
  static ControlInput zero(std::size_t n_arm);
};

struct RobotSpec {
  std::vector<DHRow> dh = default_dh_table();
  Limits limits = default_limits(5);
  geom::Polygon footprint = geom::make_rectangle(-0.15, -0.15, 0.15, 0.15);
  Eigen::Vector3d grasp = Eigen::Vector3d::Zero();  // object frame
  Eigen::VectorXd home_arm = Eigen::VectorXd::Zero(5);

  std::size_t n_arm() const { return dh.size() - 1; }
  std::size_t n_state() const { return 3 + n_arm(); }
  std::size_t n_control() const { return 2 + n_arm(); }
  double base_radius() const;
  /// Upper bound on the planar distance from the base centre to the EE.
  double max_reach() const;
};

/// Fixed geometry of a transport task.
struct FormationModel {
  std::vector<RobotSpec> robots;
  geom::Polygon object_footprint = geom::make_rectangle(-0.25, -0.1, 0.25, 0.1);
  double z_max = std::numeric_limits<double>::infinity();

  std::size_t size() const { return robots.size(); }
  double object_radius() const;
  /// Radius of a disc about the object CoM enclosing every body.
  double formation_radius() const;
  void validate() const;
};

/// Two robots holding the default bar at its ends.
FormationModel default_two_robot_model();
/// n robots with grasps equispaced on a circle of the given radius.
FormationModel ring_model(std::size_t n, double grasp_radius,
                          double object_radius);

struct FormationConfig {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  double psi = 0.0;
  std::vector<MMRState> robots;
};

struct Circle {
  Point2 c = Point2::Zero();
  double r = 0.0;
};

struct BoundingCircles {
  std::vector<Circle> base;
  std::vector<Circle> arm;
  Circle object;
};

/// Vertical plane through the object CoM: points v with H.dot(v) <= h lie on
/// the counter-clockwise side of the ray at its angle.
struct WedgePlane {
  Eigen::Vector2d H = Eigen::Vector2d::Zero();
  double h = 0.0;
};

double wrap_angle(double a);

Eigen::VectorXd base_derivative(const MMRState& s, const ControlInput& u);
MMRState step_rk4(const MMRState& s, const ControlInput& u, double T_c);

// ---------------------------------------------------------------- templated

template <class T>
using Vec3 = std::array<T, 3>;
template <class T>
using Mat3 = std::array<Vec3<T>, 3>;

/// RK4 step of the unicycle base; returns (x, y, phi) after T_c.
template <class T>
Vec3<T> rk4_base(const T& x, const T& y, const T& phi, const T& v,
                 const T& omega, double T_c) {
  using std::cos;
  using std::sin;
  // The heading evolves linearly, so each stage only needs phi at its time.
  const T p1 = phi;
  const T p2 = phi + 0.5 * T_c * omega;
  const T p4 = phi + T_c * omega;
  const T c = cos(p1) + 4.0 * cos(p2) + cos(p4);
  const T s = sin(p1) + 4.0 * sin(p2) + sin(p4);
  const double w = T_c / 6.0;
  return {x + w * v * c, y + w * v * s, p4};
}

template <class T>
struct ArmChain {
  std::vector<Vec3<T>> origins;  // base root, then each frame origin
  Mat3<T> R;                     // EE rotation in world
  const Vec3<T>& ee() const { return origins.back(); }
};

template <class T>
ArmChain<T> arm_chain(const T& x, const T& y, const T& phi, std::span<const T> q,
                      std::span<const DHRow> dh) {
  using std::cos;
  using std::sin;
  if (q.size() + 1 != dh.size()) {
    throw Error(ErrorCode::kInvalidInput, "arm size does not match DH table");
  }
  ArmChain<T> out;
  const T c = cos(phi);
  const T s = sin(phi);
  const T zero(0.0);
  const T one(1.0);
  Mat3<T> R{{{c, -s, zero}, {s, c, zero}, {zero, zero, one}}};
  Vec3<T> p{x, y, zero};
  out.origins.push_back(p);
  for (std::size_t i = 0; i < dh.size(); ++i) {
    const T th = (i < q.size() ? q[i] : zero) + dh[i].theta_offset;
    const T ct = cos(th);
    const T st = sin(th);
    const double ca = std::cos(dh[i].alpha);
    const double sa = std::sin(dh[i].alpha);
    // Link transform RotZ(th) TransZ(d) TransX(a) RotX(alpha).
    const Mat3<T> L{{{ct, -ca * st, sa * st}, {st, ca * ct, -sa * ct},
                     {zero, T(sa), T(ca)}}};
    const Vec3<T> t{dh[i].a * ct, dh[i].a * st, T(dh[i].d)};
    Vec3<T> np = p;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) np[r] = np[r] + R[r][k] * t[k];
    }
    Mat3<T> nR;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) {
        T acc = R[r][0] * L[0][k];
        acc = acc + R[r][1] * L[1][k];
        acc = acc + R[r][2] * L[2][k];
        nR[r][k] = acc;
      }
    }
    p = np;
    R = nR;
    out.origins.push_back(p);
  }
  out.R = R;
  return out;
}

/// Grasp residual [dx, dy, dz, dyaw] from the base pose, arm, object pose.
template <class T>
std::array<T, 4> grasp_residual_t(const T& x, const T& y, const T& phi,
                                  std::span<const T> q, const T& ox, const T& oy,
                                  const T& oz, const T& psi,
                                  const Eigen::Vector3d& grasp,
                                  std::span<const DHRow> dh) {
  using std::atan2;
  using std::cos;
  using std::sin;
  const auto chain = arm_chain<T>(x, y, phi, q, dh);
  const auto& e = chain.ee();
  const T c = cos(psi);
  const T s = sin(psi);
  const T gx = ox + c * grasp.x() - s * grasp.y();
  const T gy = oy + s * grasp.x() + c * grasp.y();
  const T gz = oz + T(grasp.z());
  // EE x-axis expressed in the object frame.
  const T ax = c * chain.R[0][0] + s * chain.R[1][0];
  const T ay = c * chain.R[1][0] - s * chain.R[0][0];
  return {e[0] - gx, e[1] - gy, e[2] - gz, atan2(ay, ax)};
}

/// Arm circle (centre x, centre y, radius) from the base pose and arm.
template <class T>
Vec3<T> arm_circle_t(const T& x, const T& y, const T& phi, std::span<const T> q,
                     std::span<const DHRow> dh) {
  using std::sqrt;
  constexpr double kSmooth = 1e-8;
  const auto chain = arm_chain<T>(x, y, phi, q, dh);
  T len(0.0);
  for (std::size_t i = 0; i + 1 < chain.origins.size(); ++i) {
    const T dx = chain.origins[i + 1][0] - chain.origins[i][0];
    const T dy = chain.origins[i + 1][1] - chain.origins[i][1];
    len = len + sqrt(dx * dx + dy * dy + kSmooth);
  }
  const auto& e = chain.ee();
  return {0.5 * (x + e[0]), 0.5 * (y + e[1]), 0.5 * len};
}

// ------------------------------------------------------------ double wrappers

struct EEPose {
  Eigen::Vector3d p;
  double yaw;
};

EEPose forward_kinematics(const MMRState& s, std::span<const DHRow> dh);
/// Planar positions of the base root and every DH frame origin.
std::vector<Point2> projected_joints(const MMRState& s, std::span<const DHRow> dh);

Eigen::Vector4d grasp_residual(const FormationModel& model,
                               const FormationConfig& cfg, std::size_t i);

/// Base pose for robot i that puts its EE on the grasp point with the given
/// arm configuration. Returns the state and the object height the arm implies.
std::pair<MMRState, double> place_robot(const FormationModel& model,
                                        std::size_t i, const Point2& object_xy,
                                        double psi, const Eigen::VectorXd& arm);

/// Formation with every robot at its home arm configuration.
FormationConfig place_formation(const FormationModel& model,
                                const Point2& object_xy, double psi);

BoundingCircles bounding_circles(const FormationModel& model,
                                 const FormationConfig& cfg);

/// Plane i bounds robot i's wedge on one side and robot i-1's on the other.
/// Robot i satisfies H_i v <= h_i and H_{i+1} v >= h_{i+1}.
std::vector<WedgePlane> wedge_planes(const FormationModel& model,
                                     const FormationConfig& cfg);

/// Index of the wedge containing a ground point (ties broken to the lower).
std::size_t wedge_of(const FormationModel& model, const FormationConfig& cfg,
                     const Point2& v);

}  // namespace mmr::robot
