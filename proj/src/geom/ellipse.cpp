#include <cmath>

#include "mmr/geom2d.hpp"

namespace mmr::geom {
namespace {

// Relative tolerance on ||xbar*|| = 1 for tangent construction.
constexpr double kBoundaryTol = 1e-6;

}  // namespace

Ellipse Ellipse::from_axes(const Eigen::Matrix2d& R, double a, double b,
                           const Point2& d) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "ellipse semi-axes must be positive");
  }
  Ellipse e;
  e.C = R.transpose() * Eigen::Vector2d(a, b).asDiagonal() * R;
  e.C = 0.5 * (e.C + e.C.transpose());
  e.d = d;
  return e;
}

double Ellipse::level(const Point2& x) const {
  return C.ldlt().solve(x - d).norm();
}

Point2 Ellipse::boundary_point(double t) const {
  return C * Eigen::Vector2d(std::cos(t), std::sin(t)) + d;
}

std::pair<double, double> Ellipse::semi_axes() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(C);
  const auto ev = es.eigenvalues();
  return {std::max(ev(0), ev(1)), std::min(ev(0), ev(1))};
}

HalfPlane ellipse_tangent_halfplane(const Ellipse& e, const Point2& x_star) {
  const Eigen::Matrix2d Cinv = e.C.inverse();
  const Eigen::Vector2d xbar = Cinv * (x_star - e.d);
  if (std::abs(xbar.norm() - 1.0) > kBoundaryTol) {
    throw Error(ErrorCode::kInvalidInput,
                "tangent point is not on the ellipse boundary");
  }
  HalfPlane h;
  h.a = 2.0 * Cinv.transpose() * xbar;
  h.b = h.a.dot(x_star);
  return h;
}

double minor_axis_for(const Eigen::Matrix2d& R, double a, const Point2& d,
                      const Point2& x_star) {
  const Eigen::Vector2d u = R * (x_star - d);
  const double ratio = u.x() / a;
  if (std::abs(u.y()) <= kEps || std::abs(ratio) >= 1.0) return -1.0;
  return std::abs(u.y()) / std::sqrt(1.0 - ratio * ratio);
}

Ellipse fit_ellipse_minor_axis(const Eigen::Matrix2d& R, double a,
                               const Point2& d, const Point2& x_star) {
  if (!(a > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "semi-major axis must be positive");
  }
  const double b = minor_axis_for(R, a, d, x_star);
  if (b <= 0.0) {
    throw Error(ErrorCode::kDegenerateFit,
                "point lies on the major-axis line or beyond the major axis");
  }
  return Ellipse::from_axes(R, a, b, d);
}

Ellipse dilate_ellipse_to_point(const Ellipse& e0, const Point2& x_star) {
  const double s = e0.level(x_star);
  if (s < 1.0 - kBoundaryTol) {
    throw Error(ErrorCode::kInvalidInput, "point lies inside the ellipse");
  }
  Ellipse e = e0;
  e.C = s * e0.C;
  return e;
}

}  // namespace mmr::geom
