#include <algorithm>
#include <array>
#include <cmath>

#include "mmr/global_planner.hpp"

namespace mmr::plan {
namespace {

// 16-point Gauss-Legendre nodes and weights on [-1, 1] (positive half).
constexpr std::array<double, 8> kGlNodes{
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
constexpr std::array<double, 8> kGlWeights{
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};

constexpr double kMinPieceLength = 1e-12;

}  // namespace

double ReferenceCurve::Piece::length(double t) const {
  const double half = 0.5 * t;
  double s = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
    s += kGlWeights[i] * (deriv(half * (1.0 + kGlNodes[i])).norm() +
                          deriv(half * (1.0 - kGlNodes[i])).norm());
  }
  return half * s;
}

ReferenceCurve::ReferenceCurve(std::vector<Point2> control_points)
    : control_(std::move(control_points)) {
  if (control_.size() < 2) {
    throw Error(ErrorCode::kInvalidInput, "need at least two control points");
  }
  const std::size_t m = control_.size() - 1;
  auto push = [&](const Piece& p) {
    if (p.length() > kMinPieceLength) pieces_.push_back(p);
  };
  if (m == 1) {
    push({control_[0], 0.5 * (control_[0] + control_[1]), control_[1]});
  } else {
    for (std::size_t j = 1; j < m; ++j) {
      const Point2 p0 = j == 1 ? control_[0] : Point2(0.5 * (control_[j - 1] + control_[j]));
      const Point2 p2 = j + 1 == m ? control_[m] : Point2(0.5 * (control_[j] + control_[j + 1]));
      push({p0, control_[j], p2});
    }
  }
  cumulative_.reserve(pieces_.size());
  for (const auto& p : pieces_) {
    cumulative_.push_back(total_);
    total_ += p.length();
  }
}

Point2 ReferenceCurve::at_length(double s) const {
  if (pieces_.empty()) return control_.front();
  if (s <= 0.0) return pieces_.front().p0;
  if (s >= total_) return pieces_.back().p2;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  const Piece& piece = pieces_[k];
  const double target = s - cumulative_[k];
  const double piece_len = (k + 1 < cumulative_.size() ? cumulative_[k + 1] : total_) -
                           cumulative_[k];

  // Safeguarded Newton on length(t) = target.
  double lo = 0.0, hi = 1.0, t = target / piece_len;
  for (int iter = 0; iter < 60; ++iter) {
    const double f = piece.length(t) - target;
    if (std::abs(f) <= 1e-13) break;
    if (f > 0) hi = t;
    else lo = t;
    const double speed = piece.deriv(t).norm();
    double next = speed > 1e-12 ? t - f / speed : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    t = next;
  }
  return piece.eval(t);
}

Point2 ReferenceCurve::at(double c) const {
  return at_length(std::clamp(c, 0.0, 1.0) * total_);
}

ReferenceCurve smooth_reference(std::vector<Point2> control_points) {
  return ReferenceCurve(std::move(control_points));
}

std::vector<Point2> discretize_reference(const ReferenceCurve& curve,
                                         double v_op, double T_c) {
  if (!(v_op > 0.0) || !(T_c > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "v_op and T_c must be positive");
  }
  const double step = v_op * T_c;
  const double len = curve.length();
  const auto n = static_cast<std::size_t>(std::floor(len / step + 1e-9));
  std::vector<Point2> out;
  out.reserve(n + 2);
  for (std::size_t k = 0; k <= n; ++k) {
    out.push_back(curve.at_length(std::min(len, static_cast<double>(k) * step)));
  }
  if (len - static_cast<double>(n) * step > 1e-9 || out.size() < 2) {
    out.push_back(curve.at(1.0));
  }
  return out;
}

}  // namespace mmr::plan
