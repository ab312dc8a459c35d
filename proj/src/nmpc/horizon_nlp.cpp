#include <algorithm>
#include <cmath>

#include "mmr/nmpc_planner.hpp"

namespace mmr::nmpc {

namespace {

constexpr std::size_t kStepVars = 12;  // base 3, arm up to 5, object 4
constexpr std::size_t kArmSlot = 3;
constexpr std::size_t kObjSlot = 8;
constexpr std::size_t kDynVars = 5;    // x, y, phi, v, omega

using StepJet = Jet2<kStepVars>;
using DynJet = Jet2<kDynVars>;

// Wedge plane angles in the object frame, per robot: the plane it must stay on
// the left of, and the one it must stay on the right of.
std::vector<std::pair<double, double>> wedge_angles(const FormationModel& model) {
  if (model.size() < 2) return {{0.0, 0.0}};
  FormationConfig ref;
  const auto planes = robot::wedge_planes(model, ref);
  const std::size_t n = planes.size();
  std::vector<std::pair<double, double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& lo = planes[i].H;
    const auto& hi = planes[(i + 1) % n].H;
    out[i] = {std::atan2(lo.x(), -lo.y()), std::atan2(hi.x(), -hi.y())};
  }
  return out;
}

}  // namespace

struct HorizonNlp::Impl {
  enum class Type { kDynamics, kRobotStep, kObjectStep };
  struct Block {
    Type type;
    int k;
    int robot;
    int eq_row;    // first equality row
    int ineq_row;  // first inequality row, in stacked numbering
  };
  struct Output {
    nlp::Triplets jac;
    nlp::Triplets hess;
  };

  std::vector<int> state_off;    // per robot within a step, object last
  std::vector<int> control_off;  // per robot within a step
  int step_size = 0;
  int control_size = 0;
  int wedge_rows = 0;            // per center
  std::vector<std::pair<double, double>> wedges;
  std::vector<Block> blocks;
  mutable std::vector<Output> outputs;
};

Eigen::VectorXd Weights::default_control_weights(std::size_t n_arm) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_arm + 2), 5.0);
  w[0] = 0.05;
  w[1] = 0.05;
  if (n_arm >= 4) w[5] = 0.5;
  return w;
}

double stage_cost(const FormationConfig& state, const std::vector<ControlInput>& u,
                  const Point2& ref, const Weights& w) {
  double cost = 0.0;
  for (const auto& ui : u) {
    const Eigen::VectorXd v = ui.to_vector();
    if (v.size() != w.control.size()) {
      throw Error(ErrorCode::kInvalidInput, "control weight size mismatch");
    }
    cost += (w.control.array() * v.array().square()).sum();
  }
  const Eigen::Vector2d e = state.p.head<2>() - ref;
  return cost + (w.tracking.array() * e.array().square()).sum();
}

double terminal_cost(const FormationConfig& state, const Point2& ref, double W_N) {
  return W_N * (state.p.head<2>() - ref).squaredNorm();
}

HorizonNlp::HorizonNlp(const FormationModel& model, const HorizonProblem& problem,
                       bool parallel, double z_max)
    : model_(model), problem_(problem), parallel_(parallel), impl_(new Impl) {
  const int n = static_cast<int>(model.size());
  const int N = problem.N;
  if (N < 1) throw Error(ErrorCode::kInvalidInput, "horizon needs at least one step");
  if (static_cast<int>(problem.reference.size()) != N + 1 ||
      static_cast<int>(problem.corridors.size()) != N + 1) {
    throw Error(ErrorCode::kInvalidInput, "reference and corridors need N + 1 entries");
  }
  if (static_cast<int>(problem.initial.robots.size()) != n) {
    throw Error(ErrorCode::kInvalidInput, "initial state robot count mismatch");
  }
  auto& I = *impl_;
  for (int i = 0; i < n; ++i) {
    const auto& spec = model.robots[i];
    if (spec.n_arm() > kObjSlot - kArmSlot) {
      throw Error(ErrorCode::kInvalidInput, "arms with more than five joints are not supported");
    }
    if (problem.weights.control.size() != static_cast<Eigen::Index>(spec.n_control())) {
      throw Error(ErrorCode::kInvalidInput, "control weight size mismatch");
    }
    I.state_off.push_back(I.step_size);
    I.step_size += static_cast<int>(spec.n_state());
    I.control_off.push_back(I.control_size);
    I.control_size += static_cast<int>(spec.n_control());
  }
  I.state_off.push_back(I.step_size);
  I.step_size += 4;
  I.wedges = wedge_angles(model);
  I.wedge_rows = n < 2 ? 0 : (n == 2 ? 1 : 2);

  n_vars_ = N * I.step_size + N * I.control_size;
  lo_ = Eigen::VectorXd::Constant(n_vars_, -INFINITY);
  hi_ = Eigen::VectorXd::Constant(n_vars_, INFINITY);
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < n; ++i) {
      const auto& lim = model.robots[i].limits;
      const int na = static_cast<int>(model.robots[i].n_arm());
      const int qs = state_index(k + 1, i) + 3;
      lo_.segment(qs, na) = lim.q_lo;
      hi_.segment(qs, na) = lim.q_hi;
      const int us = control_index(k, i);
      lo_.segment(us, na + 2) = lim.u_lo;
      hi_.segment(us, na + 2) = lim.u_hi;
    }
    if (std::isfinite(z_max)) {
      lo_[object_index(k + 1) + 2] = 0.0;
      hi_[object_index(k + 1) + 2] = z_max;
    }
  }

  // Equality rows: dynamics, then grasps.
  int row = 0;
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < n; ++i) {
      I.blocks.push_back({Impl::Type::kDynamics, k, i, row, -1});
      const int ns = static_cast<int>(model.robots[i].n_state());
      for (int r = 0; r < ns; ++r) rows_.push_back({RowKind::kDynamics, k, i, -1});
      row += ns;
    }
  }
  for (int k = 1; k <= N; ++k) {
    for (int i = 0; i < n; ++i) {
      I.blocks.push_back({Impl::Type::kRobotStep, k, i, row, -1});
      for (int r = 0; r < 4; ++r) rows_.push_back({RowKind::kGrasp, k, i, -1});
      row += 4;
    }
  }
  n_eq_ = row;

  // Inequality rows, in the order the blocks emit them.
  const int n_obs = static_cast<int>(problem.obstacles.size());
  auto rs = static_cast<std::size_t>(n * N);  // first robot-step block
  for (int k = 1; k <= N; ++k) {
    const int nc = static_cast<int>(problem.corridors[k].rows());
    for (int i = 0; i < n; ++i) {
      I.blocks[rs++].ineq_row = row;
      for (int body = 0; body < 2; ++body) {
        for (int r = 0; r < nc; ++r) rows_.push_back({RowKind::kCorridor, k, i, body});
      }
      for (int body = 0; body < 2; ++body) {
        for (int r = 0; r < n_obs; ++r) rows_.push_back({RowKind::kSeparation, k, i, body});
      }
      for (int body = 0; body < 2; ++body) {
        for (int r = 0; r < I.wedge_rows; ++r) rows_.push_back({RowKind::kWedge, k, i, body});
      }
      row += 2 * nc + 2 * n_obs + 2 * I.wedge_rows;
    }
    I.blocks.push_back({Impl::Type::kObjectStep, k, -1, -1, row});
    for (int r = 0; r < nc; ++r) rows_.push_back({RowKind::kCorridor, k, -1, 2});
    for (int r = 0; r < n_obs; ++r) rows_.push_back({RowKind::kSeparation, k, -1, 2});
    row += nc + n_obs;
  }
  n_ineq_ = row - n_eq_;
  I.outputs.resize(I.blocks.size());
}

HorizonNlp::~HorizonNlp() { delete impl_; }

int HorizonNlp::state_index(int k, int robot) const {
  return (k - 1) * impl_->step_size + impl_->state_off[robot];
}

int HorizonNlp::object_index(int k) const {
  return (k - 1) * impl_->step_size + impl_->state_off.back();
}

int HorizonNlp::control_index(int k, int robot) const {
  return problem_.N * impl_->step_size + k * impl_->control_size + impl_->control_off[robot];
}

int HorizonNlp::count(RowKind kind) const {
  return static_cast<int>(std::count_if(rows_.begin(), rows_.end(),
                                        [kind](const RowInfo& r) { return r.kind == kind; }));
}

Eigen::VectorXd HorizonNlp::pack(const std::vector<FormationConfig>& states,
                                 const std::vector<std::vector<ControlInput>>& controls) const {
  const int N = problem_.N;
  if (static_cast<int>(states.size()) != N + 1 || static_cast<int>(controls.size()) != N) {
    throw Error(ErrorCode::kInvalidInput, "trajectory length does not match the horizon");
  }
  Eigen::VectorXd x(n_vars_);
  for (int k = 1; k <= N; ++k) {
    for (std::size_t i = 0; i < model_.size(); ++i) {
      const auto v = states[k].robots[i].to_vector();
      x.segment(state_index(k, static_cast<int>(i)), v.size()) = v;
    }
    const auto& s = states[k];
    x.segment<4>(object_index(k)) << s.p.x(), s.p.y(), s.p.z(), s.psi;
  }
  for (int k = 0; k < N; ++k) {
    for (std::size_t i = 0; i < model_.size(); ++i) {
      const auto u = controls[k][i].to_vector();
      x.segment(control_index(k, static_cast<int>(i)), u.size()) = u;
    }
  }
  return x;
}

void HorizonNlp::unpack(const Eigen::VectorXd& x, std::vector<FormationConfig>& states,
                        std::vector<std::vector<ControlInput>>& controls) const {
  const int N = problem_.N;
  states.assign(N + 1, problem_.initial);
  controls.assign(N, {});
  for (int k = 1; k <= N; ++k) {
    for (std::size_t i = 0; i < model_.size(); ++i) {
      const int ns = static_cast<int>(model_.robots[i].n_state());
      states[k].robots[i] =
          robot::MMRState::from_vector(x.segment(state_index(k, static_cast<int>(i)), ns));
    }
    const auto o = x.segment<4>(object_index(k));
    states[k].p = o.head<3>();
    states[k].psi = o[3];
  }
  for (int k = 0; k < N; ++k) {
    for (std::size_t i = 0; i < model_.size(); ++i) {
      const int nc = static_cast<int>(model_.robots[i].n_control());
      controls[k].push_back(
          ControlInput::from_vector(x.segment(control_index(k, static_cast<int>(i)), nc)));
    }
  }
}

namespace {

// Row generators, shared by the value and derivative paths.

template <class T, class Emit>
void robot_step_rows(const FormationModel& model, const HorizonProblem& pb,
                     const std::pair<double, double>& wedge, int wedge_rows, int k, int i,
                     const std::array<T, kStepVars>& v, int eq_row, int ineq_row, Emit&& emit) {
  using std::cos;
  using std::sin;
  const auto& spec = model.robots[i];
  const std::span<const T> q(v.data() + kArmSlot, spec.n_arm());
  const T& ox = v[kObjSlot];
  const T& oy = v[kObjSlot + 1];
  const T& oz = v[kObjSlot + 2];
  const T& psi = v[kObjSlot + 3];

  const auto g = robot::grasp_residual_t<T>(v[0], v[1], v[2], q, ox, oy, oz, psi,
                                            spec.grasp, spec.dh);
  for (int r = 0; r < 4; ++r) emit(eq_row + r, g[r]);

  const auto arm = robot::arm_circle_t<T>(v[0], v[1], v[2], q, spec.dh);
  const double rb = spec.base_radius();
  const auto& reg = pb.corridors[k];
  int row = ineq_row;
  for (Eigen::Index j = 0; j < reg.A.rows(); ++j) {
    emit(row++, reg.A(j, 0) * v[0] + reg.A(j, 1) * v[1] + (rb + pb.d_safe - reg.b[j]));
  }
  for (Eigen::Index j = 0; j < reg.A.rows(); ++j) {
    emit(row++, reg.A(j, 0) * arm[0] + reg.A(j, 1) * arm[1] + arm[2] +
                    (pb.d_safe - reg.b[j]));
  }
  const double t = k * pb.T_c;
  for (const auto& o : pb.obstacles) {
    const Point2 p = o.at(t);
    const T dx = v[0] - p.x();
    const T dy = v[1] - p.y();
    const double R = o.r + rb + pb.d_safe_dyn;
    emit(row++, R * R - (dx * dx + dy * dy));
  }
  for (const auto& o : pb.obstacles) {
    const Point2 p = o.at(t);
    const T dx = arm[0] - p.x();
    const T dy = arm[1] - p.y();
    const T R = arm[2] + (o.r + pb.d_safe_dyn);
    emit(row++, R * R - (dx * dx + dy * dy));
  }
  // H(beta) . (c - o) with H = (sin beta, -cos beta).
  const T slo = sin(psi + wedge.first);
  const T clo = cos(psi + wedge.first);
  const T shi = sin(psi + wedge.second);
  const T chi = cos(psi + wedge.second);
  const std::array<std::pair<T, T>, 2> centers{{{v[0], v[1]}, {arm[0], arm[1]}}};
  for (const auto& [cx, cy] : centers) {
    const T dx = cx - ox;
    const T dy = cy - oy;
    if (wedge_rows >= 1) emit(row++, slo * dx - clo * dy);
    if (wedge_rows == 2) emit(row++, -(shi * dx - chi * dy));
  }
}

template <class T, class Emit>
void dynamics_rows(const HorizonProblem& pb, const std::array<T, kDynVars>& v, int eq_row,
                   Emit&& emit) {
  const auto b = robot::rk4_base<T>(v[0], v[1], v[2], v[3], v[4], pb.T_c);
  for (int r = 0; r < 3; ++r) emit(eq_row + r, b[r]);
}

template <std::size_t N>
void scatter(const Jet2<N>& j, int row, const std::array<int, N>& cols,
             nlp::Triplets& jac, double w, std::array<double, Jet2<N>::kPacked>& hsum) {
  for (std::size_t a = 0; a < N; ++a) {
    if (cols[a] >= 0 && j.g[a] != 0.0) jac.emplace_back(row, cols[a], j.g[a]);
  }
  if (w != 0.0) {
    for (std::size_t p = 0; p < Jet2<N>::kPacked; ++p) hsum[p] += w * j.h[p];
  }
}

template <std::size_t N>
void flush_hessian(const std::array<double, Jet2<N>::kPacked>& hsum,
                   const std::array<int, N>& cols, nlp::Triplets& hess) {
  std::size_t p = 0;
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = a; b < N; ++b, ++p) {
      if (hsum[p] == 0.0 || cols[a] < 0 || cols[b] < 0) continue;
      hess.emplace_back(std::max(cols[a], cols[b]), std::min(cols[a], cols[b]), hsum[p]);
    }
  }
}

}  // namespace

double HorizonNlp::values(const Eigen::VectorXd& x, Eigen::VectorXd& c) const {
  const auto& I = *impl_;
  c.resize(n_eq_ + n_ineq_);
  const int nb = static_cast<int>(I.blocks.size());
  auto sink = [&c](int row, double value) { c[row] = value; };

#pragma omp parallel for schedule(static) if (parallel_)
  for (int b = 0; b < nb; ++b) {
    const auto& blk = I.blocks[b];
    const int k = blk.k;
    const int i = blk.robot;
    switch (blk.type) {
      case Impl::Type::kDynamics: {
        const auto& spec = model_.robots[i];
        const int na = static_cast<int>(spec.n_arm());
        Eigen::VectorXd s0 = k == 0 ? problem_.initial.robots[i].to_vector()
                                    : Eigen::VectorXd(x.segment(state_index(k, i), na + 3));
        const auto s1 = x.segment(state_index(k + 1, i), na + 3);
        const auto u = x.segment(control_index(k, i), na + 2);
        const std::array<double, kDynVars> v{s0[0], s0[1], s0[2], u[0], u[1]};
        dynamics_rows<double>(problem_, v, blk.eq_row,
                              [&](int row, double val) { c[row] = val - s1[row - blk.eq_row]; });
        for (int j = 0; j < na; ++j) {
          c[blk.eq_row + 3 + j] = s0[3 + j] + problem_.T_c * u[2 + j] - s1[3 + j];
        }
        break;
      }
      case Impl::Type::kRobotStep: {
        std::array<double, kStepVars> v{};
        const int ns = static_cast<int>(model_.robots[i].n_state());
        const int s = state_index(k, i);
        for (int a = 0; a < ns; ++a) v[a] = x[s + a];
        const int o = object_index(k);
        for (int a = 0; a < 4; ++a) v[kObjSlot + a] = x[o + a];
        robot_step_rows<double>(model_, problem_, I.wedges[i], I.wedge_rows, k, i, v,
                                blk.eq_row, blk.ineq_row, sink);
        break;
      }
      case Impl::Type::kObjectStep: {
        const Point2 p = x.segment<2>(object_index(k));
        const auto& reg = problem_.corridors[k];
        const double ro = model_.object_radius();
        int row = blk.ineq_row;
        for (Eigen::Index j = 0; j < reg.A.rows(); ++j) {
          c[row++] = reg.A.row(j).dot(p) + ro + problem_.d_safe - reg.b[j];
        }
        for (const auto& ob : problem_.obstacles) {
          const double R = ob.r + ro + problem_.d_safe_dyn;
          c[row++] = R * R - (p - ob.at(k * problem_.T_c)).squaredNorm();
        }
        break;
      }
    }
  }

  // Objective.
  const auto& w = problem_.weights;
  double f = 0.0;
  for (int k = 0; k < problem_.N; ++k) {
    for (std::size_t i = 0; i < model_.size(); ++i) {
      const int us = control_index(k, static_cast<int>(i));
      const auto u = x.segment(us, w.control.size());
      f += (w.control.array() * u.array().square()).sum();
    }
    if (k >= 1) {
      const Eigen::Vector2d e = x.segment<2>(object_index(k)) - problem_.reference[k];
      f += (w.tracking.array() * e.array().square()).sum();
    }
  }
  const Eigen::Vector2d eN = x.segment<2>(object_index(problem_.N)) - problem_.reference.back();
  return f + w.terminal * eN.squaredNorm();
}

void HorizonNlp::derivatives(const Eigen::VectorXd& x, double sigma, const Eigen::VectorXd& y,
                             nlp::Derivatives& out) const {
  const auto& I = *impl_;
  const int m = n_eq_ + n_ineq_;
  out.c.resize(m);
  Eigen::VectorXd& c = out.c;
  const int nb = static_cast<int>(I.blocks.size());

#pragma omp parallel for schedule(static) if (parallel_)
  for (int b = 0; b < nb; ++b) {
    const auto& blk = I.blocks[b];
    auto& bo = I.outputs[b];
    bo.jac.clear();
    bo.hess.clear();
    const int k = blk.k;
    const int i = blk.robot;
    switch (blk.type) {
      case Impl::Type::kDynamics: {
        const auto& spec = model_.robots[i];
        const int na = static_cast<int>(spec.n_arm());
        const int s1 = state_index(k + 1, i);
        const int us = control_index(k, i);
        std::array<int, kDynVars> cols{-1, -1, -1, us, us + 1};
        std::array<DynJet, kDynVars> v;
        if (k == 0) {
          const auto& s0 = problem_.initial.robots[i];
          v[0] = s0.p.x();
          v[1] = s0.p.y();
          v[2] = s0.phi;
        } else {
          const int s0 = state_index(k, i);
          for (int a = 0; a < 3; ++a) {
            cols[a] = s0 + a;
            v[a] = DynJet::variable(x[s0 + a], a);
          }
        }
        v[3] = DynJet::variable(x[us], 3);
        v[4] = DynJet::variable(x[us + 1], 4);
        std::array<double, DynJet::kPacked> hsum{};
        dynamics_rows<DynJet>(problem_, v, blk.eq_row, [&](int row, const DynJet& j) {
          const int r = row - blk.eq_row;
          c[row] = j.v - x[s1 + r];
          scatter(j, row, cols, bo.jac, y[row], hsum);
          bo.jac.emplace_back(row, s1 + r, -1.0);
        });
        flush_hessian(hsum, cols, bo.hess);
        for (int j = 0; j < na; ++j) {
          const int row = blk.eq_row + 3 + j;
          const double q0 =
              k == 0 ? problem_.initial.robots[i].q[j] : x[state_index(k, i) + 3 + j];
          c[row] = q0 + problem_.T_c * x[us + 2 + j] - x[s1 + 3 + j];
          if (k > 0) bo.jac.emplace_back(row, state_index(k, i) + 3 + j, 1.0);
          bo.jac.emplace_back(row, us + 2 + j, problem_.T_c);
          bo.jac.emplace_back(row, s1 + 3 + j, -1.0);
        }
        break;
      }
      case Impl::Type::kRobotStep: {
        std::array<StepJet, kStepVars> v;
        std::array<int, kStepVars> cols;
        cols.fill(-1);
        const int ns = static_cast<int>(model_.robots[i].n_state());
        const int s = state_index(k, i);
        for (int a = 0; a < ns; ++a) {
          cols[a] = s + a;
          v[a] = StepJet::variable(x[s + a], a);
        }
        const int o = object_index(k);
        for (int a = 0; a < 4; ++a) {
          cols[kObjSlot + a] = o + a;
          v[kObjSlot + a] = StepJet::variable(x[o + a], kObjSlot + a);
        }
        std::array<double, StepJet::kPacked> hsum{};
        robot_step_rows<StepJet>(model_, problem_, I.wedges[i], I.wedge_rows, k, i, v,
                                 blk.eq_row, blk.ineq_row, [&](int row, const StepJet& j) {
                                   c[row] = j.v;
                                   scatter(j, row, cols, bo.jac, y[row], hsum);
                                 });
        flush_hessian(hsum, cols, bo.hess);
        break;
      }
      case Impl::Type::kObjectStep: {
        const int o = object_index(k);
        const Point2 p = x.segment<2>(o);
        const auto& reg = problem_.corridors[k];
        const double ro = model_.object_radius();
        int row = blk.ineq_row;
        for (Eigen::Index j = 0; j < reg.A.rows(); ++j, ++row) {
          c[row] = reg.A.row(j).dot(p) + ro + problem_.d_safe - reg.b[j];
          bo.jac.emplace_back(row, o, reg.A(j, 0));
          bo.jac.emplace_back(row, o + 1, reg.A(j, 1));
        }
        double hdiag = 0.0;
        for (const auto& ob : problem_.obstacles) {
          const double R = ob.r + ro + problem_.d_safe_dyn;
          const Eigen::Vector2d d = p - ob.at(k * problem_.T_c);
          c[row] = R * R - d.squaredNorm();
          bo.jac.emplace_back(row, o, -2.0 * d.x());
          bo.jac.emplace_back(row, o + 1, -2.0 * d.y());
          hdiag += -2.0 * y[row];
          ++row;
        }
        if (hdiag != 0.0) {
          bo.hess.emplace_back(o, o, hdiag);
          bo.hess.emplace_back(o + 1, o + 1, hdiag);
        }
        break;
      }
    }
  }

  // Merge in block order so the result does not depend on the thread count.
  std::size_t nj = 0;
  std::size_t nh = 0;
  for (const auto& bo : I.outputs) {
    nj += bo.jac.size();
    nh += bo.hess.size();
  }
  out.jac.clear();
  out.hess.clear();
  out.jac.reserve(nj);
  out.hess.reserve(nh + static_cast<std::size_t>(n_vars_));
  for (const auto& bo : I.outputs) {
    out.jac.insert(out.jac.end(), bo.jac.begin(), bo.jac.end());
    out.hess.insert(out.hess.end(), bo.hess.begin(), bo.hess.end());
  }

  // Quadratic objective.
  const auto& w = problem_.weights;
  out.grad = Eigen::VectorXd::Zero(n_vars_);
  double f = 0.0;
  for (int k = 0; k < problem_.N; ++k) {
    for (std::size_t i = 0; i < model_.size(); ++i) {
      const int us = control_index(k, static_cast<int>(i));
      for (Eigen::Index a = 0; a < w.control.size(); ++a) {
        const double u = x[us + a];
        f += w.control[a] * u * u;
        out.grad[us + a] = 2.0 * w.control[a] * u;
        out.hess.emplace_back(us + a, us + a, 2.0 * sigma * w.control[a]);
      }
    }
  }
  for (int k = 1; k <= problem_.N; ++k) {
    const int o = object_index(k);
    const Eigen::Vector2d e = x.segment<2>(o) - problem_.reference[k];
    const Eigen::Vector2d we =
        k == problem_.N ? Eigen::Vector2d::Constant(w.terminal) : w.tracking;
    for (int a = 0; a < 2; ++a) {
      f += we[a] * e[a] * e[a];
      out.grad[o + a] = 2.0 * we[a] * e[a];
      out.hess.emplace_back(o + a, o + a, 2.0 * sigma * we[a]);
    }
  }
  out.f = f;
}

}  // namespace mmr::nmpc
