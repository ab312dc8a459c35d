#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mmr/nlp.hpp"

namespace mmr::nlp {

const char* to_string(Status s) {
  switch (s) {
    case Status::kConverged: return "converged";
    case Status::kMaxIterations: return "max-iterations";
    case Status::kLineSearchFailed: return "line-search-failed";
    case Status::kNumerical: return "numerical";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Filter line search constants.
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-8;
constexpr double kGammaAlpha = 0.05;
constexpr double kDelta = 1.0;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;
constexpr double kEta = 1e-4;
using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

double violation_of(const Vec& c, int m_eq, const Vec& x, const Vec& lo,
                    const Vec& hi) {
  double v = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    v = std::max(v, i < m_eq ? std::abs(c[i]) : std::max(0.0, c[i]));
  }
  for (int j = 0; j < x.size(); ++j) {
    v = std::max({v, lo[j] - x[j], x[j] - hi[j]});
  }
  return v;
}

class Solver {
 public:
  Solver(const Problem& p, const Options& o)
      : P_(p), opt_(o), n_(p.num_vars()), mE_(p.num_eq()), mI_(p.num_ineq()),
        m_(mE_ + mI_), lo_(p.lower()), hi_(p.upper()) {
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j])) L_.push_back(j);
      if (std::isfinite(hi_[j])) U_.push_back(j);
    }
  }

  Result run(const Vec& x0);

 private:
  // --- evaluation in scaled space
  double eval_values(const Vec& x, Vec& c) const {
    const double f = P_.values(x, c);
    c.array() *= row_scale_.array();
    return obj_scale_ * f;
  }
  void eval_derivatives();
  void compute_scaling(const Vec& x);

  // --- pieces of the barrier problem
  double barrier(const Vec& x, const Vec& s) const {
    double b = 0.0;
    for (int i = 0; i < mI_; ++i) b -= std::log(s[i]);
    for (int j : L_) b -= std::log(x[j] - lo_[j]);
    for (int j : U_) b -= std::log(hi_[j] - x[j]);
    return mu_ * b;
  }
  double infeasibility(const Vec& c, const Vec& s) const {
    return c.head(mE_).lpNorm<1>() + (c.tail(mI_) + s).lpNorm<1>();
  }
  double error(double mu) const;
  bool factorize();
  Vec solve_kkt(const Vec& rhs) const;
  void recover(const Vec& sol, const Vec& mu_over_s, Vec& dx, Vec& ds, Vec& dy) const;
  double max_step(const Vec& dx, const Vec& ds) const;
  double max_dual_step(const Vec& dzs, const Vec& dzL, const Vec& dzU) const;

  const Problem& P_;
  Options opt_;
  int n_, mE_, mI_, m_;
  Vec lo_, hi_;
  std::vector<int> L_, U_;
  double obj_scale_ = 1.0;
  Vec row_scale_;

  // iterate
  Vec x_, s_, y_, zs_, zL_, zU_;
  double mu_ = 0.1;
  struct FilterEntry {
    double theta, phi;
  };
  std::vector<FilterEntry> filter_;
  double theta_max_ = 0.0, theta_min_ = 0.0;
  // derivatives at x_
  double f_ = 0.0;
  Vec g_, c_;
  SpMat J_;
  Triplets hess_;
  // factorization
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  SpMat K_;
  double delta_w_ = 0.0, delta_w_last_ = 0.0, delta_c_ = 1e-8;
};

void Solver::compute_scaling(const Vec& x) {
  Derivatives d;
  P_.derivatives(x, 1.0, Vec::Zero(m_), d);
  const double gmax = d.grad.lpNorm<Eigen::Infinity>();
  obj_scale_ = gmax > opt_.max_gradient ? opt_.max_gradient / gmax : 1.0;
  Vec rmax = Vec::Zero(m_);
  for (const auto& t : d.jac) rmax[t.row()] = std::max(rmax[t.row()], std::abs(t.value()));
  row_scale_ = Vec::Ones(m_);
  for (int i = 0; i < m_; ++i) {
    if (rmax[i] > opt_.max_gradient) row_scale_[i] = opt_.max_gradient / rmax[i];
  }
}

void Solver::eval_derivatives() {
  Derivatives d;
  const Vec yw = (y_.array() * row_scale_.array()).matrix();
  P_.derivatives(x_, obj_scale_, yw, d);
  f_ = obj_scale_ * d.f;
  g_ = obj_scale_ * d.grad;
  c_ = (d.c.array() * row_scale_.array()).matrix();
  for (auto& t : d.jac) t = {t.row(), t.col(), t.value() * row_scale_[t.row()]};
  J_.resize(m_, n_);
  J_.setFromTriplets(d.jac.begin(), d.jac.end());
  hess_ = std::move(d.hess);
}

double Solver::error(double mu) const {
  constexpr double s_max = 100.0;
  Vec rx = g_ + J_.transpose() * y_;
  for (int j : L_) rx[j] -= zL_[j];
  for (int j : U_) rx[j] += zU_[j];
  const double zsum = zs_.lpNorm<1>() + zL_.lpNorm<1>() + zU_.lpNorm<1>();
  const double nz = static_cast<double>(mI_ + L_.size() + U_.size());
  const double sd =
      std::max(s_max, (y_.lpNorm<1>() + zsum) / std::max(1.0, m_ + nz)) / s_max;
  const double sc = std::max(s_max, zsum / std::max(1.0, nz)) / s_max;
  double dual = rx.lpNorm<Eigen::Infinity>();
  if (mI_ > 0) dual = std::max(dual, (y_.tail(mI_) - zs_).lpNorm<Eigen::Infinity>());
  double primal = 0.0;
  if (mE_ > 0) primal = c_.head(mE_).lpNorm<Eigen::Infinity>();
  if (mI_ > 0) primal = std::max(primal, (c_.tail(mI_) + s_).lpNorm<Eigen::Infinity>());
  double compl_err = 0.0;
  for (int i = 0; i < mI_; ++i) compl_err = std::max(compl_err, std::abs(s_[i] * zs_[i] - mu));
  for (int j : L_) compl_err = std::max(compl_err, std::abs((x_[j] - lo_[j]) * zL_[j] - mu));
  for (int j : U_) compl_err = std::max(compl_err, std::abs((hi_[j] - x_[j]) * zU_[j] - mu));
  return std::max({dual / sd, primal, compl_err / sc});
}

bool Solver::factorize() {
  // Inertia correction: the matrix must have n positive and m negative pivots.
  Vec sigma = Vec::Zero(n_);
  for (int j : L_) sigma[j] += zL_[j] / (x_[j] - lo_[j]);
  for (int j : U_) sigma[j] += zU_[j] / (hi_[j] - x_[j]);

  Triplets base = hess_;
  base.reserve(hess_.size() + J_.nonZeros() + n_ + m_);
  for (int k = 0; k < J_.outerSize(); ++k) {
    for (SpMat::InnerIterator it(J_, k); it; ++it) {
      base.emplace_back(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()),
                        it.value());
    }
  }
  auto attempt = [&](double dw) {
    Triplets t = base;
    for (int j = 0; j < n_; ++j) t.emplace_back(j, j, sigma[j] + dw);
    for (int i = 0; i < m_; ++i) {
      const double d = i < mE_ ? delta_c_ : s_[i - mE_] / zs_[i - mE_] + delta_c_;
      t.emplace_back(n_ + i, n_ + i, -d);
    }
    K_.resize(n_ + m_, n_ + m_);
    K_.setFromTriplets(t.begin(), t.end());
    ldlt_.compute(K_);
    if (ldlt_.info() != Eigen::Success) return false;
    const Vec& D = ldlt_.vectorD();
    int pos = 0, neg = 0;
    for (int i = 0; i < D.size(); ++i) {
      if (!std::isfinite(D[i])) return false;
      if (D[i] > 0) ++pos;
      else if (D[i] < 0) ++neg;
    }
    return pos == n_ && neg == m_;
  };

  delta_w_ = 0.0;
  if (attempt(0.0)) return true;
  delta_w_ = delta_w_last_ == 0.0 ? 1e-4 : std::max(1e-20, delta_w_last_ / 3.0);
  while (delta_w_ < 1e40) {
    if (attempt(delta_w_)) {
      delta_w_last_ = delta_w_;
      return true;
    }
    delta_w_ *= delta_w_last_ == 0.0 ? 100.0 : 8.0;
  }
  return false;
}

Vec Solver::solve_kkt(const Vec& rhs) const {
  Vec sol = ldlt_.solve(rhs);
  for (int it = 0; it < 2; ++it) {
    const Vec r = rhs - K_.selfadjointView<Eigen::Lower>() * sol;
    sol += ldlt_.solve(r);
  }
  return sol;
}

void Solver::recover(const Vec& sol, const Vec& mu_over_s, Vec& dx, Vec& ds,
                     Vec& dy) const {
  dx = sol.head(n_);
  dy = sol.tail(m_);
  ds.resize(mI_);
  for (int i = 0; i < mI_; ++i) {
    ds[i] = (mu_over_s[i] - y_[mE_ + i] - dy[mE_ + i]) * s_[i] / zs_[i];
  }
}

double Solver::max_step(const Vec& dx, const Vec& ds) const {
  const double tau = std::max(0.99, 1.0 - mu_);
  double a = 1.0;
  for (int i = 0; i < mI_; ++i) {
    if (ds[i] < 0) a = std::min(a, -tau * s_[i] / ds[i]);
  }
  for (int j : L_) {
    if (dx[j] < 0) a = std::min(a, -tau * (x_[j] - lo_[j]) / dx[j]);
  }
  for (int j : U_) {
    if (dx[j] > 0) a = std::min(a, tau * (hi_[j] - x_[j]) / dx[j]);
  }
  return a;
}

double Solver::max_dual_step(const Vec& dzs, const Vec& dzL, const Vec& dzU) const {
  const double tau = std::max(0.99, 1.0 - mu_);
  double a = 1.0;
  for (int i = 0; i < mI_; ++i) {
    if (dzs[i] < 0) a = std::min(a, -tau * zs_[i] / dzs[i]);
  }
  for (int j : L_) {
    if (dzL[j] < 0) a = std::min(a, -tau * zL_[j] / dzL[j]);
  }
  for (int j : U_) {
    if (dzU[j] < 0) a = std::min(a, -tau * zU_[j] / dzU[j]);
  }
  return a;
}

Result Solver::run(const Vec& x0) {
  Result res;
  if (x0.size() != n_) throw std::invalid_argument("x0 has the wrong size");

  // Push the start strictly inside the bounds.
  x_ = x0;
  for (int j = 0; j < n_; ++j) {
    const bool fl = std::isfinite(lo_[j]), fu = std::isfinite(hi_[j]);
    if (fl && fu) {
      const double pl = std::min(opt_.bound_push * std::max(1.0, std::abs(lo_[j])),
                                 opt_.bound_push * (hi_[j] - lo_[j]));
      const double pu = std::min(opt_.bound_push * std::max(1.0, std::abs(hi_[j])),
                                 opt_.bound_push * (hi_[j] - lo_[j]));
      x_[j] = std::clamp(x_[j], lo_[j] + pl, hi_[j] - pu);
    } else if (fl) {
      x_[j] = std::max(x_[j], lo_[j] + opt_.bound_push * std::max(1.0, std::abs(lo_[j])));
    } else if (fu) {
      x_[j] = std::min(x_[j], hi_[j] - opt_.bound_push * std::max(1.0, std::abs(hi_[j])));
    }
  }
  compute_scaling(x_);
  mu_ = opt_.mu_init;

  Vec c0(m_);
  eval_values(x_, c0);
  s_.resize(mI_);
  for (int i = 0; i < mI_; ++i) s_[i] = std::max(-c0[mE_ + i], opt_.bound_push);
  y_ = Vec::Zero(m_);
  zs_ = Vec::Zero(mI_);
  for (int i = 0; i < mI_; ++i) {
    zs_[i] = mu_ / s_[i];
    y_[mE_ + i] = zs_[i];
  }
  zL_ = Vec::Zero(n_);
  zU_ = Vec::Zero(n_);
  for (int j : L_) zL_[j] = mu_ / (x_[j] - lo_[j]);
  for (int j : U_) zU_[j] = mu_ / (hi_[j] - x_[j]);

  const double mu_min = opt_.tol / 10.0;
  int iter = 0;
  res.status = Status::kMaxIterations;
  for (; iter <= opt_.max_iter; ++iter) {
    eval_derivatives();
    const double e0 = error(0.0);
    Vec c_raw(m_);
    P_.values(x_, c_raw);
    const double viol = violation_of(c_raw, mE_, x_, lo_, hi_);
    if (opt_.verbose) {
      std::fprintf(stderr, "it %3d f %.6e err %.3e viol %.3e mu %.1e dw %.1e\n", iter,
                   f_ / obj_scale_, e0, viol, mu_, delta_w_);
    }
    if (e0 <= opt_.tol && viol <= opt_.constr_tol) {
      res.status = Status::kConverged;
      break;
    }
    if (iter == opt_.max_iter) break;
    while (mu_ > mu_min && error(mu_) <= 10.0 * mu_) {
      mu_ = std::max(mu_min, std::min(0.2 * mu_, std::pow(mu_, 1.5)));
      filter_.clear();
    }

    if (!factorize()) {
      res.status = Status::kNumerical;
      break;
    }

    // Reduced right-hand side.
    Vec mu_over_s(mI_);
    for (int i = 0; i < mI_; ++i) mu_over_s[i] = mu_ / s_[i];
    Vec rx = g_ + J_.transpose() * y_;
    for (int j : L_) rx[j] -= mu_ / (x_[j] - lo_[j]);
    for (int j : U_) rx[j] += mu_ / (hi_[j] - x_[j]);
    auto make_rhs = [&](const Vec& rc) {
      Vec rhs(n_ + m_);
      rhs.head(n_) = -rx;
      for (int i = 0; i < mE_; ++i) rhs[n_ + i] = -rc[i];
      for (int i = 0; i < mI_; ++i) {
        rhs[n_ + mE_ + i] =
            -rc[mE_ + i] - (mu_over_s[i] - y_[mE_ + i]) * s_[i] / zs_[i];
      }
      return rhs;
    };
    Vec rc(m_);
    rc.head(mE_) = c_.head(mE_);
    rc.tail(mI_) = c_.tail(mI_) + s_;
    Vec dx, ds, dy;
    recover(solve_kkt(make_rhs(rc)), mu_over_s, dx, ds, dy);

    // Bound duals.
    Vec dzs(mI_), dzL = Vec::Zero(n_), dzU = Vec::Zero(n_);
    for (int i = 0; i < mI_; ++i) dzs[i] = mu_over_s[i] - zs_[i] - zs_[i] / s_[i] * ds[i];
    for (int j : L_) {
      const double sl = x_[j] - lo_[j];
      dzL[j] = mu_ / sl - zL_[j] - zL_[j] / sl * dx[j];
    }
    for (int j : U_) {
      const double su = hi_[j] - x_[j];
      dzU[j] = mu_ / su - zU_[j] + zU_[j] / su * dx[j];
    }

    // Filter line search on (infeasibility, barrier objective).
    double gphi = g_.dot(dx);
    for (int i = 0; i < mI_; ++i) gphi -= mu_ * ds[i] / s_[i];
    for (int j : L_) gphi -= mu_ * dx[j] / (x_[j] - lo_[j]);
    for (int j : U_) gphi += mu_ * dx[j] / (hi_[j] - x_[j]);
    const double theta0 = infeasibility(c_, s_);
    const double phi0 = f_ + barrier(x_, s_);
    // Objective changes below rounding of the value itself are noise.
    const double noise = 10.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(phi0));
    if (iter == 0) {
      theta_max_ = 1e4 * std::max(1.0, theta0);
      theta_min_ = 1e-4 * std::max(1.0, theta0);
    }
    const bool descent = gphi < 0.0;
    double alpha_min = kGammaTheta;
    if (descent) {
      alpha_min = std::min(alpha_min, kGammaPhi * theta0 / -gphi);
      if (theta0 <= theta_min_) {
        alpha_min = std::min(alpha_min,
                             kDelta * std::pow(theta0, kSTheta) / std::pow(-gphi, kSPhi));
      }
    }
    alpha_min *= kGammaAlpha;

    bool f_type = false;
    // Returns true if the trial point is accepted.
    auto accept = [&](double alpha, double theta_t, double phi_t) {
      if (!std::isfinite(phi_t) || !std::isfinite(theta_t) || theta_t > theta_max_) {
        return false;
      }
      for (const auto& e : filter_) {
        if (theta_t >= e.theta && phi_t >= e.phi) return false;
      }
      const bool switching =
          descent && alpha * std::pow(-gphi, kSPhi) > kDelta * std::pow(theta0, kSTheta);
      if (theta0 <= theta_min_ && switching) {
        f_type = true;
        return phi_t <= phi0 + kEta * alpha * gphi + noise;
      }
      f_type = false;
      return theta_t <= (1.0 - kGammaTheta) * theta0 ||
             phi_t <= phi0 - kGammaPhi * theta0 + noise;
    };

    const double alpha_max = max_step(dx, ds);
    double alpha = alpha_max;
    bool accepted = false;
    Vec xt(n_), st(mI_), ct(m_);
    Vec step_dx = dx, step_ds = ds;
    double step_alpha = alpha;
    bool first = true;
    bool used_soc = false;
    while (alpha >= alpha_min) {
      xt = x_ + alpha * dx;
      st = s_ + alpha * ds;
      const double ft = eval_values(xt, ct);
      const double theta_t = infeasibility(ct, st);
      if (accept(alpha, theta_t, ft + barrier(xt, st))) {
        accepted = true;
        step_alpha = alpha;
        break;
      }
      if (first && std::isfinite(ft) && theta_t >= theta0) {
        // Second-order correction for the curvature of the constraints.
        first = false;
        Vec rct(m_);
        rct.head(mE_) = ct.head(mE_);
        rct.tail(mI_) = ct.tail(mI_) + st;
        const Vec csoc = alpha * rc + rct;
        Vec sdx, sds, sdy;
        recover(solve_kkt(make_rhs(csoc)), mu_over_s, sdx, sds, sdy);
        const double asoc = max_step(sdx, sds);
        Vec xs = x_ + asoc * sdx, ss = s_ + asoc * sds, cs(m_);
        const double fs = eval_values(xs, cs);
        if (accept(alpha, infeasibility(cs, ss), fs + barrier(xs, ss))) {
          accepted = true;
          used_soc = true;
          step_dx = sdx;
          step_ds = sds;
          step_alpha = asoc;
          dy = sdy;
          xt = xs;
          st = ss;
          ct = cs;
          break;
        }
      }
      first = false;
      alpha *= 0.5;
    }
    if (!accepted) {
      res.status = Status::kLineSearchFailed;
      break;
    }
    if (!f_type) {
      filter_.push_back({(1.0 - kGammaTheta) * theta0, phi0 - kGammaPhi * theta0});
    }
    if (used_soc) {
      // Bound duals follow the corrected primal step.
      for (int i = 0; i < mI_; ++i)
        dzs[i] = mu_over_s[i] - zs_[i] - zs_[i] / s_[i] * step_ds[i];
      for (int j : L_) {
        const double sl = x_[j] - lo_[j];
        dzL[j] = mu_ / sl - zL_[j] - zL_[j] / sl * step_dx[j];
      }
      for (int j : U_) {
        const double su = hi_[j] - x_[j];
        dzU[j] = mu_ / su - zU_[j] + zU_[j] / su * step_dx[j];
      }
    }
    const double alpha_z = max_dual_step(dzs, dzL, dzU);
    x_ = xt;
    s_ = st;
    y_ += step_alpha * dy;
    zs_ += alpha_z * dzs;
    zL_ += alpha_z * dzL;
    zU_ += alpha_z * dzU;
    // Slack reset never increases the merit function.
    for (int i = 0; i < mI_; ++i) s_[i] = std::max(s_[i], -ct[mE_ + i]);
    // Keep the bound duals near the central path.
    constexpr double kS = 1e10;
    for (int i = 0; i < mI_; ++i)
      zs_[i] = std::clamp(zs_[i], mu_ / (kS * s_[i]), kS * mu_ / s_[i]);
    for (int j : L_) {
      const double sl = x_[j] - lo_[j];
      zL_[j] = std::clamp(zL_[j], mu_ / (kS * sl), kS * mu_ / sl);
    }
    for (int j : U_) {
      const double su = hi_[j] - x_[j];
      zU_[j] = std::clamp(zU_[j], mu_ / (kS * su), kS * mu_ / su);
    }
  }

  res.iterations = iter;
  res.x = x_;
  Vec c(m_);
  res.objective = P_.values(x_, c);
  res.max_violation = violation_of(c, mE_, x_, lo_, hi_);
  res.kkt_error = error(0.0);
  res.y = (y_.array() * row_scale_.array()).matrix() / obj_scale_;
  for (int i = 0; i < mI_; ++i) {
    if (c[mE_ + i] >= -1e-6) ++res.active_ineq;
  }
  return res;
}

}  // namespace

Result solve(const Problem& problem, const Eigen::VectorXd& x0, const Options& options) {
  Solver s(problem, options);
  return s.run(x0);
}

double max_violation(const Problem& problem, const Eigen::VectorXd& x) {
  Vec c(problem.num_eq() + problem.num_ineq());
  problem.values(x, c);
  return violation_of(c, problem.num_eq(), x, problem.lower(), problem.upper());
}

}  // namespace mmr::nlp
