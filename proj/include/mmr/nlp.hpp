#pragma once

// Primal-dual interior-point solver for
//   min f(x)  s.t.  c_E(x) = 0,  c_I(x) <= 0,  lo <= x <= hi
// with exact sparse first and second derivatives supplied by the problem.

#include <Eigen/Sparse>
#include <limits>
#include <vector>

namespace mmr::nlp {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct Derivatives {
  double f = 0.0;
  Eigen::VectorXd grad;  // size n
  Eigen::VectorXd c;     // size m_E + m_I, equalities first
  Triplets jac;          // (row, col) over the stacked constraints
  Triplets hess;         // lower triangle of sigma * f'' + sum_j y_j c_j''
};

class Problem {
 public:
  virtual ~Problem() = default;
  virtual int num_vars() const = 0;
  virtual int num_eq() const = 0;
  virtual int num_ineq() const = 0;
  virtual Eigen::VectorXd lower() const {
    return Eigen::VectorXd::Constant(num_vars(), -std::numeric_limits<double>::infinity());
  }
  virtual Eigen::VectorXd upper() const {
    return Eigen::VectorXd::Constant(num_vars(), std::numeric_limits<double>::infinity());
  }
  /// Objective value; constraint values written to c.
  virtual double values(const Eigen::VectorXd& x, Eigen::VectorXd& c) const = 0;
  virtual void derivatives(const Eigen::VectorXd& x, double sigma,
                           const Eigen::VectorXd& y, Derivatives& out) const = 0;
};

struct Options {
  double tol = 1e-6;         // scaled KKT error
  double constr_tol = 1e-6;  // unscaled constraint violation
  int max_iter = 300;
  double mu_init = 0.1;
  double bound_push = 1e-2;
  double max_gradient = 100.0;  // gradient-based scaling target
  bool verbose = false;
};

enum class Status { kConverged, kMaxIterations, kLineSearchFailed, kNumerical };

const char* to_string(Status s);

struct Result {
  Status status = Status::kNumerical;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // unscaled multipliers, equalities first
  double objective = 0.0;
  double kkt_error = 0.0;       // scaled, at mu = 0
  double max_violation = 0.0;   // unscaled
  int iterations = 0;
  int active_ineq = 0;          // rows with c_I >= -1e-6
};

Result solve(const Problem& problem, const Eigen::VectorXd& x0,
             const Options& options = {});

/// Largest violation of c_E = 0, c_I <= 0 and the variable bounds.
double max_violation(const Problem& problem, const Eigen::VectorXd& x);

}  // namespace mmr::nlp
