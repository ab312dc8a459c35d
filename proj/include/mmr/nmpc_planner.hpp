#pragma once

// Receding-horizon trajectory optimisation for a formation of mobile
// manipulators carrying one object through convex corridors.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mmr/global_planner.hpp"
#include "mmr/nlp.hpp"
#include "mmr/robot_model.hpp"

namespace mmr::nmpc {

using geom::Point2;
using robot::ControlInput;
using robot::FormationConfig;
using robot::FormationModel;

/// Circle moving at constant velocity from its snapshot position.
struct DynamicObstacle {
  Point2 p = Point2::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  double r = 0.1;

  Point2 at(double dt) const { return p + dt * v; }
};

struct Weights {
  /// Per-robot control weights [v, omega, arm rates...].
  Eigen::VectorXd control = default_control_weights(5);
  Eigen::Vector2d tracking{0.01, 0.01};
  double terminal = 1e5;

  static Eigen::VectorXd default_control_weights(std::size_t n_arm);
};

struct PlannerConfig {
  double T_h = 9.0;
  double T_e = 3.0;
  double T_c = 0.25;
  double v_op = 0.15;
  double d_safe = 0.05;
  double d_safe_dyn = 0.1;
  Weights weights;
  double sensing_radius = 3.0;
  double goal_tolerance = 0.05;
  double goal_yaw_tolerance = 0.15;
  double kkt_tol = 1e-6;
  double constr_tol = 1e-8;
  int max_iter = 200;
  int max_failures = 3;
  double max_duration = 600.0;  // simulated seconds
  bool parallel = true;
  bool verbose = false;  // solver iteration log on stderr

  int horizon_steps() const;
  int exec_steps() const;
  void validate() const;
};

struct HorizonProblem {
  int N = 36;
  double T_c = 0.25;
  FormationConfig initial;
  std::vector<Point2> reference;                // N + 1 points
  std::vector<plan::ConvexRegion> corridors;    // one per step, N + 1
  std::vector<DynamicObstacle> obstacles;
  Weights weights;
  double d_safe = 0.05;
  double d_safe_dyn = 0.1;
};

struct HorizonSolution {
  std::vector<FormationConfig> states;              // N + 1, states[0] = initial
  std::vector<std::vector<ControlInput>> controls;  // N x robots
  double objective = 0.0;
  double kkt_residual = 0.0;
  double max_constraint_violation = 0.0;
  double solve_time = 0.0;
  int iterations = 0;
  int active_constraints = 0;
  nlp::Status status = nlp::Status::kNumerical;

  bool ok() const { return status == nlp::Status::kConverged; }
  /// Converged, or stopped at the iteration limit on a feasible iterate.
  bool usable() const {
    return ok() || (status == nlp::Status::kMaxIterations && max_constraint_violation <= 1e-6);
  }
};

double stage_cost(const FormationConfig& state, const std::vector<ControlInput>& u,
                  const Point2& ref, const Weights& w);
double terminal_cost(const FormationConfig& state, const Point2& ref, double W_N);

/// The transcribed optimisation problem. Decision variables are the states of
/// steps 1..N (each robot's base pose and arm, then the object pose x, y, z,
/// yaw) followed by the controls of steps 0..N-1.
class HorizonNlp final : public nlp::Problem {
 public:
  enum class RowKind { kDynamics, kGrasp, kCorridor, kSeparation, kWedge };
  struct RowInfo {
    RowKind kind;
    int step;
    int robot;  // -1 for the object
    int body;   // 0 base, 1 arm, 2 object; -1 otherwise
  };

  HorizonNlp(const FormationModel& model, const HorizonProblem& problem,
             bool parallel = true, double z_max = INFINITY);
  ~HorizonNlp() override;

  int num_vars() const override { return n_vars_; }
  int num_eq() const override { return n_eq_; }
  int num_ineq() const override { return n_ineq_; }
  Eigen::VectorXd lower() const override { return lo_; }
  Eigen::VectorXd upper() const override { return hi_; }
  double values(const Eigen::VectorXd& x, Eigen::VectorXd& c) const override;
  void derivatives(const Eigen::VectorXd& x, double sigma, const Eigen::VectorXd& y,
                   nlp::Derivatives& out) const override;

  int state_index(int k, int robot) const;
  int object_index(int k) const;
  int control_index(int k, int robot) const;

  Eigen::VectorXd pack(const std::vector<FormationConfig>& states,
                       const std::vector<std::vector<ControlInput>>& controls) const;
  void unpack(const Eigen::VectorXd& x, std::vector<FormationConfig>& states,
              std::vector<std::vector<ControlInput>>& controls) const;

  /// Row descriptions, equalities first.
  const std::vector<RowInfo>& rows() const { return rows_; }
  int count(RowKind kind) const;

 private:
  struct Impl;
  const FormationModel& model_;
  const HorizonProblem& problem_;
  bool parallel_;
  int n_vars_ = 0, n_eq_ = 0, n_ineq_ = 0;
  Eigen::VectorXd lo_, hi_;
  std::vector<RowInfo> rows_;
  Impl* impl_;
};

/// Independent re-evaluation of every constraint on a solution using the
/// double-precision robot model (no shared code with the transcription).
struct AuditReport {
  double dynamics = 0.0;
  double grasp = 0.0;
  double corridor = 0.0;    // largest positive excess over the corridor margin
  double separation = 0.0;
  double wedge = 0.0;
  bool boxes_ok = true;     // arm joints and controls inside the limits exactly

  double worst() const;
};

AuditReport audit_solution(const FormationModel& model, const HorizonProblem& problem,
                           const HorizonSolution& solution, double z_max = INFINITY);

/// Solves one horizon. A warm start must already be aligned to the problem
/// (states[0] equal to the problem's initial state).
HorizonSolution solve_horizon(const FormationModel& model, const HorizonProblem& problem,
                              const HorizonSolution* warm, const PlannerConfig& config);

/// Initial guess: the object slides along the reference with constant yaw and
/// each robot is placed by inverse kinematics with its current arm.
HorizonSolution initial_guess(const FormationModel& model, const HorizonProblem& problem);

/// Drops the first `steps` steps and pads with a stationary tail.
HorizonSolution shift_solution(const HorizonSolution& s, int steps);

struct HorizonRecord {
  double t = 0.0;
  int lambda = 0;
  std::string status;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double max_violation = 0.0;
  double solve_time = 0.0;
  int iterations = 0;
  int active_constraints = 0;
  int obstacles = 0;
};

struct DriveResult {
  std::vector<FormationConfig> states;              // every T_c, states[0] = initial
  std::vector<std::vector<ControlInput>> controls;  // states.size() - 1 entries
  std::vector<HorizonRecord> horizons;
  std::vector<int> step_corridor;                   // corridor index used at each state
  std::vector<int> step_sample;                     // reference sample aimed at by each state
  bool completed = false;
  std::string diagnostic;
};

/// Sees every horizon problem together with the solver's answer and whether
/// that answer was executed.
using SolutionObserver = std::function<void(
    const HorizonProblem& problem, const HorizonSolution& solution, bool executed)>;

using ObstacleFeed =
    std::function<std::vector<DynamicObstacle>(double t, const FormationConfig& current)>;

struct Goal {
  Point2 p = Point2::Zero();
  std::optional<double> psi;
};

DriveResult receding_horizon_drive(const plan::GlobalPlan& plan,
                                   const FormationModel& model,
                                   const FormationConfig& initial, const Goal& goal,
                                   const PlannerConfig& config, const ObstacleFeed& feed,
                                   const std::function<void(const HorizonRecord&)>& log = {},
                                   const SolutionObserver& observe = {});

}  // namespace mmr::nmpc
