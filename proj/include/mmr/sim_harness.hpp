#pragma once

// Closed-loop kinematic simulation: scripted obstacles, the receding-horizon
// planner, and per-step safety and rigidity metrics.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmr/global_planner.hpp"
#include "mmr/nmpc_planner.hpp"
#include "mmr/robot_model.hpp"

namespace mmr::sim {

using geom::Point2;
using robot::FormationConfig;
using robot::FormationModel;

/// Scripted circle moving at constant velocity, present during its window.
struct DynamicObstacle {
  Point2 p0 = Point2::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  double r = 0.1;
  double t_start = 0.0;
  double t_end = std::numeric_limits<double>::infinity();

  bool active(double t) const { return t >= t_start && t <= t_end; }
  Point2 at(double t) const { return p0 + t * v; }
  void validate() const;
};

struct Scenario {
  std::string name = "scenario";
  plan::Environment environment;
  FormationModel model;
  std::optional<double> start_psi;  // defaults to the first path direction
  std::optional<double> goal_psi;
  std::vector<DynamicObstacle> obstacles;
  nmpc::PlannerConfig planner;

  void validate() const;
};

struct SimOptions {
  /// Scales each obstacle's true velocity by a seeded factor in
  /// [1 - perturbation, 1 + perturbation]; the planner still sees the
  /// nominal velocity.
  bool perturb_velocity = false;
  double perturbation = 0.2;
  std::uint64_t seed = 0;
};

/// Ground truth for the scripted obstacles of one run.
class ObstacleWorld {
 public:
  ObstacleWorld(std::vector<DynamicObstacle> obstacles, const SimOptions& options);

  /// Active obstacles at their true positions.
  std::vector<nmpc::DynamicObstacle> truth(double t) const;
  /// What the planner is told: exact positions of active obstacles within
  /// the sensing radius of centre, with their nominal velocities.
  std::vector<nmpc::DynamicObstacle> feed(double t, const Point2& centre,
                                          double sensing_radius) const;

  const std::vector<double>& velocity_scale() const { return scale_; }

 private:
  std::vector<DynamicObstacle> obstacles_;
  std::vector<double> scale_;
};

/// Snapshots of the unperturbed obstacles at t, filtered by sensing radius.
std::vector<nmpc::DynamicObstacle> obstacle_feed(double t,
                                                 std::span<const DynamicObstacle> obstacles,
                                                 const Point2& centre,
                                                 double sensing_radius);

struct Margins {
  double d_static = std::numeric_limits<double>::infinity();
  /// +inf when there are no obstacles.
  double d_dynamic = std::numeric_limits<double>::infinity();
};

/// Each body's corridor slack is taken in the best corridor of the list.
Margins compute_margins(std::span<const robot::Circle> bodies,
                        std::span<const plan::ConvexRegion> corridors,
                        std::span<const nmpc::DynamicObstacle> obstacles);
Margins compute_margins(const FormationModel& model, const FormationConfig& cfg,
                        std::span<const plan::ConvexRegion> corridors,
                        std::span<const nmpc::DynamicObstacle> obstacles);

/// Points spread along the outline of every physical body: base footprints,
/// projected arm chains and the object footprint.
std::vector<Point2> body_outline_samples(const FormationModel& model,
                                         const FormationConfig& cfg, int per_body);

/// Smallest signed distance from the sampled bodies to the static world:
/// negative when a sample lies inside an obstacle or outside the room.
double static_clearance(const plan::Environment& env, std::span<const Point2> samples);

struct RunMetrics {
  double T_c = 0.25;
  std::vector<double> t;
  std::vector<double> d_static;
  std::vector<double> d_dynamic;          // +inf where no obstacle is active
  std::vector<double> static_clearance;   // sampled bodies against the real obstacles
  std::vector<double> tracking_error;     // CoM to its reference sample
  std::vector<Eigen::Vector4d> object_pose;  // x, y, z, psi
  std::vector<std::vector<double>> ee_distance;  // pairs (0,1), (0,2), ..., (n-2,n-1)
  std::vector<double> grasp_residual;     // largest component over robots
  std::vector<double> solve_times;
  std::vector<nmpc::HorizonRecord> horizons;
  bool completed = false;
  std::string diagnostic;
  double duration = 0.0;

  double min_d_static() const;
  double min_d_dynamic() const;
  double max_ee_deviation() const;
  double max_grasp_residual() const;
};

struct RunResult {
  plan::GlobalPlan plan;
  std::vector<FormationConfig> states;                      // ground truth
  std::vector<std::vector<robot::ControlInput>> controls;
  RunMetrics metrics;
  /// Largest difference between the ground truth and the planner's own
  /// prediction of the executed states.
  double prediction_mismatch = 0.0;
};

/// Plans globally unless a plan is supplied, then drives to the goal.
RunResult run_scenario(const Scenario& scenario, const SimOptions& options = {},
                       const plan::GlobalPlan* plan = nullptr,
                       const std::function<void(const nmpc::HorizonRecord&)>& log = {},
                       const nmpc::SolutionObserver& observe = {});

/// Independent runs in parallel; results in input order.
std::vector<RunResult> run_batch(std::span<const Scenario> scenarios,
                                 const SimOptions& options = {});

/// Object pose and robot placement at the scenario start.
FormationConfig initial_formation(const Scenario& scenario, const plan::GlobalPlan& plan);

}  // namespace mmr::sim
