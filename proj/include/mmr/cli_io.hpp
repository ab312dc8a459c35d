#pragma once

// File formats: scenario and plan JSON, trajectory CSV, metrics JSON, solver
// logs and SVG plots; plus the command-line front end.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmr/global_planner.hpp"
#include "mmr/sim_harness.hpp"

namespace mmr::io {

using geom::Point2;
using Json = nlohmann::json;

// ------------------------------------------------------------------ scenario

/// Missing fields take their defaults. Throws invalid-input on malformed or
/// mistyped input.
sim::Scenario scenario_from_json(const Json& j);
/// Fully explicit form: every robot, limit and planner field is written.
Json scenario_to_json(const sim::Scenario& s);

/// Sets a dotted path ("planner.T_h=4.5") in a JSON document. The value is
/// parsed as JSON when possible, otherwise kept as a string.
void apply_override(Json& doc, const std::string& assignment);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

sim::Scenario load_scenario(const std::string& path,
                            std::span<const std::string> overrides = {});

/// SHA-256 (hex) of the explicit scenario form.
std::string scenario_hash(const sim::Scenario& s);

// ------------------------------------------------------------- plan artifact

struct PlanArtifact {
  std::string scenario_sha256;
  double r_f = 0.0;
  plan::GlobalPlan plan;
};

Json plan_to_json(const PlanArtifact& a);
/// The reference curve is rebuilt from the stored control points.
PlanArtifact plan_from_json(const Json& j);

/// Throws stale-plan when the artifact was made for a different scenario.
void check_plan_matches(const PlanArtifact& a, const sim::Scenario& s);

// ------------------------------------------------------------------- outputs

std::vector<std::string> trajectory_columns(const robot::FormationModel& model);
/// One row per state; the controls are those applied from that state on
/// (zero on the last row).
void write_trajectory_csv(std::ostream& os, const robot::FormationModel& model,
                          const std::vector<robot::FormationConfig>& states,
                          const std::vector<std::vector<robot::ControlInput>>& controls,
                          double T_c);

Json metrics_to_json(const sim::RunMetrics& m);
/// One JSON object per line.
void write_solver_log(std::ostream& os, std::span<const nmpc::HorizonRecord> horizons);

// ---------------------------------------------------------------------- SVG

struct Series {
  std::string label;
  std::vector<double> y;  // non-finite values leave a gap
};

/// Line plot of several series against a shared x grid.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::vector<double>& x, const std::vector<Series>& series,
                          bool zero_line = false);

/// Obstacles, corridors, path and reference; optionally the CoM trace.
std::string svg_plan(const plan::Environment& env, const plan::GlobalPlan& plan,
                     const std::vector<Point2>& com_trace = {});

std::string svg_convex_region(const geom::Polygon& input, const plan::ConvexRegion& output,
                              const Point2& a, const Point2& b);

// ------------------------------------------------------------------- report

struct SolveTimeSummary {
  std::size_t runs = 0;
  std::size_t horizons = 0;
  double min = 0.0, mean = 0.0, max = 0.0, stddev = 0.0;
};

/// Population statistics over every horizon of every run.
SolveTimeSummary summarize_solve_times(const std::vector<std::vector<double>>& runs);
std::string format_summary(const SolveTimeSummary& s);

// ---------------------------------------------------------------------- CLI

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitNoPath = 2,
  kExitStalePlan = 3,
  kExitNoInput = 4,
};

/// Runs the tool on an argument list (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mmr::io
