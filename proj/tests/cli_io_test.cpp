#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmr/cli_io.hpp"

namespace mmr {
namespace {

namespace fs = std::filesystem;
using io::Json;

const std::string kScenarios = MMR_SCENARIO_DIR;

std::string scenario_file(const char* name) { return kScenarios + "/" + name; }

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mmr_cli_io_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "mmr_cli");
  std::ostringstream out, err;
  const int rc = io::run_cli(args, out, err);
  if (out_text) *out_text = out.str() + err.str();
  return rc;
}

// ---------------------------------------------------------------- scenario

TEST(Scenario, RoundTrip) {
  const auto s = io::load_scenario(scenario_file("corridor_crossing.json"));
  const Json j = io::scenario_to_json(s);
  const auto back = io::scenario_from_json(j);
  EXPECT_EQ(io::scenario_to_json(back), j);
  EXPECT_EQ(io::scenario_to_json(io::scenario_from_json(io::scenario_to_json(back))), j);
  ASSERT_EQ(back.obstacles.size(), 1u);
  EXPECT_EQ(back.obstacles[0].p0, geom::Point2(8.3, 15.8));
  EXPECT_EQ(back.obstacles[0].t_end, 100.0);
  EXPECT_EQ(back.environment.obstacles.size(), 2u);
  EXPECT_EQ(back.model.size(), 2u);
  EXPECT_EQ(back.model.robots[0].dh.size(), s.model.robots[0].dh.size());
  EXPECT_EQ(back.model.robots[1].grasp, s.model.robots[1].grasp);
}

TEST(Scenario, DefaultsAreTheNominalParameters) {
  const auto s = io::load_scenario(scenario_file("straight.json"));
  EXPECT_EQ(s.planner.T_h, 9.0);
  EXPECT_EQ(s.planner.T_e, 3.0);
  EXPECT_EQ(s.planner.T_c, 0.25);
  EXPECT_EQ(s.planner.v_op, 0.15);
  EXPECT_EQ(s.planner.d_safe, 0.05);
  EXPECT_EQ(s.planner.d_safe_dyn, 0.1);
  EXPECT_EQ(s.planner.sensing_radius, 3.0);
  Eigen::VectorXd w(7);
  w << 0.05, 0.05, 5, 5, 5, 0.5, 5;
  EXPECT_EQ(s.planner.weights.control, w);
  EXPECT_EQ(s.planner.weights.terminal, 1e5);
  EXPECT_FALSE(s.start_psi.has_value());
  EXPECT_TRUE(s.obstacles.empty());
}

TEST(Scenario, RingShorthand) {
  const auto s = io::load_scenario(scenario_file("ring5_corridor.json"));
  EXPECT_EQ(s.model.size(), 5u);
  EXPECT_NEAR(s.model.robots[0].grasp.head<2>().norm(), 0.4, 1e-12);
}

TEST(Scenario, MalformedInputIsInvalid) {
  auto expect_invalid = [](const Json& j) {
    try {
      io::scenario_from_json(j);
      ADD_FAILURE() << "accepted " << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
    }
  };
  const Json good = io::read_json_file(scenario_file("straight.json"));
  expect_invalid(Json::array());
  Json j = good;
  j.erase("environment");
  expect_invalid(j);
  j = good;
  j["environment"]["start"] = "here";
  expect_invalid(j);
  j = good;
  j["environment"]["goal"] = {40.0, 2.0};
  expect_invalid(j);
  j = good;
  j["planner"] = {{"T_e", 10.0}};
  expect_invalid(j);
  j = good;
  j["dynamic_obstacles"] = {{{"p0", {1, 1}}, {"r", -0.1}}};
  expect_invalid(j);
  j = good;
  j["formation"] = {{"kind", "triangle"}};
  expect_invalid(j);
}

TEST(Scenario, Overrides) {
  Json j = io::read_json_file(scenario_file("corridor_crossing.json"));
  io::apply_override(j, "planner.T_h=4.5");
  io::apply_override(j, "dynamic_obstacles.0.r=0.3");
  io::apply_override(j, "name=renamed");
  io::apply_override(j, "planner.weights.terminal=1000");
  const auto s = io::scenario_from_json(j);
  EXPECT_EQ(s.planner.T_h, 4.5);
  EXPECT_EQ(s.obstacles[0].r, 0.3);
  EXPECT_EQ(s.name, "renamed");
  EXPECT_EQ(s.planner.weights.terminal, 1000.0);
  EXPECT_THROW(io::apply_override(j, "no_equals_sign"), Error);
  EXPECT_THROW(io::apply_override(j, "dynamic_obstacles.5.r=1"), Error);
  EXPECT_THROW(io::apply_override(j, "name.inner=1"), Error);
}

TEST(Scenario, HashBindsContent) {
  const auto a = io::load_scenario(scenario_file("straight.json"));
  const auto h = io::scenario_hash(a);
  EXPECT_EQ(h.size(), 64u);
  EXPECT_EQ(h.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_EQ(io::scenario_hash(io::scenario_from_json(io::scenario_to_json(a))), h);
  auto b = a;
  b.environment.goal.x() += 1e-9;
  EXPECT_NE(io::scenario_hash(b), h);
}

// ------------------------------------------------------------ plan artifact

TEST(PlanArtifact, RoundTripIsIdentity) {
  const auto s = io::load_scenario(scenario_file("corridor_crossing.json"));
  io::PlanArtifact a;
  a.scenario_sha256 = io::scenario_hash(s);
  a.r_f = s.model.formation_radius();
  a.plan = plan::plan_global(s.environment, a.r_f, s.planner.v_op, s.planner.T_c);
  const Json j = Json::parse(io::plan_to_json(a).dump());
  const auto b = io::plan_from_json(j);
  EXPECT_EQ(b.scenario_sha256, a.scenario_sha256);
  EXPECT_EQ(b.r_f, a.r_f);
  EXPECT_EQ(b.plan.path, a.plan.path);
  ASSERT_EQ(b.plan.corridors.size(), a.plan.corridors.size());
  for (std::size_t i = 0; i < a.plan.corridors.size(); ++i) {
    EXPECT_EQ(b.plan.corridors[i].A, a.plan.corridors[i].A);
    EXPECT_EQ(b.plan.corridors[i].b, a.plan.corridors[i].b);
  }
  EXPECT_EQ(b.plan.control_points, a.plan.control_points);
  EXPECT_EQ(b.plan.samples, a.plan.samples);
  EXPECT_EQ(b.plan.sample_corridor, a.plan.sample_corridor);
  for (double c : {0.0, 0.3, 0.77, 1.0}) EXPECT_EQ(b.plan.reference.at(c), a.plan.reference.at(c));
  EXPECT_EQ(io::plan_to_json(b), io::plan_to_json(a));
}

TEST(PlanArtifact, StalePlanDetected) {
  const auto s = io::load_scenario(scenario_file("straight.json"));
  io::PlanArtifact a;
  a.scenario_sha256 = io::scenario_hash(s);
  EXPECT_NO_THROW(io::check_plan_matches(a, s));
  auto t = s;
  t.planner.d_safe = 0.06;
  try {
    io::check_plan_matches(a, t);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStalePlan);
  }
}

// ----------------------------------------------------------------- outputs

TEST(Outputs, TrajectoryCsvShape) {
  const auto model = robot::default_two_robot_model();
  const auto cols = io::trajectory_columns(model);
  EXPECT_EQ(cols.size(), 1u + 2 * (3 + 5 + 2 + 5) + 4);
  EXPECT_EQ(cols.front(), "t");
  EXPECT_EQ(cols.back(), "obj_psi");
  std::vector<robot::FormationConfig> states(3, robot::place_formation(model, {1, 1}, 0.2));
  std::vector<std::vector<robot::ControlInput>> controls(
      2, {robot::ControlInput::zero(5), robot::ControlInput::zero(5)});
  std::ostringstream os;
  io::write_trajectory_csv(os, model, states, controls, 0.25);
  std::istringstream in(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ',') + 1, static_cast<long>(cols.size()));
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}

TEST(Outputs, SolveTimeSummary) {
  const auto s = io::summarize_solve_times({{0.2, 0.4}});
  EXPECT_DOUBLE_EQ(s.min, 0.2);
  EXPECT_DOUBLE_EQ(s.mean, 0.3);
  EXPECT_DOUBLE_EQ(s.max, 0.4);
  EXPECT_NEAR(s.stddev, 0.1, 1e-15);
  const auto many = io::summarize_solve_times({{1.0}, {2.0, 3.0}, {}});
  EXPECT_EQ(many.runs, 3u);
  EXPECT_EQ(many.horizons, 3u);
  EXPECT_DOUBLE_EQ(many.mean, 2.0);
  const auto text = io::format_summary(s);
  EXPECT_NE(text.find("min"), std::string::npos);
  EXPECT_NE(text.find("stddev"), std::string::npos);
}

TEST(Outputs, SvgIsPureRendering) {
  sim::RunMetrics m;
  m.t = {0.0, 0.25, 0.5};
  m.d_static = {0.3, 0.2, 0.25};
  m.d_dynamic = {INFINITY, 0.4, 0.5};
  const Json before = io::metrics_to_json(m);
  const auto svg = io::svg_line_plot("margins", "t", m.t, {{"static", m.d_static}, {"dynamic", m.d_dynamic}}, true);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(io::metrics_to_json(m), before);
  EXPECT_TRUE(before["d_dynamic"][0].is_null());
}

// ---------------------------------------------------------------------- CLI

TEST(Cli, PlanGlobalEmptyRoom) {
  const auto dir = scratch_dir("plan");
  const auto out = (dir / "plan.json").string();
  ASSERT_EQ(cli({"plan-global", scenario_file("straight.json"), "--out", out}), 0);
  const auto a = io::plan_from_json(io::read_json_file(out));
  EXPECT_EQ(a.plan.path.size(), 2u);
  EXPECT_EQ(a.plan.corridors.size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "plan.svg"));
}

TEST(Cli, NoPathExitCode) {
  const auto dir = scratch_dir("nopath");
  std::string text;
  EXPECT_EQ(cli({"plan-global", scenario_file("sealed_goal.json"), "--out",
                 (dir / "p.json").string()},
                &text),
            2);
  EXPECT_NE(text.find("no path"), std::string::npos);
}

TEST(Cli, NoInputExitCodes) {
  EXPECT_EQ(cli({"report", "/nonexistent/dir/*.json"}), 4);
  EXPECT_EQ(cli({"simulate", "/nonexistent/scenario.json", "--out", "/tmp/x"}), 4);
}

TEST(Cli, StalePlanExitCode) {
  const auto dir = scratch_dir("stale");
  const auto plan = (dir / "plan.json").string();
  ASSERT_EQ(cli({"plan-global", scenario_file("straight.json"), "--out", plan}), 0);
  EXPECT_EQ(cli({"simulate", scenario_file("straight.json"), "--plan", plan, "--out",
                 (dir / "run").string(), "--params-override", "planner.d_safe=0.07"}),
            3);
}

TEST(Cli, SimulateAndReport) {
  const auto dir = scratch_dir("sim");
  const auto plan = (dir / "plan.json").string();
  ASSERT_EQ(cli({"plan-global", scenario_file("straight.json"), "--out", plan}), 0);
  ASSERT_EQ(cli({"simulate", scenario_file("straight.json"), "--plan", plan, "--out",
                 (dir / "run").string(), "--seed", "3"}),
            0);
  for (const char* f : {"trajectory.csv", "metrics.json", "solver_log.jsonl", "plan.svg",
                        "margins.svg", "object_pose.svg", "ee_distance.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  const Json metrics = io::read_json_file((dir / "run" / "metrics.json").string());
  EXPECT_TRUE(metrics["completed"].get<bool>());
  EXPECT_FALSE(metrics["solve_times"].empty());
  // Every log line is a JSON object.
  std::istringstream log(slurp(dir / "run" / "solver_log.jsonl"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    EXPECT_TRUE(Json::parse(line).is_object());
    ++lines;
  }
  EXPECT_EQ(lines, metrics["solve_times"].size());

  std::string text;
  EXPECT_EQ(cli({"report", (dir / "run" / "*.json").string()}, &text), 0);
  EXPECT_NE(text.find("horizons " + std::to_string(lines)), std::string::npos);
}

TEST(Cli, ConvexifyPolygonFile) {
  const auto dir = scratch_dir("cvx");
  const auto out = (dir / "region.json").string();
  ASSERT_EQ(cli({"convexify", scenario_file("notch_polygon.json"), "--out", out}), 0);
  const Json j = io::read_json_file(out);
  EXPECT_EQ(j["reflex_counts"].back().get<int>(), 0);
  EXPECT_GE(j["halfplanes"].size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "region.svg"));
}

TEST(Cli, UsageErrorsAreNonZero) {
  EXPECT_NE(cli({}), 0);
  EXPECT_NE(cli({"plan-global"}), 0);
}

}  // namespace
}  // namespace mmr
