#include <glob.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mmr/cli_io.hpp"

namespace mmr::io {

namespace {

namespace fs = std::filesystem;

struct NoInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (path.empty() || !fs::is_regular_file(path)) throw NoInput("no input: " + path);
}

std::string sibling_svg(const std::string& out) {
  fs::path p(out);
  p.replace_extension(".svg");
  return p.string();
}

std::vector<std::string> expand(const std::vector<std::string>& patterns) {
  std::vector<std::string> files;
  for (const auto& pat : patterns) {
    glob_t g{};
    if (::glob(pat.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
    }
    ::globfree(&g);
  }
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  return files;
}

int plan_global_cmd(const std::string& scenario_path, const std::string& out_path,
                    const std::vector<std::string>& overrides, std::ostream& out) {
  require_file(scenario_path);
  const auto scenario = load_scenario(scenario_path, overrides);
  PlanArtifact a;
  a.scenario_sha256 = scenario_hash(scenario);
  a.r_f = scenario.model.formation_radius();
  a.plan = plan::plan_global(scenario.environment, a.r_f, scenario.planner.v_op,
                             scenario.planner.T_c);
  write_text_file(out_path, plan_to_json(a).dump(1) + "\n");
  write_text_file(sibling_svg(out_path), svg_plan(scenario.environment, a.plan));
  out << "path vertices " << a.plan.path.size() << ", corridors " << a.plan.corridors.size()
      << ", reference samples " << a.plan.samples.size() << "\nwrote " << out_path << "\n";
  return kExitOk;
}

int simulate_cmd(const std::string& scenario_path, const std::string& plan_path,
                 const std::string& out_dir, const std::vector<std::string>& overrides,
                 std::uint64_t seed, bool perturb, std::ostream& out) {
  require_file(scenario_path);
  const auto scenario = load_scenario(scenario_path, overrides);
  std::optional<PlanArtifact> artifact;
  if (!plan_path.empty()) {
    require_file(plan_path);
    artifact = plan_from_json(read_json_file(plan_path));
    check_plan_matches(*artifact, scenario);
  }
  sim::SimOptions opts;
  opts.seed = seed;
  opts.perturb_velocity = perturb;
  const auto run = sim::run_scenario(scenario, opts, artifact ? &artifact->plan : nullptr);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  {
    std::ostringstream csv;
    write_trajectory_csv(csv, scenario.model, run.states, run.controls, scenario.planner.T_c);
    write_text_file((dir / "trajectory.csv").string(), csv.str());
  }
  write_text_file((dir / "metrics.json").string(), metrics_to_json(run.metrics).dump(1) + "\n");
  {
    std::ostringstream log;
    write_solver_log(log, run.metrics.horizons);
    write_text_file((dir / "solver_log.jsonl").string(), log.str());
  }

  const auto& m = run.metrics;
  std::vector<Point2> com;
  for (const auto& p : m.object_pose) com.emplace_back(p[0], p[1]);
  write_text_file((dir / "plan.svg").string(), svg_plan(scenario.environment, run.plan, com));
  write_text_file((dir / "margins.svg").string(),
                  svg_line_plot("Safety margin", "t [s]", m.t,
                                {{"static d_margin [m]", m.d_static},
                                 {"dynamic d_margin [m]", m.d_dynamic}},
                                true));
  std::vector<double> ox, oy, oz, opsi;
  for (const auto& p : m.object_pose) {
    ox.push_back(p[0]);
    oy.push_back(p[1]);
    oz.push_back(p[2]);
    opsi.push_back(p[3]);
  }
  write_text_file((dir / "object_pose.svg").string(),
                  svg_line_plot("Object pose", "t [s]", m.t,
                                {{"x [m]", ox}, {"y [m]", oy}, {"z [m]", oz}, {"psi [rad]", opsi}}));
  std::vector<Series> ee;
  std::size_t pair = 0;
  for (std::size_t i = 0; i < scenario.model.size(); ++i) {
    for (std::size_t j = i + 1; j < scenario.model.size(); ++j, ++pair) {
      Series s{"EE " + std::to_string(i) + "-" + std::to_string(j) + " [m]", {}};
      for (const auto& row : m.ee_distance) s.y.push_back(row[pair]);
      ee.push_back(std::move(s));
    }
  }
  write_text_file((dir / "ee_distance.svg").string(),
                  svg_line_plot("End-effector distance", "t [s]", m.t, ee));

  out << "completed " << (m.completed ? "true" : "false");
  if (!m.diagnostic.empty()) out << " (" << m.diagnostic << ")";
  out << "\nsteps " << m.t.size() - 1 << ", duration " << m.duration << " s\n"
      << "min static margin " << m.min_d_static() << " m, min dynamic margin "
      << m.min_d_dynamic() << " m\nwrote " << out_dir << "\n";
  return kExitOk;
}

int report_cmd(const std::vector<std::string>& patterns, std::ostream& out) {
  const auto files = expand(patterns);
  if (files.empty()) throw NoInput("no metrics files match");
  std::vector<std::vector<double>> runs;
  for (const auto& f : files) {
    const Json j = read_json_file(f);
    if (!j.contains("solve_times") || !j.at("solve_times").is_array()) {
      throw Error(ErrorCode::kInvalidInput, f + " has no solve_times");
    }
    runs.push_back(j.at("solve_times").get<std::vector<double>>());
  }
  out << format_summary(summarize_solve_times(runs));
  return kExitOk;
}

int convexify_cmd(const std::string& input_path, const std::string& out_path, std::ostream& out) {
  require_file(input_path);
  const Json j = read_json_file(input_path);
  auto pt = [](const Json& p) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw Error(ErrorCode::kInvalidInput, "a point must be [x, y]");
    }
    return Point2(p[0].get<double>(), p[1].get<double>());
  };
  if (!j.contains("polygon") || !j.contains("segment") || j.at("segment").size() != 2) {
    throw Error(ErrorCode::kInvalidInput, "expected 'polygon' and a two-point 'segment'");
  }
  std::vector<Point2> ring;
  for (const auto& p : j.at("polygon")) ring.push_back(pt(p));
  const geom::Polygon poly(std::move(ring));
  const Point2 a = pt(j.at("segment")[0]), b = pt(j.at("segment")[1]);
  const double r_f = j.value("r_f", 0.0);
  plan::ConvexifyTrace trace;
  const auto convex = plan::convexify_polygon(poly, a, b, r_f, &trace);
  const auto region = plan::ConvexRegion::from_polygon(convex);
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < region.A.rows(); ++i) {
    rows.push_back({region.A(i, 0), region.A(i, 1), region.b[i]});
  }
  Json verts = Json::array();
  for (const auto& v : convex.vertices()) verts.push_back({v.x(), v.y()});
  const Json result{{"halfplanes", rows},
                    {"vertices", verts},
                    {"reflex_counts", trace.reflex_counts},
                    {"ellipse_cuts", trace.ellipse_cuts},
                    {"fallback_cuts", trace.fallback_cuts}};
  if (out_path.empty()) {
    out << result.dump(1) << "\n";
  } else {
    write_text_file(out_path, result.dump(1) + "\n");
    write_text_file(sibling_svg(out_path), svg_convex_region(poly, region, a, b));
    out << "half-planes " << region.rows() << "\nwrote " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Offline and receding-horizon motion planning for a team of mobile manipulators"};
  app.require_subcommand(1);

  std::string scenario, out_path, plan_path, input;
  std::vector<std::string> overrides, patterns;
  std::uint64_t seed = 0;
  bool perturb = false;

  auto* plan_sub = app.add_subcommand("plan-global", "Shortest path, corridors and reference");
  plan_sub->add_option("scenario", scenario, "Scenario JSON")->required();
  plan_sub->add_option("--out", out_path, "Plan artifact JSON")->required();
  plan_sub->add_option("--params-override", overrides, "key.path=value, repeatable");

  auto* sim_sub = app.add_subcommand("simulate", "Closed-loop run of the scenario");
  sim_sub->add_option("scenario", scenario, "Scenario JSON")->required();
  sim_sub->add_option("--plan", plan_path, "Plan artifact from plan-global");
  sim_sub->add_option("--out", out_path, "Output directory")->required();
  sim_sub->add_option("--params-override", overrides, "key.path=value, repeatable");
  sim_sub->add_option("--seed", seed, "Seed for the obstacle velocity perturbation");
  sim_sub->add_flag("--perturb", perturb, "Perturb obstacle velocities by up to 20%");

  auto* report_sub = app.add_subcommand("report", "Solve-time summary over metrics files");
  report_sub->add_option("metrics", patterns, "Metrics files or glob patterns");

  auto* cvx_sub = app.add_subcommand("convexify", "Convexify one free-space polygon");
  cvx_sub->add_option("input", input, "JSON with polygon, segment and r_f")->required();
  cvx_sub->add_option("--out", out_path, "Output JSON (stdout if omitted)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*plan_sub) return plan_global_cmd(scenario, out_path, overrides, out);
    if (*sim_sub) return simulate_cmd(scenario, plan_path, out_path, overrides, seed, perturb, out);
    if (*report_sub) return report_cmd(patterns, out);
    if (*cvx_sub) return convexify_cmd(input, out_path, out);
  } catch (const NoInput& e) {
    err << e.what() << "\n";
    return kExitNoInput;
  } catch (const Error& e) {
    err << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kNoPath:
      case ErrorCode::kInfeasibleEndpoint: return kExitNoPath;
      case ErrorCode::kStalePlan: return kExitStalePlan;
      default: return kExitFailure;
    }
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace mmr::io
