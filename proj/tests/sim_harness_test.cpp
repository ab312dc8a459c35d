#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mmr/sim_harness.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

namespace mmr {
namespace {

using geom::Point2;

sim::Scenario straight_scenario() {
  sim::Scenario s;
  s.name = "straight";
  s.environment.boundary = geom::make_rectangle(0, 0, 6, 4);
  s.environment.start = {1.0, 2.0};
  s.environment.goal = {4.0, 2.0};
  s.model = robot::default_two_robot_model();
  return s;
}

plan::ConvexRegion box_region(double x0, double y0, double x1, double y1) {
  return plan::ConvexRegion::from_polygon(geom::make_rectangle(x0, y0, x1, y1));
}

// ---------------------------------------------------------------- margins

TEST(Margins, CorridorSlackMinusRadius) {
  const std::vector<robot::Circle> body{{{0.5, 1.0}, 0.2}};
  const std::vector<plan::ConvexRegion> corr{box_region(0, 0, 4, 2)};
  const auto m = sim::compute_margins(body, corr, {});
  EXPECT_NEAR(m.d_static, 0.3, 1e-12);
}

TEST(Margins, DynamicClearance) {
  const std::vector<robot::Circle> body{{{0.0, 0.0}, 0.2}};
  const std::vector<nmpc::DynamicObstacle> obs{{{1.0, 0.0}, {0, 0}, 0.3}};
  const auto m = sim::compute_margins(body, {}, obs);
  EXPECT_NEAR(m.d_dynamic, 0.5, 1e-12);
}

TEST(Margins, NoObstaclesGiveInfiniteDynamicMargin) {
  const std::vector<robot::Circle> body{{{0.5, 1.0}, 0.2}};
  const std::vector<plan::ConvexRegion> corr{box_region(0, 0, 4, 2)};
  EXPECT_TRUE(std::isinf(sim::compute_margins(body, corr, {}).d_dynamic));
}

TEST(Margins, BestCorridorCounts) {
  // Near the right edge of the first box but deep inside the second.
  const std::vector<robot::Circle> body{{{3.9, 1.0}, 0.2}};
  const std::vector<plan::ConvexRegion> corr{box_region(0, 0, 4, 2), box_region(3, -1, 7, 3)};
  EXPECT_NEAR(sim::compute_margins(body, corr, {}).d_static, 0.7, 1e-12);
}

// Dense sampling of the physical bodies never finds a collision when both
// margins are positive.
TEST(Margins, SoundAgainstDenseBodySampling) {
  const auto env = testing::corridor_scene();
  const auto model = robot::default_two_robot_model();
  const auto plan = plan::plan_global(env, model.formation_radius(), 0.15, 0.25);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.3, 9.7), uang(-M_PI, M_PI);
  int positive = 0, negative = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto cfg = robot::place_formation(model, {ux(rng), ux(rng)}, uang(rng));
    const std::vector<nmpc::DynamicObstacle> obs{{{ux(rng), ux(rng)}, {0, 0}, 0.3}};
    const auto m = sim::compute_margins(model, cfg, plan.corridors, obs);
    if (!(m.d_static > 0.0 && m.d_dynamic > 0.0)) {
      ++negative;
      continue;
    }
    ++positive;
    // Independent check: 500 samples along each body outline.
    std::vector<Point2> samples;
    auto ring = [&](const std::vector<Point2>& pts, bool closed) {
      const std::size_t edges = closed ? pts.size() : pts.size() - 1;
      const int per_edge = 500 / static_cast<int>(edges) + 1;
      for (std::size_t e = 0; e < edges; ++e) {
        const Point2 a = pts[e], b = pts[(e + 1) % pts.size()];
        for (int k = 0; k < per_edge; ++k) samples.push_back(a + (b - a) * (k / double(per_edge)));
      }
      if (!closed) samples.push_back(pts.back());
    };
    for (std::size_t i = 0; i < model.size(); ++i) {
      const auto& s = cfg.robots[i];
      const Eigen::Rotation2Dd R(s.phi);
      std::vector<Point2> fp;
      for (const auto& v : model.robots[i].footprint.vertices()) fp.push_back(s.p + R * v);
      ring(fp, true);
      ring(robot::projected_joints(s, model.robots[i].dh), false);
    }
    const Eigen::Rotation2Dd Ro(cfg.psi);
    std::vector<Point2> of;
    for (const auto& v : model.object_footprint.vertices()) of.push_back(cfg.p.head<2>() + Ro * v);
    ring(of, true);

    for (const auto& p : samples) {
      ASSERT_TRUE(testing::inside_ring(testing::ring_of(env.boundary), p));
      for (const auto& o : env.obstacles) {
        ASSERT_FALSE(testing::inside_ring(testing::ring_of(o), p)) << "trial " << trial;
      }
      ASSERT_GT((p - obs[0].p).norm(), obs[0].r) << "trial " << trial;
    }
  }
  EXPECT_GE(positive, 50);
  EXPECT_GE(negative, 50);
}

// ------------------------------------------------------------------- feed

TEST(ObstacleFeed, ExactPositions) {
  const std::vector<sim::DynamicObstacle> obs{{{1.0, 2.0}, {0.1, 0.0}, 0.2}};
  const auto f0 = sim::obstacle_feed(0.0, obs, {0, 0}, 10.0);
  ASSERT_EQ(f0.size(), 1u);
  EXPECT_EQ(f0[0].p, Point2(1.0, 2.0));
  const auto f5 = sim::obstacle_feed(5.0, obs, {0, 0}, 10.0);
  EXPECT_NEAR((f5[0].p - Point2(1.5, 2.0)).norm(), 0.0, 1e-15);
  EXPECT_EQ(f5[0].v, Eigen::Vector2d(0.1, 0.0));
}

TEST(ObstacleFeed, SensingRadiusAndWindow) {
  std::vector<sim::DynamicObstacle> obs{{{5.0, 0.0}, {0, 0}, 0.2}};
  EXPECT_TRUE(sim::obstacle_feed(0.0, obs, {0, 0}, 3.0).empty());
  EXPECT_EQ(sim::obstacle_feed(0.0, obs, {0, 0}, 6.0).size(), 1u);
  obs[0].t_start = 2.0;
  obs[0].t_end = 4.0;
  EXPECT_TRUE(sim::obstacle_feed(1.0, obs, {0, 0}, 6.0).empty());
  EXPECT_EQ(sim::obstacle_feed(3.0, obs, {0, 0}, 6.0).size(), 1u);
  EXPECT_TRUE(sim::obstacle_feed(4.5, obs, {0, 0}, 6.0).empty());
}

TEST(ObstacleFeed, PerturbationIsSeededAndHidden) {
  const std::vector<sim::DynamicObstacle> obs{{{0, 0}, {0.1, 0}, 0.2}, {{1, 0}, {0, 0.1}, 0.2}};
  sim::SimOptions o;
  o.perturb_velocity = true;
  o.seed = 11;
  const sim::ObstacleWorld a(obs, o), b(obs, o);
  EXPECT_EQ(a.velocity_scale(), b.velocity_scale());
  for (double s : a.velocity_scale()) {
    EXPECT_GE(s, 0.8);
    EXPECT_LE(s, 1.2);
  }
  o.seed = 12;
  EXPECT_NE(sim::ObstacleWorld(obs, o).velocity_scale(), a.velocity_scale());
  // The planner sees the true position but the nominal velocity.
  const auto seen = a.feed(10.0, {0, 0}, 100.0);
  const auto truth = a.truth(10.0);
  EXPECT_EQ(seen[0].p, truth[0].p);
  EXPECT_EQ(seen[0].v, obs[0].v);
  EXPECT_NEAR(truth[0].v.x(), a.velocity_scale()[0] * 0.1, 1e-15);
}

TEST(Scenario, RejectsBadObstacleRadius) {
  auto s = straight_scenario();
  s.obstacles.push_back({{1, 1}, {0, 0}, 0.0});
  EXPECT_THROW(s.validate(), Error);
}

// ------------------------------------------------------------------- runs

class StraightRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { run_ = new sim::RunResult(sim::run_scenario(straight_scenario())); }
  static void TearDownTestSuite() { delete run_; }
  static sim::RunResult* run_;
};
sim::RunResult* StraightRun::run_ = nullptr;

TEST_F(StraightRun, ReachesGoal) {
  const auto& m = run_->metrics;
  ASSERT_TRUE(m.completed) << m.diagnostic;
  const auto& last = run_->states.back();
  EXPECT_LE((last.p.head<2>() - Point2(4.0, 2.0)).norm(), 0.05);
}

TEST_F(StraightRun, GroundTruthEqualsPrediction) {
  EXPECT_EQ(run_->prediction_mismatch, 0.0);
}

TEST_F(StraightRun, MetricsGridComplete) {
  const auto& m = run_->metrics;
  const std::size_t n = run_->states.size();
  EXPECT_EQ(run_->controls.size() + 1, n);
  for (std::size_t len : {m.t.size(), m.d_static.size(), m.d_dynamic.size(),
                          m.static_clearance.size(), m.tracking_error.size(),
                          m.object_pose.size(), m.ee_distance.size(), m.grasp_residual.size()}) {
    EXPECT_EQ(len, n);
  }
  for (std::size_t k = 0; k < n; ++k) EXPECT_DOUBLE_EQ(m.t[k], 0.25 * k);
  EXPECT_DOUBLE_EQ(m.duration, m.t.back());
  EXPECT_EQ(m.solve_times.size(), m.horizons.size());
}

TEST_F(StraightRun, SafeAndRigid) {
  const auto& m = run_->metrics;
  EXPECT_GT(m.min_d_static(), 0.0);
  EXPECT_TRUE(std::isinf(m.min_d_dynamic()));
  for (double c : m.static_clearance) EXPECT_GT(c, 0.0);
  EXPECT_LE(m.max_ee_deviation(), 5e-3);
  EXPECT_LE(m.max_grasp_residual(), 1e-6);
}

TEST_F(StraightRun, Reproducible) {
  const auto again = sim::run_scenario(straight_scenario());
  const auto& a = run_->metrics;
  const auto& b = again.metrics;
  EXPECT_EQ(a.t, b.t);
  EXPECT_EQ(a.d_static, b.d_static);
  EXPECT_EQ(a.tracking_error, b.tracking_error);
  EXPECT_EQ(a.ee_distance, b.ee_distance);
  ASSERT_EQ(run_->states.size(), again.states.size());
  for (std::size_t k = 0; k < again.states.size(); ++k) {
    EXPECT_EQ(run_->states[k].p, again.states[k].p);
    for (std::size_t i = 0; i < again.states[k].robots.size(); ++i) {
      EXPECT_EQ(run_->states[k].robots[i].to_vector(), again.states[k].robots[i].to_vector());
    }
  }
}

TEST(Runs, ObstacleOnGoalStalls) {
  auto s = straight_scenario();
  s.obstacles.push_back({{4.0, 2.0}, {0, 0}, 0.3});
  const auto r = sim::run_scenario(s);
  EXPECT_FALSE(r.metrics.completed);
  EXPECT_FALSE(r.metrics.diagnostic.empty());
  // Partial traces are still complete on their grid.
  EXPECT_EQ(r.metrics.t.size(), r.states.size());
  EXPECT_GT(r.metrics.min_d_dynamic(), 0.0);
}

TEST(Runs, BatchMatchesSingleRuns) {
  auto a = straight_scenario();
  auto b = straight_scenario();
  b.environment.goal = {3.0, 2.5};
  const std::vector<sim::Scenario> both{a, b};
  const auto batch = sim::run_batch(both);
  ASSERT_EQ(batch.size(), 2u);
  const auto single = sim::run_scenario(b);
  ASSERT_EQ(batch[1].states.size(), single.states.size());
  EXPECT_EQ(batch[1].states.back().p, single.states.back().p);
  EXPECT_NE(batch[0].states.back().p, batch[1].states.back().p);
}

}  // namespace
}  // namespace mmr
