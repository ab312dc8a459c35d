// Serial versus OpenMP timings of the two parallel kernels.

#include <benchmark/benchmark.h>

#include "mmr/nmpc_planner.hpp"

namespace {

using namespace mmr;

nmpc::HorizonProblem ring_problem(const robot::FormationModel& model, int N) {
  nmpc::HorizonProblem pb;
  pb.N = N;
  pb.initial = robot::place_formation(model, {0.0, 0.0}, 0.0);
  const auto corridor =
      plan::ConvexRegion::from_polygon(geom::make_rectangle(-4, -4, 6, 4));
  for (int k = 0; k <= N; ++k) {
    pb.reference.emplace_back(1.2 * k / N, 0.0);
    pb.corridors.push_back(corridor);
  }
  pb.obstacles.push_back({{2.5, -1.5}, {0.0, 0.15}, 0.15});
  return pb;
}

// Constraint values, Jacobian and Hessian of one horizon NLP.
void BM_HorizonDerivatives(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const auto model = robot::ring_model(static_cast<std::size_t>(state.range(1)), 0.4, 0.4);
  const auto pb = ring_problem(model, 36);
  const nmpc::HorizonNlp nlp(model, pb, parallel);
  const auto guess = nmpc::initial_guess(model, pb);
  const Eigen::VectorXd x = nlp.pack(guess.states, guess.controls);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(nlp.num_eq() + nlp.num_ineq(), 0.1);
  nlp::Derivatives d;
  for (auto _ : state) {
    nlp.derivatives(x, 1.0, y, d);
    benchmark::DoNotOptimize(d.f);
  }
  state.SetLabel(parallel ? "parallel" : "serial");
}
BENCHMARK(BM_HorizonDerivatives)
    ->ArgsProduct({{0, 1}, {2, 5}})
    ->ArgNames({"parallel", "robots"})
    ->Unit(benchmark::kMillisecond);

// A grid of small square obstacles.
plan::Environment grid_room(int per_side) {
  plan::Environment e;
  const double size = 2.0 * per_side + 1.0;
  e.boundary = geom::make_rectangle(0, 0, size, size);
  for (int i = 0; i < per_side; ++i) {
    for (int j = 0; j < per_side; ++j) {
      const double x = 1.0 + 2.0 * i + 0.3 * ((i + j) % 2), y = 1.0 + 2.0 * j;
      e.obstacles.push_back(geom::make_rectangle(x, y, x + 0.6, y + 0.6));
    }
  }
  e.start = {0.5, 0.5};
  e.goal = {size - 0.5, size - 0.5};
  return e;
}

// All-pairs visibility edges.
void BM_VisibilityGraph(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const auto env = grid_room(static_cast<int>(state.range(1)));
  const auto map = plan::build_dilated_map(env, 0.1);
  for (auto _ : state) {
    const auto g = parallel ? plan::build_visibility_graph(map, env.start, env.goal)
                            : plan::build_visibility_graph_serial(map, env.start, env.goal);
    benchmark::DoNotOptimize(g.edges.size());
  }
  state.SetLabel(parallel ? "parallel" : "serial");
}
BENCHMARK(BM_VisibilityGraph)
    ->ArgsProduct({{0, 1}, {3, 5}})
    ->ArgNames({"parallel", "grid"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
