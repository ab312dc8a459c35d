#include "mmr/global_planner.hpp"

namespace mmr::plan {

GlobalPlan plan_global(const Environment& env, double r_f, double v_op,
                       double T_c) {
  GlobalPlan plan;
  plan.path = plan_shortest_path(env, r_f);
  for (std::size_t i = 0; i + 1 < plan.path.size(); ++i) {
    const auto poly = segment_concave_polygon(i, plan.path, env);
    plan.corridors.push_back(convexify(poly, plan.path[i], plan.path[i + 1], r_f));
  }
  plan.control_points = insert_control_points(plan.path, plan.corridors);
  plan.reference = smooth_reference(plan.control_points);
  plan.samples = discretize_reference(plan.reference, v_op, T_c);
  plan.sample_corridor = assign_corridors(plan.samples, plan.corridors);
  return plan;
}

}  // namespace mmr::plan
