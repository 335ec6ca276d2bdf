#pragma once

#include "bexp/bench.hpp"
#include "bexp/planner.hpp"
#include "bexp/sim.hpp"
#include "bexp/types.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace bexp {

using json = nlohmann::json;

json to_json(const ArrayXd& v);
ArrayXd array_from_json(const json& j, const std::string& what);

/// {"mu": [...], "sigma2": [...]}
json to_json(const BeliefState& state);
BeliefState belief_from_json(const json& j);

json to_json(const Allocation& alloc);

json to_json(const Trajectory& traj);

/// Input for the `solve` subcommand: a belief plus the measurement variances
/// and (optionally) the residual budget.
struct SolveInput {
  BeliefState state;
  ArrayXd s2;
  double budget = 0.0;  // 0 means "must come from the command line"
};
SolveInput solve_input_from_json(const json& j);

/// Environment from a config block. Family-based priors are scaled by the
/// batch size b_0 * n taken from the schedule.
EnvironmentSpec env_from_json(const json& j, double bn);

MeasurementModel model_from_json(const json& schedule, const ArrayXd& s2_model);

ExperimentConfig experiment_config_from_json(const json& j);

json load_json_file(const std::string& path);

}  // namespace bexp
