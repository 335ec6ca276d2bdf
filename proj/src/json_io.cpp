#include "bexp/json_io.hpp"

#include <fstream>

namespace bexp {

json to_json(const ArrayXd& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

ArrayXd array_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(what + ": expected a non-empty array");
  ArrayXd v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const json& x : j) {
    if (!x.is_number()) throw std::invalid_argument(what + ": expected numbers");
    v[i++] = x.get<double>();
  }
  return v;
}

json to_json(const BeliefState& state) {
  return json{{"mu", to_json(state.mu)}, {"sigma2", to_json(state.sigma2)}};
}

BeliefState belief_from_json(const json& j) {
  if (!j.contains("mu") || !j.contains("sigma2"))
    throw std::invalid_argument("belief JSON needs \"mu\" and \"sigma2\"");
  BeliefState state{array_from_json(j.at("mu"), "mu"),
                    array_from_json(j.at("sigma2"), "sigma2")};
  state.validate();
  return state;
}

json to_json(const Allocation& alloc) { return to_json(alloc.p); }

json to_json(const Trajectory& traj) {
  json epochs = json::array();
  for (std::size_t t = 0; t < traj.epochs.size(); ++t) {
    const EpochRecord& e = traj.epochs[t];
    json counts = json::array();
    for (Index a = 0; a < e.counts.size(); ++a) counts.push_back(e.counts[a]);
    epochs.push_back(json{{"t", t},
                          {"allocation", to_json(e.alloc)},
                          {"mu", to_json(e.belief_after.mu)},
                          {"sigma2", to_json(e.belief_after.sigma2)},
                          {"agg", to_json(e.agg.y)},
                          {"counts", counts}});
  }
  return json{{"seed", traj.seed},
              {"selected_arm", traj.selected},
              {"simple_regret", traj.regret},
              {"epochs", epochs}};
}

SolveInput solve_input_from_json(const json& j) {
  SolveInput input;
  input.state = belief_from_json(j);
  if (j.contains("s2"))
    input.s2 = array_from_json(j.at("s2"), "s2");
  else
    input.s2 = ArrayXd::Ones(input.state.num_arms());
  if (input.s2.size() != input.state.num_arms())
    throw std::invalid_argument("solve input: s2 dimension mismatch");
  if (j.contains("budget")) input.budget = j.at("budget").get<double>();
  return input;
}

EnvironmentSpec env_from_json(const json& j, double bn) {
  const std::string type = j.at("type").get<std::string>();
  const double varsigma = j.value("varsigma", 0.0);
  auto apply_baseline = [&](EnvironmentSpec spec) {
    if (j.contains("baseline"))
      spec.reward_baseline = j.at("baseline").get<double>();
    spec.validate();
    return spec;
  };

  if (type == "beta-bernoulli") {
    if (j.contains("beta_alpha")) {
      EnvironmentSpec spec;
      spec.kind = RewardKind::Bernoulli;
      spec.beta_alpha = array_from_json(j.at("beta_alpha"), "beta_alpha");
      spec.beta_beta = array_from_json(j.at("beta_beta"), "beta_beta");
      spec.num_arms = spec.beta_alpha.size();
      spec.s2_model = ArrayXd::Constant(spec.num_arms, 0.25);
      spec.varsigma = varsigma;
      spec.validate();
      spec.reward_baseline = spec.prior_mean().mean();
      return apply_baseline(std::move(spec));
    }
    const Index k = j.at("K").get<Index>();
    const PriorFamily family =
        parse_prior_family(j.value("prior", std::string("flat")));
    EnvironmentSpec spec = EnvironmentSpec::beta_bernoulli(family, k, bn);
    spec.varsigma = varsigma;
    return apply_baseline(std::move(spec));
  }

  if (type == "gamma-gumbel") {
    const double s2 = j.value("s2", 1.0);
    if (j.contains("gamma_shape")) {
      EnvironmentSpec spec;
      spec.kind = RewardKind::Gumbel;
      spec.gamma_shape = array_from_json(j.at("gamma_shape"), "gamma_shape");
      spec.gamma_scale = array_from_json(j.at("gamma_scale"), "gamma_scale");
      spec.num_arms = spec.gamma_shape.size();
      spec.s2_model = ArrayXd::Constant(spec.num_arms, s2);
      spec.varsigma = varsigma;
      spec.validate();
      spec.reward_baseline = spec.prior_mean().mean();
      return apply_baseline(std::move(spec));
    }
    const Index k = j.at("K").get<Index>();
    const PriorFamily family =
        parse_prior_family(j.value("prior", std::string("flat")));
    return apply_baseline(
        EnvironmentSpec::gamma_gumbel(family, k, bn, s2, varsigma));
  }

  if (type == "gaussian-limit") {
    ArrayXd mu0 = array_from_json(j.at("mu0"), "mu0");
    ArrayXd sigma0 = array_from_json(j.at("sigma0_sq"), "sigma0_sq");
    ArrayXd s2 = j.contains("s2") && j.at("s2").is_array()
                     ? array_from_json(j.at("s2"), "s2")
                     : ArrayXd::Constant(mu0.size(), j.value("s2", 1.0));
    return EnvironmentSpec::gaussian_limit(std::move(mu0), std::move(sigma0),
                                           std::move(s2));
  }

  throw std::invalid_argument("unknown environment type \"" + type + "\"");
}

MeasurementModel model_from_json(const json& schedule, const ArrayXd& s2_model) {
  MeasurementModel model;
  model.s2 = s2_model;
  model.n = schedule.value("n", std::int64_t{1});
  if (schedule.contains("b") && schedule.at("b").is_array()) {
    model.batch_fracs = array_from_json(schedule.at("b"), "b");
  } else {
    const Index horizon = schedule.at("T").get<Index>();
    const double b = schedule.value("b", 1.0);
    model.batch_fracs = ArrayXd::Constant(horizon, b);
  }
  model.validate();
  return model;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  const json& schedule = j.at("schedule");
  const double b0 = schedule.contains("b") && schedule.at("b").is_array()
                        ? schedule.at("b").at(0).get<double>()
                        : schedule.value("b", 1.0);
  const double bn = b0 * static_cast<double>(schedule.value("n", std::int64_t{1}));
  cfg.env = env_from_json(j.at("env"), bn);
  cfg.model = model_from_json(schedule, cfg.env.s2_model);
  for (const json& p : j.at("policies"))
    cfg.policies.push_back(p.get<std::string>());
  cfg.reps = j.value("reps", 100);
  cfg.master_seed = j.value("seed", std::uint64_t{0});
  if (j.contains("se_grid")) {
    const json& grid = j.at("se_grid");
    if (grid.contains("c")) {
      cfg.se_grid.c.clear();
      for (const json& v : grid.at("c")) cfg.se_grid.c.push_back(v.get<double>());
    }
    if (grid.contains("delta")) {
      cfg.se_grid.delta.clear();
      for (const json& v : grid.at("delta"))
        cfg.se_grid.delta.push_back(v.get<double>());
    }
  }
  cfg.threads = j.value("threads", 0);
  cfg.validate();
  return cfg;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open \"" + path + "\"");
  json j;
  in >> j;
  return j;
}

}  // namespace bexp
