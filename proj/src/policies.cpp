#include "bexp/policies.hpp"

#include "bexp/belief.hpp"
#include "bexp/normal.hpp"
#include "bexp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bexp {

namespace {

constexpr int kTopTwoResampleCap = 100;

Index argmax_lowest(const ArrayXd& v) {
  Index best = 0;
  v.maxCoeff(&best);
  return best;
}

Index runner_up(const ArrayXd& v, Index leader) {
  Index second = leader == 0 ? 1 : 0;
  for (Index a = 0; a < v.size(); ++a)
    if (a != leader && v[a] > v[second]) second = a;
  return second;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

[[noreturn]] void bad_spec(const std::string& text, const std::string& why) {
  throw std::invalid_argument("policy spec \"" + text + "\": " + why);
}

double parse_double(const std::string& text, const std::string& key,
                    const std::string& val) {
  try {
    return std::stod(val);
  } catch (const std::exception&) {
    bad_spec(text, "bad value for \"" + key + "\"");
  }
}

int parse_int(const std::string& text, const std::string& key,
              const std::string& val) {
  try {
    return std::stoi(val);
  } catch (const std::exception&) {
    bad_spec(text, "bad value for \"" + key + "\"");
  }
}

}  // namespace

PolicySpec PolicySpec::parse(const std::string& text) {
  PolicySpec spec;
  spec.text = text;
  const std::vector<std::string> parts = split(text, ':');
  if (parts.empty()) bad_spec(text, "empty");
  const std::string& name = parts.front();

  if (name == "uniform") spec.kind = PolicyKind::Uniform;
  else if (name == "se") spec.kind = PolicyKind::SuccessiveElimination;
  else if (name == "ts") spec.kind = PolicyKind::GaussianTS;
  else if (name == "ttts") spec.kind = PolicyKind::TopTwoTS;
  else if (name == "myopic") spec.kind = PolicyKind::Myopic;
  else if (name == "rho") spec.kind = PolicyKind::Rho;
  else if (name == "dts") spec.kind = PolicyKind::Dts;
  else if (name == "oracle-ts") spec.kind = PolicyKind::OracleTS;
  else if (name == "oracle-ttts") spec.kind = PolicyKind::OracleTopTwoTS;
  else bad_spec(text, "unknown policy \"" + name + "\"");

  spec.se_grid = (spec.kind == PolicyKind::SuccessiveElimination) &&
                 parts.size() == 1;

  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) bad_spec(text, "expected key=value");
    const std::string key = parts[i].substr(0, eq);
    const std::string val = parts[i].substr(eq + 1);
    if (key == "c") spec.c = parse_double(text, key, val);
    else if (key == "delta") spec.delta = parse_double(text, key, val);
    else if (key == "beta") spec.beta = parse_double(text, key, val);
    else if (key == "M") spec.mc_samples = parse_int(text, key, val);
    else if (key == "N") spec.planner.num_samples = parse_int(text, key, val);
    else if (key == "iters") spec.planner.max_iters = parse_int(text, key, val);
    else if (key == "step") spec.planner.step_size = parse_double(text, key, val);
    else if (key == "qmc") spec.planner.qmc = (val == "1" || val == "true");
    else bad_spec(text, "unknown key \"" + key + "\"");
  }

  detail::require(spec.c > 0.0, "policy spec: c must be positive");
  detail::require(spec.delta > 0.0 && spec.delta < 1.0,
                  "policy spec: delta must lie in (0, 1)");
  detail::require(spec.beta > 0.0 && spec.beta <= 1.0,
                  "policy spec: beta must lie in (0, 1]");
  detail::require(spec.mc_samples >= 1, "policy spec: M must be >= 1");
  return spec;
}

Allocation uniform_allocation(const std::vector<Index>& active, Index num_arms) {
  detail::require(!active.empty(), "uniform_allocation: empty active set");
  ArrayXd p = ArrayXd::Zero(num_arms);
  const double w = 1.0 / static_cast<double>(active.size());
  for (Index a : active) {
    detail::require(a >= 0 && a < num_arms, "uniform_allocation: arm out of range");
    p[a] = w;
  }
  return Allocation{p};
}

SeStep successive_elimination_step(const HistorySummary& hist, double c,
                                   double delta, const ArrayXd& s,
                                   const std::vector<Index>& active) {
  detail::require(!active.empty(), "successive elimination: empty active set");
  const Index k = hist.counts.size();
  const double num_arms = static_cast<double>(k);

  ArrayXd lcb(k), ucb(k);
  double max_lcb = -std::numeric_limits<double>::infinity();
  for (Index a : active) {
    const double n = hist.counts[a];
    if (n < 1.0) {
      // Unsampled arms keep an unbounded interval and are never eliminated.
      lcb[a] = -std::numeric_limits<double>::infinity();
      ucb[a] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double width = c * s[a] * std::sqrt(std::log(n * n * num_arms / delta) / n);
    lcb[a] = hist.mean_rewards[a] - width;
    ucb[a] = hist.mean_rewards[a] + width;
    max_lcb = std::max(max_lcb, lcb[a]);
  }

  SeStep out;
  for (Index a : active)
    if (!(ucb[a] < max_lcb)) out.active.push_back(a);
  if (out.active.empty()) out.active = active;  // unreachable guard
  out.alloc = uniform_allocation(out.active, k);
  return out;
}

Allocation gaussian_ts_allocation(const BeliefState& state, std::int64_t m,
                                  std::uint64_t seed) {
  state.validate();
  detail::require(m >= 1, "gaussian_ts_allocation: need m >= 1");
  const Index k = state.num_arms();
  const ArrayXd sigma = state.sigma2.sqrt();
  ArrayXd wins = ArrayXd::Zero(k);
  ArrayXd theta(k);
  for (std::int64_t round = 0; round < m; ++round) {
    RngStream rng(seed, static_cast<std::uint64_t>(round));
    for (Index a = 0; a < k; ++a) theta[a] = state.mu[a] + sigma[a] * rng.normal();
    wins[argmax_lowest(theta)] += 1.0;
  }
  return Allocation{wins / static_cast<double>(m)};
}

Allocation top_two_ts_allocation(const BeliefState& state, double beta,
                                 std::int64_t m, std::uint64_t seed) {
  state.validate();
  detail::require(beta > 0.0 && beta <= 1.0,
                  "top_two_ts_allocation: beta must lie in (0, 1]");
  detail::require(m >= 1, "top_two_ts_allocation: need m >= 1");
  const Index k = state.num_arms();
  if (k == 1) return Allocation{ArrayXd::Ones(1)};

  const ArrayXd sigma = state.sigma2.sqrt();
  ArrayXd wins = ArrayXd::Zero(k);
  ArrayXd theta(k), fresh(k);
  for (std::int64_t round = 0; round < m; ++round) {
    RngStream rng(seed, static_cast<std::uint64_t>(round));
    for (Index a = 0; a < k; ++a) theta[a] = state.mu[a] + sigma[a] * rng.normal();
    const Index leader = argmax_lowest(theta);
    if (rng.uniform() < beta) {
      wins[leader] += 1.0;
      continue;
    }
    Index credit = -1;
    for (int attempt = 0; attempt < kTopTwoResampleCap; ++attempt) {
      for (Index a = 0; a < k; ++a)
        fresh[a] = state.mu[a] + sigma[a] * rng.normal();
      const Index challenger = argmax_lowest(fresh);
      if (challenger != leader) {
        credit = challenger;
        break;
      }
    }
    wins[credit >= 0 ? credit : runner_up(theta, leader)] += 1.0;
  }
  return Allocation{wins / static_cast<double>(m)};
}

Allocation myopic_allocation(const BeliefState& state, double b_t,
                             const ArrayXd& s2, const PlannerConfig& cfg) {
  return solve_rho(state, b_t, s2, cfg).allocation;
}

Allocation rho_policy_step(const BeliefState& state, Index t,
                           const MeasurementModel& model,
                           const PlannerConfig& cfg) {
  detail::require(t >= 0 && t < model.horizon(), "rho_policy_step: epoch out of range");
  return solve_rho(state, model.residual_budget(t), model.s2, cfg).allocation;
}

ArrayXd dts_indices(const BeliefState& state, std::int64_t m,
                    std::uint64_t seed) {
  state.validate();
  detail::require(state.num_arms() >= 2, "dts index needs at least two arms");
  detail::require(m >= 1, "dts index: need m >= 1");
  const Index k = state.num_arms();
  const ArrayXd sigma = state.sigma2.sqrt();
  ArrayXd acc = ArrayXd::Zero(k);
  ArrayXd theta(k);
  RngStream rng(seed, 0);
  for (std::int64_t round = 0; round < m; ++round) {
    for (Index a = 0; a < k; ++a) theta[a] = state.mu[a] + sigma[a] * rng.normal();
    const Index leader = argmax_lowest(theta);
    const double best = theta[leader];
    const double second = theta[runner_up(theta, leader)];
    for (Index a = 0; a < k; ++a) {
      const double rival = (a == leader) ? second : best;
      acc[a] += normal_pdf((rival - state.mu[a]) / sigma[a]) / sigma[a];
    }
  }
  return acc / static_cast<double>(m);
}

double dts_index(const BeliefState& state, Index arm, std::int64_t m,
                 std::uint64_t seed) {
  detail::require(arm >= 0 && arm < state.num_arms(), "dts_index: arm out of range");
  return dts_indices(state, m, seed)[arm];
}

Allocation dts_allocation(const BeliefState& state, const ArrayXd& s2,
                          std::int64_t m, std::uint64_t seed) {
  detail::require(s2.size() == state.num_arms(), "dts_allocation: dimension mismatch");
  const ArrayXd weights = s2.sqrt() * dts_indices(state, m, seed).sqrt();
  const double total = weights.sum();
  detail::require(total > 0.0, "dts_allocation: degenerate index estimate");
  return Allocation{weights / total};
}

namespace {

Allocation oracle_bb_sample(const ArrayXd& successes, const ArrayXd& failures,
                            const ArrayXd& prior_alpha, const ArrayXd& prior_beta,
                            double beta, bool top_two, std::int64_t m,
                            std::uint64_t seed) {
  const Index k = successes.size();
  detail::require(failures.size() == k && prior_alpha.size() == k &&
                      prior_beta.size() == k,
                  "oracle TS: dimension mismatch");
  detail::require((successes >= 0.0).all() && (failures >= 0.0).all(),
                  "oracle TS: negative counts");
  detail::require((prior_alpha > 0.0).all() && (prior_beta > 0.0).all(),
                  "oracle TS: prior parameters must be positive");
  detail::require(m >= 1, "oracle TS: need m >= 1");
  if (k == 1) return Allocation{ArrayXd::Ones(1)};

  const ArrayXd alpha = prior_alpha + successes;
  const ArrayXd beta_param = prior_beta + failures;
  ArrayXd wins = ArrayXd::Zero(k);
  ArrayXd theta(k), fresh(k);
  for (std::int64_t round = 0; round < m; ++round) {
    RngStream rng(seed, static_cast<std::uint64_t>(round));
    for (Index a = 0; a < k; ++a) theta[a] = rng.beta(alpha[a], beta_param[a]);
    const Index leader = argmax_lowest(theta);
    if (!top_two || rng.uniform() < beta) {
      wins[leader] += 1.0;
      continue;
    }
    Index credit = -1;
    for (int attempt = 0; attempt < kTopTwoResampleCap; ++attempt) {
      for (Index a = 0; a < k; ++a) fresh[a] = rng.beta(alpha[a], beta_param[a]);
      const Index challenger = argmax_lowest(fresh);
      if (challenger != leader) {
        credit = challenger;
        break;
      }
    }
    wins[credit >= 0 ? credit : runner_up(theta, leader)] += 1.0;
  }
  return Allocation{wins / static_cast<double>(m)};
}

}  // namespace

Allocation oracle_bb_ts_step(const ArrayXd& successes, const ArrayXd& failures,
                             const ArrayXd& prior_alpha,
                             const ArrayXd& prior_beta, std::int64_t m,
                             std::uint64_t seed) {
  return oracle_bb_sample(successes, failures, prior_alpha, prior_beta, 1.0,
                          /*top_two=*/false, m, seed);
}

Allocation oracle_bb_top_two_ts_step(const ArrayXd& successes,
                                     const ArrayXd& failures,
                                     const ArrayXd& prior_alpha,
                                     const ArrayXd& prior_beta, double beta,
                                     std::int64_t m, std::uint64_t seed) {
  return oracle_bb_sample(successes, failures, prior_alpha, prior_beta, beta,
                          /*top_two=*/true, m, seed);
}

PolicyEngine::PolicyEngine(PolicySpec spec, MeasurementModel model)
    : spec_(std::move(spec)), model_(std::move(model)) {
  model_.validate();
  reset();
}

void PolicyEngine::set_oracle_prior(ArrayXd alpha, ArrayXd beta) {
  oracle_alpha_ = std::move(alpha);
  oracle_beta_ = std::move(beta);
}

void PolicyEngine::reset() {
  active_.resize(model_.num_arms());
  for (Index a = 0; a < model_.num_arms(); ++a) active_[a] = a;
}

Allocation PolicyEngine::step(const HistorySummary& hist, std::uint64_t seed) {
  const Index k = model_.num_arms();
  PlannerConfig cfg = spec_.planner;
  cfg.seed = seed;

  switch (spec_.kind) {
    case PolicyKind::Uniform:
      return Allocation::uniform(k);
    case PolicyKind::SuccessiveElimination: {
      SeStep out = successive_elimination_step(hist, spec_.c, spec_.delta,
                                               model_.s2.sqrt(), active_);
      active_ = out.active;
      return out.alloc;
    }
    case PolicyKind::GaussianTS:
      return gaussian_ts_allocation(hist.belief, spec_.mc_samples, seed);
    case PolicyKind::TopTwoTS:
      return top_two_ts_allocation(hist.belief, spec_.beta, spec_.mc_samples,
                                   seed);
    case PolicyKind::Myopic:
      return myopic_allocation(hist.belief, hist.next_batch_frac, model_.s2,
                               cfg);
    case PolicyKind::Rho:
      return rho_policy_step(hist.belief, hist.epoch, model_, cfg);
    case PolicyKind::Dts:
      return dts_allocation(hist.belief, model_.s2, spec_.mc_samples, seed);
    case PolicyKind::OracleTS:
    case PolicyKind::OracleTopTwoTS: {
      detail::require(oracle_alpha_.has_value(),
                      "oracle policy requires a Beta-Bernoulli environment");
      if (spec_.kind == PolicyKind::OracleTS)
        return oracle_bb_ts_step(hist.successes, hist.failures, *oracle_alpha_,
                                 *oracle_beta_, spec_.mc_samples, seed);
      return oracle_bb_top_two_ts_step(hist.successes, hist.failures,
                                       *oracle_alpha_, *oracle_beta_,
                                       spec_.beta, spec_.mc_samples, seed);
    }
  }
  throw std::logic_error("PolicyEngine: unhandled policy kind");
}

}  // namespace bexp
