#include "bexp/sim.hpp"

#include "bexp/belief.hpp"

#include <cmath>
#include <stdexcept>

namespace bexp {

namespace {

constexpr double kEulerMascheroni = 0.5772156649015329;

// Stream tags for the per-trajectory substreams.
constexpr std::uint64_t kTagInstance = 1;
constexpr std::uint64_t kTagPolicy = 2;
constexpr std::uint64_t kTagRewards = 3;

ArrayXd family_alpha(PriorFamily family, Index k, double bn) {
  ArrayXd alpha = ArrayXd::Constant(k, bn);
  switch (family) {
    case PriorFamily::Flat:
    case PriorFamily::Custom:
      break;
    case PriorFamily::TopOne:
      alpha[0] = 1.1 * bn;
      break;
    case PriorFamily::TopHalf:
      for (Index a = 0; a < (k + 1) / 2; ++a) alpha[a] = 1.1 * bn;
      break;
    case PriorFamily::Descending:
      for (Index a = 0; a < k; ++a) alpha[a] = bn - static_cast<double>(a);
      detail::require(alpha[k - 1] > 0.0,
                      "descending prior: too many arms for this batch scale");
      break;
  }
  return alpha;
}

}  // namespace

PriorFamily parse_prior_family(const std::string& name) {
  if (name == "flat") return PriorFamily::Flat;
  if (name == "top-one") return PriorFamily::TopOne;
  if (name == "top-half") return PriorFamily::TopHalf;
  if (name == "descending") return PriorFamily::Descending;
  if (name == "custom") return PriorFamily::Custom;
  throw std::invalid_argument("unknown prior family \"" + name + "\"");
}

std::string prior_family_name(PriorFamily family) {
  switch (family) {
    case PriorFamily::Flat: return "flat";
    case PriorFamily::TopOne: return "top-one";
    case PriorFamily::TopHalf: return "top-half";
    case PriorFamily::Descending: return "descending";
    case PriorFamily::Custom: return "custom";
  }
  return "custom";
}

EnvironmentSpec EnvironmentSpec::beta_bernoulli(PriorFamily family, Index k,
                                                double bn) {
  detail::require(k >= 1 && bn > 0.0, "beta_bernoulli: bad arguments");
  EnvironmentSpec spec;
  spec.kind = RewardKind::Bernoulli;
  spec.num_arms = k;
  spec.family = family;
  spec.beta_alpha = family_alpha(family, k, bn);
  spec.beta_beta = ArrayXd::Constant(k, bn);
  // Plug-in variance at the prior mean p = 1/2; fixed and known to policies.
  spec.s2_model = ArrayXd::Constant(k, 0.25);
  spec.reward_baseline = spec.prior_mean().mean();
  return spec;
}

EnvironmentSpec EnvironmentSpec::gamma_gumbel(PriorFamily family, Index k,
                                              double bn, double s2,
                                              double varsigma) {
  detail::require(k >= 1 && bn > 0.0 && s2 > 0.0, "gamma_gumbel: bad arguments");
  EnvironmentSpec spec;
  spec.kind = RewardKind::Gumbel;
  spec.num_arms = k;
  spec.family = family;
  spec.gamma_shape = family_alpha(family, k, bn);
  spec.gamma_scale = ArrayXd::Constant(k, 1.0 / bn);
  spec.s2_model = ArrayXd::Constant(k, s2);
  spec.varsigma = varsigma;
  spec.reward_baseline = spec.prior_mean().mean();
  return spec;
}

EnvironmentSpec EnvironmentSpec::gaussian_limit(ArrayXd mu0, ArrayXd sigma0_sq,
                                                ArrayXd s2) {
  EnvironmentSpec spec;
  spec.kind = RewardKind::GaussianLimit;
  spec.num_arms = mu0.size();
  spec.family = PriorFamily::Custom;
  spec.mu0 = std::move(mu0);
  spec.sigma0_sq = std::move(sigma0_sq);
  spec.s2_model = std::move(s2);
  spec.validate();
  return spec;
}

ArrayXd EnvironmentSpec::prior_mean() const {
  switch (kind) {
    case RewardKind::Bernoulli:
      return beta_alpha / (beta_alpha + beta_beta);
    case RewardKind::Gumbel:
      return gamma_shape * gamma_scale;
    case RewardKind::GaussianLimit:
      return mu0;
  }
  throw std::logic_error("unreachable");
}

ArrayXd EnvironmentSpec::prior_var() const {
  switch (kind) {
    case RewardKind::Bernoulli: {
      const ArrayXd total = beta_alpha + beta_beta;
      return beta_alpha * beta_beta / (total.square() * (total + 1.0));
    }
    case RewardKind::Gumbel:
      return gamma_shape * gamma_scale.square();
    case RewardKind::GaussianLimit:
      return sigma0_sq;
  }
  throw std::logic_error("unreachable");
}

void EnvironmentSpec::validate() const {
  detail::require(num_arms >= 1, "EnvironmentSpec: need at least one arm");
  detail::require(varsigma >= 0.0, "EnvironmentSpec: varsigma must be >= 0");
  detail::require(std::isfinite(reward_baseline),
                  "EnvironmentSpec: non-finite reward baseline");
  detail::require(s2_model.size() == num_arms && (s2_model > 0.0).all(),
                  "EnvironmentSpec: bad model variances");
  switch (kind) {
    case RewardKind::Bernoulli:
      detail::require(beta_alpha.size() == num_arms &&
                          beta_beta.size() == num_arms &&
                          (beta_alpha > 0.0).all() && (beta_beta > 0.0).all(),
                      "EnvironmentSpec: bad Beta prior");
      break;
    case RewardKind::Gumbel:
      detail::require(gamma_shape.size() == num_arms &&
                          gamma_scale.size() == num_arms &&
                          (gamma_shape > 0.0).all() && (gamma_scale > 0.0).all(),
                      "EnvironmentSpec: bad Gamma prior");
      break;
    case RewardKind::GaussianLimit:
      detail::require(mu0.size() == num_arms && sigma0_sq.size() == num_arms &&
                          (sigma0_sq > 0.0).all(),
                      "EnvironmentSpec: bad Gaussian prior");
      break;
  }
}

Instance draw_instance(const EnvironmentSpec& spec, RngStream& rng,
                       std::int64_t n) {
  spec.validate();
  detail::require(n >= 1, "draw_instance: n must be >= 1");
  const Index k = spec.num_arms;
  Instance inst;
  inst.true_means.resize(k);
  switch (spec.kind) {
    case RewardKind::Bernoulli:
      for (Index a = 0; a < k; ++a)
        inst.true_means[a] = rng.beta(spec.beta_alpha[a], spec.beta_beta[a]);
      break;
    case RewardKind::Gumbel:
      for (Index a = 0; a < k; ++a)
        inst.true_means[a] = rng.gamma(spec.gamma_shape[a], spec.gamma_scale[a]);
      break;
    case RewardKind::GaussianLimit:
      for (Index a = 0; a < k; ++a)
        inst.true_means[a] =
            spec.mu0[a] + std::sqrt(spec.sigma0_sq[a]) * rng.normal();
      break;
  }

  inst.true_s2 = spec.s2_model;
  if (spec.varsigma > 0.0)
    for (Index a = 0; a < k; ++a)
      inst.true_s2[a] = spec.s2_model[a] * rng.lognormal(0.0, spec.varsigma);

  // GaussianLimit priors are already on the scaled parameter.
  inst.baseline =
      spec.kind == RewardKind::GaussianLimit ? 0.0 : spec.reward_baseline;
  inst.h = spec.kind == RewardKind::GaussianLimit
               ? inst.true_means
               : std::sqrt(static_cast<double>(n)) *
                     (inst.true_means - inst.baseline);
  return inst;
}

BeliefState matched_gaussian_prior(const EnvironmentSpec& spec,
                                   std::int64_t n) {
  spec.validate();
  if (spec.kind == RewardKind::GaussianLimit)
    return BeliefState{spec.mu0, spec.sigma0_sq};
  detail::require(n >= 1, "matched_gaussian_prior: n must be >= 1");
  const double root_n = std::sqrt(static_cast<double>(n));
  return BeliefState{root_n * (spec.prior_mean() - spec.reward_baseline),
                     static_cast<double>(n) * spec.prior_var()};
}

GumbelParams gumbel_reward_params(double m, double s2) {
  detail::require(s2 > 0.0, "gumbel_reward_params: variance must be positive");
  const double scale = std::sqrt(6.0 * s2) / M_PI;
  return {m - scale * kEulerMascheroni, scale};
}

BatchOutcome sample_batch(const Instance& inst, const Allocation& alloc,
                          double b_t, std::int64_t n, RewardKind kind,
                          RngStream& rng) {
  alloc.validate();
  detail::require(kind != RewardKind::GaussianLimit,
                  "sample_batch: limit environments have no finite batches");
  detail::require(b_t > 0.0 && n >= 1, "sample_batch: bad batch shape");
  const double units_real = b_t * static_cast<double>(n);
  const auto units = static_cast<std::int64_t>(std::llround(units_real));
  detail::require(std::abs(units_real - static_cast<double>(units)) < 1e-9 &&
                      units >= 1,
                  "sample_batch: b_t * n must be a positive integer");

  const Index k = alloc.num_arms();
  BatchOutcome out;
  out.counts.setZero(k);
  ArrayXd reward_sum = ArrayXd::Zero(k);

  for (std::int64_t j = 0; j < units; ++j) {
    const Index arm = rng.categorical(alloc.p);
    out.counts[arm] += 1;
    if (kind == RewardKind::Bernoulli) {
      reward_sum[arm] += rng.bernoulli(inst.true_means[arm]) ? 1.0 : 0.0;
    } else {
      const GumbelParams g =
          gumbel_reward_params(inst.true_means[arm], inst.true_s2[arm]);
      reward_sum[arm] += rng.gumbel(g.location, g.scale);
    }
  }

  out.reward_sums = reward_sum;
  // Aggregates are centered at the known baseline; unsampled arms stay at
  // exactly zero either way.
  out.agg.y = (reward_sum -
               inst.baseline * out.counts.cast<double>().array()) /
              (b_t * std::sqrt(static_cast<double>(n)));
  for (Index a = 0; a < k; ++a)
    if (out.counts[a] == 0) out.agg.y[a] = 0.0;
  return out;
}

double simple_regret(const Instance& inst, Index selected) {
  detail::require(selected >= 0 && selected < inst.true_means.size(),
                  "simple_regret: arm out of range");
  return inst.true_means.maxCoeff() - inst.true_means[selected];
}

namespace {

HistorySummary make_history(const BeliefState& prior, Index k) {
  HistorySummary hist;
  hist.belief = prior;
  hist.counts = ArrayXd::Zero(k);
  hist.mean_rewards = ArrayXd::Zero(k);
  hist.successes = ArrayXd::Zero(k);
  hist.failures = ArrayXd::Zero(k);
  return hist;
}

}  // namespace

Trajectory run_experiment_on_instance(const EnvironmentSpec& spec,
                                      const Instance& inst,
                                      const PolicySpec& policy,
                                      const MeasurementModel& model,
                                      std::uint64_t seed) {
  spec.validate();
  model.validate();
  detail::require(model.num_arms() == spec.num_arms,
                  "run_experiment: model/environment arm mismatch");

  PolicyEngine engine(policy, model);
  if (spec.kind == RewardKind::Bernoulli)
    engine.set_oracle_prior(spec.beta_alpha, spec.beta_beta);

  const Index k = spec.num_arms;
  const Index horizon = model.horizon();
  BeliefState prior = matched_gaussian_prior(spec, model.n);
  HistorySummary hist = make_history(prior, k);

  Trajectory traj;
  traj.seed = seed;
  traj.epochs.reserve(horizon);

  for (Index t = 0; t < horizon; ++t) {
    hist.epoch = static_cast<int>(t);
    hist.remaining_budget = model.residual_budget(t);
    hist.next_batch_frac = model.batch_fracs[t];

    Allocation alloc;
    try {
      alloc = engine.step(hist, seed_combine(seed, {kTagPolicy, static_cast<std::uint64_t>(t)}));
    } catch (const std::exception& e) {
      throw std::runtime_error("policy \"" + policy.label() + "\" failed at epoch " +
                               std::to_string(t) + ": " + e.what());
    }
    alloc.validate();

    RngStream reward_rng(seed_combine(seed, {kTagRewards, static_cast<std::uint64_t>(t)}));
    BatchOutcome outcome =
        sample_batch(inst, alloc, model.batch_fracs[t], model.n, spec.kind,
                     reward_rng);

    hist.belief = posterior_update(hist.belief, alloc, outcome.agg,
                                   model.batch_fracs[t], model.s2);

    for (Index a = 0; a < k; ++a) {
      const double cnt = static_cast<double>(outcome.counts[a]);
      if (cnt == 0.0) continue;
      const double raw_sum = outcome.reward_sums[a];
      const double prev = hist.counts[a];
      hist.counts[a] += cnt;
      hist.mean_rewards[a] =
          (hist.mean_rewards[a] * prev + raw_sum) / hist.counts[a];
      if (spec.kind == RewardKind::Bernoulli) {
        hist.successes[a] += raw_sum;
        hist.failures[a] += cnt - raw_sum;
      }
    }

    traj.epochs.push_back(
        {alloc, hist.belief, outcome.agg, outcome.counts});
  }

  traj.selected = select_arm(hist.belief);
  traj.regret = simple_regret(inst, traj.selected);
  return traj;
}

Trajectory run_experiment(const EnvironmentSpec& spec, const PolicySpec& policy,
                          const MeasurementModel& model, std::uint64_t seed) {
  RngStream instance_rng(seed_combine(seed, kTagInstance));
  const Instance inst = draw_instance(spec, instance_rng, model.n);
  return run_experiment_on_instance(spec, inst, policy, model, seed);
}

Trajectory run_limit_experiment(const Instance& inst, const BeliefState& prior,
                                const PolicySpec& policy,
                                const MeasurementModel& model,
                                std::uint64_t seed) {
  model.validate();
  prior.validate();
  detail::require(inst.h.size() == model.num_arms(),
                  "run_limit_experiment: dimension mismatch");
  detail::require(policy.kind != PolicyKind::SuccessiveElimination &&
                      policy.kind != PolicyKind::OracleTS &&
                      policy.kind != PolicyKind::OracleTopTwoTS,
                  "run_limit_experiment: policy needs unit-level rewards");

  PolicyEngine engine(policy, model);
  const Index k = model.num_arms();
  const Index horizon = model.horizon();
  HistorySummary hist = make_history(prior, k);

  Trajectory traj;
  traj.seed = seed;
  traj.epochs.reserve(horizon);

  for (Index t = 0; t < horizon; ++t) {
    hist.epoch = static_cast<int>(t);
    hist.remaining_budget = model.residual_budget(t);
    hist.next_batch_frac = model.batch_fracs[t];

    Allocation alloc =
        engine.step(hist, seed_combine(seed, {kTagPolicy, static_cast<std::uint64_t>(t)}));
    alloc.validate();

    RngStream noise(seed_combine(seed, {kTagRewards, static_cast<std::uint64_t>(t)}));
    const ArrayXd z = noise.normals(k);
    ObservationVector obs =
        sample_limit_observation(inst.h, alloc, z, model.batch_fracs[t],
                                 model.s2);
    hist.belief = posterior_update(hist.belief, alloc, obs, model.batch_fracs[t],
                                   model.s2);

    Eigen::Array<std::int64_t, Eigen::Dynamic, 1> zero_counts;
    zero_counts.setZero(k);
    traj.epochs.push_back({alloc, hist.belief, obs, zero_counts});
  }

  traj.selected = select_arm(hist.belief);
  traj.regret = simple_regret(inst, traj.selected);
  return traj;
}

}  // namespace bexp
