#pragma once

#include "bexp/policies.hpp"
#include "bexp/rng.hpp"
#include "bexp/types.hpp"

#include <string>
#include <vector>

namespace bexp {

enum class RewardKind { Bernoulli, Gumbel, GaussianLimit };

enum class PriorFamily { Flat, TopOne, TopHalf, Descending, Custom };

PriorFamily parse_prior_family(const std::string& name);
std::string prior_family_name(PriorFamily family);

/// Declarative description of one finite-batch (or limit) environment.
/// Bernoulli arms carry per-arm Beta priors on the success probability.
/// Gumbel arms carry per-arm Gamma priors on the mean reward and a fixed
/// believed measurement variance. GaussianLimit specifies the scaled prior
/// directly. `varsigma` > 0 multiplies each arm's true noise variance by an
/// independent Lognormal(0, varsigma^2) factor; the model variance stays put.
struct EnvironmentSpec {
  RewardKind kind = RewardKind::Bernoulli;
  Index num_arms = 1;
  PriorFamily family = PriorFamily::Custom;

  ArrayXd beta_alpha, beta_beta;    // Bernoulli prior
  ArrayXd gamma_shape, gamma_scale; // Gumbel prior on mean rewards
  ArrayXd mu0, sigma0_sq;           // GaussianLimit prior on h

  ArrayXd s2_model;                 // per-arm variance believed by policies
  double varsigma = 0.0;
  /// Known scalar subtracted from every reward before aggregation; the
  /// factories center at the common prior mean so beliefs track gaps, which
  /// is also where the normal approximation of batch means is tightest.
  /// Zero keeps absolute scaled means; selections are unaffected either way.
  double reward_baseline = 0.0;

  /// Beta priors at batch scale bn: Flat is (bn, bn); TopOne / TopHalf lift
  /// alpha by 10% on favored arms; Descending drops alpha by one per arm.
  static EnvironmentSpec beta_bernoulli(PriorFamily family, Index k, double bn);
  static EnvironmentSpec gamma_gumbel(PriorFamily family, Index k, double bn,
                                      double s2, double varsigma = 0.0);
  static EnvironmentSpec gaussian_limit(ArrayXd mu0, ArrayXd sigma0_sq,
                                        ArrayXd s2);

  ArrayXd prior_mean() const;
  ArrayXd prior_var() const;
  void validate() const;
};

/// One realized problem: unscaled true mean rewards, true per-arm noise
/// variances, and the scaled parameters h = sqrt(n) * (m - baseline).
struct Instance {
  ArrayXd true_means;
  ArrayXd true_s2;
  ArrayXd h;
  double baseline = 0.0;
};

/// Counts and aggregate observation for one batch. `agg` holds the scaled
/// per-arm reward sums (sum of rewards) / (b_t * sqrt(n)); arms with zero
/// count carry exactly zero. `reward_sums` keeps the raw per-arm totals.
struct BatchOutcome {
  Eigen::Array<std::int64_t, Eigen::Dynamic, 1> counts;
  ObservationVector agg;
  ArrayXd reward_sums;
};

struct EpochRecord {
  Allocation alloc;
  BeliefState belief_after;
  ObservationVector agg;
  Eigen::Array<std::int64_t, Eigen::Dynamic, 1> counts;
};

struct Trajectory {
  std::vector<EpochRecord> epochs;
  Index selected = 0;
  double regret = 0.0;
  std::uint64_t seed = 0;
};

/// Draws true means from the prior (and perturbed noise variances when
/// configured). h = sqrt(n) * m is filled in by the runners.
Instance draw_instance(const EnvironmentSpec& spec, RngStream& rng,
                       std::int64_t n = 1);

/// Gaussian prior with the same per-arm mean and variance as the true prior,
/// on the scaled parameters: mu0 = sqrt(n) * mean, sigma0^2 = n * var.
BeliefState matched_gaussian_prior(const EnvironmentSpec& spec, std::int64_t n);

/// Gumbel reward parameters for mean `m` and variance `s2`: scale from the
/// variance, location shifted by the Euler-Mascheroni constant so the mean
/// lands exactly on m.
struct GumbelParams {
  double location;
  double scale;
};
GumbelParams gumbel_reward_params(double m, double s2);

/// Simulates one batch of b_t * n units: each unit is assigned an arm iid
/// from `alloc` and its reward drawn from the arm's distribution.
BatchOutcome sample_batch(const Instance& inst, const Allocation& alloc,
                          double b_t, std::int64_t n, RewardKind kind,
                          RngStream& rng);

/// Gap between the best arm and the selection, in unscaled reward units.
double simple_regret(const Instance& inst, Index selected);

/// Full finite-batch experiment: draws an instance from the prior, then runs
/// the batched loop with posterior updates on aggregate rewards and selects
/// the arm with the highest terminal posterior mean.
Trajectory run_experiment(const EnvironmentSpec& spec, const PolicySpec& policy,
                          const MeasurementModel& model, std::uint64_t seed);

/// Same loop on a caller-supplied instance (shared-instance comparisons).
Trajectory run_experiment_on_instance(const EnvironmentSpec& spec,
                                      const Instance& inst,
                                      const PolicySpec& policy,
                                      const MeasurementModel& model,
                                      std::uint64_t seed);

/// Limit experiment: observations are exact Gaussian draws around pi * h.
/// Supports the belief-based policies; elimination and oracle policies need
/// unit-level rewards and are rejected.
Trajectory run_limit_experiment(const Instance& inst, const BeliefState& prior,
                                const PolicySpec& policy,
                                const MeasurementModel& model,
                                std::uint64_t seed);

}  // namespace bexp
