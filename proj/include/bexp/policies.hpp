#pragma once

#include "bexp/planner.hpp"
#include "bexp/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bexp {

/// Everything a sampling policy may condition on at the start of an epoch.
struct HistorySummary {
  BeliefState belief;
  ArrayXd counts;        // cumulative samples per arm
  ArrayXd mean_rewards;  // empirical mean of raw rewards (0 until sampled)
  ArrayXd successes;     // Bernoulli bookkeeping for the oracle policies
  ArrayXd failures;
  int epoch = 0;
  double remaining_budget = 0.0;  // sum of batch fractions from this epoch on
  double next_batch_frac = 0.0;
};

enum class PolicyKind {
  Uniform,
  SuccessiveElimination,
  GaussianTS,
  TopTwoTS,
  Myopic,
  Rho,
  Dts,
  OracleTS,
  OracleTopTwoTS,
};

/// Parsed policy description, e.g. "rho", "ts:M=10000", "se:c=1:delta=0.1".
struct PolicySpec {
  PolicyKind kind = PolicyKind::Uniform;
  double c = 1.0;
  double delta = 0.1;
  double beta = 0.5;
  int mc_samples = 10000;
  PlannerConfig planner;
  /// True for a bare "se": the benchmark harness grid-searches (c, delta).
  bool se_grid = false;
  std::string text = "uniform";

  static PolicySpec parse(const std::string& text);
  const std::string& label() const { return text; }
};

/// Equal mass on the active arms, zero elsewhere.
Allocation uniform_allocation(const std::vector<Index>& active, Index num_arms);

struct SeStep {
  std::vector<Index> active;
  Allocation alloc;
};

/// One round of successive elimination over the currently active arms.
/// Confidence width for an arm with n samples is
///   c * s * sqrt(log(n^2 K / delta) / n),
/// infinite until the arm has been sampled. An arm is dropped when its upper
/// bound falls below the best lower bound; at least one arm always survives.
SeStep successive_elimination_step(const HistorySummary& hist, double c,
                                   double delta, const ArrayXd& s,
                                   const std::vector<Index>& active);

/// Thompson sampling probabilities estimated as argmax frequencies over M
/// posterior draws. Deterministic per seed.
Allocation gaussian_ts_allocation(const BeliefState& state, std::int64_t m,
                                  std::uint64_t seed);

/// Top-two variant: with probability beta credit the round's leader, else
/// resample until a different arm leads (capped; the cap falls back to the
/// first draw's runner-up). With beta = 1 this reproduces plain TS on the
/// same seed.
Allocation top_two_ts_allocation(const BeliefState& state, double beta,
                                 std::int64_t m, std::uint64_t seed);

/// One-step lookahead: plan as if only the next batch remained.
Allocation myopic_allocation(const BeliefState& state, double b_t,
                             const ArrayXd& s2, const PlannerConfig& cfg);

/// Residual-horizon step at epoch t: plan with the whole remaining budget.
Allocation rho_policy_step(const BeliefState& state, Index t,
                           const MeasurementModel& model,
                           const PlannerConfig& cfg);

/// Monte Carlo estimate of E[ phi((theta*_a - mu_a)/sigma_a) / sigma_a ],
/// where theta*_a is the best posterior draw among the other arms.
double dts_index(const BeliefState& state, Index arm, std::int64_t m,
                 std::uint64_t seed);

/// All-arms version sharing one set of posterior draws.
ArrayXd dts_indices(const BeliefState& state, std::int64_t m,
                    std::uint64_t seed);

/// Density Thompson sampling: weights s_a * sqrt(index_a), normalized.
Allocation dts_allocation(const BeliefState& state, const ArrayXd& s2,
                          std::int64_t m, std::uint64_t seed);

/// Beta-Bernoulli oracle TS: argmax frequency over joint draws from the
/// per-arm Beta posteriors.
Allocation oracle_bb_ts_step(const ArrayXd& successes, const ArrayXd& failures,
                             const ArrayXd& prior_alpha,
                             const ArrayXd& prior_beta, std::int64_t m,
                             std::uint64_t seed);

/// Top-two variant of the Beta-Bernoulli oracle.
Allocation oracle_bb_top_two_ts_step(const ArrayXd& successes,
                                     const ArrayXd& failures,
                                     const ArrayXd& prior_alpha,
                                     const ArrayXd& prior_beta, double beta,
                                     std::int64_t m, std::uint64_t seed);

/// Stateful wrapper dispatching on PolicySpec. Each instance serves a single
/// replication thread; elimination state lives here.
class PolicyEngine {
 public:
  PolicyEngine(PolicySpec spec, MeasurementModel model);

  /// Grants the oracle policies the true Beta prior.
  void set_oracle_prior(ArrayXd alpha, ArrayXd beta);

  Allocation step(const HistorySummary& hist, std::uint64_t seed);
  void reset();

  const PolicySpec& spec() const { return spec_; }

 private:
  PolicySpec spec_;
  MeasurementModel model_;
  std::vector<Index> active_;
  std::optional<ArrayXd> oracle_alpha_, oracle_beta_;
};

}  // namespace bexp
