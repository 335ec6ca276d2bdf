#pragma once

#include "bexp/sobol.hpp"
#include "bexp/types.hpp"

#include <optional>

namespace bexp {

/// Settings for one sample-average solve of the residual planning problem.
struct PlannerConfig {
  int num_samples = 1024;
  int max_iters = 500;
  double step_size = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  bool qmc = true;
  /// Convergence threshold on allocation movement between iterates.
  double tol = 1e-9;
  /// Optional warm-start logits; uniform start when absent.
  std::optional<ArrayXd> init_logits;

  void validate() const {
    detail::require(num_samples >= 1, "PlannerConfig: num_samples >= 1");
    detail::require(max_iters >= 1, "PlannerConfig: max_iters >= 1");
    detail::require(step_size > 0.0, "PlannerConfig: step_size > 0");
    detail::require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
                    "PlannerConfig: moment decays must lie in (0, 1)");
    detail::require(tol > 0.0, "PlannerConfig: tol > 0");
  }
};

struct LinearConstraint {
  ArrayXd r;
  double r_bar = 0.0;
};

/// Generalized planning objective: expected sum of the top-k terminal means,
/// an optional entropy bonus (positive weight spreads sampling effort), and
/// an optional linear constraint r' rho <= r_bar on the allocation.
struct PlanningObjective {
  int top_k = 1;
  double entropy_weight = 0.0;
  std::optional<LinearConstraint> constraint;
};

struct SolveResult {
  Allocation allocation;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Draw matrix used by one solve; fixed per (config, K).
NormalDraws make_planner_draws(const PlannerConfig& cfg, Index num_arms);

/// Sample average of max_a { mu_a + terminal_std_a(rho) * z_a } over the rows
/// of `draws`.
double saa_value(const BeliefState& state, const Allocation& rho, double b_bar,
                 const ArrayXd& s2, const NormalDraws& draws);

/// Same but summing the k largest per-sample terminal means.
double saa_value_topk(const BeliefState& state, const Allocation& rho,
                      double b_bar, const ArrayXd& s2, const NormalDraws& draws,
                      int top_k);

/// Elementwise derivative of terminal_std with respect to rho. Requires
/// rho > 0; the derivative is singular at zero.
ArrayXd terminal_std_grad(const BeliefState& state, const Allocation& rho,
                          double b_bar, const ArrayXd& s2);

/// Envelope subgradient of saa_value: each sample contributes
/// z_{j,a*} * d(terminal_std_{a*})/d(rho_{a*}) at its maximizing arm a*
/// (lowest index on ties).
ArrayXd saa_subgradient(const BeliefState& state, const Allocation& rho,
                        double b_bar, const ArrayXd& s2,
                        const NormalDraws& draws);

/// Top-k generalization of saa_subgradient: every arm in the per-sample
/// top-k set collects its envelope weight.
ArrayXd saa_subgradient_topk(const BeliefState& state, const Allocation& rho,
                             double b_bar, const ArrayXd& s2,
                             const NormalDraws& draws, int top_k);

/// Maximizes the sample-average objective over the simplex by adaptive-moment
/// ascent on softmax logits. Deterministic per (state, cfg); the returned
/// allocation is strictly positive.
SolveResult solve_rho(const BeliefState& state, double b_bar, const ArrayXd& s2,
                      const PlannerConfig& cfg);

/// Generalized solve: top-k objective plus entropy bonus, with an optional
/// linear constraint enforced by Euclidean projection onto the intersection
/// of the simplex and the halfspace after every step.
SolveResult solve_extended(const BeliefState& state, double b_bar,
                           const ArrayXd& s2, const PlanningObjective& objective,
                           const PlannerConfig& cfg);

/// Monte Carlo estimate of the large-budget gradient limit
///   s_a^2 / (2 b_bar rho_a^2) * E[ phi((theta*_a - mu_a)/sigma_a) / sigma_a ],
/// where theta*_a is the best posterior draw among the other arms. Serves as
/// a diagnostic oracle for the scaled subgradient.
ArrayXd asymptotic_gradient(const BeliefState& state, const Allocation& rho,
                            double b_bar, const ArrayXd& s2, std::int64_t m,
                            std::uint64_t seed);

/// Euclidean projection onto the probability simplex.
ArrayXd project_simplex(const ArrayXd& v);

/// Euclidean projection onto simplex intersect { r' x <= r_bar } via
/// Dykstra's alternating projections.
ArrayXd project_simplex_halfspace(const ArrayXd& v, const LinearConstraint& c);

/// Shannon entropy -sum rho log rho (natural log).
double shannon_entropy(const ArrayXd& rho);

}  // namespace bexp
