#include "bexp/belief.hpp"

#include <cmath>

namespace bexp {

namespace {

void check_update_inputs(const BeliefState& state, const Allocation& alloc,
                         double b_t, const ArrayXd& s2) {
  state.validate();
  alloc.validate();
  detail::require(b_t > 0.0, "belief update: b_t must be positive");
  detail::require(alloc.num_arms() == state.num_arms() &&
                      s2.size() == state.num_arms(),
                  "belief update: dimension mismatch");
  detail::require_finite(s2, "s2");
  detail::require((s2 > 0.0).all(), "belief update: s2 must be positive");
}

}  // namespace

BeliefState posterior_update(const BeliefState& state, const Allocation& alloc,
                             const ObservationVector& y, double b_t,
                             const ArrayXd& s2) {
  check_update_inputs(state, alloc, b_t, s2);
  detail::require(y.y.size() == state.num_arms(),
                  "posterior_update: observation dimension mismatch");
  y.validate();

  BeliefState next = state;
  for (Index a = 0; a < state.num_arms(); ++a) {
    const double effort = b_t * alloc.p[a];
    if (effort == 0.0) continue;  // zero information, state untouched
    // Precision gains b_t * pi / s^2; the observation enters as b_t * y / s^2
    // (y already carries the allocation factor).
    const double prec = 1.0 / state.sigma2[a] + effort / s2[a];
    next.sigma2[a] = 1.0 / prec;
    next.mu[a] =
        (state.mu[a] / state.sigma2[a] + b_t * y.y[a] / s2[a]) / prec;
  }
  return next;
}

BeliefState sample_transition(const BeliefState& state, const Allocation& alloc,
                              const ArrayXd& z, double b_t, const ArrayXd& s2) {
  check_update_inputs(state, alloc, b_t, s2);
  detail::require(z.size() == state.num_arms(),
                  "sample_transition: noise dimension mismatch");
  detail::require_finite(z, "z");

  BeliefState next = state;
  for (Index a = 0; a < state.num_arms(); ++a) {
    const double effort = b_t * alloc.p[a];
    if (effort == 0.0) continue;
    const double var = state.sigma2[a];
    next.sigma2[a] = 1.0 / (1.0 / var + effort / s2[a]);
    const double step =
        std::sqrt(var) * std::sqrt(effort * var / (s2[a] + effort * var));
    next.mu[a] = state.mu[a] + step * z[a];
  }
  return next;
}

ObservationVector sample_limit_observation(const ArrayXd& h,
                                           const Allocation& alloc,
                                           const ArrayXd& z, double b_t,
                                           const ArrayXd& s2) {
  alloc.validate();
  detail::require(b_t > 0.0, "sample_limit_observation: b_t must be positive");
  detail::require(h.size() == alloc.num_arms() && z.size() == alloc.num_arms() &&
                      s2.size() == alloc.num_arms(),
                  "sample_limit_observation: dimension mismatch");
  detail::require_finite(h, "h");
  detail::require_finite(z, "z");

  ObservationVector obs;
  obs.y = ArrayXd::Zero(alloc.num_arms());
  for (Index a = 0; a < alloc.num_arms(); ++a) {
    const double pi = alloc.p[a];
    if (pi == 0.0) continue;  // unsampled arms observe exactly zero
    obs.y[a] = pi * h[a] + std::sqrt(pi * s2[a] / b_t) * z[a];
  }
  return obs;
}

ArrayXd terminal_std(const BeliefState& state, const Allocation& rho,
                     double b_bar, const ArrayXd& s2) {
  state.validate();
  rho.validate();
  detail::require(b_bar >= 0.0, "terminal_std: negative budget");
  detail::require(rho.num_arms() == state.num_arms() &&
                      s2.size() == state.num_arms(),
                  "terminal_std: dimension mismatch");

  ArrayXd out(state.num_arms());
  for (Index a = 0; a < state.num_arms(); ++a) {
    const double effort = b_bar * rho.p[a];
    if (effort == 0.0) {
      out[a] = 0.0;
      continue;
    }
    const double var = state.sigma2[a];
    out[a] = std::sqrt(var * var * effort / (s2[a] + var * effort));
  }
  return out;
}

ArrayXd variance_decrement(const ArrayXd& sigma2, const Allocation& alloc,
                           double b_t, const ArrayXd& s2) {
  alloc.validate();
  detail::require(b_t >= 0.0, "variance_decrement: negative b_t");
  detail::require(sigma2.size() == alloc.num_arms() &&
                      s2.size() == alloc.num_arms(),
                  "variance_decrement: dimension mismatch");

  ArrayXd out(sigma2.size());
  for (Index a = 0; a < sigma2.size(); ++a) {
    const double effort = b_t * alloc.p[a];
    const double var = sigma2[a];
    out[a] = effort == 0.0 ? 0.0 : var * var * effort / (s2[a] + var * effort);
  }
  return out;
}

Index select_arm(const BeliefState& state) {
  state.validate();
  Index best = 0;
  state.mu.maxCoeff(&best);  // first maximizer, i.e. lowest index on ties
  return best;
}

}  // namespace bexp
