// Test-only reference implementations kept independent of the library paths
// they check: brute-force grid searches, finite differences, and closed-form
// constants.
#pragma once

#include "bexp/planner.hpp"
#include "bexp/types.hpp"

#include <cmath>
#include <functional>

namespace oracle {

using bexp::Allocation;
using bexp::ArrayXd;
using bexp::BeliefState;
using bexp::Index;
using bexp::NormalDraws;

// Reference quantiles computed with an independent high-precision
// implementation of the inverse normal CDF.
struct QuantilePair {
  double p;
  double x;
};
inline constexpr QuantilePair kNormalQuantiles[] = {
    {1e-12, -7.034483825301131},      {1e-10, -6.361340902404056},
    {0.001, -3.090232306167813},      {0.025, -1.9599639845400545},
    {0.1, -1.2815515655446004},       {0.3, -0.5244005127080409},
    {0.5, 0.0},                       {0.7, 0.5244005127080407},
    {0.975, 1.959963984540054},       {0.999, 3.090232306167813},
    {0.9999999999, 6.361340889697422},{0.999999999999, 7.0344869100478356},
};

inline constexpr double kPhiOfInvSqrt2 = 0.7602499389065233;  // Phi(1/sqrt(2))
inline constexpr double kHalfInvSqrtPi = 0.28209479177387814; // 1/(2 sqrt(pi))
inline constexpr double kBetaFlatSd = 0.035267280792929914;   // sd of Beta(100,100)

// Independent pedestrian evaluation of the sample-average objective.
inline double saa_value_reference(const BeliefState& state, const ArrayXd& rho,
                                  double b_bar, const ArrayXd& s2,
                                  const NormalDraws& draws) {
  const Index n = draws.z.rows();
  const Index k = draws.z.cols();
  double total = 0.0;
  for (Index j = 0; j < n; ++j) {
    double best = -1e300;
    for (Index a = 0; a < k; ++a) {
      const double effort = b_bar * rho[a];
      const double var = state.sigma2[a];
      const double std =
          effort == 0.0 ? 0.0
                        : std::sqrt(var * var * effort / (s2[a] + var * effort));
      best = std::max(best, state.mu[a] + std * draws.z(j, a));
    }
    total += best;
  }
  return total / static_cast<double>(n);
}

// 1-D grid search over K = 2 allocations (rho, 1 - rho); returns the grid
// maximizer of the sample-average objective.
inline double grid_search_rho_k2(const BeliefState& state, double b_bar,
                                 const ArrayXd& s2, const NormalDraws& draws,
                                 double step = 1e-3, double lo = 0.0,
                                 double hi = 1.0) {
  double best_rho = lo;
  double best_val = -1e300;
  const int n_steps = static_cast<int>(std::round((hi - lo) / step));
  for (int i = 0; i <= n_steps; ++i) {
    const double rho1 = lo + step * i;
    ArrayXd rho(2);
    rho << rho1, 1.0 - rho1;
    const double val = saa_value_reference(state, rho, b_bar, s2, draws);
    if (val > best_val) {
      best_val = val;
      best_rho = rho1;
    }
  }
  return best_rho;
}

// Central finite differences of a scalar function of the allocation.
inline ArrayXd central_differences(const std::function<double(const ArrayXd&)>& f,
                                   const ArrayXd& rho, double h) {
  ArrayXd grad(rho.size());
  for (Index a = 0; a < rho.size(); ++a) {
    ArrayXd up = rho, down = rho;
    up[a] += h;
    down[a] -= h;
    grad[a] = (f(up) - f(down)) / (2.0 * h);
  }
  return grad;
}

}  // namespace oracle
