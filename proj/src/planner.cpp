#include "bexp/planner.hpp"

#include "bexp/belief.hpp"
#include "bexp/normal.hpp"
#include "bexp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace bexp {

namespace {

constexpr double kAdamEps = 1e-8;
constexpr double kRhoFloor = 1e-12;  // gradient clamp; d(std)/d(rho) blows up at 0

void check_saa_inputs(const BeliefState& state, const Allocation& rho,
                      double b_bar, const ArrayXd& s2,
                      const NormalDraws& draws) {
  state.validate();
  rho.validate();
  detail::require(b_bar >= 0.0, "saa: negative budget");
  detail::require(rho.num_arms() == state.num_arms() &&
                      s2.size() == state.num_arms() &&
                      draws.num_arms() == state.num_arms(),
                  "saa: dimension mismatch");
}

ArrayXd softmax(const ArrayXd& logits) {
  const double m = logits.maxCoeff();
  ArrayXd e = (logits - m).exp();
  return e / e.sum();
}

// Step-size schedule: constant early, cosine-decayed to 1% late, so the
// iterates settle well below the movement tolerance used by the oracle tests.
double step_at(const PlannerConfig& cfg, int iter) {
  const double frac = static_cast<double>(iter) / cfg.max_iters;
  const double decay = 0.01 + 0.99 * 0.5 * (1.0 + std::cos(M_PI * frac));
  return cfg.step_size * decay;
}

// Momentum can cancel into a stall short of the optimum; only trust the
// movement criterion once the schedule has annealed.
bool may_stop(const PlannerConfig& cfg, int iter) {
  return iter >= (6 * cfg.max_iters) / 10;
}

struct Adam {
  ArrayXd m, v;
  double beta1, beta2;
  double b1t = 1.0, b2t = 1.0;

  Adam(Index k, double beta1_, double beta2_)
      : m(ArrayXd::Zero(k)), v(ArrayXd::Zero(k)), beta1(beta1_), beta2(beta2_) {}

  ArrayXd direction(const ArrayXd& grad) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.square();
    b1t *= beta1;
    b2t *= beta2;
    const ArrayXd mhat = m / (1.0 - b1t);
    const ArrayXd vhat = v / (1.0 - b2t);
    return mhat / (vhat.sqrt() + kAdamEps);
  }
};

// Sum of the k largest entries; indices of the summands are appended to
// `members` when non-null (value-descending, index-ascending on ties).
double topk_sum(const ArrayXd& vals, int k, std::vector<Index>* members) {
  const Index n = vals.size();
  if (k >= n) {
    if (members)
      for (Index i = 0; i < n; ++i) members->push_back(i);
    return vals.sum();
  }
  thread_local std::vector<Index> order;
  order.resize(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](Index i, Index j) {
                      if (vals[i] != vals[j]) return vals[i] > vals[j];
                      return i < j;
                    });
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    s += vals[order[i]];
    if (members) members->push_back(order[i]);
  }
  return s;
}

}  // namespace

NormalDraws make_planner_draws(const PlannerConfig& cfg, Index num_arms) {
  cfg.validate();
  return cfg.qmc ? sobol_standard_normals(cfg.num_samples,
                                          static_cast<int>(num_arms), cfg.seed)
                 : pseudo_standard_normals(cfg.num_samples,
                                           static_cast<int>(num_arms), cfg.seed);
}

double saa_value(const BeliefState& state, const Allocation& rho, double b_bar,
                 const ArrayXd& s2, const NormalDraws& draws) {
  check_saa_inputs(state, rho, b_bar, s2, draws);
  const ArrayXd std = terminal_std(state, rho, b_bar, s2);
  const Index n = draws.num_samples();
  const Index k = draws.num_arms();
  double total = 0.0;
  for (Index j = 0; j < n; ++j) {
    double best = state.mu[0] + std[0] * draws.z(j, 0);
    for (Index a = 1; a < k; ++a)
      best = std::max(best, state.mu[a] + std[a] * draws.z(j, a));
    total += best;
  }
  return total / static_cast<double>(n);
}

double saa_value_topk(const BeliefState& state, const Allocation& rho,
                      double b_bar, const ArrayXd& s2, const NormalDraws& draws,
                      int top_k) {
  check_saa_inputs(state, rho, b_bar, s2, draws);
  detail::require(top_k >= 1 && top_k <= state.num_arms(),
                  "saa_value_topk: k out of range");
  if (top_k == 1) return saa_value(state, rho, b_bar, s2, draws);
  const ArrayXd std = terminal_std(state, rho, b_bar, s2);
  const Index n = draws.num_samples();
  ArrayXd vals(state.num_arms());
  double total = 0.0;
  for (Index j = 0; j < n; ++j) {
    vals = state.mu + std * draws.z.row(j).transpose().array();
    total += topk_sum(vals, top_k, nullptr);
  }
  return total / static_cast<double>(n);
}

ArrayXd terminal_std_grad(const BeliefState& state, const Allocation& rho,
                          double b_bar, const ArrayXd& s2) {
  state.validate();
  detail::require((rho.p > 0.0).all(),
                  "terminal_std_grad: allocation must be strictly positive");
  const ArrayXd std = terminal_std(state, rho, b_bar, s2);
  ArrayXd out(state.num_arms());
  for (Index a = 0; a < state.num_arms(); ++a) {
    const double var = state.sigma2[a];
    const double denom = s2[a] + var * rho.p[a] * b_bar;
    out[a] = var * var * b_bar * s2[a] / (2.0 * std[a] * denom * denom);
  }
  return out;
}

ArrayXd saa_subgradient(const BeliefState& state, const Allocation& rho,
                        double b_bar, const ArrayXd& s2,
                        const NormalDraws& draws) {
  return saa_subgradient_topk(state, rho, b_bar, s2, draws, 1);
}

ArrayXd saa_subgradient_topk(const BeliefState& state, const Allocation& rho,
                             double b_bar, const ArrayXd& s2,
                             const NormalDraws& draws, int top_k) {
  check_saa_inputs(state, rho, b_bar, s2, draws);
  detail::require((rho.p > 0.0).all(),
                  "saa_subgradient: allocation must be strictly positive");
  detail::require(top_k >= 1 && top_k <= state.num_arms(),
                  "saa_subgradient: k out of range");

  const ArrayXd std = terminal_std(state, rho, b_bar, s2);
  const ArrayXd dstd = terminal_std_grad(state, rho, b_bar, s2);
  const Index n = draws.num_samples();
  const Index k = draws.num_arms();
  ArrayXd grad = ArrayXd::Zero(k);

  if (top_k == 1) {
    for (Index j = 0; j < n; ++j) {
      Index best = 0;
      double best_val = state.mu[0] + std[0] * draws.z(j, 0);
      for (Index a = 1; a < k; ++a) {
        const double val = state.mu[a] + std[a] * draws.z(j, a);
        if (val > best_val) {
          best_val = val;
          best = a;
        }
      }
      grad[best] += draws.z(j, best) * dstd[best];
    }
  } else {
    ArrayXd vals(k);
    std::vector<Index> members;
    for (Index j = 0; j < n; ++j) {
      vals = state.mu + std * draws.z.row(j).transpose().array();
      members.clear();
      topk_sum(vals, top_k, &members);
      for (Index a : members) grad[a] += draws.z(j, a) * dstd[a];
    }
  }
  return grad / static_cast<double>(n);
}

SolveResult solve_rho(const BeliefState& state, double b_bar, const ArrayXd& s2,
                      const PlannerConfig& cfg) {
  state.validate();
  cfg.validate();
  detail::require(b_bar > 0.0, "solve_rho: budget must be positive");
  detail::require(s2.size() == state.num_arms(), "solve_rho: dimension mismatch");

  const Index k = state.num_arms();
  const NormalDraws draws = make_planner_draws(cfg, k);

  if (k == 1) {
    Allocation alloc{ArrayXd::Ones(1)};
    return {alloc, saa_value(state, alloc, b_bar, s2, draws), 0, true};
  }

  ArrayXd logits = cfg.init_logits ? *cfg.init_logits : ArrayXd::Zero(k);
  detail::require(logits.size() == k, "solve_rho: warm-start size mismatch");

  Adam adam(k, cfg.beta1, cfg.beta2);
  Allocation rho{softmax(logits)};
  Allocation best_rho = rho;
  double best_value = saa_value(state, rho, b_bar, s2, draws);
  int iters = 0;
  int calm = 0;
  bool converged = false;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const ArrayXd g_rho = saa_subgradient(state, rho, b_bar, s2, draws);
    // Chain rule through the softmax.
    const double pivot = (rho.p * g_rho).sum();
    const ArrayXd g_logits = rho.p * (g_rho - pivot);

    logits += step_at(cfg, it) * adam.direction(g_logits);
    Allocation next{softmax(logits)};
    const double move = (next.p - rho.p).abs().maxCoeff();
    rho = next;
    ++iters;

    const double value = saa_value(state, rho, b_bar, s2, draws);
    if (value > best_value) {
      best_value = value;
      best_rho = rho;
    }

    calm = move < cfg.tol ? calm + 1 : 0;
    if (calm >= 25 && may_stop(cfg, it)) {
      converged = true;
      break;
    }
  }
  if (iters >= cfg.max_iters) converged = false;

  return {best_rho, best_value, iters, converged};
}

SolveResult solve_extended(const BeliefState& state, double b_bar,
                           const ArrayXd& s2, const PlanningObjective& objective,
                           const PlannerConfig& cfg) {
  state.validate();
  cfg.validate();
  detail::require(b_bar > 0.0, "solve_extended: budget must be positive");
  detail::require(objective.top_k >= 1 && objective.top_k <= state.num_arms(),
                  "solve_extended: top_k out of range");
  detail::require(std::isfinite(objective.entropy_weight),
                  "solve_extended: non-finite entropy weight");
  if (objective.constraint) {
    const LinearConstraint& c = *objective.constraint;
    detail::require(c.r.size() == state.num_arms(),
                    "solve_extended: constraint dimension mismatch");
    detail::require(c.r.minCoeff() <= c.r_bar + 1e-12,
                    "solve_extended: infeasible linear constraint");
  }

  const Index k = state.num_arms();
  const NormalDraws draws = make_planner_draws(cfg, k);
  const double lambda = objective.entropy_weight;

  auto project = [&](const ArrayXd& v) {
    return objective.constraint ? project_simplex_halfspace(v, *objective.constraint)
                                : project_simplex(v);
  };
  auto value_at = [&](const Allocation& alloc) {
    return saa_value_topk(state, alloc, b_bar, s2, draws, objective.top_k) +
           lambda * shannon_entropy(alloc.p);
  };

  Allocation rho{project(ArrayXd::Constant(k, 1.0 / static_cast<double>(k)))};
  Allocation best_rho = rho;
  double best_value = value_at(rho);
  int iters = 0;
  int calm = 0;
  bool converged = false;

  for (int it = 0; it < cfg.max_iters; ++it) {
    // Projection can park coordinates at zero where the envelope derivative
    // is singular; evaluate the gradient at a floored, renormalized copy.
    ArrayXd floored = rho.p.max(kRhoFloor);
    Allocation interior{floored / floored.sum()};
    ArrayXd grad = saa_subgradient_topk(state, interior, b_bar, s2, draws,
                                        objective.top_k);
    if (lambda != 0.0) grad -= lambda * (1.0 + interior.p.log());
    // Center onto the simplex tangent plane; the raw gradient is positive in
    // every coordinate and its common part is pure projection fodder.
    grad -= grad.mean();

    // Normalized projected subgradient with the annealed step; adaptive
    // moments stall in cancellation pockets under the projection.
    const double norm = std::sqrt(grad.square().sum());
    if (norm == 0.0) {
      ++iters;
      calm += 1;
      if (calm >= 25 && may_stop(cfg, it)) {
        converged = true;
        break;
      }
      continue;
    }
    const ArrayXd proposal = rho.p + step_at(cfg, it) * grad / norm;
    Allocation next{project(proposal)};
    const double move = (next.p - rho.p).abs().maxCoeff();
    rho = next;
    ++iters;

    const double value = value_at(rho);
    if (value > best_value) {
      best_value = value;
      best_rho = rho;
    }

    calm = move < cfg.tol ? calm + 1 : 0;
    if (calm >= 25 && may_stop(cfg, it)) {
      converged = true;
      break;
    }
  }
  if (iters >= cfg.max_iters) converged = false;

  return {best_rho, best_value, iters, converged};
}

ArrayXd asymptotic_gradient(const BeliefState& state, const Allocation& rho,
                            double b_bar, const ArrayXd& s2, std::int64_t m,
                            std::uint64_t seed) {
  state.validate();
  rho.validate();
  detail::require(state.num_arms() >= 2,
                  "asymptotic_gradient: needs at least two arms");
  detail::require((rho.p > 0.0).all(),
                  "asymptotic_gradient: allocation must be strictly positive");
  detail::require(m >= 1, "asymptotic_gradient: need m >= 1");

  const Index k = state.num_arms();
  const ArrayXd sigma = state.sigma2.sqrt();
  ArrayXd acc = ArrayXd::Zero(k);
  RngStream rng(seed, 0);
  ArrayXd theta(k);
  for (std::int64_t i = 0; i < m; ++i) {
    for (Index a = 0; a < k; ++a) theta[a] = state.mu[a] + sigma[a] * rng.normal();
    // Best and runner-up let us form max over "all other arms" for each arm.
    Index i1 = 0;
    for (Index a = 1; a < k; ++a)
      if (theta[a] > theta[i1]) i1 = a;
    double second = -std::numeric_limits<double>::infinity();
    for (Index a = 0; a < k; ++a)
      if (a != i1) second = std::max(second, theta[a]);
    for (Index a = 0; a < k; ++a) {
      const double rival = (a == i1) ? second : theta[i1];
      acc[a] += normal_pdf((rival - state.mu[a]) / sigma[a]) / sigma[a];
    }
  }
  acc /= static_cast<double>(m);
  return s2 / (2.0 * b_bar * rho.p.square()) * acc;
}

ArrayXd project_simplex(const ArrayXd& v) {
  const Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double theta = 0.0;
  for (Index i = 0; i < n; ++i) {
    cum += u[i];
    const double cand = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - cand > 0.0) theta = cand;
  }
  return (v - theta).max(0.0);
}

ArrayXd project_simplex_halfspace(const ArrayXd& v, const LinearConstraint& c) {
  detail::require(c.r.size() == v.size(),
                  "project_simplex_halfspace: dimension mismatch");
  detail::require(c.r.minCoeff() <= c.r_bar + 1e-12,
                  "project_simplex_halfspace: infeasible constraint");
  const double r_norm2 = c.r.square().sum();
  auto onto_halfspace = [&](const ArrayXd& x) -> ArrayXd {
    const double excess = (c.r * x).sum() - c.r_bar;
    if (excess <= 0.0 || r_norm2 == 0.0) return x;
    return x - (excess / r_norm2) * c.r;
  };

  ArrayXd x = v;
  ArrayXd p = ArrayXd::Zero(v.size());
  ArrayXd q = ArrayXd::Zero(v.size());
  ArrayXd y = x;
  for (int cycle = 0; cycle < 200; ++cycle) {
    y = project_simplex(x + p);
    p = x + p - y;
    const ArrayXd x_next = onto_halfspace(y + q);
    q = y + q - x_next;
    const double change = (x_next - x).abs().maxCoeff();
    x = x_next;
    if (change < 1e-14 && (y - x).abs().maxCoeff() < 1e-12) break;
  }
  // End on the simplex so the result is an exact allocation; the halfspace
  // residual at convergence is below the 1e-9 feasibility tolerance.
  return project_simplex(x + p);
}

double shannon_entropy(const ArrayXd& rho) {
  double h = 0.0;
  for (Index a = 0; a < rho.size(); ++a)
    if (rho[a] > 0.0) h -= rho[a] * std::log(rho[a]);
  return h;
}

}  // namespace bexp
