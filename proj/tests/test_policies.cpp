#include "bexp/policies.hpp"

#include "bexp/normal.hpp"
#include "bexp/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace bexp;

namespace {

ArrayXd vec(std::initializer_list<double> xs) {
  ArrayXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

BeliefState random_sorted_state(RngStream& rng, Index k) {
  BeliefState s;
  s.mu.resize(k);
  s.sigma2.resize(k);
  for (Index a = 0; a < k; ++a) {
    s.mu[a] = 2.0 * rng.uniform();
    s.sigma2[a] = 0.2 + rng.uniform();
  }
  std::sort(s.mu.data(), s.mu.data() + k, std::greater<double>());
  return s;
}

void check_valid(const Allocation& a) {
  CHECK((a.p >= 0.0).all());
  CHECK(std::abs(a.p.sum() - 1.0) <= 1e-12);
}

HistorySummary history_with(const ArrayXd& counts, const ArrayXd& means) {
  HistorySummary h;
  const Index k = counts.size();
  h.belief = BeliefState{ArrayXd::Zero(k), ArrayXd::Ones(k)};
  h.counts = counts;
  h.mean_rewards = means;
  h.successes = ArrayXd::Zero(k);
  h.failures = ArrayXd::Zero(k);
  return h;
}

std::vector<Index> all_arms(Index k) {
  std::vector<Index> v(k);
  for (Index a = 0; a < k; ++a) v[a] = a;
  return v;
}

}  // namespace

TEST_CASE("uniform allocation") {
  check_valid(uniform_allocation(all_arms(4), 4));
  CHECK(uniform_allocation(all_arms(4), 4).p[2] == doctest::Approx(0.25));

  Allocation partial = uniform_allocation({0, 2}, 3);
  CHECK(partial.p[0] == doctest::Approx(0.5));
  CHECK(partial.p[1] == 0.0);
  CHECK(partial.p[2] == doctest::Approx(0.5));

  CHECK(uniform_allocation({0}, 1).p[0] == 1.0);
  CHECK_THROWS_AS(uniform_allocation({}, 3), std::invalid_argument);
}

TEST_CASE("successive elimination widths and eliminations") {
  // c=1, s=1, n=100, K=10, delta=0.1: width = sqrt(log(100^2 * 10 / 0.1)/100)
  //                                        = sqrt(log(1e6)/100).
  const double width_expected = 0.3716922188849838;
  HistorySummary h = history_with(ArrayXd::Constant(10, 100.0),
                                  ArrayXd::Zero(10));
  SeStep out = successive_elimination_step(h, 1.0, 0.1, ArrayXd::Ones(10),
                                           all_arms(10));
  // all identical means: nothing eliminated
  CHECK(out.active.size() == 10);

  // an arm at 0 with ucb = width is eliminated iff the best lcb exceeds it
  ArrayXd means = ArrayXd::Zero(10);
  means[9] = 2.0 * width_expected + 1e-6;
  h = history_with(ArrayXd::Constant(10, 100.0), means);
  out = successive_elimination_step(h, 1.0, 0.1, ArrayXd::Ones(10), all_arms(10));
  CHECK(std::find(out.active.begin(), out.active.end(), 0) == out.active.end());
  CHECK(std::find(out.active.begin(), out.active.end(), 9) != out.active.end());

  means[9] = 2.0 * width_expected - 1e-6;  // just inside: survives
  h = history_with(ArrayXd::Constant(10, 100.0), means);
  out = successive_elimination_step(h, 1.0, 0.1, ArrayXd::Ones(10), all_arms(10));
  CHECK(out.active.size() == 10);
}

TEST_CASE("successive elimination: clear separation and fresh arms") {
  // two arms, means (0, 10), widths calibrated to 1 each: arm 0 goes
  ArrayXd counts = ArrayXd::Constant(2, 100.0);
  ArrayXd means = vec({0.0, 10.0});
  const double raw_width = std::sqrt(std::log(100.0 * 100.0 * 2.0 / 0.1) / 100.0);
  HistorySummary h = history_with(counts, means);
  SeStep out = successive_elimination_step(h, 1.0 / raw_width, 0.1,
                                           ArrayXd::Ones(2), all_arms(2));
  CHECK(out.active == std::vector<Index>{1});
  CHECK(out.alloc.p[1] == 1.0);

  // nothing sampled yet: everyone stays, uniform allocation
  h = history_with(ArrayXd::Zero(3), ArrayXd::Zero(3));
  out = successive_elimination_step(h, 1.0, 0.1, ArrayXd::Ones(3), all_arms(3));
  CHECK(out.active.size() == 3);
  check_valid(out.alloc);

  // the empirically best arm is never eliminated
  RngStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Index k = 2 + static_cast<Index>(rng.uniform() * 5);
    ArrayXd n(k), m(k);
    for (Index a = 0; a < k; ++a) {
      n[a] = 1.0 + std::floor(rng.uniform() * 50.0);
      m[a] = rng.uniform();
    }
    h = history_with(n, m);
    out = successive_elimination_step(h, 0.5 + rng.uniform(), 0.1,
                                      ArrayXd::Ones(k), all_arms(k));
    Index best = 0;
    m.maxCoeff(&best);
    CHECK(std::find(out.active.begin(), out.active.end(), best) !=
          out.active.end());
    check_valid(out.alloc);
  }
}

TEST_CASE("gaussian TS allocation frequencies") {
  BeliefState sym{vec({0.0, 0.0}), vec({1.0, 1.0})};
  const std::int64_t m = 40000;
  Allocation a = gaussian_ts_allocation(sym, m, 11);
  check_valid(a);
  CHECK(std::abs(a.p[0] - 0.5) <= 3.0 * std::sqrt(0.25 / m));

  // closed form: P(theta_0 > theta_1) = Phi(1 / sqrt(2))
  BeliefState gap{vec({1.0, 0.0}), vec({1.0, 1.0})};
  Allocation b = gaussian_ts_allocation(gap, 200000, 12);
  const double p = oracle::kPhiOfInvSqrt2;
  CHECK(std::abs(b.p[0] - p) <= 4.0 * std::sqrt(p * (1.0 - p) / 200000.0));

  // dominated arm gets essentially nothing
  BeliefState dom{vec({0.0, 100.0}), vec({1.0, 1.0})};
  Allocation c = gaussian_ts_allocation(dom, 20000, 13);
  CHECK(c.p[1] > 0.9999);

  // deterministic per seed
  CHECK((gaussian_ts_allocation(gap, 5000, 7).p ==
         gaussian_ts_allocation(gap, 5000, 7).p)
            .all());
}

TEST_CASE("top-two TS") {
  BeliefState state{vec({0.5, 0.0, -0.3}), vec({1.0, 0.7, 1.3})};

  // beta = 1 reduces to plain TS on the same seed stream
  Allocation ts = gaussian_ts_allocation(state, 20000, 21);
  Allocation ttts = top_two_ts_allocation(state, 1.0, 20000, 21);
  CHECK((ts.p == ttts.p).all());

  // symmetric arms stay balanced
  BeliefState sym{vec({0.0, 0.0}), vec({1.0, 1.0})};
  Allocation half = top_two_ts_allocation(sym, 0.5, 40000, 22);
  check_valid(half);
  CHECK(std::abs(half.p[0] - 0.5) <= 3.0 * std::sqrt(0.25 / 40000.0));

  // beta = 0.5 spreads mass off the leader relative to TS
  Allocation spread = top_two_ts_allocation(state, 0.5, 40000, 23);
  check_valid(spread);
  CHECK(spread.p[0] < ts.p[0]);
}

TEST_CASE("myopic and residual-horizon steps") {
  BeliefState state{vec({0.4, 0.0}), vec({1.0, 1.0})};
  const ArrayXd s2 = vec({1.0, 1.0});
  PlannerConfig cfg;
  cfg.seed = 9;
  cfg.num_samples = 256;

  MeasurementModel model{s2, ArrayXd::Constant(10, 1.0), 100};

  Allocation myo = myopic_allocation(state, model.batch_fracs[9], s2, cfg);
  Allocation last = rho_policy_step(state, 9, model, cfg);
  CHECK((myo.p == last.p).all());  // at t = T-1 both plan one batch

  Allocation first = rho_policy_step(state, 0, model, cfg);
  check_valid(first);
  CHECK((first.p > 0.0).all());

  CHECK(model.residual_budget(0) == doctest::Approx(10.0));
  CHECK(model.residual_budget(9) == doctest::Approx(1.0));

  BeliefState sym{vec({0.0, 0.0}), vec({1.0, 1.0})};
  Allocation m = myopic_allocation(sym, 1.0, s2, cfg);
  CHECK(m.p[0] == doctest::Approx(0.5).epsilon(0.01));
  BeliefState one{vec({0.0}), vec({1.0})};
  CHECK(myopic_allocation(one, 1.0, vec({1.0}), cfg).p[0] == 1.0);
}

TEST_CASE("dts index: closed form, ordering, bounds") {
  // identical arms mu = 0, sigma = 1: E[phi(Z)] = 1/(2 sqrt(pi))
  BeliefState sym{vec({0.0, 0.0}), vec({1.0, 1.0})};
  const std::int64_t m = 400000;
  const double idx = dts_index(sym, 0, m, 31);
  CHECK(idx == doctest::Approx(oracle::kHalfInvSqrtPi).epsilon(0.01));
  CHECK(idx > 0.0);

  // index decays as an arm falls far below the leader
  BeliefState near{vec({1.0, 0.5}), vec({0.3, 0.3})};
  BeliefState far{vec({1.0, -2.0}), vec({0.3, 0.3})};
  CHECK(dts_index(far, 1, 50000, 32) < dts_index(near, 1, 50000, 32));

  CHECK_THROWS_AS(dts_index(BeliefState{vec({0.0}), vec({1.0})}, 0, 100, 1),
                  std::invalid_argument);

  // log-index sandwich on sorted states: the Gaussian-overlap exponents bound
  // the log index from both sides up to additive slack logarithmic in the
  // posterior scales.
  RngStream rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const Index k = 3 + static_cast<Index>(rng.uniform() * 3);
    BeliefState s = random_sorted_state(rng, k);
    ArrayXd indices = dts_indices(s, 200000, 100 + trial);
    for (Index a = 0; a < k; ++a) {
      const double log_idx = std::log(indices[a]);
      double exponent_lo;
      if (a <= 1) {
        exponent_lo = -(s.mu[0] - s.mu[1]) * (s.mu[0] - s.mu[1]) /
                      (2.0 * (s.sigma2[0] + s.sigma2[1]));
      } else {
        exponent_lo =
            -(s.mu[0] - s.mu[a]) * (s.mu[0] - s.mu[a]) / (2.0 * s.sigma2[a]);
      }
      double exponent_hi = 1e300;
      for (Index b = 0; b < k; ++b) {
        if (b == a) continue;
        exponent_hi = std::min(
            exponent_hi, -(s.mu[b] - s.mu[a]) * (s.mu[b] - s.mu[a]) /
                             (2.0 * (s.sigma2[a] + s.sigma2[b])));
      }
      const double slack =
          std::abs(std::log(std::sqrt(s.sigma2.minCoeff()))) + 4.0;
      CHECK(log_idx >= exponent_lo - slack);
      CHECK(log_idx <= exponent_hi + slack);
    }
  }
}

TEST_CASE("dts allocation: symmetry, noise scaling, TS-derivative duality") {
  BeliefState sym{vec({0.0, 0.0, 0.0}), vec({1.0, 1.0, 1.0})};
  Allocation a = dts_allocation(sym, vec({1.0, 1.0, 1.0}), 200000, 41);
  check_valid(a);
  for (Index i = 0; i < 3; ++i)
    CHECK(a.p[i] == doctest::Approx(1.0 / 3.0).epsilon(0.02));

  // doubling s_a doubles the unnormalized weight
  BeliefState st{vec({0.5, 0.0}), vec({1.0, 1.0})};
  Allocation base = dts_allocation(st, vec({1.0, 1.0}), 200000, 42);
  Allocation scaled = dts_allocation(st, vec({4.0, 1.0}), 200000, 42);
  const double w_ratio_base = base.p[0] / base.p[1];
  const double w_ratio_scaled = scaled.p[0] / scaled.p[1];
  CHECK(w_ratio_scaled == doctest::Approx(2.0 * w_ratio_base).epsilon(0.01));

  // duality: pi_DTS ~ s_a * sqrt(d pi_TS / d mu_a), the derivative estimated
  // by central differences of the TS probability with common random numbers.
  RngStream rng(43);
  for (int trial = 0; trial < 4; ++trial) {
    const Index k = trial < 2 ? 2 : 5;
    BeliefState s = random_sorted_state(rng, k);
    ArrayXd s2(k);
    for (Index i = 0; i < k; ++i) s2[i] = 0.5 + rng.uniform();

    const std::int64_t m_ts = 2000000;
    const double h = 0.05;
    ArrayXd weights(k);
    for (Index i = 0; i < k; ++i) {
      BeliefState up = s, down = s;
      up.mu[i] += h;
      down.mu[i] -= h;
      const double p_up = gaussian_ts_allocation(up, m_ts, 900 + trial).p[i];
      const double p_down = gaussian_ts_allocation(down, m_ts, 900 + trial).p[i];
      weights[i] = std::sqrt(s2[i]) * std::sqrt((p_up - p_down) / (2.0 * h));
    }
    ArrayXd expected = weights / weights.sum();
    Allocation dts = dts_allocation(s, s2, 400000, 950 + trial);
    for (Index i = 0; i < k; ++i)
      CHECK(dts.p[i] == doctest::Approx(expected[i]).epsilon(0.08));
  }
}

TEST_CASE("oracle Beta-Bernoulli TS") {
  const ArrayXd prior_a = vec({1.0, 1.0});
  const ArrayXd prior_b = vec({1.0, 1.0});

  // arm1 posterior Beta(2,1) vs arm2 Beta(1,1): P(X > Y) = 2/3
  Allocation a = oracle_bb_ts_step(vec({1.0, 0.0}), vec({0.0, 0.0}), prior_a,
                                   prior_b, 400000, 51);
  check_valid(a);
  CHECK(std::abs(a.p[0] - 2.0 / 3.0) <=
        4.0 * std::sqrt(2.0 / 9.0 / 400000.0) + 1e-3);

  // identical posteriors: uniform within MC error
  Allocation u = oracle_bb_ts_step(vec({5.0, 5.0}), vec({3.0, 3.0}), prior_a,
                                   prior_b, 100000, 52);
  CHECK(std::abs(u.p[0] - 0.5) <= 4.0 * std::sqrt(0.25 / 100000.0));

  // top-two variant stays valid and spreads mass
  Allocation t = oracle_bb_top_two_ts_step(vec({20.0, 0.0}), vec({0.0, 20.0}),
                                           prior_a, prior_b, 0.5, 20000, 53);
  check_valid(t);
  CHECK(t.p[1] > 0.2);
}

TEST_CASE("policy spec parsing") {
  PolicySpec spec = PolicySpec::parse("se:c=2:delta=0.05");
  CHECK(spec.kind == PolicyKind::SuccessiveElimination);
  CHECK(spec.c == doctest::Approx(2.0));
  CHECK(spec.delta == doctest::Approx(0.05));
  CHECK(!spec.se_grid);
  CHECK(PolicySpec::parse("se").se_grid);

  spec = PolicySpec::parse("ts:M=5000");
  CHECK(spec.kind == PolicyKind::GaussianTS);
  CHECK(spec.mc_samples == 5000);

  spec = PolicySpec::parse("rho:N=2048:iters=300:step=0.1");
  CHECK(spec.kind == PolicyKind::Rho);
  CHECK(spec.planner.num_samples == 2048);
  CHECK(spec.planner.max_iters == 300);

  CHECK(PolicySpec::parse("ttts:beta=0.7").beta == doctest::Approx(0.7));
  CHECK(PolicySpec::parse("oracle-ts").kind == PolicyKind::OracleTS);
  CHECK(PolicySpec::parse("oracle-ttts").kind == PolicyKind::OracleTopTwoTS);
  CHECK(PolicySpec::parse("dts").kind == PolicyKind::Dts);
  CHECK(PolicySpec::parse("myopic").kind == PolicyKind::Myopic);

  CHECK_THROWS_AS(PolicySpec::parse("nope"), std::invalid_argument);
  CHECK_THROWS_AS(PolicySpec::parse("ts:M=abc"), std::invalid_argument);
  CHECK_THROWS_AS(PolicySpec::parse("se:delta=2"), std::invalid_argument);
}

TEST_CASE("every policy emits a valid allocation on random histories") {
  RngStream rng(61);
  const Index k = 4;
  MeasurementModel model{ArrayXd::Ones(k), ArrayXd::Constant(5, 1.0), 100};

  const char* specs[] = {"uniform", "se:c=1:delta=0.1", "ts:M=2000",
                         "ttts:beta=0.5:M=2000", "myopic:N=128:iters=60",
                         "rho:N=128:iters=60", "dts:M=2000", "oracle-ts:M=2000",
                         "oracle-ttts:M=2000"};
  for (const char* text : specs) {
    PolicyEngine engine(PolicySpec::parse(text), model);
    engine.set_oracle_prior(ArrayXd::Constant(k, 2.0), ArrayXd::Constant(k, 2.0));
    for (int step = 0; step < 5; ++step) {
      HistorySummary h;
      h.belief.mu = ArrayXd::Zero(k);
      h.belief.sigma2 = ArrayXd::Ones(k);
      for (Index a = 0; a < k; ++a) {
        h.belief.mu[a] = rng.uniform();
        h.belief.sigma2[a] = 0.3 + rng.uniform();
      }
      h.counts = ArrayXd::Constant(k, 10.0 * step);
      h.mean_rewards = h.belief.mu / 10.0;
      h.successes = h.counts * 0.4;
      h.failures = h.counts - h.successes;
      h.epoch = step;
      h.remaining_budget = 5.0 - step;
      h.next_batch_frac = 1.0;
      Allocation a = engine.step(h, 1000 + step);
      check_valid(a);
    }
  }
}
