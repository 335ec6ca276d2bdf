#include "bexp/bench.hpp"

#include "bexp/planner.hpp"
#include "bexp/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace bexp {

namespace {

constexpr std::uint64_t kTagInstanceStream = 0x1A57;
constexpr std::uint64_t kTagPolicyStream = 0x90CC;

std::uint64_t policy_tag(const std::string& label) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0) /
                   static_cast<double>(v.size()));
}

}  // namespace

void ExperimentConfig::validate() const {
  env.validate();
  model.validate();
  detail::require(reps >= 1, "ExperimentConfig: reps must be >= 1");
  detail::require(!policies.empty(), "ExperimentConfig: no policies listed");
  detail::require(threads >= 0, "ExperimentConfig: bad thread count");
}

bool TrialRecord::core_fields_equal(const TrialRecord& other) const {
  const bool regret_equal =
      (std::isnan(regret) && std::isnan(other.regret)) || regret == other.regret;
  return policy == other.policy && replication == other.replication &&
         seed == other.seed && selected_arm == other.selected_arm && regret_equal;
}

std::vector<TrialRecord> run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();

  // Expand bare "se" into the constant grid.
  std::vector<PolicySpec> specs;
  for (const std::string& text : cfg.policies) {
    PolicySpec spec = PolicySpec::parse(text);
    if (spec.se_grid) {
      for (double c : cfg.se_grid.c)
        for (double delta : cfg.se_grid.delta) {
          std::ostringstream label;
          label << "se:c=" << c << ":delta=" << delta;
          specs.push_back(PolicySpec::parse(label.str()));
        }
    } else {
      specs.push_back(std::move(spec));
    }
  }

  const std::size_t num_policies = specs.size();
  const std::size_t reps = static_cast<std::size_t>(cfg.reps);
  std::vector<TrialRecord> records(num_policies * reps);

  std::atomic<std::size_t> next_rep{0};
  std::mutex log_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t r = next_rep.fetch_add(1);
      if (r >= reps) return;

      RngStream instance_rng(
          seed_combine(cfg.master_seed, {kTagInstanceStream, r}));
      const Instance inst = draw_instance(cfg.env, instance_rng, cfg.model.n);

      for (std::size_t p = 0; p < num_policies; ++p) {
        const std::uint64_t seed = seed_combine(
            cfg.master_seed, {kTagPolicyStream, policy_tag(specs[p].label()), r});
        TrialRecord& rec = records[p * reps + r];
        rec.policy = specs[p].label();
        rec.replication = static_cast<int>(r);
        rec.seed = seed;
        try {
          const Trajectory traj = run_experiment_on_instance(
              cfg.env, inst, specs[p], cfg.model, seed);
          rec.regret = traj.regret;
          rec.selected_arm = traj.selected;
          rec.alloc_entropy.reserve(traj.epochs.size());
          for (const EpochRecord& e : traj.epochs)
            rec.alloc_entropy.push_back(shannon_entropy(e.alloc.p));
        } catch (const std::exception& ex) {
          rec.regret = std::numeric_limits<double>::quiet_NaN();
          rec.selected_arm = -1;
          std::lock_guard<std::mutex> lock(log_mutex);
          std::cerr << "trial failed (policy=" << rec.policy << ", rep=" << r
                    << "): " << ex.what() << "\n";
        }
      }
    }
  };

  unsigned n_threads = cfg.threads > 0
                           ? static_cast<unsigned>(cfg.threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, reps);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  return records;
}

std::vector<RegretSummary> relative_gain(const std::vector<TrialRecord>& records,
                                         const std::string& baseline) {
  // Gather per-policy regrets in replication order.
  std::vector<std::string> order;
  std::map<std::string, std::map<int, double>> by_policy;
  std::map<std::string, int> failures;
  for (const TrialRecord& rec : records) {
    if (by_policy.find(rec.policy) == by_policy.end()) order.push_back(rec.policy);
    if (std::isnan(rec.regret)) {
      ++failures[rec.policy];
      continue;
    }
    by_policy[rec.policy][rec.replication] = rec.regret;
  }
  detail::require(by_policy.count(baseline) > 0,
                  "relative_gain: baseline policy \"" + baseline + "\" absent");

  const std::map<int, double>& base_map = by_policy.at(baseline);
  std::vector<double> base_all;
  base_all.reserve(base_map.size());
  for (const auto& [rep, reg] : base_map) base_all.push_back(reg);
  const double base_mean = mean_of(base_all);

  std::vector<RegretSummary> out;
  for (const std::string& policy : order) {
    const std::map<int, double>& regs = by_policy[policy];
    std::vector<double> values;
    values.reserve(regs.size());
    for (const auto& [rep, reg] : regs) values.push_back(reg);

    RegretSummary s;
    s.policy = policy;
    s.failures = failures.count(policy) ? failures[policy] : 0;
    s.mean_regret = mean_of(values);
    s.std_err = stderr_of(values);
    if (base_mean <= 0.0) {
      s.relative_defined = false;
      s.relative_pct = std::numeric_limits<double>::quiet_NaN();
      s.relative_se = std::numeric_limits<double>::quiet_NaN();
    } else {
      s.relative_pct = 100.0 * s.mean_regret / base_mean;
      // Delta-method SE on the ratio using replication-paired deltas on the
      // shared instances.
      std::vector<double> deltas;
      deltas.reserve(regs.size());
      const double ratio = s.mean_regret / base_mean;
      for (const auto& [rep, reg] : regs) {
        auto it = base_map.find(rep);
        if (it == base_map.end()) continue;
        deltas.push_back(reg - ratio * it->second);
      }
      s.relative_se = deltas.empty() ? 0.0 : 100.0 / base_mean * stderr_of(deltas);
    }
    out.push_back(std::move(s));
  }
  return out;
}

Histogram regret_histogram(const std::vector<double>& regrets, int bins) {
  detail::require(bins >= 1, "regret_histogram: bins must be >= 1");
  detail::require(!regrets.empty(), "regret_histogram: no data");
  double hi = 0.0;
  for (double r : regrets) hi = std::max(hi, r);
  if (hi <= 0.0) hi = 1.0;  // all-zero regrets land in the first bin

  Histogram h;
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i)
    h.edges[i] = hi * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double r : regrets) {
    int bin = static_cast<int>(std::floor(r / hi * bins));
    bin = std::clamp(bin, 0, bins - 1);  // right edge closed
    ++h.counts[bin];
  }
  return h;
}

Histogram regret_histogram(const std::vector<TrialRecord>& records, int bins) {
  std::vector<double> regrets;
  regrets.reserve(records.size());
  for (const TrialRecord& r : records)
    if (!std::isnan(r.regret)) regrets.push_back(r.regret);
  return regret_histogram(regrets, bins);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  detail::require(!a.empty() && !b.empty(), "ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

namespace {

std::vector<TrialRecord> sorted_records(std::vector<TrialRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const TrialRecord& x, const TrialRecord& y) {
              if (x.policy != y.policy) return x.policy < y.policy;
              return x.replication < y.replication;
            });
  return records;
}

}  // namespace

void write_records(const std::vector<TrialRecord>& records,
                   const std::string& path, RecordFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open \"" + path + "\" for writing");
  const std::vector<TrialRecord> rows = sorted_records(records);

  out << std::setprecision(17);
  if (format == RecordFormat::csv) {
    out << "policy,replication,seed,regret,selected_arm\n";
    for (const TrialRecord& r : rows)
      out << r.policy << ',' << r.replication << ',' << r.seed << ','
          << r.regret << ',' << r.selected_arm << '\n';
  } else {
    out << "[\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const TrialRecord& r = rows[i];
      out << "  {\"policy\": \"" << r.policy << "\", \"replication\": "
          << r.replication << ", \"seed\": " << r.seed << ", \"regret\": ";
      if (std::isnan(r.regret)) out << "null";
      else out << r.regret;
      out << ", \"selected_arm\": " << r.selected_arm << '}'
          << (i + 1 < rows.size() ? ",\n" : "\n");
    }
    out << "]\n";
  }
  if (!out) throw std::runtime_error("write failed for \"" + path + "\"");
}

std::vector<TrialRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open \"" + path + "\" for reading");
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)),
                  "records file \"" + path + "\" is empty");
  detail::require(line == "policy,replication,seed,regret,selected_arm",
                  "records file \"" + path + "\" has an unexpected header");

  std::vector<TrialRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    TrialRecord r;
    std::string field;
    std::getline(ss, r.policy, ',');
    std::getline(ss, field, ',');
    r.replication = std::stoi(field);
    std::getline(ss, field, ',');
    r.seed = std::stoull(field);
    std::getline(ss, field, ',');
    r.regret = std::stod(field);
    std::getline(ss, field, ',');
    r.selected_arm = std::stol(field);
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

EnvironmentSpec hist_env(const HistStudyConfig& cfg, double bn) {
  switch (cfg.kind) {
    case RewardKind::Bernoulli:
      return EnvironmentSpec::beta_bernoulli(cfg.family, cfg.num_arms, bn);
    case RewardKind::Gumbel:
      return EnvironmentSpec::gamma_gumbel(cfg.family, cfg.num_arms, bn, cfg.s2,
                                           cfg.varsigma);
    case RewardKind::GaussianLimit:
      break;
  }
  throw std::invalid_argument("hist study: scaling rows need a finite-batch environment");
}

// Runs `body(rep)` over all replications with a small worker pool.
template <typename Body>
void parallel_reps(int reps, int threads, Body&& body) {
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) return;
      body(r);
    }
  };
  unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(reps));
  if (n_threads <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

}  // namespace

HistStudyResult run_hist_study(const HistStudyConfig& cfg) {
  detail::require(!cfg.scalings.empty(), "hist study: no batch scalings");
  detail::require(cfg.reps >= 1, "hist study: reps must be >= 1");
  detail::require(cfg.batch_fracs.size() >= 1 && (cfg.batch_fracs > 0.0).all(),
                  "hist study: bad schedule");
  const PolicySpec policy = PolicySpec::parse(cfg.policy);
  const double b0 = cfg.batch_fracs[0];

  HistStudyResult result;
  for (std::int64_t n : cfg.scalings) {
    detail::require(n >= 1, "hist study: scalings must be >= 1");
    const EnvironmentSpec env = hist_env(cfg, b0 * static_cast<double>(n));
    MeasurementModel model{env.s2_model, cfg.batch_fracs, n};
    const double root_n = std::sqrt(static_cast<double>(n));

    HistSeries series;
    series.label = "n=" + std::to_string(n);
    series.scaled_regrets.resize(cfg.reps);
    parallel_reps(cfg.reps, cfg.threads, [&](int r) {
      RngStream instance_rng(seed_combine(
          cfg.master_seed, {kTagInstanceStream, static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(r)}));
      const Instance inst = draw_instance(env, instance_rng, n);
      const std::uint64_t seed = seed_combine(
          cfg.master_seed, {kTagPolicyStream, static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(r)});
      const Trajectory traj =
          run_experiment_on_instance(env, inst, policy, model, seed);
      series.scaled_regrets[r] = root_n * traj.regret;
    });
    result.series.push_back(std::move(series));
  }

  if (cfg.include_limit) {
    // The limit row shares the instance stream of the first finite scaling,
    // pairing the comparison.
    const std::int64_t ref_n = cfg.scalings.front();
    const EnvironmentSpec env = hist_env(cfg, b0 * static_cast<double>(ref_n));
    MeasurementModel model{env.s2_model, cfg.batch_fracs, ref_n};
    const BeliefState prior = matched_gaussian_prior(env, ref_n);
    const double root_n = std::sqrt(static_cast<double>(ref_n));

    HistSeries series;
    series.label = "n=inf";
    series.scaled_regrets.resize(cfg.reps);
    parallel_reps(cfg.reps, cfg.threads, [&](int r) {
      RngStream instance_rng(seed_combine(
          cfg.master_seed, {kTagInstanceStream, static_cast<std::uint64_t>(ref_n),
                            static_cast<std::uint64_t>(r)}));
      const Instance inst = draw_instance(env, instance_rng, ref_n);
      const std::uint64_t seed =
          seed_combine(cfg.master_seed,
                       {kTagPolicyStream, 0xFFFFFFFFULL, static_cast<std::uint64_t>(r)});
      const Trajectory traj =
          run_limit_experiment(inst, prior, policy, model, seed);
      series.scaled_regrets[r] = root_n * traj.regret;
    });
    for (const HistSeries& finite : result.series)
      result.ks_vs_limit.emplace_back(
          finite.label, ks_distance(finite.scaled_regrets, series.scaled_regrets));
    result.series.push_back(std::move(series));
  }
  return result;
}

void print_summary(std::ostream& os, const std::vector<RegretSummary>& summary) {
  os << std::left << std::setw(28) << "policy" << std::right << std::setw(14)
     << "mean regret" << std::setw(12) << "std err" << std::setw(12)
     << "rel %" << std::setw(10) << "rel se" << '\n';
  for (const RegretSummary& s : summary) {
    os << std::left << std::setw(28) << s.policy << std::right << std::fixed
       << std::setprecision(6) << std::setw(14) << s.mean_regret
       << std::setw(12) << s.std_err;
    if (s.relative_defined)
      os << std::setprecision(1) << std::setw(12) << s.relative_pct
         << std::setw(10) << s.relative_se;
    else
      os << std::setw(12) << "undef" << std::setw(10) << "-";
    if (s.failures > 0) os << "  (" << s.failures << " failed)";
    os << '\n';
    os.unsetf(std::ios::fixed);
  }
}

}  // namespace bexp
