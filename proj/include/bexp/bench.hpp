#pragma once

#include "bexp/sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace bexp {

/// Grid of successive-elimination constants searched when a bare "se" policy
/// is listed.
struct SeGrid {
  std::vector<double> c{0.5, 1.0, 2.0};
  std::vector<double> delta{0.1, 0.05};
};

struct ExperimentConfig {
  EnvironmentSpec env;
  MeasurementModel model;
  std::vector<std::string> policies;
  int reps = 100;
  std::uint64_t master_seed = 0;
  SeGrid se_grid;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

/// One (policy, replication) outcome. `alloc_entropy` summarizes the per-epoch
/// allocations by their Shannon entropy.
struct TrialRecord {
  std::string policy;
  int replication = 0;
  std::uint64_t seed = 0;
  double regret = 0.0;
  Index selected_arm = 0;
  std::vector<double> alloc_entropy;

  bool core_fields_equal(const TrialRecord& other) const;
};

struct RegretSummary {
  std::string policy;
  double mean_regret = 0.0;
  double std_err = 0.0;
  double relative_pct = 0.0;     // 100 * mean / mean(baseline)
  double relative_se = 0.0;      // delta-method SE on the paired ratio
  bool relative_defined = true;  // false when the baseline mean is zero
  int failures = 0;
};

/// Runs every policy over shared instances: replication r draws one instance
/// used by all policies, while reward streams stay per-policy independent.
/// Fully deterministic given the config; failures are recorded (NaN regret)
/// and the sweep continues.
std::vector<TrialRecord> run_benchmark(const ExperimentConfig& cfg);

/// Per-policy mean regret and percentage relative to the baseline policy.
std::vector<RegretSummary> relative_gain(const std::vector<TrialRecord>& records,
                                         const std::string& baseline = "uniform");

struct Histogram {
  ArrayXd edges;  // bins + 1 ascending edges starting at 0
  std::vector<std::int64_t> counts;
};

Histogram regret_histogram(const std::vector<double>& regrets, int bins);
Histogram regret_histogram(const std::vector<TrialRecord>& records, int bins);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

enum class RecordFormat { csv, json };

/// Writes records sorted by (policy, replication). CSV columns are exactly
/// policy,replication,seed,regret,selected_arm; JSON is an array of objects
/// with the same fields.
void write_records(const std::vector<TrialRecord>& records,
                   const std::string& path, RecordFormat format);

std::vector<TrialRecord> read_records_csv(const std::string& path);

/// Text summary table, one row per policy.
void print_summary(std::ostream& os, const std::vector<RegretSummary>& summary);

/// Regret-distribution comparison across batch scalings n, optionally
/// including the limit experiment (n = infinity). Prior families are
/// re-scaled per n so the scaled problem stays comparable; regrets are
/// reported in scaled units (sqrt(n) times the raw gap).
struct HistStudyConfig {
  RewardKind kind = RewardKind::Bernoulli;
  PriorFamily family = PriorFamily::Flat;
  Index num_arms = 10;
  double s2 = 1.0;  // Gumbel model noise; Bernoulli always uses 1/4
  double varsigma = 0.0;
  ArrayXd batch_fracs;
  std::vector<std::int64_t> scalings;
  bool include_limit = true;
  std::string policy = "ts";
  int reps = 2000;
  std::uint64_t master_seed = 0;
  int threads = 0;
};

struct HistSeries {
  std::string label;
  std::vector<double> scaled_regrets;
};

struct HistStudyResult {
  std::vector<HistSeries> series;  // limit row last when included
  /// KS distance of each finite row against the limit row.
  std::vector<std::pair<std::string, double>> ks_vs_limit;
};

HistStudyResult run_hist_study(const HistStudyConfig& cfg);

}  // namespace bexp
