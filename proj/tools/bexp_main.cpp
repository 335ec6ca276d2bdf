#include "bexp/belief.hpp"
#include "bexp/bench.hpp"
#include "bexp/json_io.hpp"
#include "bexp/planner.hpp"
#include "bexp/sim.hpp"
#include "bexp/svg.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace bexp;

namespace {

// "top-k:5:0.1" -> top_k = 5, entropy weight 0.1
PlanningObjective parse_objective(const std::string& text) {
  PlanningObjective obj;
  if (text.empty() || text == "simple-regret") return obj;
  if (text.rfind("top-k:", 0) != 0)
    throw CLI::ValidationError("--objective",
                               "expected \"simple-regret\" or \"top-k:K[:LAMBDA]\"");
  std::string rest = text.substr(6);
  const auto colon = rest.find(':');
  obj.top_k = std::stoi(rest.substr(0, colon));
  if (colon != std::string::npos)
    obj.entropy_weight = std::stod(rest.substr(colon + 1));
  return obj;
}

// "weights.json:0.3" -> r from the file, r_bar = 0.3
LinearConstraint parse_constraint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--constraint", "expected FILE:RBAR");
  LinearConstraint c;
  c.r = array_from_json(load_json_file(text.substr(0, colon)), "constraint r");
  c.r_bar = std::stod(text.substr(colon + 1));
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open \"" + path.string() + "\"");
  out << text;
}

int cmd_solve(const std::string& input_path, double budget, int samples,
              std::uint64_t seed, int iters, bool pseudo,
              const std::string& objective_text,
              const std::string& constraint_text) {
  const SolveInput input = solve_input_from_json(load_json_file(input_path));
  const double b_bar = budget > 0.0 ? budget : input.budget;
  if (!(b_bar > 0.0))
    throw std::runtime_error("no residual budget: set \"budget\" in the input "
                             "file or pass --budget");

  PlannerConfig cfg;
  cfg.num_samples = samples;
  cfg.seed = seed;
  cfg.max_iters = iters;
  cfg.qmc = !pseudo;

  PlanningObjective objective = parse_objective(objective_text);
  if (!constraint_text.empty())
    objective.constraint = parse_constraint(constraint_text);

  SolveResult result;
  if (objective.top_k == 1 && objective.entropy_weight == 0.0 &&
      !objective.constraint) {
    result = solve_rho(input.state, b_bar, input.s2, cfg);
  } else {
    result = solve_extended(input.state, b_bar, input.s2, objective, cfg);
  }

  json out{{"allocation", to_json(result.allocation)},
           {"value", result.value},
           {"iterations", result.iterations},
           {"converged", result.converged}};
  if (!result.converged)
    out["warning"] = "iteration limit reached; best iterate returned";
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_run(const std::string& config_path, std::uint64_t seed,
            const std::string& policy_override, const std::string& out_path) {
  const json j = load_json_file(config_path);
  ExperimentConfig cfg = experiment_config_from_json(j);
  const std::string policy_text =
      !policy_override.empty()
          ? policy_override
          : (cfg.policies.empty() ? std::string("uniform") : cfg.policies.front());
  PolicySpec policy = PolicySpec::parse(policy_text);
  if (policy.se_grid) policy = PolicySpec::parse("se:c=1:delta=0.1");

  Trajectory traj;
  if (cfg.env.kind == RewardKind::GaussianLimit) {
    RngStream rng(seed_combine(seed, 1));
    const Instance inst = draw_instance(cfg.env, rng, cfg.model.n);
    traj = run_limit_experiment(inst, matched_gaussian_prior(cfg.env, cfg.model.n),
                                policy, cfg.model, seed);
  } else {
    traj = run_experiment(cfg.env, policy, cfg.model, seed);
  }

  const std::string text = to_json(traj).dump(2) + "\n";
  if (out_path.empty()) std::cout << text;
  else write_text(out_path, text);
  return 0;
}

int cmd_bench(const std::string& config_path, std::int64_t seed, int reps,
              const std::string& out_dir, int threads) {
  const json j = load_json_file(config_path);
  ExperimentConfig cfg = experiment_config_from_json(j);
  if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
  if (reps > 0) cfg.reps = reps;
  if (threads > 0) cfg.threads = threads;

  const std::vector<TrialRecord> records = run_benchmark(cfg);
  fs::create_directories(out_dir);
  write_records(records, (fs::path(out_dir) / "records.csv").string(),
                RecordFormat::csv);
  write_records(records, (fs::path(out_dir) / "records.json").string(),
                RecordFormat::json);

  const bool have_uniform =
      std::any_of(records.begin(), records.end(),
                  [](const TrialRecord& r) { return r.policy == "uniform"; });
  if (have_uniform) {
    const std::vector<RegretSummary> summary = relative_gain(records);
    print_summary(std::cout, summary);

    std::ofstream sout(fs::path(out_dir) / "summary.csv");
    sout << "policy,mean_regret,std_err,relative_pct,relative_se\n"
         << std::setprecision(17);
    std::vector<std::string> labels;
    std::vector<double> rel;
    for (const RegretSummary& s : summary) {
      sout << s.policy << ',' << s.mean_regret << ',' << s.std_err << ','
           << s.relative_pct << ',' << s.relative_se << '\n';
      if (s.relative_defined) {
        labels.push_back(s.policy);
        rel.push_back(s.relative_pct);
      }
    }
    if (!labels.empty())
      write_bar_svg((fs::path(out_dir) / "relative_regret.svg").string(),
                    "simple regret relative to uniform (%)", labels, rel);
  } else {
    std::cout << "note: no uniform baseline listed; skipping relative summary\n";
  }

  // Per-policy regret histograms on a shared axis.
  std::map<std::string, std::vector<double>> regrets;
  for (const TrialRecord& r : records)
    if (!std::isnan(r.regret)) regrets[r.policy].push_back(r.regret);
  std::vector<std::pair<std::string, Histogram>> series;
  for (const auto& [policy, values] : regrets)
    series.emplace_back(policy, regret_histogram(values, 30));
  write_histogram_svg((fs::path(out_dir) / "regret_hist.svg").string(),
                      "simple regret by policy", series);
  std::cout << "records and plots written to " << out_dir << "\n";
  return 0;
}

int cmd_hist(const std::string& config_path, std::int64_t seed, int reps,
             const std::string& out_dir, int bins, int threads) {
  const json j = load_json_file(config_path);
  const json& hj = j.contains("hist") ? j.at("hist") : j;

  HistStudyConfig cfg;
  const json& env = j.at("env");
  const std::string type = env.at("type").get<std::string>();
  if (type == "beta-bernoulli") cfg.kind = RewardKind::Bernoulli;
  else if (type == "gamma-gumbel") cfg.kind = RewardKind::Gumbel;
  else throw std::runtime_error("hist: environment must be beta-bernoulli or gamma-gumbel");
  cfg.family = parse_prior_family(env.value("prior", std::string("flat")));
  cfg.num_arms = env.at("K").get<Index>();
  cfg.s2 = env.value("s2", 1.0);
  cfg.varsigma = env.value("varsigma", 0.0);

  const json& schedule = j.at("schedule");
  if (schedule.contains("b") && schedule.at("b").is_array()) {
    cfg.batch_fracs = array_from_json(schedule.at("b"), "b");
  } else {
    cfg.batch_fracs = ArrayXd::Constant(schedule.at("T").get<Index>(),
                                        schedule.value("b", 1.0));
  }

  cfg.include_limit = false;
  for (const json& v : hj.at("n")) {
    if (v.is_string() && (v == "inf" || v == "infinity"))
      cfg.include_limit = true;
    else
      cfg.scalings.push_back(v.get<std::int64_t>());
  }
  cfg.policy = hj.value("policy", std::string("ts"));
  cfg.reps = reps > 0 ? reps : hj.value("reps", j.value("reps", 2000));
  cfg.master_seed = seed >= 0 ? static_cast<std::uint64_t>(seed)
                              : j.value("seed", std::uint64_t{0});
  cfg.threads = threads;

  const HistStudyResult result = run_hist_study(cfg);
  fs::create_directories(out_dir);

  // Shared bin edges across rows for comparability.
  std::vector<double> pooled;
  for (const HistSeries& s : result.series)
    pooled.insert(pooled.end(), s.scaled_regrets.begin(), s.scaled_regrets.end());
  const Histogram pooled_hist = regret_histogram(pooled, bins);
  const double hi = pooled_hist.edges[pooled_hist.edges.size() - 1];

  std::ofstream csv(fs::path(out_dir) / "hist.csv");
  csv << "series,bin_lo,bin_hi,count\n" << std::setprecision(17);
  std::vector<std::pair<std::string, Histogram>> series;
  for (const HistSeries& s : result.series) {
    std::vector<double> padded = s.scaled_regrets;
    padded.push_back(hi);  // pin the shared right edge
    Histogram h = regret_histogram(padded, bins);
    h.counts[static_cast<std::size_t>(bins) - 1] -= 1;
    for (int i = 0; i < bins; ++i)
      csv << s.label << ',' << h.edges[i] << ',' << h.edges[i + 1] << ','
          << h.counts[i] << '\n';
    series.emplace_back(s.label, std::move(h));
  }

  std::ofstream ks(fs::path(out_dir) / "ks.csv");
  ks << "series,ks_vs_limit\n";
  for (const auto& [label, d] : result.ks_vs_limit) {
    ks << label << ',' << d << '\n';
    std::cout << "KS(" << label << ", n=inf) = " << d << '\n';
  }

  write_histogram_svg((fs::path(out_dir) / "hist.svg").string(),
                      "scaled simple regret across batch scalings", series);
  std::cout << "histograms written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batched adaptive experiment planner and benchmark harness"};
  app.require_subcommand(1);

  // solve
  std::string solve_input;
  double solve_budget = 0.0;
  int solve_samples = 1024;
  std::uint64_t solve_seed = 0;
  int solve_iters = 500;
  bool solve_pseudo = false;
  std::string objective_text, constraint_text;
  CLI::App* solve = app.add_subcommand("solve", "plan one allocation from a belief file");
  solve->add_option("--input", solve_input, "belief + model JSON file")->required();
  solve->add_option("--budget", solve_budget, "residual sampling budget");
  solve->add_option("--samples", solve_samples, "SAA sample count");
  solve->add_option("--seed", solve_seed, "draw seed");
  solve->add_option("--iters", solve_iters, "max ascent iterations");
  solve->add_flag("--pseudo", solve_pseudo, "plain Monte Carlo draws instead of QMC");
  solve->add_option("--objective", objective_text,
                    "simple-regret (default) or top-k:K[:LAMBDA]");
  solve->add_option("--constraint", constraint_text,
                    "linear constraint FILE:RBAR on the allocation");

  // run
  std::string run_config, run_policy, run_out;
  std::uint64_t run_seed = 0;
  CLI::App* run = app.add_subcommand("run", "run one trajectory, print it as JSON");
  run->add_option("--config", run_config, "experiment config JSON")->required();
  run->add_option("--seed", run_seed, "trajectory seed");
  run->add_option("--policy", run_policy, "policy spec override");
  run->add_option("--out", run_out, "output file (stdout when absent)");

  // bench
  std::string bench_config, bench_out = "bench_out";
  std::int64_t bench_seed = -1;
  int bench_reps = 0, bench_threads = 0;
  CLI::App* bench = app.add_subcommand("bench", "full policy sweep with shared instances");
  bench->add_option("--config", bench_config, "experiment config JSON")->required();
  bench->add_option("--seed", bench_seed, "master seed override");
  bench->add_option("--reps", bench_reps, "replication count override");
  bench->add_option("--out", bench_out, "output directory");
  bench->add_option("--threads", bench_threads, "worker threads (0 = auto)");

  // hist
  std::string hist_config, hist_out = "hist_out";
  std::int64_t hist_seed = -1;
  int hist_reps = 0, hist_bins = 30, hist_threads = 0;
  CLI::App* hist = app.add_subcommand(
      "hist", "regret histograms across batch scalings, including n = inf");
  hist->add_option("--config", hist_config, "experiment config JSON")->required();
  hist->add_option("--seed", hist_seed, "master seed override");
  hist->add_option("--reps", hist_reps, "replication count override");
  hist->add_option("--out", hist_out, "output directory");
  hist->add_option("--bins", hist_bins, "histogram bins");
  hist->add_option("--threads", hist_threads, "worker threads (0 = auto)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return cmd_solve(solve_input, solve_budget, solve_samples, solve_seed,
                       solve_iters, solve_pseudo, objective_text, constraint_text);
    if (run->parsed()) return cmd_run(run_config, run_seed, run_policy, run_out);
    if (bench->parsed())
      return cmd_bench(bench_config, bench_seed, bench_reps, bench_out,
                       bench_threads);
    if (hist->parsed())
      return cmd_hist(hist_config, hist_seed, hist_reps, hist_out, hist_bins,
                      hist_threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
