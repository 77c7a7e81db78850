#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "adp/adp_core.hpp"
#include "adp/errors.hpp"
#include "adp/json_io.hpp"
#include "adp/maxent_rl.hpp"
#include "adp/spiking.hpp"
#include "adp/stats.hpp"

namespace adp::harness {

using nlohmann::json;

struct Thresholds {
  double ks_critical_scale = 1.95;
  double chi2_p_floor = 0.001;
  long long n_samples = 100000;
};

enum class Fault { none, swap_action_pmf, low_lambda_bar };

struct RunConfig {
  std::string command;
  std::string model_path;
  SamplerKind sampler = SamplerKind::iaa;
  double lambda_bar = 0.0;  // 0 = choose automatically where needed
  double beta = 1.0;
  std::optional<long long> horizon_arrivals;
  std::optional<double> horizon_time;
  std::uint64_t seed = 1;
  int streams = 1;     // worker threads
  long long runs = 1;  // independent replications
  std::string out_dir = "out";
  Thresholds thresholds;
  double rho = 1e6;
  int steps = 500;
  double learning_rate = 0.25;
  std::string estimator = "exact";
  std::string policy_path;  // rl-eval input, optional
  Fault fault = Fault::none;
};

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  json provenance;  // seeds, sample sizes, thresholds

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  json to_json() const {
    json tests = json::array();
    for (const auto& c : checks)
      tests.push_back(json{{"name", c.name},
                           {"pass", c.passed},
                           {"statistic", c.statistic},
                           {"threshold", c.threshold},
                           {"detail", c.detail}});
    return json{{"tests", tests},
                {"overall_pass", all_passed()},
                {"provenance", provenance}};
  }
};

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Runs fn(run_index) for every replication on up to `workers` threads.
// Each replication derives its own RNG stream from its index, so results
// depend only on (seed, run), never on the thread schedule.
template <class F>
void for_each_run(long long runs, int workers, F&& fn) {
  if (runs <= 0) return;
  const int n_threads =
      static_cast<int>(std::min<long long>(std::max(workers, 1), runs));
  if (n_threads == 1) {
    for (long long r = 0; r < runs; ++r) fn(r);
    return;
  }
  std::atomic<long long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      while (true) {
        const long long r = next.fetch_add(1);
        if (r >= runs) return;
        fn(r);
      }
    });
  for (auto& t : pool) t.join();
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir);
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline Horizon horizon_from(const RunConfig& config) {
  if (config.horizon_time && config.horizon_arrivals)
    throw Error("choose one of --horizon-time and --horizon-arrivals");
  if (config.horizon_time) {
    if (!(*config.horizon_time > 0.0))
      throw Error("--horizon-time must be positive");
    return MaxTime{*config.horizon_time};
  }
  if (config.horizon_arrivals) {
    if (*config.horizon_arrivals <= 0)
      throw Error("--horizon-arrivals must be positive");
    return MaxArrivals{*config.horizon_arrivals};
  }
  throw Error("a horizon is required (--horizon-time or --horizon-arrivals)");
}

inline std::string action_label(const TabularAdp& model, const ActionId& a) {
  if (a.trivial && (!model.trivial_action() || a.index >= model.action_count()))
    return "Id";
  return model.action_name(a.index);
}

}  // namespace detail

// Largest per-state total tempered rate bound over [0, T], the smallest
// admissible uniformization constant.
inline double uniformization_bound(const TabularAdp& model, Temperature beta,
                                   double max_time) {
  double bound = 0.0;
  for (int x = 0; x < model.state_count(); ++x) {
    double state_bound = 0.0;
    for (int a = 0; a < model.action_count(); ++a) {
      if (model.trivial_action() && a == *model.trivial_action()) continue;
      state_bound += majorant(model.action_rate(x, a), 0.0, max_time, beta);
    }
    bound = std::max(bound, state_bound);
  }
  return bound;
}

struct SimulateOutputs {
  std::string trajectory_path;
  std::string summary_path;
  std::string actions_path;
  long long total_records = 0;
};

// Simulates `runs` independent trajectories (one RNG stream per run) and
// writes JSONL plus CSV summaries. Output bytes depend only on the seed
// and config, not on the worker count.
inline SimulateOutputs run_simulate(const RunConfig& config) {
  const json doc = io::read_json_file(config.model_path);
  const TabularAdp model = io::parse_tabular_model(doc, config.model_path);
  const Temperature beta(config.beta);
  const Horizon horizon = detail::horizon_from(config);

  SamplerChoice choice;
  choice.kind = config.sampler;
  if (config.sampler == SamplerKind::uniformized) {
    if (!config.horizon_time)
      throw Error("the uniformized sampler needs --horizon-time");
    choice.lambda_bar = config.lambda_bar > 0.0
                            ? config.lambda_bar
                            : 2.0 * uniformization_bound(model, beta,
                                                         *config.horizon_time);
  }

  std::vector<Trajectory<int>> trajectories(
      static_cast<std::size_t>(config.runs));
  detail::for_each_run(config.runs, config.streams, [&](long long run) {
    RngStream rng(config.seed, static_cast<std::uint64_t>(run));
    trajectories[static_cast<std::size_t>(run)] =
        simulate(model, choice, beta, horizon, model.initial_state(), rng);
  });

  detail::ensure_dir(config.out_dir);
  SimulateOutputs out;
  out.trajectory_path = detail::join_path(config.out_dir, "trajectory.jsonl");
  out.summary_path = detail::join_path(config.out_dir, "summary.csv");
  out.actions_path = detail::join_path(config.out_dir, "actions.csv");

  std::string jsonl;
  std::string summary = "run,records,total_time,mean_wait\n";
  std::map<std::string, long long> action_counts;
  for (long long run = 0; run < config.runs; ++run) {
    const auto& traj = trajectories[static_cast<std::size_t>(run)];
    double wait_sum = 0.0;
    for (const auto& rec : traj.records) {
      jsonl += io::trajectory_line(
          rec, detail::action_label(model, rec.action),
          config.runs > 1 ? std::optional<int>(static_cast<int>(run))
                          : std::nullopt);
      jsonl += '\n';
      wait_sum += rec.wait;
      ++action_counts[detail::action_label(model, rec.action)];
      ++out.total_records;
    }
    const auto n = traj.records.size();
    summary += std::to_string(run) + "," + std::to_string(n) + "," +
               detail::fmt(n ? traj.records.back().time : 0.0) + "," +
               detail::fmt(n ? wait_sum / static_cast<double>(n) : 0.0) + "\n";
  }
  std::string actions = "action,count\n";
  for (const auto& [name, count] : action_counts)
    actions += name + "," + std::to_string(count) + "\n";

  io::write_text_file(out.trajectory_path, jsonl);
  io::write_text_file(out.summary_path, summary);
  io::write_text_file(out.actions_path, actions);
  return out;
}

namespace detail {

struct StepSamples {
  std::vector<double> waits;
  std::vector<long long> action_counts;
  double total_time = 0.0;
};

template <class M>
StepSamples collect_steps(const Trajectory<int>& traj, const M& model) {
  StepSamples out;
  out.action_counts.assign(static_cast<std::size_t>(model.action_count()), 0);
  out.waits.reserve(traj.records.size());
  for (const auto& rec : traj.records) {
    if (rec.action.trivial) continue;
    out.waits.push_back(rec.wait);
    ++out.action_counts[static_cast<std::size_t>(rec.action.index)];
  }
  if (!traj.records.empty()) out.total_time = traj.records.back().time;
  return out;
}

// Replays a raw uniformized trajectory and accumulates the per-arrival
// trivial-action probability, for comparing the realized trivial count
// against its conditional mean and variance.
inline void replay_id_probability(const TabularAdp& model, Temperature beta,
                                  double lambda_bar,
                                  const Trajectory<int>& raw, double& expected,
                                  double& variance, long long& observed) {
  int x = raw.initial_state;
  double last_nontrivial = 0.0;
  expected = 0.0;
  variance = 0.0;
  observed = 0;
  for (const auto& rec : raw.records) {
    const double w = rec.time - last_nontrivial;
    double used = 0.0;
    for (int a = 0; a < model.action_count(); ++a) {
      if (model.trivial_action() && a == *model.trivial_action()) continue;
      used += rate_at(model.action_rate(x, a), w, beta) / lambda_bar;
    }
    const double p_id = std::max(0.0, 1.0 - std::min(used, 1.0));
    expected += p_id;
    variance += p_id * (1.0 - p_id);
    if (rec.action.trivial) {
      ++observed;
    } else {
      x = rec.state;
      last_nontrivial = rec.time;
    }
  }
}

}  // namespace detail

// Cross-validates the three samplers on one model: wait distributions by
// two-sample KS, action laws by chi-square, the trivial-arrival frequency
// of the uniformized walk against its analytic probability, and the
// factorization of (wait, next state) when the kernel ignores waits.
// Fault injection deliberately corrupts one pathway so the corresponding
// named test must fail.
inline ValidationReport run_validate_equivalence(const RunConfig& config) {
  const json doc = io::read_json_file(config.model_path);
  const TabularAdp model = io::parse_tabular_model(doc, config.model_path);
  const Temperature beta(config.beta);
  const long long n = config.horizon_arrivals.value_or(config.thresholds.n_samples);
  if (n < 10) throw Error("validate-equivalence: need at least 10 arrivals");

  ValidationReport report;
  report.provenance = json{{"model", config.model_path},
                           {"beta", config.beta},
                           {"seed", config.seed},
                           {"arrivals_per_sampler", n},
                           {"ks_critical_scale", config.thresholds.ks_critical_scale},
                           {"chi2_p_floor", config.thresholds.chi2_p_floor},
                           {"streams", {{"iaa", 0}, {"aaa", 1}, {"uniformized_base", 2}}}};

  RngStream rng_iaa(config.seed, 0);
  const auto iaa_traj = simulate(model, SamplerChoice{SamplerKind::iaa, 0.0},
                                 beta, MaxArrivals{n}, model.initial_state(),
                                 rng_iaa);
  auto iaa = detail::collect_steps(iaa_traj, model);

  RngStream rng_aaa(config.seed, 1);
  const auto aaa_traj = simulate(model, SamplerChoice{SamplerKind::aaa, 0.0},
                                 beta, MaxArrivals{n}, model.initial_state(),
                                 rng_aaa);
  auto aaa = detail::collect_steps(aaa_traj, model);

  if (config.fault == Fault::swap_action_pmf) {
    // Corrupted pathway: relabel the AAA actions by reversing the index
    // order, leaving waits untouched.
    std::reverse(aaa.action_counts.begin(), aaa.action_counts.end());
    if (model.trivial_action())
      throw Error("swap-action-pmf fault assumes no trivial action in the model");
  }

  {
    ValidationCheck check;
    check.name = "iaa-aaa-wait-ks";
    check.statistic = stats::ks_two_sample(iaa.waits, aaa.waits);
    check.threshold = stats::ks_two_sample_threshold(
        iaa.waits.size(), aaa.waits.size(), config.thresholds.ks_critical_scale);
    check.passed = check.statistic < check.threshold;
    check.detail = "two-sample KS on per-step waits";
    report.checks.push_back(check);
  }
  {
    ValidationCheck check;
    check.name = "iaa-aaa-action-chi2";
    long long live = 0;
    for (std::size_t a = 0; a < iaa.action_counts.size(); ++a)
      live += (iaa.action_counts[a] + aaa.action_counts[a]) > 0 ? 1 : 0;
    if (live < 2) {
      check.passed = true;
      check.threshold = config.thresholds.chi2_p_floor;
      check.statistic = 1.0;
      check.detail = "single live action category; homogeneity holds trivially";
    } else {
      const auto r = stats::chi2_homogeneity(iaa.action_counts, aaa.action_counts);
      check.statistic = r.p_value;
      check.threshold = config.thresholds.chi2_p_floor;
      check.passed = r.p_value > config.thresholds.chi2_p_floor;
      check.detail = "chi2 homogeneity of action counts, stat=" +
                     detail::fmt(r.statistic) + " dof=" + std::to_string(r.dof);
    }
    report.checks.push_back(check);
  }

  // Uniformized runs reuse the IAA time span so the samples are comparable.
  const double span = iaa.total_time > 0.0 ? iaa.total_time : 1.0;
  const double bound = uniformization_bound(model, beta, span);
  std::vector<double> lambda_bars;
  if (config.lambda_bar > 0.0) {
    lambda_bars.push_back(config.lambda_bar);
  } else {
    lambda_bars.push_back(2.0 * bound);
    lambda_bars.push_back(4.0 * bound);
  }
  if (config.fault == Fault::low_lambda_bar)
    for (double& lb : lambda_bars) lb = 0.9 * bound;
  report.provenance["lambda_bars"] = lambda_bars;
  report.provenance["uniformization_span"] = span;

  for (std::size_t k = 0; k < lambda_bars.size(); ++k) {
    const double lambda_bar = lambda_bars[k];
    const std::string tag = "unif" + std::to_string(k + 1);
    RngStream rng_unif(config.seed, 2 + static_cast<std::uint64_t>(k));
    Trajectory<int> raw;
    try {
      raw = sample_uniformized(model, lambda_bar, beta, span,
                               model.initial_state(), rng_unif);
    } catch (const BoundViolation& e) {
      for (const char* suffix : {"-wait-ks", "-action-chi2", "-id-prob"}) {
        ValidationCheck check;
        check.name = tag + suffix;
        check.passed = false;
        check.detail = e.what();
        report.checks.push_back(check);
      }
      continue;
    }
    const auto stripped = strip_trivial(raw);
    const auto unif = detail::collect_steps(stripped, model);

    {
      ValidationCheck check;
      check.name = tag + "-wait-ks";
      if (unif.waits.empty()) {
        check.passed = false;
        check.detail = "no nontrivial arrivals";
      } else {
        check.statistic = stats::ks_two_sample(iaa.waits, unif.waits);
        check.threshold = stats::ks_two_sample_threshold(
            iaa.waits.size(), unif.waits.size(),
            config.thresholds.ks_critical_scale);
        check.passed = check.statistic < check.threshold;
        check.detail = "two-sample KS, stripped waits vs iaa, lambda_bar=" +
                       detail::fmt(lambda_bar);
      }
      report.checks.push_back(check);
    }
    {
      ValidationCheck check;
      check.name = tag + "-action-chi2";
      long long live = 0;
      for (std::size_t a = 0; a < iaa.action_counts.size(); ++a)
        live += (iaa.action_counts[a] + unif.action_counts[a]) > 0 ? 1 : 0;
      if (live < 2) {
        check.passed = true;
        check.statistic = 1.0;
        check.threshold = config.thresholds.chi2_p_floor;
        check.detail = "single live action category; homogeneity holds trivially";
      } else {
        const auto r =
            stats::chi2_homogeneity(iaa.action_counts, unif.action_counts);
        check.statistic = r.p_value;
        check.threshold = config.thresholds.chi2_p_floor;
        check.passed = r.p_value > config.thresholds.chi2_p_floor;
        check.detail = "chi2 homogeneity vs iaa actions, lambda_bar=" +
                       detail::fmt(lambda_bar);
      }
      report.checks.push_back(check);
    }
    {
      ValidationCheck check;
      check.name = tag + "-id-prob";
      double expected = 0.0;
      double variance = 0.0;
      long long observed = 0;
      detail::replay_id_probability(model, beta, lambda_bar, raw, expected,
                                    variance, observed);
      if (raw.records.empty()) {
        check.passed = false;
        check.detail = "no uniformized arrivals";
      } else {
        check.statistic = std::abs(static_cast<double>(observed) - expected);
        check.threshold = 3.0 * std::sqrt(std::max(variance, 1.0));
        check.passed = check.statistic < check.threshold;
        check.detail = "trivial arrivals " + std::to_string(observed) +
                       " vs expected " + detail::fmt(expected) + " (3 SE band)";
      }
      report.checks.push_back(check);
    }
  }

  // Wait/next-state factorization at the busiest (state, action) pair,
  // meaningful only when the kernel ignores the wait.
  {
    std::map<std::pair<int, int>, std::vector<std::pair<double, int>>> cells;
    int x = iaa_traj.initial_state;
    for (const auto& rec : iaa_traj.records) {
      cells[{x, rec.action.index}].emplace_back(rec.wait, rec.state);
      x = rec.state;
    }
    std::pair<int, int> best{-1, -1};
    std::size_t best_n = 0;
    for (const auto& [key, data] : cells)
      if (data.size() > best_n) {
        best_n = data.size();
        best = key;
      }
    ValidationCheck check;
    check.name = "wait-state-independence";
    check.threshold = config.thresholds.chi2_p_floor;
    if (best_n < 200) {
      check.passed = true;
      check.statistic = 1.0;
      check.detail = "too few repeated (state, action) visits; skipped";
    } else {
      auto data = cells[best];
      std::vector<double> waits;
      waits.reserve(data.size());
      for (const auto& [w, y] : data) waits.push_back(w);
      std::sort(waits.begin(), waits.end());
      const double q1 = waits[waits.size() / 4];
      const double q2 = waits[waits.size() / 2];
      const double q3 = waits[3 * waits.size() / 4];
      std::vector<std::vector<long long>> table(
          4, std::vector<long long>(static_cast<std::size_t>(model.state_count()), 0));
      for (const auto& [w, y] : data) {
        const std::size_t bucket = w <= q1 ? 0 : w <= q2 ? 1 : w <= q3 ? 2 : 3;
        ++table[bucket][static_cast<std::size_t>(y)];
      }
      long long live_states = 0;
      for (int y = 0; y < model.state_count(); ++y) {
        long long col = 0;
        for (const auto& row : table) col += row[static_cast<std::size_t>(y)];
        live_states += col > 0 ? 1 : 0;
      }
      if (live_states < 2) {
        check.passed = true;
        check.statistic = 1.0;
        check.detail = "deterministic transition; independence holds trivially";
      } else {
        const auto r = stats::chi2_independence(table);
        check.statistic = r.p_value;
        check.passed = r.p_value > config.thresholds.chi2_p_floor;
        check.detail = "chi2 independence of wait quartile and next state at state " +
                       std::to_string(best.first) + ", action " +
                       std::to_string(best.second);
      }
    }
    report.checks.push_back(check);
  }

  return report;
}

struct RlOutputs {
  std::string log_path;
  std::string policy_path;
  std::string comparison_path;
  std::string sweep_path;
  bool diverged = false;
  double linf_policy_gap = 0.0;
  double objective_gap = 0.0;
};

namespace detail {

inline json policy_to_json(const rl::Policy& policy) {
  const auto pi = policy.probs();
  json logits = json::array();
  json probs = json::array();
  for (int s = 0; s < policy.states; ++s) {
    json lrow = json::array();
    json prow = json::array();
    for (int a = 0; a < policy.actions; ++a) {
      lrow.push_back(policy.logits[static_cast<std::size_t>(s * policy.actions + a)]);
      prow.push_back(pi[static_cast<std::size_t>(s * policy.actions + a)]);
    }
    logits.push_back(lrow);
    probs.push_back(prow);
  }
  return json{{"states", policy.states},
              {"actions", policy.actions},
              {"logits", logits},
              {"probs", probs}};
}

inline rl::Policy parse_policy(const json& j, const std::string& where) {
  rl::Policy policy;
  policy.states = io::detail::field<int>(j, "states", where);
  policy.actions = io::detail::field<int>(j, "actions", where);
  const auto logits =
      io::detail::field<std::vector<std::vector<double>>>(j, "logits", where);
  if (static_cast<int>(logits.size()) != policy.states)
    throw ParseError(where + ": logits must have one row per state");
  for (const auto& row : logits) {
    if (static_cast<int>(row.size()) != policy.actions)
      throw ParseError(where + ": logits rows must have one entry per action");
    policy.logits.insert(policy.logits.end(), row.begin(), row.end());
  }
  return policy;
}

// Largest pointwise gap between a stationary policy and the stagewise
// optimum over every stage.
inline double stationary_policy_gap(const rl::Policy& policy,
                                    const rl::SoftPlan& plan) {
  const auto pi = policy.probs();
  double gap = 0.0;
  const std::size_t block = pi.size();
  for (int k = 0; k < plan.horizon; ++k)
    for (std::size_t i = 0; i < block; ++i)
      gap = std::max(gap,
                     std::abs(pi[i] - plan.policy[static_cast<std::size_t>(k) * block + i]));
  return gap;
}

}  // namespace detail

// Trains a policy by KL descent, writes the training log, the trained
// policy, a comparison against the soft-value-iteration optimum, and a
// rho sweep showing the optimum's drift toward the max-ent solution.
inline RlOutputs run_rl_train(const RunConfig& config) {
  const json doc = io::read_json_file(config.model_path);
  const rl::TabularMdp mdp = io::parse_mdp(doc, config.model_path);
  const int horizon =
      static_cast<int>(config.horizon_arrivals.value_or(1));

  rl::TrainConfig train;
  train.kl = rl::KlConfig{config.rho, horizon};
  train.steps = config.steps;
  train.learning_rate = config.learning_rate;
  if (config.estimator == "exact")
    train.estimator = rl::GradientEstimator::exact;
  else if (config.estimator == "reinforce")
    train.estimator = rl::GradientEstimator::reinforce;
  else
    throw Error("unknown gradient estimator \"" + config.estimator + "\"");

  RngStream rng(config.seed, 0);
  const auto result = rl::train_policy(
      mdp, rl::Policy::uniform(mdp.state_count(), mdp.action_count()), train,
      rng);

  const auto plan = rl::soft_value_iteration(mdp, horizon);

  detail::ensure_dir(config.out_dir);
  RlOutputs out;
  out.diverged = result.diverged;
  out.log_path = detail::join_path(config.out_dir, "training_log.csv");
  out.policy_path = detail::join_path(config.out_dir, "policy.json");
  out.comparison_path = detail::join_path(config.out_dir, "comparison.csv");
  out.sweep_path = detail::join_path(config.out_dir, "rho_sweep.csv");

  std::string log = "step,kl,maxent_objective,grad_norm\n";
  for (const auto& row : result.history)
    log += std::to_string(row.step) + "," + detail::fmt(row.kl) + "," +
           detail::fmt(row.maxent) + "," + detail::fmt(row.grad_norm) + "\n";
  io::write_text_file(out.log_path, log);

  json policy_doc = detail::policy_to_json(result.policy);
  policy_doc["diverged"] = result.diverged;
  io::write_text_file(out.policy_path, policy_doc.dump(2) + "\n");

  out.linf_policy_gap = detail::stationary_policy_gap(result.policy, plan);
  out.objective_gap =
      rl::soft_optimal_value(mdp, plan) -
      rl::maxent_objective(mdp, result.policy, horizon);
  std::string comparison = "quantity,value\n";
  comparison += "linf_policy_gap," + detail::fmt(out.linf_policy_gap) + "\n";
  comparison += "objective_gap," + detail::fmt(out.objective_gap) + "\n";
  comparison += "soft_optimal_value," +
                detail::fmt(rl::soft_optimal_value(mdp, plan)) + "\n";
  comparison += "trained_maxent_objective," +
                detail::fmt(rl::maxent_objective(mdp, result.policy, horizon)) +
                "\n";
  comparison += "trained_kl," +
                detail::fmt(rl::kl_closed_form(mdp, result.policy, train.kl)) +
                "\n";
  io::write_text_file(out.comparison_path, comparison);

  std::string sweep = "rho,kl,maxent_objective,linf_policy_gap,objective_gap\n";
  for (double rho : {1e2, 1e4, 1e6}) {
    rl::TrainConfig sweep_cfg = train;
    sweep_cfg.kl.rho = rho;
    sweep_cfg.estimator = rl::GradientEstimator::exact;
    RngStream sweep_rng(config.seed, 1);
    const auto swept = rl::train_policy(
        mdp, rl::Policy::uniform(mdp.state_count(), mdp.action_count()),
        sweep_cfg, sweep_rng);
    sweep += detail::fmt(rho) + "," +
             detail::fmt(rl::kl_closed_form(mdp, swept.policy, sweep_cfg.kl)) +
             "," + detail::fmt(rl::maxent_objective(mdp, swept.policy, horizon)) +
             "," + detail::fmt(detail::stationary_policy_gap(swept.policy, plan)) +
             "," +
             detail::fmt(rl::soft_optimal_value(mdp, plan) -
                         rl::maxent_objective(mdp, swept.policy, horizon)) +
             "\n";
  }
  io::write_text_file(out.sweep_path, sweep);
  return out;
}

// Evaluates a policy (trained file or uniform fallback): closed-form KL,
// Monte-Carlo KL with standard error, max-ent objective, and gaps to the
// soft optimum. The closed-form/Monte-Carlo agreement is the validation.
inline ValidationReport run_rl_eval(const RunConfig& config) {
  const json doc = io::read_json_file(config.model_path);
  const rl::TabularMdp mdp = io::parse_mdp(doc, config.model_path);
  const int horizon = static_cast<int>(config.horizon_arrivals.value_or(1));
  const rl::KlConfig cfg{config.rho, horizon};

  rl::Policy policy = rl::Policy::uniform(mdp.state_count(), mdp.action_count());
  if (!config.policy_path.empty())
    policy = detail::parse_policy(io::read_json_file(config.policy_path),
                                  config.policy_path);

  const double closed = rl::kl_closed_form(mdp, policy, cfg);
  RngStream rng(config.seed, 0);
  const auto mc =
      rl::kl_monte_carlo(mdp, policy, cfg, config.thresholds.n_samples, rng);
  const auto plan = rl::soft_value_iteration(mdp, horizon);

  ValidationReport report;
  report.provenance = json{{"model", config.model_path},
                           {"policy", config.policy_path.empty()
                                          ? json("uniform")
                                          : json(config.policy_path)},
                           {"rho", config.rho},
                           {"horizon", horizon},
                           {"seed", config.seed},
                           {"mc_samples", mc.samples}};
  {
    ValidationCheck check;
    check.name = "kl-closed-vs-monte-carlo";
    check.statistic = std::abs(closed - mc.estimate);
    check.threshold = 3.0 * mc.std_error;
    check.passed = check.statistic <= check.threshold;
    check.detail = "closed " + detail::fmt(closed) + ", mc " +
                   detail::fmt(mc.estimate) + " +- " + detail::fmt(mc.std_error);
    report.checks.push_back(check);
  }
  {
    ValidationCheck check;
    check.name = "kl-nonnegative";
    check.statistic = closed;
    check.threshold = -1e-10;
    check.passed = closed >= -1e-10;
    check.detail = "exact KL of the sampling process against the rate model";
    report.checks.push_back(check);
  }
  report.provenance["maxent_objective"] =
      rl::maxent_objective(mdp, policy, horizon);
  report.provenance["soft_optimal_value"] = rl::soft_optimal_value(mdp, plan);
  report.provenance["linf_policy_gap"] =
      detail::stationary_policy_gap(policy, plan);

  detail::ensure_dir(config.out_dir);
  io::write_text_file(detail::join_path(config.out_dir, "eval.json"),
                      report.to_json().dump(2) + "\n");
  return report;
}

struct SpikingOutputs {
  std::string raster_path;
  std::string summary_path;
  std::string isi_path;
  ValidationReport report;
};

// Replicated spiking simulation: spike raster CSV, per-neuron statistics,
// inter-spike-interval histograms, and built-in validations (renewal
// permutation test for a single neuron, symmetry balance for a symmetric
// pair).
inline SpikingOutputs run_spiking_demo(const RunConfig& config) {
  const json doc = io::read_json_file(config.model_path);
  const SpikingNetwork net = io::parse_spiking_network(doc, config.model_path);
  if (!config.horizon_time) throw Error("spiking-demo needs --horizon-time");
  const double horizon = *config.horizon_time;
  const Temperature beta(config.beta);

  std::vector<SpikingRun> runs_out(static_cast<std::size_t>(config.runs));
  detail::for_each_run(config.runs, config.streams, [&](long long run) {
    RngStream rng(config.seed, static_cast<std::uint64_t>(run));
    runs_out[static_cast<std::size_t>(run)] =
        simulate_spiking(net, horizon, beta, rng);
  });

  detail::ensure_dir(config.out_dir);
  SpikingOutputs out;
  out.raster_path = detail::join_path(config.out_dir, "raster.csv");
  out.summary_path = detail::join_path(config.out_dir, "spiking_summary.csv");
  out.isi_path = detail::join_path(config.out_dir, "isi_histogram.csv");

  std::string raster = "run,t,neuron\n";
  const auto n = static_cast<std::size_t>(net.neuron_count());
  std::vector<long long> counts(n, 0);
  std::vector<std::vector<double>> isis(n);
  for (long long run = 0; run < config.runs; ++run) {
    std::vector<double> last_spike(n, 0.0);
    for (const auto& spike : runs_out[static_cast<std::size_t>(run)].spikes) {
      raster += std::to_string(run) + "," + detail::fmt(spike.time) + "," +
                std::to_string(spike.neuron) + "\n";
      const auto j = static_cast<std::size_t>(spike.neuron);
      ++counts[j];
      isis[j].push_back(spike.time - last_spike[j]);
      last_spike[j] = spike.time;
    }
  }
  io::write_text_file(out.raster_path, raster);

  std::string summary = "neuron,spikes,rate,isi_mean,isi_stderr\n";
  for (std::size_t j = 0; j < n; ++j) {
    const auto s = stats::summarize(isis[j]);
    summary += std::to_string(j) + "," + std::to_string(counts[j]) + "," +
               detail::fmt(static_cast<double>(counts[j]) /
                           (horizon * static_cast<double>(config.runs))) +
               "," + detail::fmt(s.mean) + "," + detail::fmt(s.std_error) + "\n";
  }
  io::write_text_file(out.summary_path, summary);

  std::string hist = "neuron,bin_lo,bin_hi,count\n";
  for (std::size_t j = 0; j < n; ++j) {
    if (isis[j].empty()) continue;
    const double hi = *std::max_element(isis[j].begin(), isis[j].end());
    const int bins = 16;
    const double width = hi > 0.0 ? hi / bins : 1.0;
    std::vector<long long> bucket(static_cast<std::size_t>(bins), 0);
    for (double v : isis[j]) {
      auto b = static_cast<std::size_t>(std::min<double>(
          std::floor(v / width), static_cast<double>(bins - 1)));
      ++bucket[b];
    }
    for (int b = 0; b < bins; ++b)
      hist += std::to_string(j) + "," + detail::fmt(b * width) + "," +
              detail::fmt((b + 1) * width) + "," +
              std::to_string(bucket[static_cast<std::size_t>(b)]) + "\n";
  }
  io::write_text_file(out.isi_path, hist);

  out.report.provenance = json{{"network", config.model_path},
                               {"beta", config.beta},
                               {"horizon", horizon},
                               {"runs", config.runs},
                               {"seed", config.seed}};
  if (net.neuron_count() == 1 && !isis[0].empty() && isis[0].size() >= 10) {
    // Single neuron: spikes form a renewal process, so the intervals of
    // one run must look exchangeable.
    RngStream perm_rng(config.seed, static_cast<std::uint64_t>(config.runs));
    std::vector<double> first_run;
    double last = 0.0;
    for (const auto& spike : runs_out[0].spikes) {
      first_run.push_back(spike.time - last);
      last = spike.time;
    }
    ValidationCheck check;
    check.name = "isi-permutation-iid";
    if (first_run.size() < 10) {
      check.passed = true;
      check.statistic = 1.0;
      check.detail = "too few intervals; skipped";
    } else {
      check.statistic =
          stats::permutation_pvalue_lag1(first_run, 500, perm_rng);
      check.threshold = config.thresholds.chi2_p_floor;
      check.passed = check.statistic > check.threshold;
      check.detail = "permutation p-value of |lag-1 autocorrelation|, run 0";
    }
    out.report.checks.push_back(check);
  }
  if (net.neuron_count() == 2) {
    const bool symmetric =
        net.weight(0, 1) == net.weight(1, 0) &&
        net.initial_potentials()[0] == net.initial_potentials()[1];
    if (symmetric) {
      ValidationCheck check;
      check.name = "symmetric-pair-balance";
      const double total = static_cast<double>(counts[0] + counts[1]);
      check.statistic = static_cast<double>(counts[0] - counts[1]);
      check.threshold = 3.0 * std::sqrt(std::max(total, 1.0));
      check.passed = std::abs(check.statistic) < check.threshold;
      check.detail = "spike-count difference of the two exchangeable neurons";
      out.report.checks.push_back(check);
    }
  }
  io::write_text_file(detail::join_path(config.out_dir, "spiking_report.json"),
                      out.report.to_json().dump(2) + "\n");
  return out;
}

}  // namespace adp::harness
