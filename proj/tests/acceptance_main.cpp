// Release gate: each shipping requirement is pinned here as an executable
// criterion with its stated tolerance and time budget. The binary prints
// one PASS/FAIL line per criterion and exits nonzero if any fail.
//
// Usage: adp_acceptance <path-to-cli-binary>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adp/adp_core.hpp"
#include "adp/harness.hpp"
#include "adp/maxent_rl.hpp"
#include "adp/point_process.hpp"
#include "adp/spiking.hpp"
#include "adp/stats.hpp"
#include "test_support.hpp"

using adp::RateFunction;
using adp::Temperature;
using nlohmann::json;

namespace {

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<std::string()> run;  // empty string = pass, else failure note
};

struct StepData {
  std::vector<double> waits;
  std::vector<long long> actions;
  double span = 0.0;
};

StepData collect(const adp::Trajectory<int>& traj, int action_count) {
  StepData out;
  out.actions.assign(static_cast<std::size_t>(action_count), 0);
  for (const auto& r : traj.records) {
    if (r.action.trivial) continue;
    out.waits.push_back(r.wait);
    ++out.actions[static_cast<std::size_t>(r.action.index)];
  }
  if (!traj.records.empty()) out.span = traj.records.back().time;
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------

std::string criterion_path_normalization() {
  // Summing exp(log path density) times the arrival-time simplex volume
  // over all arrival counts must return the full probability mass.
  for (double lambda : {0.5, 1.0, 2.0}) {
    const auto f = RateFunction::constant(lambda);
    const double horizon = 1.0;
    double sum = 0.0;
    double log_volume = 0.0;  // log(T^n / n!)
    for (int n = 0; n <= 60; ++n) {
      adp::ArrivalPath path;
      path.horizon = horizon;
      // Equally spaced representative; a flat rate's density is the same
      // for every arrival arrangement.
      for (int i = 1; i <= n; ++i)
        path.arrivals.push_back(horizon * i / (n + 1.0));
      if (n > 0) log_volume += std::log(horizon / n);
      sum += std::exp(
          adp::path_log_density(f, Temperature(1.0), path) + log_volume);
    }
    if (std::abs(sum - 1.0) > 1e-10)
      return "lambda " + fmt(lambda) + ": mass " + fmt(sum);
  }
  return "";
}

std::string criterion_wait_density() {
  adp::RngStream rng(20240817, 0);
  const auto f = RateFunction::exp_affine(0.0, 1.0);
  std::vector<double> waits;
  waits.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    const auto w = adp::sample_wait(f, Temperature(1.0), 0.0, 30.0, rng);
    if (!w) return "unexpected empty draw at i = " + std::to_string(i);
    waits.push_back(*w);
  }
  const double ks = adp::stats::ks_statistic(waits, [](double w) {
    return 1.0 - std::exp(-(std::exp(w) - 1.0));
  });
  const double threshold = 1.95 * std::sqrt(2.0 / 100000.0);
  if (ks >= threshold)
    return "KS " + fmt(ks) + " not below " + fmt(threshold);
  return "";
}

std::string criterion_iaa_aaa() {
  const auto model = testsup::three_state_model();
  const long long n = 100000;
  adp::RngStream rng_iaa(510, 0);
  const auto iaa = simulate(model, {adp::SamplerKind::iaa, 0.0},
                            Temperature(1.0), adp::MaxArrivals{n}, rng_iaa);
  adp::RngStream rng_aaa(510, 1);
  const auto aaa = simulate(model, {adp::SamplerKind::aaa, 0.0},
                            Temperature(1.0), adp::MaxArrivals{n}, rng_aaa);
  const auto si = collect(iaa, 2);
  const auto sa = collect(aaa, 2);
  const double ks = adp::stats::ks_two_sample(si.waits, sa.waits);
  const double threshold = 1.95 * std::sqrt(2.0 / static_cast<double>(n));
  if (ks >= threshold)
    return "wait KS " + fmt(ks) + " not below " + fmt(threshold);
  const auto chi = adp::stats::chi2_homogeneity(si.actions, sa.actions);
  if (chi.p_value <= 0.001)
    return "action chi2 p " + fmt(chi.p_value) + " not above 0.001";
  return "";
}

std::string criterion_uniformization() {
  const auto model = testsup::three_state_model();
  const long long n = 100000;
  adp::RngStream rng_iaa(520, 0);
  const auto iaa = simulate(model, {adp::SamplerKind::iaa, 0.0},
                            Temperature(1.0), adp::MaxArrivals{n}, rng_iaa);
  const auto si = collect(iaa, 2);

  int stream = 1;
  for (double lambda_bar : {8.0, 16.0}) {
    adp::RngStream rng(520, static_cast<std::uint64_t>(stream++));
    const auto raw = adp::sample_uniformized(model, lambda_bar,
                                             Temperature(1.0), si.span, 0, rng);
    const auto stripped = adp::strip_trivial(raw);
    const auto su = collect(stripped, 2);

    const double ks = adp::stats::ks_two_sample(si.waits, su.waits);
    const double threshold =
        adp::stats::ks_two_sample_threshold(si.waits.size(), su.waits.size());
    if (ks >= threshold)
      return "lambda_bar " + fmt(lambda_bar) + ": wait KS " + fmt(ks) +
             " not below " + fmt(threshold);
    const auto chi = adp::stats::chi2_homogeneity(si.actions, su.actions);
    if (chi.p_value <= 0.001)
      return "lambda_bar " + fmt(lambda_bar) + ": action chi2 p " +
             fmt(chi.p_value);

    // Every state has flat total rate 4, so each arrival is trivial with
    // probability exactly 1 - 4 / lambda_bar.
    long long trivial = 0;
    for (const auto& r : raw.records)
      if (r.action.trivial) ++trivial;
    const double p = 1.0 - 4.0 / lambda_bar;
    const double total = static_cast<double>(raw.records.size());
    const double se = std::sqrt(total * p * (1.0 - p));
    if (std::abs(static_cast<double>(trivial) - p * total) >= 3.0 * se)
      return "lambda_bar " + fmt(lambda_bar) + ": trivial count " +
             std::to_string(trivial) + " vs mean " + fmt(p * total);
  }
  return "";
}

std::string criterion_discretization() {
  for (double lambda : {0.4, 1.0, 2.3})
    for (double beta : {1.0, 2.0})
      for (double delta : {0.05, 0.5}) {
        const auto bin = adp::discretize_bin(RateFunction::constant(lambda),
                                             Temperature(beta), 0.0, delta);
        const double mean = delta * std::pow(lambda, beta);
        for (std::size_t k = 0; k < bin.probs.size(); ++k) {
          const double want =
              testsup::poisson_pmf(static_cast<long long>(k), mean);
          if (std::abs(bin.probs[k] - want) > 1e-12)
            return "pmf mismatch " + fmt(std::abs(bin.probs[k] - want)) +
                   " at n = " + std::to_string(k);
        }
      }

  const auto unit = RateFunction::constant(1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    const auto bin = adp::discretize_bin(unit, Temperature(1.0), 0.0, delta);
    const double multi = (1.0 - bin.probs[0] - bin.probs[1]) / delta;
    if (multi >= prev) return "multi-arrival mass not o(delta) at " + fmt(delta);
    prev = multi;
  }

  const double hot = adp::binary_bin_prob(RateFunction::constant(1.1),
                                          Temperature(50.0), 0.0, 0.1);
  const double cold = adp::binary_bin_prob(RateFunction::constant(0.9),
                                           Temperature(50.0), 0.0, 0.1);
  if (!(hot > 0.999)) return "supra-unit rate fires with p " + fmt(hot);
  if (!(cold < 0.001)) return "sub-unit rate fires with p " + fmt(cold);
  return "";
}

adp::rl::TabularMdp random_mdp(int states, int actions, adp::RngStream& rng) {
  std::vector<double> initial(static_cast<std::size_t>(states));
  double norm = 0.0;
  for (auto& v : initial) {
    v = 0.1 + rng.uniform();
    norm += v;
  }
  for (auto& v : initial) v /= norm;
  std::vector<double> transition;
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < actions; ++a) {
      std::vector<double> row(static_cast<std::size_t>(states));
      double sum = 0.0;
      for (auto& v : row) {
        v = 0.05 + rng.uniform();
        sum += v;
      }
      for (double v : row) transition.push_back(v / sum);
    }
  std::vector<double> reward(
      static_cast<std::size_t>(states) * static_cast<std::size_t>(actions));
  for (auto& r : reward) r = 2.0 * rng.uniform() - 1.0;
  return adp::rl::TabularMdp(states, actions, initial, transition, reward);
}

std::string criterion_kl_identity() {
  using adp::rl::KlConfig;
  using adp::rl::Policy;
  const adp::rl::TabularMdp bandit(1, 2, {1.0}, {1.0, 1.0},
                                   {0.0, std::log(3.0)});
  Policy matched = Policy::uniform(1, 2);
  matched.logits = {std::log(0.25), std::log(0.75)};
  const double zero = adp::rl::kl_closed_form(bandit, matched, KlConfig{4.0, 1});
  if (std::abs(zero) > 1e-12) return "matched divergence " + fmt(zero);

  adp::RngStream maker(530, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto mdp = random_mdp(3, 2, maker);
    Policy policy = Policy::uniform(3, 2);
    for (auto& l : policy.logits) l = 2.0 * maker.uniform() - 1.0;
    const KlConfig cfg{1.0 + 3.0 * maker.uniform(), 3};
    const double closed = adp::rl::kl_closed_form(mdp, policy, cfg);
    if (closed < -1e-10)
      return "trial " + std::to_string(trial) + ": negative divergence " +
             fmt(closed);
    adp::RngStream rng(531, static_cast<std::uint64_t>(trial));
    const auto mc = adp::rl::kl_monte_carlo(mdp, policy, cfg, 20000, rng);
    if (std::abs(closed - mc.estimate) > 3.0 * mc.std_error)
      return "trial " + std::to_string(trial) + ": closed " + fmt(closed) +
             " vs mc " + fmt(mc.estimate) + " +- " + fmt(mc.std_error);
  }
  return "";
}

std::string criterion_maxent_equivalence() {
  using adp::rl::KlConfig;
  using adp::rl::Policy;

  const adp::rl::TabularMdp bandit(1, 2, {1.0}, {1.0, 1.0},
                                   {0.0, std::log(3.0)});
  adp::rl::TrainConfig train;
  train.kl = KlConfig{1e6, 1};
  train.steps = 600;
  train.learning_rate = 0.5;
  adp::RngStream rng(540, 0);
  const auto result =
      adp::rl::train_policy(bandit, Policy::uniform(1, 2), train, rng);
  const auto pi = result.policy.probs();
  const auto plan = adp::rl::soft_value_iteration(bandit, 1);
  const double bandit_gap =
      std::max(std::abs(pi[0] - plan.policy[0]), std::abs(pi[1] - plan.policy[1]));
  if (bandit_gap >= 1e-3 || std::abs(pi[1] - 0.75) >= 1e-3)
    return "bandit policy gap " + fmt(bandit_gap);

  adp::RngStream maker(541, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto mdp = random_mdp(5, 2, maker);
    adp::rl::TrainConfig cfg;
    cfg.kl = KlConfig{1e6, 1};
    cfg.steps = 3000;
    cfg.learning_rate = 0.5;
    adp::RngStream trng(542, static_cast<std::uint64_t>(trial));
    const auto trained =
        adp::rl::train_policy(mdp, Policy::uniform(5, 2), cfg, trng);
    const auto probs = trained.policy.probs();
    const auto opt = adp::rl::soft_value_iteration(mdp, 1);
    double gap = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k)
      gap = std::max(gap, std::abs(probs[k] - opt.policy[k]));
    if (gap >= 1e-2)
      return "trial " + std::to_string(trial) + ": policy gap " + fmt(gap);
  }

  adp::RngStream gm(543, 0);
  const auto mdp = random_mdp(3, 2, gm);
  Policy policy = Policy::uniform(3, 2);
  for (auto& l : policy.logits) l = 2.0 * gm.uniform() - 1.0;
  const KlConfig cfg{5.0, 3};
  const auto grad = adp::rl::kl_gradient(mdp, policy, cfg);
  const double h = 1e-5;
  for (std::size_t k = 0; k < policy.logits.size(); ++k) {
    Policy hi = policy, lo = policy;
    hi.logits[k] += h;
    lo.logits[k] -= h;
    const double fd = (adp::rl::kl_closed_form(mdp, hi, cfg) -
                       adp::rl::kl_closed_form(mdp, lo, cfg)) /
                      (2.0 * h);
    if (std::abs(grad[k] - fd) > 1e-4 * std::max(1.0, std::abs(fd)))
      return "gradient component " + std::to_string(k) + ": exact " +
             fmt(grad[k]) + " vs fd " + fmt(fd);
  }
  return "";
}

std::string criterion_spiking() {
  // Exact decay against the closed form and an independent integrator.
  adp::PotentialState state{{1.0, 2.0, -0.7}, 0.0};
  const auto decayed = adp::decay_potentials(state, 1.3, 0.9);
  for (std::size_t i = 0; i < state.potentials.size(); ++i) {
    const double want = state.potentials[i] * std::exp(-0.9 * 1.3);
    if (std::abs(decayed.potentials[i] - want) > 1e-12)
      return "decay error " + fmt(std::abs(decayed.potentials[i] - want));
  }
  const double rk = testsup::rk4([](double, double u) { return -0.9 * u; },
                                 2.0, 0.0, 1.3);
  if (std::abs(decayed.potentials[1] - rk) > 1e-9)
    return "decay disagrees with the ODE oracle by " +
           fmt(std::abs(decayed.potentials[1] - rk));

  const adp::SpikingNetwork pair({{0.0, 0.3}, {0.3, 0.0}}, 1.0, 1.0, 1.0, 0.2,
                                 {0.8, 0.8});
  adp::SpikingAdp model(pair);
  adp::RngStream rng(550, 0);
  const int n = 100000;
  int first0 = 0;
  for (int i = 0; i < n; ++i) {
    const auto step = adp::sample_iaa_step(
        model, model.initial_state(), Temperature(1.0),
        std::numeric_limits<double>::infinity(), rng);
    if (!step) return "symmetric race produced no spike";
    if (step->action.index == 0) ++first0;
  }
  if (std::abs(first0 - n / 2.0) >= 3.0 * std::sqrt(n / 4.0))
    return "first-spike split " + std::to_string(first0) + "/" +
           std::to_string(n - first0);

  const adp::SpikingNetwork biased({{0.0, 0.0}, {0.0, 0.0}}, 0.05, 1.0, 1.0,
                                   0.0, {1.2, 0.8});
  adp::SpikingAdp hot(biased);
  adp::RngStream rng2(551, 0);
  int supra = 0;
  const int m = 2000;
  for (int i = 0; i < m; ++i) {
    const auto step = adp::sample_iaa_step(
        hot, hot.initial_state(), Temperature(50.0),
        std::numeric_limits<double>::infinity(), rng2);
    if (!step) return "cold race produced no spike";
    if (step->action.index == 0) ++supra;
  }
  if (!(static_cast<double>(supra) / m > 0.999))
    return "supra-threshold frequency " + fmt(static_cast<double>(supra) / m);
  return "";
}

// --- CLI determinism -------------------------------------------------------

std::string g_cli;

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::map<std::string, std::string> dir_bytes(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    out[entry.path().filename().string()] = body.str();
  }
  return out;
}

std::string criterion_cli_determinism() {
  namespace fs = std::filesystem;
  const std::string root = "acceptance_scratch";
  fs::remove_all(root);
  fs::create_directories(root);

  // Model inputs for the commands under test.
  {
    json rates, transitions;
    for (int x = 0; x < 3; ++x) {
      rates[std::to_string(x) + ",go"] =
          json{{"kind", "constant"}, {"level", 1.0}};
      rates[std::to_string(x) + ",jump"] =
          json{{"kind", "constant"}, {"level", 3.0}};
      std::vector<double> fwd(3, 0.0), bwd(3, 0.0);
      fwd[static_cast<std::size_t>((x + 1) % 3)] = 0.7;
      fwd[static_cast<std::size_t>((x + 2) % 3)] = 0.3;
      bwd[static_cast<std::size_t>((x + 2) % 3)] = 0.6;
      bwd[static_cast<std::size_t>(x)] = 0.4;
      transitions[std::to_string(x) + ",go"] = fwd;
      transitions[std::to_string(x) + ",jump"] = bwd;
    }
    adp::io::write_text_file(root + "/model.json",
                             json{{"states", 3},
                                  {"actions", {"go", "jump"}},
                                  {"initial", 0},
                                  {"rates", rates},
                                  {"transitions", transitions}}
                                 .dump(2));
    adp::io::write_text_file(
        root + "/bandit.json",
        json{{"S", 1},
             {"A", 2},
             {"initial", {1.0}},
             {"transition", {{{1.0}, {1.0}}}},
             {"reward", {{0.0, std::log(3.0)}}}}
            .dump(2));
    adp::io::write_text_file(root + "/pair.json",
                             json{{"n", 2},
                                  {"weights", {{0.0, 0.3}, {0.3, 0.0}}},
                                  {"tau", 1.0},
                                  {"gain", 1.0},
                                  {"threshold", 1.0},
                                  {"reset", 0.2},
                                  {"u0", {0.8, 0.8}}}
                                 .dump(2));
  }

  struct Command {
    std::string name;
    std::string args;  // without --out / --streams
    bool replicated;   // has worker streams to vary
  };
  const std::vector<Command> commands = {
      {"simulate-iaa",
       "simulate --model " + root + "/model.json --sampler iaa "
       "--horizon-arrivals 300 --runs 4 --seed 9",
       true},
      {"simulate-aaa",
       "simulate --model " + root + "/model.json --sampler aaa "
       "--horizon-arrivals 300 --runs 4 --seed 9",
       true},
      {"simulate-unif",
       "simulate --model " + root + "/model.json --sampler unif "
       "--lambda-bar 8 --horizon-time 30 --runs 4 --seed 9",
       true},
      {"validate",
       "validate-equivalence --model " + root + "/model.json "
       "--horizon-arrivals 2000 --seed 9",
       false},
      {"rl-train",
       "rl-train --model " + root + "/bandit.json --rho 1e6 --steps 60 "
       "--lr 0.5 --seed 9",
       false},
      {"rl-eval",
       "rl-eval --model " + root + "/bandit.json --rho 4 --samples 5000 "
       "--seed 9",
       false},
      {"spiking",
       "spiking-demo --model " + root + "/pair.json --horizon-time 40 "
       "--runs 4 --seed 9",
       true},
  };

  for (const auto& cmd : commands) {
    std::vector<std::pair<std::string, int>> variants = {
        {"a", 1}, {"b", 1}};  // repeat with one worker
    if (cmd.replicated) variants.push_back({"c", 4});  // then four workers
    std::map<std::string, std::string> reference;
    for (const auto& [tag, streams] : variants) {
      const std::string out = root + "/" + cmd.name + "_" + tag;
      const int rc = run_cli(cmd.args + " --streams " +
                             std::to_string(streams) + " --out " + out);
      if (rc != 0)
        return cmd.name + " (" + tag + "): exit status " + std::to_string(rc);
      auto bytes = dir_bytes(out);
      if (bytes.empty()) return cmd.name + " (" + tag + "): no output files";
      if (tag == "a") {
        reference = std::move(bytes);
        continue;
      }
      if (bytes.size() != reference.size())
        return cmd.name + " (" + tag + "): file set differs";
      for (const auto& [name, body] : bytes) {
        const auto it = reference.find(name);
        if (it == reference.end())
          return cmd.name + " (" + tag + "): unexpected file " + name;
        if (it->second != body)
          return cmd.name + " (" + tag + "): " + name + " differs";
      }
    }
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-cli>\n", argv[0]);
    return 2;
  }
  g_cli = argv[1];

  const std::vector<Criterion> criteria = {
      {"path-density-normalization", 1.0, criterion_path_normalization},
      {"wait-density-sampling", 5.0, criterion_wait_density},
      {"iaa-aaa-equivalence", 10.0, criterion_iaa_aaa},
      {"uniformization-invariance", 20.0, criterion_uniformization},
      {"bin-discretization", 5.0, criterion_discretization},
      {"kl-identity", 30.0, criterion_kl_identity},
      {"maxent-rl-equivalence", 60.0, criterion_maxent_equivalence},
      {"spiking-invariants", 30.0, criterion_spiking},
      {"cli-determinism", 120.0, criterion_cli_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    std::string note;
    try {
      note = c.run();
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    bool pass = note.empty();
    if (pass && seconds > c.budget_seconds) {
      pass = false;
      note = "over time budget";
    }
    std::printf("[%s] %zu. %-28s %6.2fs (budget %.0fs)%s%s\n",
                pass ? "PASS" : "FAIL", i + 1, c.name.c_str(), seconds,
                c.budget_seconds, note.empty() ? "" : "  ", note.c_str());
    if (!pass) ++failures;
  }
  std::printf("%s: %d of %zu criteria passed\n",
              failures == 0 ? "ACCEPTED" : "REJECTED",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
