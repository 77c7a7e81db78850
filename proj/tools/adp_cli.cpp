// Command-line front end: simulation, sampler cross-validation, policy
// training and evaluation, and the spiking-network demo. Exit code 0 only
// when every validation in the invoked command passes.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "adp/errors.hpp"
#include "adp/harness.hpp"

namespace {

void add_common(CLI::App* cmd, adp::harness::RunConfig& config,
                bool wants_model = true) {
  if (wants_model)
    cmd->add_option("--model", config.model_path, "model description (JSON)")
        ->required();
  cmd->add_option("--beta", config.beta, "inverse temperature")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", config.seed, "base RNG seed");
  cmd->add_option("--streams", config.streams,
                  "worker threads; never affects output bytes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", config.out_dir, "output directory");
}

void print_report(const adp::harness::ValidationReport& report) {
  for (const auto& check : report.checks)
    std::printf("[%s] %-28s stat=%.6g thresh=%.6g  %s\n",
                check.passed ? "PASS" : "FAIL", check.name.c_str(),
                check.statistic, check.threshold, check.detail.c_str());
  std::printf("overall: %s\n", report.all_passed() ? "PASS" : "FAIL");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-time action-driven process toolkit"};
  app.require_subcommand(1);

  adp::harness::RunConfig config;
  std::string sampler_name = "iaa";
  std::string fault_name = "none";

  auto* simulate = app.add_subcommand("simulate", "sample trajectories");
  add_common(simulate, config);
  simulate->add_option("--sampler", sampler_name, "iaa | aaa | unif")
      ->check(CLI::IsMember({"iaa", "aaa", "unif"}));
  simulate->add_option("--lambda-bar", config.lambda_bar,
                       "uniformization rate bound (0 = auto)");
  simulate->add_option("--horizon-arrivals", config.horizon_arrivals,
                       "stop after this many arrivals");
  simulate->add_option("--horizon-time", config.horizon_time,
                       "stop at this time");
  simulate->add_option("--runs", config.runs, "independent replications")
      ->check(CLI::PositiveNumber);

  auto* validate =
      app.add_subcommand("validate-equivalence",
                         "cross-check the three samplers on one model");
  add_common(validate, config);
  validate->add_option("--horizon-arrivals", config.horizon_arrivals,
                       "arrivals per sampler (default 100000)");
  validate->add_option("--lambda-bar", config.lambda_bar,
                       "uniformization rate bound (0 = auto grid)");
  validate
      ->add_option("--inject-fault", fault_name,
                   "deliberately corrupt one pathway (testing aid)")
      ->check(CLI::IsMember({"none", "swap-action-pmf", "low-lambda-bar"}));

  auto* rl_train = app.add_subcommand("rl-train", "train a policy by KL descent");
  add_common(rl_train, config);
  rl_train->add_option("--rho", config.rho, "model arrival rate")
      ->check(CLI::PositiveNumber);
  rl_train->add_option("--horizon-arrivals", config.horizon_arrivals,
                       "decision stages (default 1)");
  rl_train->add_option("--steps", config.steps, "gradient steps")
      ->check(CLI::PositiveNumber);
  rl_train->add_option("--lr", config.learning_rate, "learning rate")
      ->check(CLI::PositiveNumber);
  rl_train->add_option("--estimator", config.estimator, "exact | reinforce")
      ->check(CLI::IsMember({"exact", "reinforce"}));

  auto* rl_eval = app.add_subcommand("rl-eval", "evaluate a policy");
  add_common(rl_eval, config);
  rl_eval->add_option("--policy", config.policy_path,
                      "trained policy JSON (default: uniform policy)");
  rl_eval->add_option("--rho", config.rho, "model arrival rate")
      ->check(CLI::PositiveNumber);
  rl_eval->add_option("--horizon-arrivals", config.horizon_arrivals,
                      "decision stages (default 1)");
  rl_eval->add_option("--samples", config.thresholds.n_samples,
                      "Monte-Carlo trajectories")
      ->check(CLI::PositiveNumber);

  auto* spiking = app.add_subcommand("spiking-demo", "simulate a spiking network");
  add_common(spiking, config);
  spiking->add_option("--horizon-time", config.horizon_time, "simulated time")
      ->required();
  spiking->add_option("--runs", config.runs, "independent replications")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (sampler_name == "aaa")
    config.sampler = adp::SamplerKind::aaa;
  else if (sampler_name == "unif")
    config.sampler = adp::SamplerKind::uniformized;
  if (fault_name == "swap-action-pmf")
    config.fault = adp::harness::Fault::swap_action_pmf;
  else if (fault_name == "low-lambda-bar")
    config.fault = adp::harness::Fault::low_lambda_bar;

  try {
    if (simulate->parsed()) {
      config.command = "simulate";
      const auto out = adp::harness::run_simulate(config);
      std::printf("wrote %lld records to %s\n", out.total_records,
                  out.trajectory_path.c_str());
      std::printf("summaries: %s, %s\n", out.summary_path.c_str(),
                  out.actions_path.c_str());
      return 0;
    }
    if (validate->parsed()) {
      config.command = "validate-equivalence";
      const auto report = adp::harness::run_validate_equivalence(config);
      adp::harness::detail::ensure_dir(config.out_dir);
      adp::io::write_text_file(
          adp::harness::detail::join_path(config.out_dir, "validation.json"),
          report.to_json().dump(2) + "\n");
      print_report(report);
      return report.all_passed() ? 0 : 1;
    }
    if (rl_train->parsed()) {
      config.command = "rl-train";
      const auto out = adp::harness::run_rl_train(config);
      std::printf("training log: %s\n", out.log_path.c_str());
      std::printf("policy: %s\n", out.policy_path.c_str());
      std::printf("comparison: %s (policy gap %.6g, objective gap %.6g)\n",
                  out.comparison_path.c_str(), out.linf_policy_gap,
                  out.objective_gap);
      std::printf("rho sweep: %s\n", out.sweep_path.c_str());
      if (out.diverged) {
        std::printf("training diverged; wrote the best checkpoint\n");
        return 1;
      }
      return 0;
    }
    if (rl_eval->parsed()) {
      config.command = "rl-eval";
      const auto report = adp::harness::run_rl_eval(config);
      print_report(report);
      return report.all_passed() ? 0 : 1;
    }
    if (spiking->parsed()) {
      config.command = "spiking-demo";
      const auto out = adp::harness::run_spiking_demo(config);
      std::printf("raster: %s\n", out.raster_path.c_str());
      std::printf("summary: %s\n", out.summary_path.c_str());
      std::printf("isi histogram: %s\n", out.isi_path.c_str());
      print_report(out.report);
      return out.report.all_passed() ? 0 : 1;
    }
  } catch (const adp::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
