#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "adp/errors.hpp"
#include "adp/rng.hpp"

namespace adp::rl {

// Finite MDP with a reward per (state, action). The induced rate model
// assigns action a in state s the rate exp(reward(s, a)), so the total
// model rate in s is state_rate(s) = sum_a exp(reward(s, a)).
class TabularMdp {
 public:
  TabularMdp(int states, int actions, std::vector<double> initial,
             std::vector<double> transition, std::vector<double> reward)
      : states_(states),
        actions_(actions),
        initial_(std::move(initial)),
        transition_(std::move(transition)),
        reward_(std::move(reward)) {
    if (states_ <= 0 || actions_ <= 0)
      throw Error("TabularMdp: need at least one state and one action");
    const auto S = static_cast<std::size_t>(states_);
    const auto A = static_cast<std::size_t>(actions_);
    if (initial_.size() != S)
      throw Error("TabularMdp: initial pmf length must equal the state count");
    if (transition_.size() != S * A * S)
      throw Error("TabularMdp: transition tensor must be states*actions*states");
    if (reward_.size() != S * A)
      throw Error("TabularMdp: reward matrix must be states*actions");
    normalize_pmf(initial_.data(), S, "initial pmf");
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a)
        normalize_pmf(&transition_[(s * A + a) * S], S, "transition row");
    for (double r : reward_)
      if (!std::isfinite(r)) throw Error("TabularMdp: rewards must be finite");
    state_rate_.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
      double sum = 0.0;
      for (std::size_t a = 0; a < A; ++a) sum += std::exp(reward_[s * A + a]);
      state_rate_[s] = sum;
    }
  }

  int state_count() const { return states_; }
  int action_count() const { return actions_; }
  const std::vector<double>& initial() const { return initial_; }

  double transition(int s, int a, int next) const {
    return transition_[idx3(s, a, next)];
  }
  double reward(int s, int a) const { return reward_[idx2(s, a)]; }
  // exp(reward(s, a)): the model rate of action a in state s.
  double action_rate(int s, int a) const { return std::exp(reward(s, a)); }
  double state_rate(int s) const {
    return state_rate_[static_cast<std::size_t>(s)];
  }

 private:
  static void normalize_pmf(double* p, std::size_t n, const char* what) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(p[i] >= 0.0) || !std::isfinite(p[i]))
        throw Error(std::string("TabularMdp: ") + what +
                    " entries must be nonnegative and finite");
      sum += p[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error(std::string("TabularMdp: ") + what + " does not sum to 1");
    for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
  }

  std::size_t idx2(int s, int a) const {
    check(s, a, 0);
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(actions_) +
           static_cast<std::size_t>(a);
  }
  std::size_t idx3(int s, int a, int next) const {
    check(s, a, next);
    return (static_cast<std::size_t>(s) * static_cast<std::size_t>(actions_) +
            static_cast<std::size_t>(a)) *
               static_cast<std::size_t>(states_) +
           static_cast<std::size_t>(next);
  }
  void check(int s, int a, int next) const {
    if (s < 0 || s >= states_ || next < 0 || next >= states_)
      throw UnknownState("TabularMdp: state index out of range");
    if (a < 0 || a >= actions_) throw Error("TabularMdp: action index out of range");
  }

  int states_;
  int actions_;
  std::vector<double> initial_;
  std::vector<double> transition_;  // [s][a][s']
  std::vector<double> reward_;      // [s][a]
  std::vector<double> state_rate_;
};

// Stationary softmax policy over logits theta[s][a].
struct Policy {
  int states = 0;
  int actions = 0;
  std::vector<double> logits;  // [s][a]

  static Policy uniform(int states, int actions) {
    Policy p;
    p.states = states;
    p.actions = actions;
    p.logits.assign(
        static_cast<std::size_t>(states) * static_cast<std::size_t>(actions),
        0.0);
    return p;
  }

  // Row-wise softmax, computed with the max subtracted so large logits
  // stay finite. Rows are strictly positive by construction.
  std::vector<double> probs() const {
    const auto S = static_cast<std::size_t>(states);
    const auto A = static_cast<std::size_t>(actions);
    std::vector<double> pi(S * A);
    for (std::size_t s = 0; s < S; ++s) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) mx = std::max(mx, logits[s * A + a]);
      double sum = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        pi[s * A + a] = std::exp(logits[s * A + a] - mx);
        sum += pi[s * A + a];
      }
      for (std::size_t a = 0; a < A; ++a) pi[s * A + a] /= sum;
    }
    return pi;
  }
};

// Sampling-process parameters: waits are Exp(rho), the horizon counts
// arrivals.
struct KlConfig {
  double rho = 1.0;
  int horizon = 1;
};

namespace detail {

inline void require_policy(const TabularMdp& mdp, const Policy& policy) {
  if (policy.states != mdp.state_count() || policy.actions != mdp.action_count())
    throw Error("policy shape does not match the MDP");
}

inline void require_config(const KlConfig& cfg) {
  if (!(cfg.rho > 0.0) || !std::isfinite(cfg.rho))
    throw Error("rho must be positive and finite");
  if (cfg.horizon < 1) throw Error("horizon must be at least 1");
}

// Stage cost h(s) under the current policy plus its derivative with
// respect to the same state's logits. Everything downstream (closed-form
// objectives and their exact gradients) runs through one forward pass over
// the state marginals with this pair plugged in.
struct StageTerms {
  std::vector<double> h;   // [s]
  std::vector<double> dh;  // [s][a]
};

// KL stage: sum_a pi (log pi - r) + state_rate(s)/rho.
inline StageTerms kl_stage(const TabularMdp& mdp, const std::vector<double>& pi,
                           double rho) {
  const auto S = static_cast<std::size_t>(mdp.state_count());
  const auto A = static_cast<std::size_t>(mdp.action_count());
  StageTerms out;
  out.h.resize(S);
  out.dh.assign(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    double inner = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      const double p = pi[s * A + a];
      if (p > 0.0)
        inner += p * (std::log(p) -
                      mdp.reward(static_cast<int>(s), static_cast<int>(a)));
    }
    out.h[s] = inner + mdp.state_rate(static_cast<int>(s)) / rho;
    for (std::size_t a = 0; a < A; ++a) {
      const double p = pi[s * A + a];
      const double term =
          p > 0.0 ? std::log(p) -
                        mdp.reward(static_cast<int>(s), static_cast<int>(a))
                  : 0.0;
      out.dh[s * A + a] = p * (term - inner);
    }
  }
  return out;
}

// Max-ent stage: sum_a pi r + entropy(pi(.|s)).
inline StageTerms maxent_stage(const TabularMdp& mdp,
                               const std::vector<double>& pi) {
  const auto S = static_cast<std::size_t>(mdp.state_count());
  const auto A = static_cast<std::size_t>(mdp.action_count());
  StageTerms out;
  out.h.resize(S);
  out.dh.assign(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    double inner = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      const double p = pi[s * A + a];
      if (p > 0.0)
        inner += p * (mdp.reward(static_cast<int>(s), static_cast<int>(a)) -
                      std::log(p));
    }
    out.h[s] = inner;
    for (std::size_t a = 0; a < A; ++a) {
      const double p = pi[s * A + a];
      const double term =
          p > 0.0 ? mdp.reward(static_cast<int>(s), static_cast<int>(a)) -
                        std::log(p)
                  : 0.0;
      out.dh[s * A + a] = p * (term - inner);
    }
  }
  return out;
}

// sum_{n=1..N} (constant + E_{mu_{n-1}}[h]) with mu the forward state
// marginals under the policy. If grad is non-null it receives the exact
// derivative, propagated through the marginal recursion:
//   dmu'(s')/dtheta[t,b] = sum_s dmu(s) P(s,s')
//                        + mu(t) pi(b|t) (q(s'|t,b) - P(t,s')).
inline double accumulate_stages(const TabularMdp& mdp,
                                const std::vector<double>& pi, int horizon,
                                const StageTerms& stage, double constant,
                                std::vector<double>* grad) {
  const auto S = static_cast<std::size_t>(mdp.state_count());
  const auto A = static_cast<std::size_t>(mdp.action_count());
  if (horizon < 1) throw Error("horizon must be at least 1");

  std::vector<double> P(S * S, 0.0);  // state-to-state kernel under pi
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const double p = pi[s * A + a];
      if (p == 0.0) continue;
      for (std::size_t next = 0; next < S; ++next)
        P[s * S + next] += p * mdp.transition(static_cast<int>(s),
                                              static_cast<int>(a),
                                              static_cast<int>(next));
    }

  std::vector<double> mu = mdp.initial();
  std::vector<double> dmu;  // [s][theta], theta = [t][b]
  if (grad) {
    grad->assign(S * A, 0.0);
    dmu.assign(S * S * A, 0.0);
  }

  double total = 0.0;
  for (int n = 1; n <= horizon; ++n) {
    total += constant;
    for (std::size_t s = 0; s < S; ++s) total += mu[s] * stage.h[s];
    if (grad) {
      for (std::size_t s = 0; s < S; ++s) {
        if (stage.h[s] != 0.0)
          for (std::size_t k = 0; k < S * A; ++k)
            (*grad)[k] += dmu[s * S * A + k] * stage.h[s];
        for (std::size_t a = 0; a < A; ++a)
          (*grad)[s * A + a] += mu[s] * stage.dh[s * A + a];
      }
    }
    if (n == horizon) break;

    std::vector<double> mu_next(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      if (mu[s] == 0.0) continue;
      for (std::size_t next = 0; next < S; ++next)
        mu_next[next] += mu[s] * P[s * S + next];
    }
    if (grad) {
      std::vector<double> dmu_next(S * S * A, 0.0);
      for (std::size_t next = 0; next < S; ++next)
        for (std::size_t s = 0; s < S; ++s) {
          const double w = P[s * S + next];
          if (w == 0.0) continue;
          for (std::size_t k = 0; k < S * A; ++k)
            dmu_next[next * S * A + k] += dmu[s * S * A + k] * w;
        }
      for (std::size_t t = 0; t < S; ++t) {
        if (mu[t] == 0.0) continue;
        for (std::size_t b = 0; b < A; ++b) {
          const double scale = mu[t] * pi[t * A + b];
          if (scale == 0.0) continue;
          for (std::size_t next = 0; next < S; ++next)
            dmu_next[next * S * A + t * A + b] +=
                scale * (mdp.transition(static_cast<int>(t),
                                        static_cast<int>(b),
                                        static_cast<int>(next)) -
                         P[t * S + next]);
        }
      }
      dmu.swap(dmu_next);
    }
    mu.swap(mu_next);
  }
  return total;
}

}  // namespace detail

// Forward state marginals mu_0..mu_N under a stationary policy.
inline std::vector<std::vector<double>> forward_marginals(const TabularMdp& mdp,
                                                          const Policy& policy,
                                                          int horizon) {
  detail::require_policy(mdp, policy);
  if (horizon < 0) throw Error("forward_marginals: horizon must be >= 0");
  const auto S = static_cast<std::size_t>(mdp.state_count());
  const auto A = static_cast<std::size_t>(mdp.action_count());
  const auto pi = policy.probs();
  std::vector<std::vector<double>> out;
  out.push_back(mdp.initial());
  for (int n = 0; n < horizon; ++n) {
    std::vector<double> next(S, 0.0);
    const auto& mu = out.back();
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        const double w = mu[s] * pi[s * A + a];
        if (w == 0.0) continue;
        for (std::size_t y = 0; y < S; ++y)
          next[y] += w * mdp.transition(static_cast<int>(s),
                                        static_cast<int>(a),
                                        static_cast<int>(y));
      }
    out.push_back(std::move(next));
  }
  return out;
}

// sum_{n=1..N} E_{mu_{n-1}}[state_rate(s)]: the total expected model rate
// along the horizon, the term the KL and max-ent objectives differ by.
inline double expected_state_rate_sum(const TabularMdp& mdp,
                                      const Policy& policy, int horizon) {
  const auto marginals = forward_marginals(mdp, policy, horizon - 1);
  double total = 0.0;
  for (const auto& mu : marginals)
    for (int s = 0; s < mdp.state_count(); ++s)
      total += mu[static_cast<std::size_t>(s)] * mdp.state_rate(s);
  return total;
}

// KL divergence over N steps between the sampling process (Exp(rho) waits,
// policy actions) and the rate model induced by the rewards. The state
// kernel is shared, so its terms cancel and the result is exactly
//   sum_n E_mu[ sum_a pi (log pi - r) + state_rate/rho ] + N (log rho - 1).
inline double kl_closed_form(const TabularMdp& mdp, const Policy& policy,
                             const KlConfig& cfg) {
  detail::require_policy(mdp, policy);
  detail::require_config(cfg);
  const auto pi = policy.probs();
  const auto stage = detail::kl_stage(mdp, pi, cfg.rho);
  return detail::accumulate_stages(mdp, pi, cfg.horizon, stage,
                                   std::log(cfg.rho) - 1.0, nullptr);
}

inline std::vector<double> kl_gradient(const TabularMdp& mdp,
                                       const Policy& policy,
                                       const KlConfig& cfg) {
  detail::require_policy(mdp, policy);
  detail::require_config(cfg);
  const auto pi = policy.probs();
  const auto stage = detail::kl_stage(mdp, pi, cfg.rho);
  std::vector<double> grad;
  detail::accumulate_stages(mdp, pi, cfg.horizon, stage,
                            std::log(cfg.rho) - 1.0, &grad);
  return grad;
}

// Expected cumulative reward plus policy entropy over N steps.
inline double maxent_objective(const TabularMdp& mdp, const Policy& policy,
                               int horizon) {
  detail::require_policy(mdp, policy);
  const auto pi = policy.probs();
  const auto stage = detail::maxent_stage(mdp, pi);
  return detail::accumulate_stages(mdp, pi, horizon, stage, 0.0, nullptr);
}

inline std::vector<double> maxent_gradient(const TabularMdp& mdp,
                                           const Policy& policy, int horizon) {
  detail::require_policy(mdp, policy);
  const auto pi = policy.probs();
  const auto stage = detail::maxent_stage(mdp, pi);
  std::vector<double> grad;
  detail::accumulate_stages(mdp, pi, horizon, stage, 0.0, &grad);
  return grad;
}

namespace detail {

// Shared forward pass for stage-dependent policies pi[n][s][a].
template <class StageFn>
double accumulate_stagewise(const TabularMdp& mdp,
                            const std::vector<double>& pi_stages, int horizon,
                            double constant, StageFn stage_value) {
  const auto S = static_cast<std::size_t>(mdp.state_count());
  const auto A = static_cast<std::size_t>(mdp.action_count());
  if (horizon < 1) throw Error("horizon must be at least 1");
  if (pi_stages.size() != static_cast<std::size_t>(horizon) * S * A)
    throw Error("stagewise policy tensor has the wrong shape");
  std::vector<double> mu = mdp.initial();
  double total = 0.0;
  for (int n = 0; n < horizon; ++n) {
    const double* pi = &pi_stages[static_cast<std::size_t>(n) * S * A];
    total += constant;
    for (std::size_t s = 0; s < S; ++s)
      total += mu[s] * stage_value(static_cast<int>(s), pi);
    if (n + 1 == horizon) break;
    std::vector<double> next(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        const double w = mu[s] * pi[s * A + a];
        if (w == 0.0) continue;
        for (std::size_t y = 0; y < S; ++y)
          next[y] += w * mdp.transition(static_cast<int>(s),
                                        static_cast<int>(a),
                                        static_cast<int>(y));
      }
    mu.swap(next);
  }
  return total;
}

}  // namespace detail

// Max-ent objective for a stage-dependent policy pi[n][s][a], n = 0..N-1
// (pi[n] acts at step n+1).
inline double maxent_objective_stagewise(const TabularMdp& mdp,
                                         const std::vector<double>& pi_stages,
                                         int horizon) {
  const auto A = static_cast<std::size_t>(mdp.action_count());
  return detail::accumulate_stagewise(
      mdp, pi_stages, horizon, 0.0, [&](int s, const double* pi) {
        double inner = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          const double p = pi[static_cast<std::size_t>(s) * A + a];
          if (p > 0.0)
            inner += p * (mdp.reward(s, static_cast<int>(a)) - std::log(p));
        }
        return inner;
      });
}

// KL of the sampling process under a stage-dependent policy against the
// rate model. Same algebra as kl_closed_form with per-stage pi.
inline double kl_closed_form_stagewise(const TabularMdp& mdp,
                                       const std::vector<double>& pi_stages,
                                       const KlConfig& cfg) {
  detail::require_config(cfg);
  const auto A = static_cast<std::size_t>(mdp.action_count());
  return detail::accumulate_stagewise(
      mdp, pi_stages, cfg.horizon, std::log(cfg.rho) - 1.0,
      [&](int s, const double* pi) {
        double inner = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          const double p = pi[static_cast<std::size_t>(s) * A + a];
          if (p > 0.0)
            inner += p * (std::log(p) - mdp.reward(s, static_cast<int>(a)));
        }
        return inner + mdp.state_rate(s) / cfg.rho;
      });
}

// Finite-horizon soft (log-sum-exp) value iteration. Index k = 0..N-1
// holds stage n = k+1; the terminal value beyond stage N is zero. The
// stagewise softmax policy exp(Q - V) is exactly optimal for the max-ent
// objective over all (stationary or not) policies.
struct SoftPlan {
  int horizon = 0;
  std::vector<double> q;       // [k][s][a]
  std::vector<double> v;       // [k][s]
  std::vector<double> policy;  // [k][s][a]
};

inline SoftPlan soft_value_iteration(const TabularMdp& mdp, int horizon) {
  if (horizon < 1) throw Error("soft_value_iteration: horizon must be >= 1");
  const auto S = static_cast<std::size_t>(mdp.state_count());
  const auto A = static_cast<std::size_t>(mdp.action_count());
  SoftPlan plan;
  plan.horizon = horizon;
  plan.q.assign(static_cast<std::size_t>(horizon) * S * A, 0.0);
  plan.v.assign(static_cast<std::size_t>(horizon) * S, 0.0);
  plan.policy.assign(static_cast<std::size_t>(horizon) * S * A, 0.0);

  std::vector<double> v_next(S, 0.0);
  for (int k = horizon - 1; k >= 0; --k) {
    double* q = &plan.q[static_cast<std::size_t>(k) * S * A];
    double* v = &plan.v[static_cast<std::size_t>(k) * S];
    double* pi = &plan.policy[static_cast<std::size_t>(k) * S * A];
    for (std::size_t s = 0; s < S; ++s) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) {
        double qa = mdp.reward(static_cast<int>(s), static_cast<int>(a));
        for (std::size_t y = 0; y < S; ++y)
          qa += mdp.transition(static_cast<int>(s), static_cast<int>(a),
                               static_cast<int>(y)) *
                v_next[y];
        q[s * A + a] = qa;
        mx = std::max(mx, qa);
      }
      double sum = 0.0;
      for (std::size_t a = 0; a < A; ++a) sum += std::exp(q[s * A + a] - mx);
      v[s] = mx + std::log(sum);
      for (std::size_t a = 0; a < A; ++a)
        pi[s * A + a] = std::exp(q[s * A + a] - v[s]);
    }
    for (std::size_t s = 0; s < S; ++s) v_next[s] = v[s];
  }
  return plan;
}

// Optimal max-ent value from the start distribution.
inline double soft_optimal_value(const TabularMdp& mdp, const SoftPlan& plan) {
  double total = 0.0;
  for (int s = 0; s < mdp.state_count(); ++s)
    total += mdp.initial()[static_cast<std::size_t>(s)] *
             plan.v[static_cast<std::size_t>(s)];
  return total;
}

struct RlStep {
  double wait;
  int action;
  int state;  // state entered
};

struct RlTrajectory {
  int initial = 0;
  std::vector<RlStep> steps;
};

// Draws from the sampling process: Exp(rho) waits, policy actions, shared
// state kernel. Draw order per step is wait, action, next state.
inline RlTrajectory sample_true_trajectory(const TabularMdp& mdp,
                                           const Policy& policy,
                                           const KlConfig& cfg, RngStream& rng) {
  detail::require_policy(mdp, policy);
  detail::require_config(cfg);
  const auto pi = policy.probs();
  const int A = mdp.action_count();
  RlTrajectory out;
  out.initial = rng.categorical(mdp.initial());
  int s = out.initial;
  std::vector<double> row(static_cast<std::size_t>(A));
  std::vector<double> trans(static_cast<std::size_t>(mdp.state_count()));
  for (int n = 0; n < cfg.horizon; ++n) {
    RlStep step;
    step.wait = rng.exponential(cfg.rho);
    for (int a = 0; a < A; ++a)
      row[static_cast<std::size_t>(a)] =
          pi[static_cast<std::size_t>(s * A + a)];
    step.action = rng.categorical(row);
    for (int y = 0; y < mdp.state_count(); ++y)
      trans[static_cast<std::size_t>(y)] = mdp.transition(s, step.action, y);
    step.state = rng.categorical(trans);
    out.steps.push_back(step);
    s = step.state;
  }
  return out;
}

// log density of a trajectory under the sampling process. Zero-probability
// components yield -inf.
inline double true_log_density(const TabularMdp& mdp, const Policy& policy,
                               const KlConfig& cfg, const RlTrajectory& traj) {
  detail::require_policy(mdp, policy);
  detail::require_config(cfg);
  const auto pi = policy.probs();
  const auto A = static_cast<std::size_t>(mdp.action_count());
  const double init_p = mdp.initial()[static_cast<std::size_t>(traj.initial)];
  if (init_p <= 0.0) return -std::numeric_limits<double>::infinity();
  double log_p = std::log(init_p);
  int s = traj.initial;
  for (const auto& step : traj.steps) {
    if (!(step.wait >= 0.0))
      throw NegativeTime("true_log_density: negative wait");
    log_p += std::log(cfg.rho) - cfg.rho * step.wait;
    const double pa = pi[static_cast<std::size_t>(s) * A +
                         static_cast<std::size_t>(step.action)];
    const double ps = mdp.transition(s, step.action, step.state);
    if (pa <= 0.0 || ps <= 0.0)
      return -std::numeric_limits<double>::infinity();
    log_p += std::log(pa) + std::log(ps);
    s = step.state;
  }
  return log_p;
}

// log density of the same trajectory under the rate model: wait-action
// density exp(-state_rate(s) w) * exp(r(s, a)), shared initial law and
// state kernel.
inline double model_log_density(const TabularMdp& mdp, const KlConfig& cfg,
                                const RlTrajectory& traj) {
  detail::require_config(cfg);
  const double init_p = mdp.initial()[static_cast<std::size_t>(traj.initial)];
  if (init_p <= 0.0) return -std::numeric_limits<double>::infinity();
  double log_p = std::log(init_p);
  int s = traj.initial;
  for (const auto& step : traj.steps) {
    if (!(step.wait >= 0.0))
      throw NegativeTime("model_log_density: negative wait");
    log_p += -mdp.state_rate(s) * step.wait + mdp.reward(s, step.action);
    const double ps = mdp.transition(s, step.action, step.state);
    if (ps <= 0.0) return -std::numeric_limits<double>::infinity();
    log_p += std::log(ps);
    s = step.state;
  }
  return log_p;
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long long samples = 0;
};

// Monte-Carlo KL estimate E_q[log q - log p] with its standard error.
inline MonteCarloEstimate kl_monte_carlo(const TabularMdp& mdp,
                                         const Policy& policy,
                                         const KlConfig& cfg, long long samples,
                                         RngStream& rng) {
  if (samples < 2) throw Error("kl_monte_carlo: need at least 2 samples");
  double mean = 0.0;
  double m2 = 0.0;
  for (long long i = 0; i < samples; ++i) {
    const auto traj = sample_true_trajectory(mdp, policy, cfg, rng);
    const double value = true_log_density(mdp, policy, cfg, traj) -
                         model_log_density(mdp, cfg, traj);
    const double delta = value - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (value - mean);
  }
  MonteCarloEstimate out;
  out.estimate = mean;
  out.std_error = std::sqrt(m2 / static_cast<double>(samples - 1) /
                            static_cast<double>(samples));
  out.samples = samples;
  return out;
}

// Score-function (REINFORCE) estimate of the KL gradient with a
// leave-one-out baseline:  mean_i [ sum_n grad log pi(a_n | s_{n-1}) ]
// (l_i - b_i) where l_i is the log density ratio of trajectory i.
inline std::vector<double> reinforce_gradient(const TabularMdp& mdp,
                                              const Policy& policy,
                                              const KlConfig& cfg, int batch,
                                              RngStream& rng) {
  detail::require_policy(mdp, policy);
  if (batch < 2) throw Error("reinforce_gradient: batch must be >= 2");
  const auto S = static_cast<std::size_t>(mdp.state_count());
  const auto A = static_cast<std::size_t>(mdp.action_count());
  const auto pi = policy.probs();

  std::vector<double> scores(static_cast<std::size_t>(batch) * S * A, 0.0);
  std::vector<double> ratios(static_cast<std::size_t>(batch), 0.0);
  for (int i = 0; i < batch; ++i) {
    const auto traj = sample_true_trajectory(mdp, policy, cfg, rng);
    ratios[static_cast<std::size_t>(i)] =
        true_log_density(mdp, policy, cfg, traj) -
        model_log_density(mdp, cfg, traj);
    double* score = &scores[static_cast<std::size_t>(i) * S * A];
    int s = traj.initial;
    for (const auto& step : traj.steps) {
      for (std::size_t a = 0; a < A; ++a)
        score[static_cast<std::size_t>(s) * A + a] -=
            pi[static_cast<std::size_t>(s) * A + a];
      score[static_cast<std::size_t>(s) * A +
            static_cast<std::size_t>(step.action)] += 1.0;
      s = step.state;
    }
  }

  double ratio_sum = 0.0;
  for (double r : ratios) ratio_sum += r;

  std::vector<double> grad(S * A, 0.0);
  for (int i = 0; i < batch; ++i) {
    const double baseline = (ratio_sum - ratios[static_cast<std::size_t>(i)]) /
                            static_cast<double>(batch - 1);
    const double advantage = ratios[static_cast<std::size_t>(i)] - baseline;
    const double* score = &scores[static_cast<std::size_t>(i) * S * A];
    for (std::size_t k = 0; k < S * A; ++k) grad[k] += advantage * score[k];
  }
  for (double& g : grad) g /= static_cast<double>(batch);
  return grad;
}

enum class GradientEstimator { exact, reinforce };

struct TrainConfig {
  KlConfig kl;
  int steps = 200;
  double learning_rate = 0.1;
  GradientEstimator estimator = GradientEstimator::exact;
  int batch = 256;               // reinforce only
  int divergence_patience = 50;  // consecutive KL increases before giving up
};

struct TrainRow {
  int step;
  double kl;
  double maxent;
  double grad_norm;
};

struct TrainResult {
  Policy policy;  // best iterate by KL
  std::vector<TrainRow> history;
  bool diverged = false;
};

// Gradient descent on the KL. Tracks the best iterate; a long run of
// monotone KL increases flags divergence and stops with the best policy
// still returned.
inline TrainResult train_policy(const TabularMdp& mdp, Policy init,
                                const TrainConfig& config, RngStream& rng) {
  detail::require_policy(mdp, init);
  detail::require_config(config.kl);
  if (config.steps < 0) throw Error("train_policy: steps must be >= 0");
  if (!(config.learning_rate > 0.0))
    throw Error("train_policy: learning rate must be positive");

  TrainResult result;
  result.policy = init;
  Policy current = std::move(init);
  double best_kl = kl_closed_form(mdp, current, config.kl);
  double prev_kl = best_kl;
  int rising = 0;

  for (int step = 0; step < config.steps; ++step) {
    std::vector<double> grad;
    if (config.estimator == GradientEstimator::exact)
      grad = kl_gradient(mdp, current, config.kl);
    else
      grad = reinforce_gradient(mdp, current, config.kl, config.batch, rng);
    double norm_sq = 0.0;
    for (double g : grad) norm_sq += g * g;
    for (std::size_t k = 0; k < grad.size(); ++k)
      current.logits[k] -= config.learning_rate * grad[k];

    const double kl = kl_closed_form(mdp, current, config.kl);
    const double maxent = maxent_objective(mdp, current, config.kl.horizon);
    result.history.push_back(TrainRow{step + 1, kl, maxent, std::sqrt(norm_sq)});

    if (kl < best_kl) {
      best_kl = kl;
      result.policy = current;
    }
    if (kl > prev_kl) {
      if (++rising >= config.divergence_patience) {
        result.diverged = true;
        break;
      }
    } else {
      rising = 0;
    }
    prev_kl = kl;
  }
  return result;
}

}  // namespace adp::rl
