#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adp/errors.hpp"
#include "adp/point_process.hpp"
#include "adp/rates.hpp"
#include "adp/rng.hpp"

namespace adp {

// Which action fired. `trivial` marks the self-loop filler used by the
// uniformized sampler; real model actions always have trivial == false.
struct ActionId {
  int index = -1;
  bool trivial = false;

  friend bool operator==(const ActionId& a, const ActionId& b) {
    return a.index == b.index && a.trivial == b.trivial;
  }
};

struct MaxArrivals {
  long long count;
};
struct MaxTime {
  double duration;
};
using Horizon = std::variant<MaxArrivals, MaxTime>;

template <class State>
struct TrajectoryRecord {
  long long n = 0;     // arrival index, 1-based
  double time = 0.0;   // absolute arrival time
  double wait = 0.0;   // time since the previous record (or since 0)
  ActionId action;
  State state;         // state entered by this arrival
};

template <class State>
struct Trajectory {
  State initial_state{};
  Horizon horizon = MaxTime{0.0};
  std::vector<TrajectoryRecord<State>> records;
};

template <class State>
std::vector<State> state_sequence(const Trajectory<State>& traj) {
  std::vector<State> xs;
  xs.reserve(traj.records.size() + 1);
  xs.push_back(traj.initial_state);
  for (const auto& r : traj.records) xs.push_back(r.state);
  return xs;
}

template <class State>
std::vector<ActionId> action_sequence(const Trajectory<State>& traj) {
  std::vector<ActionId> as;
  as.reserve(traj.records.size());
  for (const auto& r : traj.records) as.push_back(r.action);
  return as;
}

// Projections of a trajectory: the stepped chain of (arrival time, state)
// pairs starting at (0, x0), and the discrete chain of states alone.
template <class State>
struct EmbeddedChains {
  std::vector<std::pair<double, State>> stepped;
  std::vector<State> discrete;
};

template <class State>
EmbeddedChains<State> embedded_chains(const Trajectory<State>& traj) {
  EmbeddedChains<State> out;
  out.stepped.reserve(traj.records.size() + 1);
  out.stepped.emplace_back(0.0, traj.initial_state);
  for (const auto& r : traj.records) out.stepped.emplace_back(r.time, r.state);
  out.discrete = state_sequence(traj);
  return out;
}

// A model usable by the samplers: per-action wait-time rates plus a
// transition sampler. States may be anything copyable.
template <class M>
concept AdpProcess = requires(const M& m, const typename M::State& x, int a,
                              double w, Temperature beta, RngStream& rng) {
  typename M::State;
  { m.action_count() } -> std::convertible_to<int>;
  { m.trivial_action() } -> std::convertible_to<std::optional<int>>;
  { m.action_rate(x, a) } -> std::convertible_to<RateFunction>;
  { m.sample_transition(x, a, w, beta, rng) } -> std::convertible_to<typename M::State>;
  { m.initial_state() } -> std::convertible_to<typename M::State>;
};

// Integer states that can be enumerated, which is what the uniformized
// sampler needs to certify its dominating constant up front.
template <class M>
concept EnumerableAdp =
    AdpProcess<M> && std::same_as<typename M::State, int> &&
    requires(const M& m) {
      { m.state_count() } -> std::convertible_to<int>;
    };

// A model whose transition law has a deterministic representative
// (the mode), used by the zero-temperature step.
template <class M>
concept ModalAdp = AdpProcess<M> && requires(const M& m, const typename M::State& x,
                                             int a, double w) {
  { m.transition_mode(x, a, w) } -> std::convertible_to<typename M::State>;
};

// Finite model with explicit per-(state, action) rates and transition pmfs.
// Transition kernels may depend on the realized wait through bucket bounds.
class TabularAdp {
 public:
  using State = int;

  struct TransitionKernel {
    // pmf rows indexed by the bucket of the realized wait; empty bounds
    // means a single wait-independent row.
    std::vector<double> wait_bounds;
    std::vector<std::vector<double>> rows;

    const std::vector<double>& at(double w) const {
      const auto it =
          std::upper_bound(wait_bounds.begin(), wait_bounds.end(), w);
      return rows[static_cast<std::size_t>(it - wait_bounds.begin())];
    }
  };

  TabularAdp(int states, std::vector<std::string> action_names,
             std::optional<int> trivial, int initial)
      : states_(states),
        action_names_(std::move(action_names)),
        trivial_(trivial),
        initial_(initial) {
    if (states_ <= 0) throw Error("TabularAdp: need at least one state");
    if (action_names_.empty()) throw Error("TabularAdp: need at least one action");
    if (trivial_ && (*trivial_ < 0 || *trivial_ >= action_count()))
      throw Error("TabularAdp: trivial action index out of range");
    if (initial_ < 0 || initial_ >= states_)
      throw UnknownState("TabularAdp: initial state out of range");
    rates_.assign(static_cast<std::size_t>(states_) * action_names_.size(),
                  RateFunction::constant(0.0));
    kernels_.resize(rates_.size());
  }

  int state_count() const { return states_; }
  int action_count() const { return static_cast<int>(action_names_.size()); }
  std::optional<int> trivial_action() const { return trivial_; }
  int initial_state() const { return initial_; }
  const std::string& action_name(int a) const {
    return action_names_[static_cast<std::size_t>(check_action(a))];
  }

  void set_action_rate(int x, int a, RateFunction f) {
    if (trivial_ && a == *trivial_)
      throw Error("TabularAdp: the trivial action carries no rate");
    rates_[slot(x, a)] = std::move(f);
  }

  // Rows are validated to be distributions and stored exactly normalized.
  void set_transition(int x, int a, TransitionKernel k) {
    if (k.rows.size() != k.wait_bounds.size() + 1)
      throw Error("TabularAdp: kernel needs one pmf row per wait bucket");
    double prev = 0.0;
    for (double b : k.wait_bounds) {
      if (!(b > prev)) throw Error("TabularAdp: wait bounds must be increasing");
      prev = b;
    }
    for (auto& row : k.rows) {
      if (static_cast<int>(row.size()) != states_)
        throw Error("TabularAdp: pmf row length must equal the state count");
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p))
          throw Error("TabularAdp: pmf entries must be nonnegative and finite");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw Error("TabularAdp: pmf row does not sum to 1");
      for (double& p : row) p /= sum;
    }
    kernels_[slot(x, a)] = std::move(k);
  }

  void set_transition(int x, int a, std::vector<double> pmf) {
    TransitionKernel k;
    k.rows.push_back(std::move(pmf));
    set_transition(x, a, std::move(k));
  }

  const RateFunction& action_rate(int x, int a) const {
    if (trivial_ && a == *trivial_)
      throw Error("TabularAdp: the trivial action carries no rate");
    return rates_[slot(x, a)];
  }

  const std::vector<double>& transition_pmf(int x, int a, double w) const {
    const auto& k = kernels_[slot(x, a)];
    if (k.rows.empty()) throw Error("TabularAdp: no transition kernel set");
    return k.at(w);
  }

  int sample_transition(int x, int a, double w, Temperature beta,
                        RngStream& rng) const;

  int transition_mode(int x, int a, double w) const {
    const auto& pmf = transition_pmf(x, a, w);
    int best = 0;
    for (int y = 1; y < states_; ++y)
      if (pmf[static_cast<std::size_t>(y)] > pmf[static_cast<std::size_t>(best)])
        best = y;
    return best;
  }

  int check_state(int x) const {
    if (x < 0 || x >= states_)
      throw UnknownState("TabularAdp: state " + std::to_string(x) + " out of range");
    return x;
  }

 private:
  int check_action(int a) const {
    if (a < 0 || a >= action_count())
      throw Error("TabularAdp: action " + std::to_string(a) + " out of range");
    return a;
  }

  std::size_t slot(int x, int a) const {
    return static_cast<std::size_t>(check_state(x)) *
               static_cast<std::size_t>(action_count()) +
           static_cast<std::size_t>(check_action(a));
  }

  int states_;
  std::vector<std::string> action_names_;
  std::optional<int> trivial_;
  int initial_;
  std::vector<RateFunction> rates_;
  std::vector<TransitionKernel> kernels_;
};

// pmf^beta renormalized, computed in log space so large beta cannot
// overflow. All-zero input is degenerate.
inline std::vector<double> tempered_pmf(const std::vector<double>& pmf,
                                        Temperature beta) {
  if (pmf.empty()) throw DegeneratePmf("tempered_pmf: empty pmf");
  if (beta.beta == 1.0) {
    for (double p : pmf)
      if (!(p >= 0.0)) throw DegeneratePmf("tempered_pmf: negative mass");
    return pmf;
  }
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(pmf.size());
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    if (!(pmf[i] >= 0.0)) throw DegeneratePmf("tempered_pmf: negative mass");
    logs[i] = pmf[i] > 0.0 ? beta.beta * std::log(pmf[i])
                           : -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, logs[i]);
  }
  if (!std::isfinite(max_log))
    throw DegeneratePmf("tempered_pmf: all mass zero");
  std::vector<double> out(pmf.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    out[i] = std::exp(logs[i] - max_log);
    norm += out[i];
  }
  for (double& v : out) v /= norm;
  return out;
}

inline int TabularAdp::sample_transition(int x, int a, double w,
                                         Temperature beta,
                                         RngStream& rng) const {
  return rng.categorical(tempered_pmf(transition_pmf(x, a, w), beta));
}

// Sum over nontrivial actions of lambda_a(w)^beta.
template <AdpProcess M>
double total_rate(const M& m, const typename M::State& x, double w,
                  Temperature beta) {
  const auto trivial = m.trivial_action();
  double sum = 0.0;
  for (int a = 0; a < m.action_count(); ++a) {
    if (trivial && a == *trivial) continue;
    sum += rate_at(m.action_rate(x, a), w, beta);
  }
  return sum;
}

// Conditional action law at a realized wait: lambda_a(w)^beta / total.
// The trivial slot, if the model has one, gets probability zero.
template <AdpProcess M>
std::vector<double> action_probabilities(const M& m, const typename M::State& x,
                                         double w, Temperature beta) {
  const auto trivial = m.trivial_action();
  std::vector<double> probs(static_cast<std::size_t>(m.action_count()), 0.0);
  double sum = 0.0;
  for (int a = 0; a < m.action_count(); ++a) {
    if (trivial && a == *trivial) continue;
    const double r = rate_at(m.action_rate(x, a), w, beta);
    probs[static_cast<std::size_t>(a)] = r;
    sum += r;
  }
  if (!(sum > 0.0))
    throw ZeroTotalRate("action_probabilities: no action carries rate at this wait");
  for (double& p : probs) p /= sum;
  return probs;
}

namespace detail {

// Combines per-action tempered rates into one rate for the total process.
// The result is already tempered, so it must be sampled or integrated at
// beta = 1. Flat shapes are merged exactly; anything else becomes a
// callback whose majorant sums the per-action majorants.
template <AdpProcess M>
RateFunction total_rate_function(const M& m, const typename M::State& x,
                                 Temperature beta) {
  const auto trivial = m.trivial_action();
  std::vector<RateFunction> parts;
  for (int a = 0; a < m.action_count(); ++a) {
    if (trivial && a == *trivial) continue;
    parts.push_back(m.action_rate(x, a));
  }
  if (parts.empty()) return RateFunction::constant(0.0);

  bool all_flat = true;
  bool any_piecewise = false;
  for (const auto& p : parts) {
    if (p.template as<RateFunction::Piecewise>()) {
      any_piecewise = true;
    } else if (!p.template as<RateFunction::Constant>()) {
      all_flat = false;
    }
  }

  if (all_flat && !any_piecewise) {
    double sum = 0.0;
    for (const auto& p : parts)
      sum += pow_beta(p.template as<RateFunction::Constant>()->level, beta);
    return RateFunction::constant(sum);
  }

  if (all_flat) {
    std::vector<double> breaks;
    for (const auto& p : parts)
      if (const auto* pw = p.template as<RateFunction::Piecewise>())
        breaks.insert(breaks.end(), pw->breakpoints.begin(),
                      pw->breakpoints.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<double> levels(breaks.size() + 1, 0.0);
    for (std::size_t i = 0; i <= breaks.size(); ++i) {
      const double probe = i == 0 ? 0.0 : breaks[i - 1];
      for (const auto& p : parts) {
        if (const auto* c = p.template as<RateFunction::Constant>())
          levels[i] += pow_beta(c->level, beta);
        else
          levels[i] += pow_beta(
              piecewise_level(*p.template as<RateFunction::Piecewise>(), probe),
              beta);
      }
    }
    return RateFunction::piecewise(std::move(breaks), std::move(levels));
  }

  auto shared = std::make_shared<std::vector<RateFunction>>(std::move(parts));
  auto eval = [shared, beta](double w) {
    double sum = 0.0;
    for (const auto& p : *shared) sum += rate_at(p, w, beta);
    return sum;
  };
  auto bound = [shared, beta](double s, double t) {
    double sum = 0.0;
    for (const auto& p : *shared) sum += majorant(p, s, t, beta);
    return sum;
  };
  return RateFunction::callback(std::move(eval), std::move(bound));
}

}  // namespace detail

template <class State>
struct AdpStep {
  double wait;
  ActionId action;
  State next_state;
};

namespace detail {

// Far-out cutoff for open-ended waits sampled by thinning. A process whose
// rate is still live out here has integrated mass so large that treating
// the window as exhaustive is safe; a process with finite total mass has
// genuinely stopped arriving.
inline constexpr double kOpenHorizonCap = 1e12;

// First arrival on (start, inf) for shapes without an invertible
// cumulative: thinning over doubling windows. Windows partition the line,
// so continuing across them is exact.
inline std::optional<double> sample_wait_open(const RateFunction& f,
                                              Temperature beta, double start,
                                              RngStream& rng) {
  double lo = start;
  double len = 1.0;
  while (lo < kOpenHorizonCap) {
    const auto w = sample_wait(f, beta, lo, lo + len, rng);
    if (w) return w;
    lo += len;
    len *= 2.0;
  }
  return std::nullopt;
}

}  // namespace detail

// One transition by racing the per-action wait processes and keeping the
// earliest. Actions are sampled in ascending index order; ties go to the
// lowest index. Empty optional: no action fires before `horizon`.
template <AdpProcess M>
std::optional<AdpStep<typename M::State>> sample_iaa_step(
    const M& m, const typename M::State& x, Temperature beta, double horizon,
    RngStream& rng) {
  const auto trivial = m.trivial_action();
  std::optional<double> best_w;
  int best_a = -1;

  bool all_invertible = true;
  if (!std::isfinite(horizon)) {
    for (int a = 0; a < m.action_count() && all_invertible; ++a) {
      if (trivial && a == *trivial) continue;
      const RateFunction& f = m.action_rate(x, a);
      all_invertible = detail::invertible_shape(f);
    }
  }

  if (std::isfinite(horizon) || all_invertible) {
    for (int a = 0; a < m.action_count(); ++a) {
      if (trivial && a == *trivial) continue;
      const RateFunction& f = m.action_rate(x, a);
      const auto w = sample_wait(f, beta, 0.0, horizon, rng);
      if (w && (!best_w || *w < *best_w)) {
        best_w = w;
        best_a = a;
      }
    }
  } else {
    // Open horizon with at least one thinning-only shape: race the actions
    // window by window. The first window where anything fires settles the
    // minimum, because every silent action's arrival lies beyond it.
    double lo = 0.0;
    double len = 1.0;
    while (lo < detail::kOpenHorizonCap && !best_w) {
      const double hi = lo + len;
      for (int a = 0; a < m.action_count(); ++a) {
        if (trivial && a == *trivial) continue;
        const auto w = sample_wait(m.action_rate(x, a), beta, lo, hi, rng);
        if (w && (!best_w || *w < *best_w)) {
          best_w = w;
          best_a = a;
        }
      }
      lo = hi;
      len *= 2.0;
    }
  }

  if (!best_w) return std::nullopt;
  typename M::State next = m.sample_transition(x, best_a, *best_w, beta, rng);
  return AdpStep<typename M::State>{*best_w, ActionId{best_a, false},
                                    std::move(next)};
}

// One transition by first sampling the wait from the summed tempered rate,
// then the action from the conditional law at that wait.
template <AdpProcess M>
std::optional<AdpStep<typename M::State>> sample_aaa_step(
    const M& m, const typename M::State& x, Temperature beta, double horizon,
    RngStream& rng) {
  const RateFunction total = detail::total_rate_function(m, x, beta);
  std::optional<double> w;
  if (std::isfinite(horizon) || detail::invertible_shape(total))
    w = sample_wait(total, Temperature(1.0), 0.0, horizon, rng);
  else
    w = detail::sample_wait_open(total, Temperature(1.0), 0.0, rng);
  if (!w) return std::nullopt;
  std::vector<double> probs;
  try {
    probs = action_probabilities(m, x, *w, beta);
  } catch (const ZeroTotalRate&) {
    // The realized wait carries no action mass; treat as no arrival.
    return std::nullopt;
  }
  const int a = rng.categorical(probs);
  typename M::State next = m.sample_transition(x, a, *w, beta, rng);
  return AdpStep<typename M::State>{*w, ActionId{a, false}, std::move(next)};
}

// Deterministic limit beta -> inf: the action with the largest untempered
// rate fires, evaluated at the first point of the supplied wait grid, ties
// to the lowest index; the transition collapses onto its mode. Throws if
// every rate vanishes there.
template <ModalAdp M>
AdpStep<typename M::State> zero_temperature_step(
    const M& m, const typename M::State& x, const std::vector<double>& w_grid) {
  if (w_grid.empty())
    throw Error("zero_temperature_step: wait grid must be nonempty");
  const double w = w_grid.front();
  const auto trivial = m.trivial_action();
  int best_a = -1;
  double best_rate = 0.0;
  for (int a = 0; a < m.action_count(); ++a) {
    if (trivial && a == *trivial) continue;
    const double r = rate_at(m.action_rate(x, a), w, Temperature(1.0));
    if (best_a < 0 || r > best_rate) {
      best_a = a;
      best_rate = r;
    }
  }
  if (best_a < 0 || !(best_rate > 0.0))
    throw AllRatesZero("zero_temperature_step: no action carries rate");
  return AdpStep<typename M::State>{w, ActionId{best_a, false},
                                    m.transition_mode(x, best_a, w)};
}

enum class SamplerKind { iaa, aaa, uniformized };

struct SamplerChoice {
  SamplerKind kind = SamplerKind::iaa;
  double lambda_bar = 0.0;  // uniformized only
};

// Uniformized walk: arrival count Poisson(lambda_bar * T), arrival times
// i.i.d. uniform sorted, and at each arrival action a fires with
// probability lambda_a(w)^beta / lambda_bar, the leftover going to a
// trivial self-loop. The wait argument w is the time since the last
// nontrivial arrival; trivial arrivals do not restart that clock. The
// dominating constant is certified against per-state majorants up front.
template <EnumerableAdp M>
Trajectory<int> sample_uniformized(const M& m, double lambda_bar,
                                   Temperature beta, double max_time, int x0,
                                   RngStream& rng) {
  if (!(max_time > 0.0) || !std::isfinite(max_time))
    throw Error("sample_uniformized: horizon must be positive and finite");
  if (!(lambda_bar > 0.0) || !std::isfinite(lambda_bar))
    throw Error("sample_uniformized: lambda_bar must be positive and finite");
  if (x0 < 0 || x0 >= m.state_count())
    throw UnknownState("sample_uniformized: start state out of range");

  const auto trivial = m.trivial_action();
  for (int x = 0; x < m.state_count(); ++x) {
    double bound = 0.0;
    for (int a = 0; a < m.action_count(); ++a) {
      if (trivial && a == *trivial) continue;
      bound += majorant(m.action_rate(x, a), 0.0, max_time, beta);
    }
    if (bound > lambda_bar * (1.0 + 1e-12) + 1e-12)
      throw BoundViolation("sample_uniformized: lambda_bar " +
                           std::to_string(lambda_bar) +
                           " is below the total rate bound " +
                           std::to_string(bound) + " in state " +
                           std::to_string(x));
  }

  const long long count = rng.poisson(lambda_bar * max_time);
  std::vector<double> times(static_cast<std::size_t>(count));
  for (auto& t : times) t = rng.uniform() * max_time;
  std::sort(times.begin(), times.end());

  const int id_index = trivial ? *trivial : m.action_count();

  Trajectory<int> traj;
  traj.initial_state = x0;
  traj.horizon = MaxTime{max_time};
  traj.records.reserve(times.size());

  int x = x0;
  double last_nontrivial = 0.0;
  double prev_time = 0.0;
  double clock = 0.0;  // running wait sum, so record times telescope exactly
  long long n = 0;
  std::vector<double> probs(static_cast<std::size_t>(m.action_count()) + 1);
  for (double t : times) {
    const double w = t - last_nontrivial;
    std::fill(probs.begin(), probs.end(), 0.0);
    double used = 0.0;
    for (int a = 0; a < m.action_count(); ++a) {
      if (trivial && a == *trivial) continue;
      const double p = rate_at(m.action_rate(x, a), w, beta) / lambda_bar;
      probs[static_cast<std::size_t>(a)] = p;
      used += p;
    }
    if (used > 1.0 + 1e-9)
      throw BoundViolation("sample_uniformized: rates exceed lambda_bar at runtime");
    probs[static_cast<std::size_t>(id_index)] +=
        std::max(0.0, 1.0 - std::min(used, 1.0));
    const int a = rng.categorical(probs);

    ++n;
    TrajectoryRecord<int> rec;
    rec.n = n;
    rec.wait = t - prev_time;
    clock += rec.wait;
    rec.time = clock;
    if (a == id_index) {
      rec.action = ActionId{id_index, true};
      rec.state = x;  // self-loop
    } else {
      rec.action = ActionId{a, false};
      rec.state = m.sample_transition(x, a, w, beta, rng);
      x = rec.state;
      last_nontrivial = t;
    }
    prev_time = t;
    traj.records.push_back(rec);
  }
  return traj;
}

// Removes trivial self-loops from a uniformized trajectory: waits merge
// forward into the next real arrival and arrival indices are renumbered.
// Trailing trivial arrivals vanish. Times remain running wait sums.
template <class State>
Trajectory<State> strip_trivial(const Trajectory<State>& traj) {
  Trajectory<State> out;
  out.initial_state = traj.initial_state;
  out.horizon = traj.horizon;
  double pending_wait = 0.0;
  double clock = 0.0;
  long long n = 0;
  for (const auto& r : traj.records) {
    if (r.action.trivial) {
      pending_wait += r.wait;
      continue;
    }
    ++n;
    TrajectoryRecord<State> rec = r;
    rec.n = n;
    rec.wait = pending_wait + r.wait;
    clock += rec.wait;
    rec.time = clock;
    pending_wait = 0.0;
    out.records.push_back(std::move(rec));
  }
  return out;
}

// Simulates from x0 to a horizon with the chosen sampler. The wait clock
// restarts at every nontrivial arrival. MaxArrivals caps the number of
// records; MaxTime stops at the first failure to arrive in the remaining
// time.
template <AdpProcess M>
Trajectory<typename M::State> simulate(const M& m, SamplerChoice sampler,
                                       Temperature beta, Horizon horizon,
                                       typename M::State x0, RngStream& rng) {
  using State = typename M::State;
  if (sampler.kind == SamplerKind::uniformized) {
    if constexpr (EnumerableAdp<M>) {
      const auto* max_time = std::get_if<MaxTime>(&horizon);
      if (!max_time)
        throw Error("simulate: the uniformized sampler needs a time horizon");
      return sample_uniformized(m, sampler.lambda_bar, beta,
                                max_time->duration, x0, rng);
    } else {
      throw Error("simulate: the uniformized sampler needs an enumerable state space");
    }
  }

  Trajectory<State> traj;
  traj.initial_state = x0;
  traj.horizon = horizon;

  State x = x0;
  double t = 0.0;
  long long n = 0;
  while (true) {
    double step_horizon = std::numeric_limits<double>::infinity();
    if (const auto* mt = std::get_if<MaxTime>(&horizon)) {
      step_horizon = mt->duration - t;
      if (!(step_horizon > 0.0)) break;
    } else if (n >= std::get<MaxArrivals>(horizon).count) {
      break;
    }
    std::optional<AdpStep<State>> step;
    if (sampler.kind == SamplerKind::iaa)
      step = sample_iaa_step(m, x, beta, step_horizon, rng);
    else
      step = sample_aaa_step(m, x, beta, step_horizon, rng);
    if (!step) break;
    ++n;
    t += step->wait;
    traj.records.push_back(
        TrajectoryRecord<State>{n, t, step->wait, step->action, step->next_state});
    x = step->next_state;
  }
  return traj;
}

template <AdpProcess M>
Trajectory<typename M::State> simulate(const M& m, SamplerChoice sampler,
                                       Temperature beta, Horizon horizon,
                                       RngStream& rng) {
  return simulate(m, sampler, beta, horizon, m.initial_state(), rng);
}

}  // namespace adp
