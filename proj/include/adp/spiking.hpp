#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "adp/adp_core.hpp"
#include "adp/errors.hpp"
#include "adp/rates.hpp"

namespace adp {

// Leaky integrate-and-fire network with exponential firing nonlinearity
// g(u) = exp(gain * (u - threshold)). Between spikes every membrane
// potential decays as du/dt = -tau * u; when neuron j fires, each other
// neuron i receives weight(i, j) and j itself resets.
class SpikingNetwork {
 public:
  SpikingNetwork(std::vector<std::vector<double>> weights, double tau,
                 double gain, double threshold, double reset,
                 std::vector<double> initial_potentials)
      : weights_(std::move(weights)),
        tau_(tau),
        gain_(gain),
        threshold_(threshold),
        reset_(reset),
        initial_(std::move(initial_potentials)) {
    const std::size_t n = weights_.size();
    if (n == 0) throw Error("SpikingNetwork: need at least one neuron");
    for (const auto& row : weights_) {
      if (row.size() != n)
        throw Error("SpikingNetwork: weight matrix must be square");
      for (double w : row)
        if (!std::isfinite(w))
          throw Error("SpikingNetwork: weights must be finite");
    }
    if (!(tau_ > 0.0) || !std::isfinite(tau_))
      throw Error("SpikingNetwork: tau must be positive");
    if (!(gain_ > 0.0) || !std::isfinite(gain_))
      throw Error("SpikingNetwork: gain must be positive");
    if (!std::isfinite(threshold_) || !std::isfinite(reset_))
      throw Error("SpikingNetwork: threshold and reset must be finite");
    if (initial_.size() != n)
      throw Error("SpikingNetwork: initial potentials must match the neuron count");
    for (double u : initial_)
      if (!std::isfinite(u))
        throw Error("SpikingNetwork: initial potentials must be finite");
  }

  int neuron_count() const { return static_cast<int>(weights_.size()); }
  double tau() const { return tau_; }
  double gain() const { return gain_; }
  double threshold() const { return threshold_; }
  double reset() const { return reset_; }
  double weight(int post, int pre) const {
    return weights_[static_cast<std::size_t>(post)][static_cast<std::size_t>(pre)];
  }
  const std::vector<double>& initial_potentials() const { return initial_; }

 private:
  std::vector<std::vector<double>> weights_;
  double tau_;
  double gain_;
  double threshold_;
  double reset_;
  std::vector<double> initial_;
};

// Network state between arrivals: potentials frozen at the moment of the
// last spike, plus when that was on the absolute clock.
struct PotentialState {
  std::vector<double> potentials;
  double time_of_last_arrival = 0.0;
};

// Exact solution of the between-spike dynamics du/dt = -tau u over dt.
// The arrival clock is untouched: decaying is not an arrival.
inline PotentialState decay_potentials(PotentialState state, double dt,
                                       double tau) {
  if (!(dt >= 0.0)) throw NegativeTime("decay_potentials: dt must be >= 0");
  const double factor = std::exp(-tau * dt);
  for (double& v : state.potentials) v *= factor;
  return state;
}

// Post-spike update once neuron j fires, with the potentials already
// decayed to the spike instant. The firing neuron resets; its self-weight
// is ignored. The caller stamps time_of_last_arrival.
inline PotentialState apply_spike(const SpikingNetwork& net,
                                  PotentialState state, int j) {
  if (j < 0 || j >= net.neuron_count())
    throw Error("apply_spike: neuron index out of range");
  for (int i = 0; i < net.neuron_count(); ++i)
    if (i != j) state.potentials[static_cast<std::size_t>(i)] += net.weight(i, j);
  state.potentials[static_cast<std::size_t>(j)] = net.reset();
  return state;
}

// Tempered firing rate of neuron j a wait w after the last spike:
// g(u_j * exp(-tau * w))^beta.
inline double spike_rate(const SpikingNetwork& net, const PotentialState& x,
                         int j, double w, Temperature beta) {
  if (!(w >= 0.0)) throw NegativeTime("spike_rate: wait must be >= 0");
  const double u = x.potentials[static_cast<std::size_t>(j)] * std::exp(-net.tau() * w);
  return std::exp(beta.beta * net.gain() * (u - net.threshold()));
}

// Adapter exposing the network as a process the generic samplers accept:
// one action per neuron, no trivial action, deterministic transitions.
class SpikingAdp {
 public:
  using State = PotentialState;

  explicit SpikingAdp(SpikingNetwork net) : net_(std::move(net)) {}

  const SpikingNetwork& network() const { return net_; }

  int action_count() const { return net_.neuron_count(); }
  std::optional<int> trivial_action() const { return std::nullopt; }

  RateFunction action_rate(const PotentialState& x, int j) const {
    const double uj = x.potentials[static_cast<std::size_t>(j)];
    const double tau = net_.tau();
    const double gain = net_.gain();
    const double threshold = net_.threshold();
    auto eval = [uj, tau, gain, threshold](double w) {
      return std::exp(gain * (uj * std::exp(-tau * w) - threshold));
    };
    // The rate is monotone in w (direction set by the sign of u_j), so the
    // sup over an interval sits at an endpoint; an unbounded interval ends
    // at the decay floor exp(-gain * threshold).
    auto bound = [uj, tau, gain, threshold](double s, double t) {
      const double at_s = std::exp(gain * (uj * std::exp(-tau * s) - threshold));
      const double at_t = std::isfinite(t)
                              ? std::exp(gain * (uj * std::exp(-tau * t) - threshold))
                              : std::exp(-gain * threshold);
      return std::max(at_s, at_t);
    };
    return RateFunction::callback(std::move(eval), std::move(bound));
  }

  PotentialState sample_transition(const PotentialState& x, int j, double w,
                                   Temperature, RngStream&) const {
    return transition_mode(x, j, w);
  }

  PotentialState transition_mode(const PotentialState& x, int j, double w) const {
    PotentialState next =
        apply_spike(net_, decay_potentials(x, w, net_.tau()), j);
    next.time_of_last_arrival = x.time_of_last_arrival + w;
    return next;
  }

  PotentialState initial_state() const {
    return PotentialState{net_.initial_potentials(), 0.0};
  }

 private:
  SpikingNetwork net_;
};

static_assert(AdpProcess<SpikingAdp>);
static_assert(ModalAdp<SpikingAdp>);

struct SpikeEvent {
  double time;
  int neuron;
};

// Event-driven simulation to a time horizon. Returns the spike raster and
// the final state.
struct SpikingRun {
  std::vector<SpikeEvent> spikes;
  PotentialState final_state;
  Trajectory<PotentialState> trajectory;
};

inline SpikingRun simulate_spiking(const SpikingNetwork& net, double horizon,
                                   Temperature beta, RngStream& rng,
                                   SamplerKind kind = SamplerKind::iaa) {
  SpikingAdp model(net);
  SamplerChoice choice;
  choice.kind = kind;
  SpikingRun run;
  run.trajectory = simulate(model, choice, beta, MaxTime{horizon}, rng);
  run.final_state = run.trajectory.records.empty()
                        ? model.initial_state()
                        : run.trajectory.records.back().state;
  run.spikes.reserve(run.trajectory.records.size());
  for (const auto& r : run.trajectory.records)
    run.spikes.push_back(SpikeEvent{r.time, r.action.index});
  return run;
}

}  // namespace adp
