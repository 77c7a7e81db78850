#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "adp/errors.hpp"
#include "adp/rates.hpp"
#include "adp/rng.hpp"

namespace adp {

// Realization of a point process on [0, horizon]: strictly increasing
// arrival times. An empty path is a valid realization.
struct ArrivalPath {
  double horizon = 0.0;
  std::vector<double> arrivals;

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw Error("ArrivalPath: horizon must be positive and finite");
    double prev = 0.0;
    for (double t : arrivals) {
      if (!(t > prev) || !(t <= horizon))
        throw Error("ArrivalPath: arrivals must be strictly increasing in (0, horizon]");
      prev = t;
    }
  }
};

namespace detail {

inline bool invertible_shape(const RateFunction& f) {
  return f.as<RateFunction::Constant>() != nullptr ||
         f.as<RateFunction::Piecewise>() != nullptr;
}

// First passage of the integrated tempered rate through `target`, searched
// from `start`. Exact inversion, available for the piecewise-flat shapes.
inline std::optional<double> invert_cumulative(const RateFunction& f,
                                               Temperature beta, double start,
                                               double horizon, double target) {
  if (const auto* c = f.as<RateFunction::Constant>()) {
    const double r = pow_beta(c->level, beta);
    if (r <= 0.0) return std::nullopt;
    const double t = start + target / r;
    return t <= horizon ? std::optional<double>(t) : std::nullopt;
  }
  const auto* p = f.as<RateFunction::Piecewise>();
  double lo = start;
  double need = target;
  for (std::size_t i = 0; i <= p->breakpoints.size(); ++i) {
    const double seg_hi = i < p->breakpoints.size()
                              ? p->breakpoints[i]
                              : std::numeric_limits<double>::infinity();
    if (seg_hi <= lo) continue;
    const double hi = std::min(seg_hi, horizon);
    if (hi <= lo) break;
    const double level = pow_beta(p->levels[i], beta);
    if (level > 0.0) {
      const double mass = level * (hi - lo);
      if (need <= mass) {
        const double t = lo + need / level;
        return t <= horizon ? std::optional<double>(t) : std::nullopt;
      }
      need -= mass;
    }
    lo = hi;
    if (lo >= horizon) break;
  }
  return std::nullopt;
}

// Window length heuristic for thinning proposals. Exponential rates change
// on the scale 1/|beta*slope|; callbacks get probed on unit windows.
inline double thinning_window(const RateFunction& f, Temperature beta,
                              double remaining) {
  if (const auto* e = f.as<RateFunction::ExpAffine>()) {
    if (e->slope != 0.0)
      return std::min(remaining, 1.0 / (beta.beta * std::abs(e->slope)));
    return remaining;
  }
  return std::min(remaining, 1.0);
}

}  // namespace detail

// First arrival of the inhomogeneous process with intensity lambda(.)^beta
// after `start`, restricted to (start, horizon]. Empty optional means no
// arrival before the horizon. Piecewise-flat shapes are sampled by exact
// inversion of the cumulative intensity; the other shapes use thinning
// against interval majorants and therefore require a finite horizon.
inline std::optional<double> sample_wait(const RateFunction& f, Temperature beta,
                                         double start, double horizon,
                                         RngStream& rng) {
  if (!(start >= 0.0)) throw NegativeTime("sample_wait: start must be >= 0");
  if (!(horizon >= start)) throw ReversedInterval("sample_wait: horizon < start");
  if (horizon == start) return std::nullopt;

  if (detail::invertible_shape(f)) {
    const double target = -std::log(rng.uniform());
    return detail::invert_cumulative(f, beta, start, horizon, target);
  }

  if (!std::isfinite(horizon))
    throw Error("sample_wait: thinning requires a finite horizon for this rate shape");

  double t = start;
  while (t < horizon) {
    const double win = detail::thinning_window(f, beta, horizon - t);
    double end = std::min(horizon, t + win);
    double bound = majorant(f, t, end, beta);
    if (!(bound > 0.0)) {
      t = end;
      continue;
    }
    // Keep the expected number of proposals per window small.
    if (bound * (end - t) > 16.0) {
      end = t + 16.0 / bound;
      bound = majorant(f, t, end, beta);
      if (!(bound > 0.0)) {
        t = end;
        continue;
      }
    }
    double s = t;
    while (true) {
      s += rng.exponential(bound);
      if (s >= end) break;
      if (rng.uniform() * bound <= rate_at(f, s, beta)) return s;
    }
    t = end;
  }
  return std::nullopt;
}

// All arrivals of the inhomogeneous process on (0, horizon]. The clock is
// absolute: the intensity is not restarted at arrivals.
inline ArrivalPath sample_path(const RateFunction& f, Temperature beta,
                               double horizon, RngStream& rng) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error("sample_path: horizon must be positive and finite");
  ArrivalPath path;
  path.horizon = horizon;
  double t = 0.0;
  while (true) {
    const auto next = sample_wait(f, beta, t, horizon, rng);
    if (!next) break;
    path.arrivals.push_back(*next);
    t = *next;
  }
  return path;
}

// Renewal version: the intensity argument restarts at zero after every
// arrival, and time zero itself counts as a renewal epoch.
inline ArrivalPath sample_renewal_path(const RateFunction& f, Temperature beta,
                                       double horizon, RngStream& rng) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error("sample_renewal_path: horizon must be positive and finite");
  ArrivalPath path;
  path.horizon = horizon;
  double t = 0.0;
  while (t < horizon) {
    const auto wait = sample_wait(f, beta, 0.0, horizon - t, rng);
    if (!wait) break;
    t += *wait;
    path.arrivals.push_back(t);
  }
  return path;
}

// log of the density exp(-int_s^{s+w} lambda^beta) * lambda(s+w)^beta for the
// wait w until the next arrival, measured from `s` on the absolute clock.
// Returns -inf when the arrival instant carries zero rate.
inline double wait_log_density(const RateFunction& f, Temperature beta, double s,
                               double w) {
  if (!(s >= 0.0)) throw NegativeTime("wait_log_density: start must be >= 0");
  if (!(w >= 0.0)) throw NegativeTime("wait_log_density: wait must be >= 0");
  const double rate = rate_at(f, s + w, beta);
  if (rate <= 0.0) return -std::numeric_limits<double>::infinity();
  return -integrate_rate(f, s, s + w, beta) + std::log(rate);
}

// log density of a whole arrival path on [0, horizon] under the intensity
// lambda(.)^beta, including the no-arrival mass on the final gap. A path
// visiting an instant of zero rate has log density -inf.
inline double path_log_density(const RateFunction& f, Temperature beta,
                               const ArrivalPath& path) {
  path.validate();
  double log_p = -integrate_rate(f, 0.0, path.horizon, beta);
  for (double t : path.arrivals) {
    const double rate = rate_at(f, t, beta);
    if (rate <= 0.0) return -std::numeric_limits<double>::infinity();
    log_p += std::log(rate);
  }
  return log_p;
}

// Distribution of the arrival count in a bin [t, t+delta] treated as having
// the flat tempered rate lambda(t)^beta: Poisson(delta * lambda(t)^beta),
// truncated for reporting with the leftover mass kept explicit.
struct BinDistribution {
  double delta = 0.0;
  std::vector<double> probs;  // P(N = 0), ..., P(N = n_max)
  double tail_mass = 0.0;     // P(N > n_max)
};

inline BinDistribution discretize_bin(const RateFunction& f, Temperature beta,
                                      double t, double delta, int n_max = 32) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw Error("discretize_bin: delta must be positive and finite");
  if (n_max < 0) throw Error("discretize_bin: n_max must be >= 0");
  const double mean = delta * rate_at(f, t, beta);
  BinDistribution out;
  out.delta = delta;
  out.probs.resize(static_cast<std::size_t>(n_max) + 1);
  double term = std::exp(-mean);  // P(N = 0)
  double total = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    out.probs[static_cast<std::size_t>(n)] = term;
    total += term;
    term *= mean / (n + 1);
  }
  out.tail_mass = std::max(0.0, 1.0 - total);
  return out;
}

// P(at least one arrival in the bin) = 1 - exp(-delta * lambda(t)^beta),
// written with expm1 so small masses do not cancel. As beta grows this
// saturates to the indicator of lambda(t) > 1 once delta * lambda(t)^beta
// separates from zero or infinity.
inline double binary_bin_prob(const RateFunction& f, Temperature beta, double t,
                              double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw Error("binary_bin_prob: delta must be positive and finite");
  return -std::expm1(-delta * rate_at(f, t, beta));
}

}  // namespace adp
