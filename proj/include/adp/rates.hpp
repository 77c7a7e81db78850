#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include "adp/errors.hpp"
#include "adp/quadrature.hpp"

namespace adp {

// Inverse temperature. A separate type so a call site can never silently
// pass a time where a temperature was meant.
struct Temperature {
  double beta;
  explicit Temperature(double b) : beta(b) {
    if (!(b > 0.0) || !std::isfinite(b))
      throw Error("Temperature: beta must be positive and finite");
  }
};

// Nonnegative rate over wait time w >= 0 in one of four shapes:
//   constant        level
//   exp_affine      exp(offset + slope * w)
//   piecewise       right-open constant segments, last one unbounded
//   callback        user function, optional majorant for interval bounds
class RateFunction {
 public:
  struct Constant {
    double level;
  };
  struct ExpAffine {
    double offset;
    double slope;
  };
  struct Piecewise {
    std::vector<double> breakpoints;  // strictly increasing, all > 0
    std::vector<double> levels;       // breakpoints.size() + 1 entries
  };
  struct Callback {
    std::function<double(double)> eval;
    // Upper bound for eval over [s, t]; may be null.
    std::function<double(double, double)> majorant;
  };

  static RateFunction constant(double level) {
    require_level(level);
    return RateFunction(Constant{level});
  }

  static RateFunction exp_affine(double offset, double slope) {
    if (!std::isfinite(offset) || !std::isfinite(slope))
      throw Error("RateFunction: exp_affine parameters must be finite");
    return RateFunction(ExpAffine{offset, slope});
  }

  static RateFunction piecewise(std::vector<double> breakpoints,
                                std::vector<double> levels) {
    if (levels.size() != breakpoints.size() + 1)
      throw Error("RateFunction: piecewise needs one more level than breakpoint");
    double prev = 0.0;
    for (double b : breakpoints) {
      if (!(b > prev) || !std::isfinite(b))
        throw Error("RateFunction: breakpoints must be strictly increasing and positive");
      prev = b;
    }
    for (double l : levels) require_level(l);
    return RateFunction(Piecewise{std::move(breakpoints), std::move(levels)});
  }

  static RateFunction callback(std::function<double(double)> eval,
                               std::function<double(double, double)> majorant = nullptr) {
    if (!eval) throw Error("RateFunction: callback needs an eval function");
    return RateFunction(Callback{std::move(eval), std::move(majorant)});
  }

  using Variant = std::variant<Constant, ExpAffine, Piecewise, Callback>;
  const Variant& shape() const { return shape_; }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&shape_);
  }

 private:
  static void require_level(double l) {
    if (!(l >= 0.0) || !std::isfinite(l))
      throw Error("RateFunction: levels must be nonnegative and finite");
  }

  explicit RateFunction(Variant v) : shape_(std::move(v)) {}

  Variant shape_;
};

namespace detail {

inline double pow_beta(double v, Temperature beta) {
  if (beta.beta == 1.0) return v;
  return std::pow(v, beta.beta);
}

// Level of a piecewise rate on the segment containing w (segments are
// right-open, the last extends to infinity).
inline double piecewise_level(const RateFunction::Piecewise& p, double w) {
  const auto it =
      std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), w);
  return p.levels[static_cast<std::size_t>(it - p.breakpoints.begin())];
}

}  // namespace detail

// Tempered evaluation lambda(w)^beta.
inline double rate_at(const RateFunction& f, double w, Temperature beta) {
  if (!(w >= 0.0)) throw NegativeTime("rate_at: wait time must be nonnegative");
  return std::visit(
      [&](const auto& shape) -> double {
        using S = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<S, RateFunction::Constant>) {
          return detail::pow_beta(shape.level, beta);
        } else if constexpr (std::is_same_v<S, RateFunction::ExpAffine>) {
          return std::exp(beta.beta * (shape.offset + shape.slope * w));
        } else if constexpr (std::is_same_v<S, RateFunction::Piecewise>) {
          return detail::pow_beta(detail::piecewise_level(shape, w), beta);
        } else {
          const double v = shape.eval(w);
          if (!(v >= 0.0))
            throw Error("rate_at: callback returned a negative rate");
          return detail::pow_beta(v, beta);
        }
      },
      f.shape());
}

// Integral of lambda(w)^beta over [s, t]. Closed form for everything except
// callbacks, which fall back to adaptive quadrature.
inline double integrate_rate(const RateFunction& f, double s, double t,
                             Temperature beta) {
  if (!(s >= 0.0)) throw NegativeTime("integrate_rate: interval must start at >= 0");
  if (!(t >= s)) throw ReversedInterval("integrate_rate: t < s");
  if (s == t) return 0.0;
  return std::visit(
      [&](const auto& shape) -> double {
        using S = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<S, RateFunction::Constant>) {
          return detail::pow_beta(shape.level, beta) * (t - s);
        } else if constexpr (std::is_same_v<S, RateFunction::ExpAffine>) {
          const double b = beta.beta * shape.slope;
          const double a = beta.beta * shape.offset;
          if (b == 0.0) return std::exp(a) * (t - s);
          // int_s^t exp(a + b u) du, written with expm1 so short intervals
          // do not cancel.
          return std::exp(a + b * s) * std::expm1(b * (t - s)) / b;
        } else if constexpr (std::is_same_v<S, RateFunction::Piecewise>) {
          double acc = 0.0;
          double lo = s;
          for (std::size_t i = 0; i <= shape.breakpoints.size() && lo < t; ++i) {
            const double hi = i < shape.breakpoints.size()
                                  ? std::min(shape.breakpoints[i], t)
                                  : t;
            if (hi > lo) acc += detail::pow_beta(shape.levels[i], beta) * (hi - lo);
            lo = std::max(lo, hi);
          }
          return acc;
        } else {
          const auto& cb = shape;
          return adaptive_simpson(
              [&](double u) {
                const double v = cb.eval(u);
                if (!(v >= 0.0))
                  throw Error("integrate_rate: callback returned a negative rate");
                return detail::pow_beta(v, beta);
              },
              s, t);
        }
      },
      f.shape());
}

// Upper bound for lambda(w)^beta over [s, t]. Exact for the closed-form
// shapes; callbacks must carry their own bound.
inline double majorant(const RateFunction& f, double s, double t,
                       Temperature beta) {
  if (!(s >= 0.0)) throw NegativeTime("majorant: interval must start at >= 0");
  if (!(t >= s)) throw ReversedInterval("majorant: t < s");
  return std::visit(
      [&](const auto& shape) -> double {
        using S = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<S, RateFunction::Constant>) {
          return detail::pow_beta(shape.level, beta);
        } else if constexpr (std::is_same_v<S, RateFunction::ExpAffine>) {
          // Monotone in w, so the sup sits at an endpoint.
          const double w = shape.slope >= 0.0 ? t : s;
          if (!std::isfinite(w))
            return shape.slope > 0.0
                       ? std::numeric_limits<double>::infinity()
                       : std::exp(beta.beta * shape.offset);
          return std::exp(beta.beta * (shape.offset + shape.slope * w));
        } else if constexpr (std::is_same_v<S, RateFunction::Piecewise>) {
          double best = 0.0;
          double lo = 0.0;
          for (std::size_t i = 0; i <= shape.breakpoints.size(); ++i) {
            const double hi = i < shape.breakpoints.size()
                                  ? shape.breakpoints[i]
                                  : std::numeric_limits<double>::infinity();
            if (lo <= t && hi >= s) best = std::max(best, shape.levels[i]);
            lo = hi;
          }
          return detail::pow_beta(best, beta);
        } else {
          if (!shape.majorant)
            throw MissingMajorant("majorant: callback rate has no majorant");
          const double m = shape.majorant(s, t);
          if (!(m >= 0.0))
            throw Error("majorant: callback majorant must be nonnegative");
          return detail::pow_beta(m, beta);
        }
      },
      f.shape());
}

}  // namespace adp
