#pragma once

#include <cmath>
#include <cstdlib>

#include "adp/errors.hpp"

namespace adp {

namespace detail {

template <class F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = left + right - whole;
  if (std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
  if (depth <= 0)
    throw QuadratureNonConvergence("adaptive_simpson: tolerance not reached");
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature with an absolute tolerance. Used only where a
// rate has no closed-form integral.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double abs_tol = 1e-10,
                        int max_depth = 60) {
  if (!(b >= a)) throw ReversedInterval("adaptive_simpson: b < a");
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol,
                                      max_depth);
}

}  // namespace adp
