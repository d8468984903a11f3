#pragma once
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace mpgd {

// Root of an increasing function on [lo, hi] by bisection.  Stops when
// |f(mid)| <= f_tol or the bracket reaches machine width; throws if the
// endpoints do not straddle the root or the iteration cap is hit first.
template <class F>
double bisect_increasing(F f, double lo, double hi, double f_tol, int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0) throw std::invalid_argument("bisect: endpoints do not bracket a root");
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) <= f_tol) return mid;
    if (mid <= lo || mid >= hi) return mid;  // bracket exhausted in double precision
    if (fm < 0.0) lo = mid; else hi = mid;
  }
  throw std::runtime_error("bisect: iteration cap reached before tolerance");
}

namespace detail {
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
template <class F>
double integrate(F f, double a, double b, double tol = 1e-10, int max_depth = 48) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace mpgd
