#pragma once
#include <cstdint>

#include "mpgd/rng.hpp"

namespace mpgd {

// Interval map with a neutral fixed point at 0,
//   T(y) = (y^(1-gamma) + (1+y)^(1-gamma) - 1)^(1/(1-gamma))  mod 1,
// two increasing branches split at y_star, invariant density
//   h(y) = ((1-gamma)/2^(1-gamma)) (y^-gamma + (1+y)^-gamma).
// Orbits linger near 0 for heavy-tailed stretches, which is what makes
// Birkhoff sums of the two-level observable below alpha-stable with
// alpha = 1/gamma in (1,2).

inline constexpr std::uint64_t kDefaultBurnIn = 10000;

// Map value before the mod-1 wrap, in [0, 2].  gamma in [0, 1).
double thaler_lift(double y, double gamma);

// One map step.  The wrap keeps each branch an increasing bijection onto
// [0, 1]: values above 1 drop by 1, so T(y_star) = T(1) = 1 rather than 0.
double thaler_step(double y, double gamma);

// Branch split point: the root of y^(1-gamma) + (1+y)^(1-gamma) = 2 in (0,1).
// Bisection, |residual| <= 1e-12.  gamma = 1/2 gives exactly 9/16.
double solve_ystar(double gamma);

// Invariant density h(y); +inf at y = 0 when gamma > 0.
double invariant_density(double y, double gamma);

// Closed-form CDF of h:  H(y) = (y^(1-gamma) + (1+y)^(1-gamma) - 1)/2^(1-gamma).
// Note H(y_star) = 2^(gamma-1) exactly, since the split point solves the
// branch equation above.
double invariant_cdf(double y, double gamma);

// Inverse of the CDF above, bisected to machine width.  Turns a uniform draw
// into an exact sample of the invariant law, with no burn-in involved.
double invariant_cdf_inverse(double u, double gamma);

struct ObservableConstants {
  double gamma = 0.0;
  double alpha = 0.0;   // 1/gamma, in (1, 2)
  double y_star = 0.0;
  double d_alpha = 0.0; // tail-constant normalizer, positive on this range
  double v_low = 0.0;   // observable level on [0, y_star], positive
  double v_high = 0.0;  // observable level on (y_star, 1], negative
};

// Levels of the two-valued observable v, balanced so that the invariant mean
// is exactly zero (2^(gamma-1) v_low + (1 - 2^(gamma-1)) v_high = 0) and
// scaled so the limiting stable law has unit scale parameter.
// Gamma(1-alpha) is evaluated through the reflection formula
// pi / (sin(pi(1-alpha)) Gamma(alpha)) to stay clear of the pole lattice.
ObservableConstants observable_constants(double gamma);

struct ThalerParams {
  double gamma = 0.6;  // must lie in (1/2, 1)
  double beta = 0.0;   // skew of the excursion sign flips, in [-1, 1]
};

// One observable stream v^(0), v^(1), ... over a single orbit:
//   v^(k) = chi^(k) v(y_k),  chi^(k) = product of the first k sign factors,
// where each visit to the upper branch contributes an independent factor
// delta = +1 with probability (1+beta)/2 and -1 otherwise, and lower-branch
// steps contribute +1.  Initial state is drawn uniformly and burnt in to
// approximate the invariant measure; the stationary() factory instead draws
// the start exactly from the invariant law through the inverse CDF.  Burn-in
// converges only at a polynomial rate here (the neutral fixed point), so the
// exact start is the right choice whenever a bias in stream means matters.
class Chain {
 public:
  Chain(const ThalerParams& params, std::uint64_t seed, std::uint64_t burn_in = kDefaultBurnIn);

  static Chain stationary(const ThalerParams& params, std::uint64_t seed);

  // Emits v^(k) for the current state, then advances: the sign factor for the
  // current position (a delta draw only on upper-branch visits) is folded into
  // the running product after the emission, and the orbit takes one map step.
  double next();

  double y() const { return y_; }
  double sign() const { return chi_; }
  std::uint64_t step_index() const { return k_; }
  const ObservableConstants& constants() const { return consts_; }
  const ThalerParams& params() const { return params_; }

 private:
  double map_step(double y) const;

  ThalerParams params_;
  ObservableConstants consts_;
  double exp_;      // 1 - gamma
  double inv_exp_;  // 1/(1 - gamma)
  double y_ = 0.0;
  double chi_ = 1.0;
  std::uint64_t k_ = 0;
  Rng rng_;
};

// Scaled Birkhoff sum k^(-gamma) (v^(0) + ... + v^(k-1)) of a fresh chain.
double birkhoff_sum(const ThalerParams& params, std::uint64_t seed, std::uint64_t k,
                    std::uint64_t burn_in = kDefaultBurnIn);

}  // namespace mpgd
