#include "mpgd/thaler.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mpgd/numerics.hpp"

namespace mpgd {

namespace {

void check_map_domain(double y, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("thaler map: gamma must lie in [0, 1)");
  if (!(y >= 0.0 && y <= 1.0))
    throw std::invalid_argument("thaler map: y must lie in [0, 1]");
}

}  // namespace

double thaler_lift(double y, double gamma) {
  check_map_domain(y, gamma);
  if (y < 1e-300) return y;  // indistinguishable from the fixed point in double precision
  const double e = 1.0 - gamma;
  return std::pow(std::pow(y, e) + std::pow(1.0 + y, e) - 1.0, 1.0 / e);
}

double thaler_step(double y, double gamma) {
  const double t = thaler_lift(y, gamma);
  return t <= 1.0 ? t : t - 1.0;
}

double solve_ystar(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("solve_ystar: gamma must lie in [0, 1)");
  const double e = 1.0 - gamma;
  auto f = [e](double y) { return std::pow(y, e) + std::pow(1.0 + y, e) - 2.0; };
  // run the bracket down to machine width; comfortably inside the 1e-12
  // residual contract and the 200-iteration cap
  return bisect_increasing(f, 1e-12, 1.0, 0.0);
}

double invariant_density(double y, double gamma) {
  check_map_domain(y, gamma);
  const double c = (1.0 - gamma) / std::pow(2.0, 1.0 - gamma);
  return c * (std::pow(y, -gamma) + std::pow(1.0 + y, -gamma));
}

double invariant_cdf(double y, double gamma) {
  check_map_domain(y, gamma);
  const double e = 1.0 - gamma;
  return (std::pow(y, e) + std::pow(1.0 + y, e) - 1.0) / std::pow(2.0, e);
}

double invariant_cdf_inverse(double u, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("invariant_cdf_inverse: gamma must lie in [0, 1)");
  if (!(u >= 0.0 && u <= 1.0))
    throw std::invalid_argument("invariant_cdf_inverse: u must lie in [0, 1]");
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;
  auto f = [u, gamma](double y) { return invariant_cdf(y, gamma) - u; };
  return bisect_increasing(f, 0.0, 1.0, 0.0);
}

ObservableConstants observable_constants(double gamma) {
  if (!(gamma > 0.5 && gamma < 1.0))
    throw std::invalid_argument("observable_constants: gamma must lie in (1/2, 1)");
  ObservableConstants c;
  c.gamma = gamma;
  c.alpha = 1.0 / gamma;
  c.y_star = solve_ystar(gamma);

  const double pi = std::numbers::pi;
  const double alpha = c.alpha;
  // Gamma(1 - alpha) via reflection; the sine factor is negative on (1, 2),
  // as is cos(alpha pi / 2), so d_alpha comes out positive.
  const double gamma_one_minus_alpha = pi / (std::sin(pi * (1.0 - alpha)) * std::tgamma(alpha));
  c.d_alpha = std::pow(alpha, alpha) * (1.0 - gamma) * gamma_one_minus_alpha *
              std::cos(alpha * pi / 2.0) / (std::pow(2.0, 1.0 - gamma) - 1.0);
  if (!(c.d_alpha > 0.0))
    throw std::runtime_error("observable_constants: tail normalizer not positive");

  const double scale = std::pow(c.d_alpha, -gamma) * std::pow(1.0 - std::pow(2.0, gamma - 1.0), -gamma);
  c.v_low = scale;
  c.v_high = scale / (1.0 - std::pow(2.0, 1.0 - gamma));
  return c;
}

Chain::Chain(const ThalerParams& params, std::uint64_t seed, std::uint64_t burn_in)
    : params_(params), consts_(observable_constants(params.gamma)),
      exp_(1.0 - params.gamma), inv_exp_(1.0 / (1.0 - params.gamma)), rng_(seed) {
  if (!(params.beta >= -1.0 && params.beta <= 1.0))
    throw std::invalid_argument("chain: beta must lie in [-1, 1]");
  y_ = rng_.uniform_pos();
  for (std::uint64_t i = 0; i < burn_in; ++i) y_ = map_step(y_);
}

Chain Chain::stationary(const ThalerParams& params, std::uint64_t seed) {
  Chain c(params, seed, 0);
  // replace the raw uniform start with an exact invariant-law draw; the
  // uniform value consumed by the constructor is reused as the quantile
  c.y_ = invariant_cdf_inverse(c.y_, params.gamma);
  return c;
}

double Chain::map_step(double y) const {
  if (y < 1e-300) return y;
  const double t = std::pow(std::pow(y, exp_) + std::pow(1.0 + y, exp_) - 1.0, inv_exp_);
  return t <= 1.0 ? t : t - 1.0;
}

double Chain::next() {
  const bool upper = y_ > consts_.y_star;
  const double out = chi_ * (upper ? consts_.v_high : consts_.v_low);
  if (upper) {
    // a delta draw is consumed on every upper-branch visit, even when beta
    // pins its sign, so the orbit stream is identical across beta values
    const double u = rng_.uniform01();
    if (u >= 0.5 * (1.0 + params_.beta)) chi_ = -chi_;
  }
  y_ = map_step(y_);
  ++k_;
  return out;
}

double birkhoff_sum(const ThalerParams& params, std::uint64_t seed, std::uint64_t k,
                    std::uint64_t burn_in) {
  if (k == 0) throw std::invalid_argument("birkhoff_sum: k must be positive");
  Chain chain(params, seed, burn_in);
  double s = 0.0;
  for (std::uint64_t i = 0; i < k; ++i) s += chain.next();
  return std::pow(static_cast<double>(k), -params.gamma) * s;
}

}  // namespace mpgd
