#pragma once
#include <algorithm>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mpgd/rng.hpp"

namespace mpgd {

// Alpha-stable laws in the parameterization
//   E exp(itX) = exp( -c^alpha |t|^alpha (1 - i beta sign(t) tan(pi alpha/2)) ),
// which is centered (zero mean) for alpha > 1.  alpha = 2 is the Gaussian
// edge case with variance 2 c^2.
struct StableSpec {
  double alpha = 1.5;  // in (1, 2]
  double beta = 0.0;   // in [-1, 1]
  double scale = 1.0;  // c > 0
};

void validate(const StableSpec& spec);

// log characteristic function at t
std::complex<double> levy_exponent(double t, const StableSpec& spec);
std::complex<double> char_fn(double t, const StableSpec& spec);

// One draw / n draws by the trigonometric (Chambers-Mallows-Stuck) method;
// the construction lands directly in the parameterization above, so no
// centering shift is applied afterwards.
double sample_stable(const StableSpec& spec, Rng& rng);
std::vector<double> sample_stable(const StableSpec& spec, std::uint64_t seed, std::size_t n);

// empirical characteristic function of xs at each t
std::vector<std::complex<double>> ecf(const std::vector<double>& ts, const std::vector<double>& xs);

// uniform grid of 81 points on [-2, 2] used by the ECF fit diagnostics
std::vector<double> ecf_tgrid();

// sup_t |ecf(t) - char_fn(t)| over ecf_tgrid()
double ecf_distance(const std::vector<double>& xs, const StableSpec& spec);

// Which tail the Hill estimator ranks: magnitudes, or one signed side.
// The one-sided options exist for |beta| = 1, where one tail is light and
// would otherwise dilute the order statistics.
enum class TailSide { absolute, positive, negative };

// Hill tail-index estimate over the top floor(tail_fraction * n) order
// statistics (at least 10).  Nonpositive magnitudes are dropped before
// ranking.  alpha_hat = k / sum_{i<=k} log(x_(i) / x_(k+1)).
double hill_estimator(const std::vector<double>& values, double tail_fraction,
                      TailSide side = TailSide::absolute);

// Kolmogorov-Smirnov statistics.  The one-sample form takes any CDF functor.
double ks_statistic(std::vector<double> xs, const std::vector<double>& ys);
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// CDF of the symmetric (beta = 0) law: inversion integral
//   F(x) = 1/2 + (1/pi) int_0^inf sin(t x/c) exp(-t^alpha) / t dt
// in the bulk, switching to the power-series tail expansion far out.
double stable_cdf_symmetric(double x, double alpha, double scale);

}  // namespace mpgd
