#include "mpgd/stable.hpp"

#include <cmath>
#include <numbers>

#include "mpgd/numerics.hpp"

namespace mpgd {

namespace {
constexpr double kPi = std::numbers::pi;
}

void validate(const StableSpec& spec) {
  if (!(spec.alpha > 1.0 && spec.alpha <= 2.0))
    throw std::invalid_argument("stable: alpha must lie in (1, 2]");
  if (!(spec.beta >= -1.0 && spec.beta <= 1.0))
    throw std::invalid_argument("stable: beta must lie in [-1, 1]");
  if (!(spec.scale > 0.0))
    throw std::invalid_argument("stable: scale must be positive");
}

std::complex<double> levy_exponent(double t, const StableSpec& spec) {
  validate(spec);
  if (t == 0.0) return {0.0, 0.0};
  const double at = std::pow(spec.scale * std::abs(t), spec.alpha);
  const double skew = spec.beta * (t > 0 ? 1.0 : -1.0) * std::tan(kPi * spec.alpha / 2.0);
  return {-at, at * skew};
}

std::complex<double> char_fn(double t, const StableSpec& spec) {
  return std::exp(levy_exponent(t, spec));
}

double sample_stable(const StableSpec& spec, Rng& rng) {
  validate(spec);
  const double a = spec.alpha;
  const double bt = spec.beta * std::tan(kPi * a / 2.0);
  const double theta0 = std::atan(bt) / a;
  const double s = std::pow(1.0 + bt * bt, 0.5 / a);
  const double u = kPi * (rng.uniform01() - 0.5);  // uniform on [-pi/2, pi/2)
  const double w = rng.exponential();
  const double z = s * std::sin(a * (u + theta0)) / std::pow(std::cos(u), 1.0 / a) *
                   std::pow(std::cos(u - a * (u + theta0)) / w, (1.0 - a) / a);
  return spec.scale * z;
}

std::vector<double> sample_stable(const StableSpec& spec, std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> xs(n);
  for (auto& x : xs) x = sample_stable(spec, rng);
  return xs;
}

std::vector<std::complex<double>> ecf(const std::vector<double>& ts, const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("ecf: empty sample");
  std::vector<std::complex<double>> out(ts.size());
  for (std::size_t j = 0; j < ts.size(); ++j) {
    double re = 0.0, im = 0.0;
    for (double x : xs) {
      re += std::cos(ts[j] * x);
      im += std::sin(ts[j] * x);
    }
    out[j] = {re / static_cast<double>(xs.size()), im / static_cast<double>(xs.size())};
  }
  return out;
}

std::vector<double> ecf_tgrid() {
  std::vector<double> ts(81);
  for (int i = 0; i < 81; ++i) ts[i] = -2.0 + 4.0 * i / 80.0;
  return ts;
}

double ecf_distance(const std::vector<double>& xs, const StableSpec& spec) {
  const auto ts = ecf_tgrid();
  const auto emp = ecf(ts, xs);
  double d = 0.0;
  for (std::size_t j = 0; j < ts.size(); ++j)
    d = std::max(d, std::abs(emp[j] - char_fn(ts[j], spec)));
  return d;
}

double hill_estimator(const std::vector<double>& values, double tail_fraction, TailSide side) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
    throw std::invalid_argument("hill_estimator: tail_fraction must lie in (0, 1)");
  std::vector<double> mags;
  mags.reserve(values.size());
  for (double v : values) {
    const double m = side == TailSide::absolute ? std::abs(v)
                     : side == TailSide::positive ? v
                                                  : -v;
    if (m > 0.0) mags.push_back(m);
  }
  const std::size_t k = static_cast<std::size_t>(tail_fraction * static_cast<double>(values.size()));
  if (k < 10 || mags.size() < k + 1)
    throw std::invalid_argument("hill_estimator: needs at least 10 tail order statistics");
  std::partial_sort(mags.begin(), mags.begin() + static_cast<long>(k + 1), mags.end(),
                    std::greater<double>());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(mags[i] / mags[k]);
  return static_cast<double>(k) / s;
}

double ks_statistic(std::vector<double> xs, const std::vector<double>& ys_in) {
  if (xs.empty() || ys_in.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> ys = ys_in;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double nx = static_cast<double>(xs.size()), ny = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    if (xs[i] <= ys[j]) ++i; else ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double stable_cdf_symmetric(double x, double alpha, double scale) {
  validate(StableSpec{alpha, 0.0, scale});
  const double z = x / scale;
  if (z < 0.0) return 1.0 - stable_cdf_symmetric(-x, alpha, scale);
  if (z == 0.0) return 0.5;

  constexpr double kTailSwitch = 12.0;
  if (z > kTailSwitch) {
    // power-series tail: 1 - F(z) = (1/pi) sum_k (-1)^(k-1) Gamma(k alpha)/k!
    //                               sin(k pi alpha / 2) z^(-k alpha)
    double tail = 0.0, kfac = 1.0;
    for (int k = 1; k <= 6; ++k) {
      kfac *= k;
      const double term = std::tgamma(k * alpha) / kfac * std::sin(k * kPi * alpha / 2.0) *
                          std::pow(z, -static_cast<double>(k) * alpha);
      tail += (k % 2 == 1 ? term : -term);
    }
    return 1.0 - tail / kPi;
  }

  // inversion integral; the integrand decays like exp(-t^alpha), so the
  // cutoff below leaves less than ~1e-18 behind
  const double cutoff = std::pow(41.5, 1.0 / alpha);
  auto f = [z, alpha](double t) {
    if (t == 0.0) return z;
    return std::sin(t * z) * std::exp(-std::pow(t, alpha)) / t;
  };
  return 0.5 + integrate(f, 0.0, cutoff, 1e-11) / kPi;
}

}  // namespace mpgd
