#include "mpgd/homogenization.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>

#include "mpgd/parallel.hpp"
#include "mpgd/rng.hpp"

namespace mpgd {

namespace {

constexpr std::uint64_t kTagSample = 0x80;
constexpr std::uint64_t kTagFastChain = 0x81;
constexpr std::uint64_t kTagSdeNoise = 0x82;
constexpr std::uint64_t kTagReference = 0x83;

bool all_finite(const std::vector<double>& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

// Spearman rank correlation; ties get average ranks.
std::vector<double> ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

void validate(const FastSlowSpec& spec) {
  if (!spec.drift) throw std::invalid_argument("FastSlowSpec: drift not set");
  if (spec.x0.empty()) throw std::invalid_argument("FastSlowSpec: x0 is empty");
  if (spec.m == 0) throw std::invalid_argument("FastSlowSpec: m must be positive");
  if (!(spec.horizon > 0.0)) throw std::invalid_argument("FastSlowSpec: horizon must be positive");
  if (!std::isfinite(spec.coefficient))
    throw std::invalid_argument("FastSlowSpec: coefficient must be finite");
  // chain parameters are checked when the chains are built
}

void validate(const SDESpec& spec) {
  if (!spec.drift) throw std::invalid_argument("SDESpec: drift not set");
  if (spec.x0.empty()) throw std::invalid_argument("SDESpec: x0 is empty");
  if (!(spec.dt > 0.0)) throw std::invalid_argument("SDESpec: dt must be positive");
  if (!(spec.horizon > 0.0)) throw std::invalid_argument("SDESpec: horizon must be positive");
  if (spec.dt > spec.horizon) throw std::invalid_argument("SDESpec: dt exceeds the horizon");
  if (!std::isfinite(spec.coefficient))
    throw std::invalid_argument("SDESpec: coefficient must be finite");
  validate(spec.law);
}

PathEndpoint simulate_fast_slow(const FastSlowSpec& spec, std::uint64_t seed) {
  validate(spec);
  const std::size_t d = spec.x0.size();
  const auto n_steps = static_cast<std::uint64_t>(
      std::floor(static_cast<double>(spec.m) * spec.horizon));
  const double inv_m = 1.0 / static_cast<double>(spec.m);
  const double noise_scale = std::pow(static_cast<double>(spec.m), -spec.chain.gamma);
  const double c = spec.coefficient;

  std::vector<Chain> chains;
  chains.reserve(d);
  for (std::size_t i = 0; i < d; ++i)
    chains.push_back(Chain::stationary(spec.chain, derive_seed(seed, kTagFastChain, i)));

  PathEndpoint out;
  out.state = spec.x0;
  std::vector<double> a(d);
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    spec.drift(out.state, a);
    for (std::size_t i = 0; i < d; ++i) {
      const double v = chains[i].next();
      const double b = spec.kind == DiffusionKind::additive_constant ? c : c * out.state[i];
      a[i] = out.state[i] + inv_m * a[i] + noise_scale * b * v;
    }
    out.state.swap(a);
    if (!all_finite(out.state)) {
      out.diverged = true;
      return out;
    }
  }
  return out;
}

PathEndpoint simulate_stable_sde(const SDESpec& spec, std::uint64_t seed) {
  validate(spec);
  const std::size_t d = spec.x0.size();
  const auto n_steps = static_cast<std::uint64_t>(
      std::max<long long>(1, std::llround(spec.horizon / spec.dt)));
  const double h = spec.horizon / static_cast<double>(n_steps);
  const double jump_scale = std::pow(h, 1.0 / spec.law.alpha);
  const double c = spec.coefficient;

  Rng rng(derive_seed(seed, kTagSdeNoise, 0));
  PathEndpoint out;
  out.state = spec.x0;
  std::vector<double> a(d);
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    spec.drift(out.state, a);
    for (std::size_t i = 0; i < d; ++i) {
      const double dl = jump_scale * sample_stable(spec.law, rng);
      const double drifted = out.state[i] + h * a[i];
      a[i] = spec.kind == DiffusionKind::additive_constant ? drifted + c * dl
                                                           : drifted * std::exp(c * dl);
    }
    out.state.swap(a);
    if (!all_finite(out.state)) {
      out.diverged = true;
      return out;
    }
  }
  return out;
}

WeakConvergenceReport weak_convergence_report(
    const FastSlowSpec& base, std::span<const std::uint64_t> m_list,
    const SDESpec& ref, std::size_t n_samples, std::uint64_t seed,
    std::function<double(double)> analytic_cdf, int n_threads) {
  if (m_list.empty()) throw std::invalid_argument("weak_convergence_report: empty m_list");
  for (std::size_t i = 1; i < m_list.size(); ++i)
    if (m_list[i] <= m_list[i - 1])
      throw std::invalid_argument("weak_convergence_report: m_list must be strictly increasing");
  if (n_samples < 1000)
    throw std::invalid_argument("weak_convergence_report: n_samples below 1000");
  validate(base);

  WeakConvergenceReport report;

  // Reference sample of the limit marginal, shared by every row.
  std::vector<double> ref_sample;
  if (!analytic_cdf) {
    validate(ref);
    std::vector<double> value(n_samples);
    std::vector<char> bad(n_samples, 0);
    parallel_for(n_samples, n_threads, [&](std::size_t r) {
      const PathEndpoint e =
          simulate_stable_sde(ref, derive_seed(seed, kTagReference, r));
      value[r] = e.state[0];
      bad[r] = e.diverged ? 1 : 0;
    });
    for (std::size_t r = 0; r < n_samples; ++r) {
      if (bad[r]) {
        ++report.ref_divergence_count;
      } else {
        ref_sample.push_back(value[r]);
      }
    }
    report.ref_n_effective = ref_sample.size();
    if (ref_sample.empty())
      throw std::runtime_error("weak_convergence_report: every reference run diverged");
  }

  for (std::size_t mi = 0; mi < m_list.size(); ++mi) {
    FastSlowSpec spec = base;
    spec.m = m_list[mi];
    std::vector<double> value(n_samples);
    std::vector<char> bad(n_samples, 0);
    parallel_for(n_samples, n_threads, [&](std::size_t r) {
      const PathEndpoint e = simulate_fast_slow(
          spec, derive_seed(derive_seed(seed, kTagSample, mi), kTagSample, r));
      value[r] = e.state[0];
      bad[r] = e.diverged ? 1 : 0;
    });
    ConvergenceRow row;
    row.m = m_list[mi];
    std::vector<double> kept;
    kept.reserve(n_samples);
    for (std::size_t r = 0; r < n_samples; ++r) {
      if (bad[r]) {
        ++row.divergence_count;
      } else {
        kept.push_back(value[r]);
      }
    }
    row.n_effective = kept.size();
    if (kept.empty())
      throw std::runtime_error("weak_convergence_report: every run diverged at one m");
    row.ks = analytic_cdf ? ks_statistic(std::move(kept), analytic_cdf)
                          : ks_statistic(std::move(kept), ref_sample);
    report.rows.push_back(row);
  }

  report.largest_m_ks = report.rows.back().ks;
  if (report.rows.size() >= 2) {
    std::vector<double> ms, ks;
    for (const ConvergenceRow& row : report.rows) {
      ms.push_back(static_cast<double>(row.m));
      ks.push_back(row.ks);
    }
    report.has_trend = true;
    report.spearman = spearman_rho(ms, ks);
  }
  return report;
}

}  // namespace mpgd
