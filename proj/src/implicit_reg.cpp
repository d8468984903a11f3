#include "mpgd/implicit_reg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "mpgd/parallel.hpp"
#include "mpgd/rng.hpp"
#include "mpgd/smallmat.hpp"

namespace mpgd {
namespace {

namespace sm = smallmat;

constexpr std::uint64_t kTagCorrChainA = 0x40;
constexpr std::uint64_t kTagCorrChainB = 0x41;
constexpr std::uint64_t kTagMonteCarloRep = 0x50;
constexpr std::uint64_t kTagHierarchyScalar = 0x60;
constexpr std::uint64_t kTagHierarchyVector = 0x61;
constexpr std::uint64_t kTagOrderCorr1 = 0x70;
constexpr std::uint64_t kTagOrderCorr2 = 0x71;
constexpr std::uint64_t kTagOrderHierarchy = 0x72;
constexpr std::uint64_t kTagOrderMc = 0x73;

// Column-wise mean and standard error of an n x p table of per-replica rows.
// Reduction order is fixed, so results do not depend on how the rows were
// filled in across threads.
void reduce_rows(const std::vector<double>& table, std::size_t n, std::size_t p,
                 std::vector<double>& mean, std::vector<double>& se) {
  mean.assign(p, 0.0);
  se.assign(p, 0.0);
  if (n == 0) return;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) mean[c] += table[r * p + c];
  for (std::size_t c = 0; c < p; ++c) mean[c] /= static_cast<double>(n);
  if (n < 2) return;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      const double dv = table[r * p + c] - mean[c];
      se[c] += dv * dv;
    }
  }
  const double nf = static_cast<double>(n);
  for (std::size_t c = 0; c < p; ++c) se[c] = std::sqrt(se[c] / (nf - 1.0) / nf);
}

double multiplicative_level(const ExpansionConfig& cfg) {
  return cfg.mu0 * std::pow(cfg.eta, cfg.channel1.gamma);
}

double additive_level(const ExpansionConfig& cfg) {
  return cfg.sigma0 * std::pow(cfg.eta, cfg.channel2.gamma);
}

}  // namespace

std::vector<std::vector<double>> unperturbed_trajectory(const LossModel& loss,
                                                        const std::vector<double>& x0,
                                                        double eta, std::uint64_t k) {
  if (x0.size() != loss.dim()) throw std::invalid_argument("unperturbed_trajectory: dimension mismatch");
  if (!(eta > 0.0)) throw std::invalid_argument("unperturbed_trajectory: eta must be positive");
  std::vector<std::vector<double>> path;
  path.reserve(k + 1);
  path.push_back(x0);
  std::vector<double> x = x0;
  std::vector<double> grad(loss.dim());
  for (std::uint64_t i = 0; i < k; ++i) {
    loss.gradient(x, grad);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] -= eta * grad[c];
    path.push_back(x);
  }
  return path;
}

ExpansionOperators build_expansion_operators(const LossModel& loss, const std::vector<double>& x0,
                                             double eta, std::uint64_t k) {
  if (!loss.has_curvature()) throw std::logic_error("build_expansion_operators: loss lacks curvature support");
  ExpansionOperators ops;
  ops.d = loss.dim();
  ops.k = k;
  ops.eta = eta;
  ops.xbar = unperturbed_trajectory(loss, x0, eta, k);
  const std::size_t d = ops.d;
  ops.jac.reserve(k);
  std::vector<double> hess(d * d);
  for (std::uint64_t i = 0; i < k; ++i) {
    loss.hessian(ops.xbar[i], hess);
    std::vector<double> j(d * d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c)
        j[r * d + c] = (r == c ? 1.0 : 0.0) - eta * hess[r * d + c];
    ops.jac.push_back(std::move(j));
  }
  ops.phi_table.resize(k + 1);
  for (std::uint64_t j = 0; j <= k; ++j) {
    ops.phi_table[j].resize(j + 1);
    ops.phi_table[j][j] = sm::identity(d);
    for (std::uint64_t i = j; i-- > 0;)
      ops.phi_table[j][i] = sm::mul(d, ops.phi_table[j][i + 1], ops.jac[i]);
  }
  return ops;
}

ObservableCorrelation estimate_observable_correlations(const ThalerParams& params, bool symmetrized,
                                                       std::uint64_t k_max, std::size_t max_lag,
                                                       std::size_t n_chains, std::uint64_t seed,
                                                       int n_threads) {
  if (k_max == 0) throw std::invalid_argument("estimate_observable_correlations: k_max must be positive");
  if (n_chains < 2) throw std::invalid_argument("estimate_observable_correlations: need at least 2 chains");
  const std::size_t kk = static_cast<std::size_t>(k_max);
  const std::size_t lag_cap = std::min(max_lag, kk - 1);
  const std::size_t n_lags = lag_cap + 1;

  std::vector<double> lag_table(n_chains * n_lags);
  std::vector<double> mean_table(n_chains * kk);
  parallel_for(n_chains, n_threads, [&](std::size_t c) {
    Chain a = Chain::stationary(params, derive_seed(seed, kTagCorrChainA, c));
    std::optional<Chain> b;
    if (symmetrized) b.emplace(Chain::stationary(params, derive_seed(seed, kTagCorrChainB, c)));
    std::vector<double> w(kk);
    for (std::size_t i = 0; i < kk; ++i) {
      const double va = a.next();
      w[i] = symmetrized ? va - b->next() : va;
    }
    for (std::size_t lag = 0; lag <= lag_cap; ++lag) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < kk; ++i) s += w[i] * w[i + lag];
      lag_table[c * n_lags + lag] = s / static_cast<double>(kk - lag);
    }
    for (std::size_t i = 0; i < kk; ++i) mean_table[c * kk + i] = w[i];
  });

  ObservableCorrelation out;
  out.n_chains = n_chains;
  reduce_rows(lag_table, n_chains, n_lags, out.rho, out.rho_se);
  reduce_rows(mean_table, n_chains, kk, out.mean, out.mean_se);
  return out;
}

std::vector<double> covariance_matrix(const ExpansionOperators& ops, const ExpansionConfig& cfg,
                                      const ObservableCorrelation& rho1,
                                      const ObservableCorrelation& rho2, std::uint64_t j,
                                      std::vector<double>* se_out) {
  if (j > ops.k) throw std::invalid_argument("covariance_matrix: step beyond operator table");
  const std::size_t d = ops.d;
  const double mt2 = multiplicative_level(cfg) * multiplicative_level(cfg);
  const double st2 = additive_level(cfg) * additive_level(cfg);

  if (se_out != nullptr) se_out->assign(d * d, 0.0);
  std::vector<double> c(d * d, 0.0);
  const std::size_t jj = static_cast<std::size_t>(j);
  if (jj == 0) return c;

  std::vector<std::vector<double>> u(jj + 1);
  for (std::size_t i = 1; i <= jj; ++i) u[i] = sm::mat_vec(d, ops.phi(j, i), ops.xbar[i - 1]);

  // C_j is linear in the per-lag correlation estimates; accumulate the fixed
  // weight matrix attached to each lag, then combine.  The same weights carry
  // the standard errors through exactly.
  std::vector<std::vector<double>> w1(jj), w2(jj);
  for (std::size_t i1 = 1; i1 <= jj; ++i1) {
    for (std::size_t i2 = 1; i2 <= jj; ++i2) {
      const std::size_t lag = i1 >= i2 ? i1 - i2 : i2 - i1;
      if (w1[lag].empty()) {
        w1[lag].assign(d * d, 0.0);
        w2[lag].assign(d * d, 0.0);
      }
      sm::axpy_outer(d, 1.0, u[i1], u[i2], w1[lag]);
      sm::axpy_abt(d, 1.0, ops.phi(j, i1), ops.phi(j, i2), w2[lag]);
    }
  }

  std::vector<double> var(d * d, 0.0);
  for (std::size_t lag = 0; lag < jj; ++lag) {
    if (w1[lag].empty()) continue;
    const double r1 = rho1.at(lag);
    const double r2 = rho2.at(lag);
    const double s1 = rho1.se_at(lag);
    const double s2 = rho2.se_at(lag);
    for (std::size_t e = 0; e < d * d; ++e) {
      c[e] += mt2 * r1 * w1[lag][e] + st2 * r2 * w2[lag][e];
      if (se_out != nullptr) {
        const double t1 = mt2 * s1 * w1[lag][e];
        const double t2 = st2 * s2 * w2[lag][e];
        var[e] += t1 * t1 + t2 * t2;
      }
    }
  }
  if (se_out != nullptr)
    for (std::size_t e = 0; e < d * d; ++e) (*se_out)[e] = std::sqrt(var[e]);
  return c;
}

std::vector<double> mean_correction(const LossModel& loss, const ExpansionOperators& ops,
                                    const ExpansionConfig& cfg, const ObservableCorrelation& rho1,
                                    const ObservableCorrelation& rho2, std::uint64_t k) {
  if (k > ops.k) throw std::invalid_argument("mean_correction: step beyond operator table");
  const std::size_t d = ops.d;
  std::vector<double> lambda(d, 0.0);
  std::vector<double> hg(d * d);
  std::vector<double> t(d);
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::vector<double> c = covariance_matrix(ops, cfg, rho1, rho2, i - 1, nullptr);
    for (std::size_t p = 0; p < d; ++p) {
      loss.grad_component_hessian(ops.xbar[i - 1], p, hg);
      t[p] = sm::trace_prod(d, c, hg);
    }
    const std::vector<double> contrib = sm::mat_vec(d, ops.phi(k, i), t);
    for (std::size_t p = 0; p < d; ++p) lambda[p] += ops.eta * contrib[p];
  }
  return lambda;
}

double predicted_expected_loss(const LossModel& loss, const ExpansionOperators& ops,
                               const ExpansionConfig& cfg, const ObservableCorrelation& rho1,
                               const ObservableCorrelation& rho2, double epsilon, std::uint64_t k) {
  if (k > ops.k) throw std::invalid_argument("predicted_expected_loss: step beyond operator table");
  const std::size_t d = ops.d;
  const std::vector<double>& xk = ops.xbar[k];
  const double base = loss.value(xk);
  const std::vector<double> c = covariance_matrix(ops, cfg, rho1, rho2, k, nullptr);
  std::vector<double> hess(d * d);
  loss.hessian(xk, hess);
  std::vector<double> grad(d);
  loss.gradient(xk, grad);
  const std::vector<double> lambda = mean_correction(loss, ops, cfg, rho1, rho2, k);
  return base + 0.5 * epsilon * epsilon * (sm::trace_prod(d, c, hess) - sm::dot(grad, lambda));
}

MonteCarloLoss monte_carlo_expected_loss(const LossModel& loss, const std::vector<double>& x0,
                                         const ExpansionConfig& cfg, double epsilon, std::uint64_t k,
                                         std::size_t n_reps, std::uint64_t seed, int n_threads) {
  if (n_reps < 2) throw std::invalid_argument("monte_carlo_expected_loss: need at least 2 replicas");
  RunConfig rc;
  rc.method = Method::mpgd;
  rc.opt.eta = cfg.eta;
  rc.opt.mu = epsilon * cfg.mu0;
  rc.opt.sigma = epsilon * cfg.sigma0;
  rc.opt.channel1 = cfg.channel1;
  rc.opt.channel2 = cfg.channel2;
  rc.opt.variant = PerturbationVariant::scalar_mult;
  rc.opt.coordinate_chains = true;
  rc.opt.burn_in = 0;
  rc.opt.stationary_start = true;
  rc.opt.divergence_threshold = cfg.divergence_threshold;
  rc.steps = k;

  std::vector<double> losses_table(n_reps);
  std::vector<char> bad(n_reps, 0);
  parallel_for(n_reps, n_threads, [&](std::size_t r) {
    RunResult rr = run(loss, x0, rc, derive_seed(seed, kTagMonteCarloRep, r));
    if (rr.diverged) {
      bad[r] = 1;
      losses_table[r] = 0.0;
    } else {
      losses_table[r] = loss.value(rr.x_final);
    }
  });

  MonteCarloLoss out;
  double sum = 0.0;
  for (std::size_t r = 0; r < n_reps; ++r) {
    if (bad[r]) {
      ++out.n_diverged;
      continue;
    }
    sum += losses_table[r];
    ++out.n_kept;
  }
  if (out.n_kept == 0) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    out.se = std::numeric_limits<double>::infinity();
    return out;
  }
  out.mean = sum / static_cast<double>(out.n_kept);
  if (out.n_kept >= 2) {
    double ss = 0.0;
    for (std::size_t r = 0; r < n_reps; ++r) {
      if (bad[r]) continue;
      const double dv = losses_table[r] - out.mean;
      ss += dv * dv;
    }
    const double nf = static_cast<double>(out.n_kept);
    out.se = std::sqrt(ss / (nf - 1.0) / nf);
  } else {
    out.se = std::numeric_limits<double>::infinity();
  }
  return out;
}

HierarchyMoments simulate_hierarchy(const LossModel& loss, const ExpansionOperators& ops,
                                    const ExpansionConfig& cfg, std::uint64_t k, std::size_t n_reps,
                                    std::uint64_t seed, int n_threads) {
  if (k > ops.k) throw std::invalid_argument("simulate_hierarchy: step beyond operator table");
  if (n_reps < 2) throw std::invalid_argument("simulate_hierarchy: need at least 2 replicas");
  const std::size_t d = ops.d;
  const double mt = multiplicative_level(cfg);
  const double st = additive_level(cfg);

  std::vector<double> phi_table_mc(n_reps * d);
  std::vector<double> outer_table(n_reps * d * d);
  std::vector<double> psi_table(n_reps * d);
  parallel_for(n_reps, n_threads, [&](std::size_t r) {
    Chain c1 = Chain::stationary(cfg.channel1, derive_seed(seed, kTagHierarchyScalar, r));
    std::vector<Chain> c2;
    c2.reserve(d);
    for (std::size_t i = 0; i < d; ++i)
      c2.push_back(Chain::stationary(cfg.channel2, derive_seed(seed, kTagHierarchyVector, r * d + i)));

    std::vector<double> phi(d, 0.0), psi(d, 0.0);
    std::vector<double> phi_next(d), psi_next(d), q(d), hg(d * d);
    for (std::uint64_t j = 0; j < k; ++j) {
      const double v1 = c1.next();
      const std::vector<double>& jac = ops.jac[j];
      const std::vector<double>& xb = ops.xbar[j];
      for (std::size_t p = 0; p < d; ++p) {
        loss.grad_component_hessian(xb, p, hg);
        double s = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
          double row = 0.0;
          for (std::size_t b = 0; b < d; ++b) row += hg[a * d + b] * phi[b];
          s += phi[a] * row;
        }
        q[p] = s;
      }
      for (std::size_t p = 0; p < d; ++p) {
        double jp = 0.0, js = 0.0;
        for (std::size_t b = 0; b < d; ++b) {
          jp += jac[p * d + b] * phi[b];
          js += jac[p * d + b] * psi[b];
        }
        phi_next[p] = jp - mt * v1 * xb[p] + st * c2[p].next();
        psi_next[p] = js - 0.5 * ops.eta * q[p] - mt * v1 * phi[p];
      }
      phi.swap(phi_next);
      psi.swap(psi_next);
    }
    for (std::size_t p = 0; p < d; ++p) {
      phi_table_mc[r * d + p] = phi[p];
      psi_table[r * d + p] = psi[p];
      for (std::size_t q2 = 0; q2 < d; ++q2) outer_table[r * d * d + p * d + q2] = phi[p] * phi[q2];
    }
  });

  HierarchyMoments out;
  out.n_reps = n_reps;
  reduce_rows(phi_table_mc, n_reps, d, out.mean_phi, out.mean_phi_se);
  reduce_rows(outer_table, n_reps, d * d, out.second_phi, out.second_phi_se);
  reduce_rows(psi_table, n_reps, d, out.mean_psi, out.mean_psi_se);
  return out;
}

double hierarchy_expected_loss(const LossModel& loss, const ExpansionOperators& ops,
                               const HierarchyMoments& mom, double epsilon, std::uint64_t k) {
  const std::size_t d = ops.d;
  const std::vector<double>& xk = ops.xbar[k];
  const double base = loss.value(xk);
  std::vector<double> grad(d);
  loss.gradient(xk, grad);
  std::vector<double> hess(d * d);
  loss.hessian(xk, hess);
  const double first = sm::dot(grad, mom.mean_phi);
  const double second = sm::dot(grad, mom.mean_psi) + 0.5 * sm::trace_prod(d, mom.second_phi, hess);
  return base + epsilon * first + epsilon * epsilon * second;
}

OrderCheckResult order_check(const LossModel& loss, const std::vector<double>& x0,
                             const ExpansionConfig& cfg, const OrderCheckConfig& oc,
                             std::uint64_t seed) {
  if (oc.epsilons.empty()) throw std::invalid_argument("order_check: empty epsilon grid");
  const ExpansionOperators ops = build_expansion_operators(loss, x0, cfg.eta, oc.k);

  ObservableCorrelation rho1, rho2;
  HierarchyMoments mom;
  if (oc.mode == PredictionMode::full) {
    rho1 = estimate_observable_correlations(cfg.channel1, false, oc.k, oc.max_lag, oc.corr_chains,
                                            derive_seed(seed, kTagOrderCorr1, 0), oc.n_threads);
    rho2 = estimate_observable_correlations(cfg.channel2, false, oc.k, oc.max_lag, oc.corr_chains,
                                            derive_seed(seed, kTagOrderCorr2, 0), oc.n_threads);
  } else if (oc.mode == PredictionMode::hierarchy) {
    mom = simulate_hierarchy(loss, ops, cfg, oc.k, oc.hierarchy_reps,
                             derive_seed(seed, kTagOrderHierarchy, 0), oc.n_threads);
  }

  OrderCheckResult out;
  out.points.reserve(oc.epsilons.size());
  for (std::size_t e = 0; e < oc.epsilons.size(); ++e) {
    const double eps = oc.epsilons[e];
    if (!(eps > 0.0)) throw std::invalid_argument("order_check: epsilon must be positive");
    OrderCheckPoint pt;
    pt.epsilon = eps;
    const MonteCarloLoss mc = monte_carlo_expected_loss(loss, x0, cfg, eps, oc.k, oc.n_reps,
                                                        derive_seed(seed, kTagOrderMc, e), oc.n_threads);
    pt.mc = mc.mean;
    pt.mc_se = mc.se;
    switch (oc.mode) {
      case PredictionMode::full:
        pt.predicted = predicted_expected_loss(loss, ops, cfg, rho1, rho2, eps, oc.k);
        break;
      case PredictionMode::baseline_only:
        pt.predicted = loss.value(ops.xbar[oc.k]);
        break;
      case PredictionMode::hierarchy:
        pt.predicted = hierarchy_expected_loss(loss, ops, mom, eps, oc.k);
        break;
    }
    pt.residual = pt.mc - pt.predicted;
    pt.noise_dominated = !(std::fabs(pt.residual) >= 2.0 * pt.mc_se) || pt.residual == 0.0;
    out.points.push_back(pt);
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const OrderCheckPoint& pt : out.points) {
    if (pt.noise_dominated) continue;
    const double lx = std::log(pt.epsilon);
    const double ly = std::log(std::fabs(pt.residual));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++out.n_used;
  }
  if (out.n_used < 2) {
    out.inconclusive = true;
    out.slope = 0.0;
    return out;
  }
  const double nf = static_cast<double>(out.n_used);
  const double denom = sxx - sx * sx / nf;
  out.slope = denom != 0.0 ? (sxy - sx * sy / nf) / denom : 0.0;
  return out;
}

}  // namespace mpgd
