#pragma once
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mpgd/losses.hpp"
#include "mpgd/optimizer.hpp"
#include "mpgd/thaler.hpp"

// Small-perturbation expansion of the expected loss around the noise-free
// descent path, plus the Monte Carlo machinery used to test it.
//
// The iteration under study is
//   x_{k+1} = x_k - eta grad(x_k) - eps mu0 eta^g1 v1_k x_k + eps sigma0 eta^g2 v2_k
// i.e. the scalar multiplicative channel plus an additive channel, with both
// noise levels tied to a common small parameter eps.  Writing
// x_k = xbar_k + eps phi_k + eps^2 psi_k + O(eps^3) gives linear recursions
// for phi and psi whose coefficients depend only on the noise-free path.
// The closed-form prediction assembled here is
//   E loss(x_k) ~ loss(xbar_k) + eps^2/2 (tr(C_k H_k) - grad_k . lambda_k)
// with C_k the second moment of phi_k and lambda_k a mean correction built
// from third derivatives.  Its accuracy order is measured by order_check.

namespace mpgd {

// Every chain in this module starts exactly at the invariant law (inverse
// CDF draw).  Burn-in from a uniform start converges too slowly here: the
// leftover bias in stream means enters the expansion at first order in eps
// and would swamp the second order effects being measured.
struct ExpansionConfig {
  double eta = 0.01;     // step size; the scale parameter is m = 1/eta
  double mu0 = 1.0;      // multiplicative level per unit eps
  double sigma0 = 1.0;   // additive level per unit eps
  ThalerParams channel1{0.7, 1.0};
  ThalerParams channel2{0.7, 1.0};
  double divergence_threshold = 1e10;
};

// Noise-free trajectory xbar_0..xbar_k under plain gradient descent.
std::vector<std::vector<double>> unperturbed_trajectory(const LossModel& loss,
                                                        const std::vector<double>& x0,
                                                        double eta, std::uint64_t k);

// Per-step Jacobians J_i = I - eta Hess(xbar_i) and the propagator table
// phi_table[j][i] = J_{j-1} ... J_i for 0 <= i <= j <= k (empty product is I).
struct ExpansionOperators {
  std::size_t d = 0;
  std::uint64_t k = 0;
  double eta = 0.0;
  std::vector<std::vector<double>> xbar;
  std::vector<std::vector<double>> jac;
  std::vector<std::vector<std::vector<double>>> phi_table;

  const std::vector<double>& phi(std::uint64_t j, std::uint64_t i) const { return phi_table[j][i]; }
};

ExpansionOperators build_expansion_operators(const LossModel& loss, const std::vector<double>& x0,
                                             double eta, std::uint64_t k);

// Lag-indexed second moments of a chain observable stream, pooled over
// independent chains; the stream is stationary, so a single estimate per lag
// covers every index pair with that separation.  Per-step means are kept as a
// diagnostic (they vanish only for beta = 1 or the symmetrized difference).
struct ObservableCorrelation {
  std::vector<double> rho;      // lag 0..max_lag
  std::vector<double> rho_se;   // standard error across chains
  std::vector<double> mean;     // per step 0..k_max-1
  std::vector<double> mean_se;
  std::size_t n_chains = 0;

  double at(std::size_t lag) const { return lag < rho.size() ? rho[lag] : 0.0; }
  double se_at(std::size_t lag) const { return lag < rho_se.size() ? rho_se[lag] : 0.0; }
};

ObservableCorrelation estimate_observable_correlations(const ThalerParams& params, bool symmetrized,
                                                       std::uint64_t k_max, std::size_t max_lag,
                                                       std::size_t n_chains, std::uint64_t seed,
                                                       int n_threads = 1);

// Second moment C_j = E[phi_j phi_j^T], assembled from the propagator table
// and the two correlation functions.  Linear in the rho estimates, so the
// optional standard error propagates exactly through fixed weights.
// Assumes both observable streams have zero mean (beta = 1 here, or the
// symmetrized difference); otherwise cross-channel terms it omits are
// nonzero.  The per-step mean diagnostic in ObservableCorrelation is the
// check for that precondition.
std::vector<double> covariance_matrix(const ExpansionOperators& ops, const ExpansionConfig& cfg,
                                      const ObservableCorrelation& rho1,
                                      const ObservableCorrelation& rho2, std::uint64_t j,
                                      std::vector<double>* se_out = nullptr);

// Mean correction lambda_k = eta sum_i Phi_i t_{i-1},
// [t_j]^p = tr(C_j Hg_p(xbar_j)) with Hg_p the Hessian of gradient component p.
std::vector<double> mean_correction(const LossModel& loss, const ExpansionOperators& ops,
                                    const ExpansionConfig& cfg, const ObservableCorrelation& rho1,
                                    const ObservableCorrelation& rho2, std::uint64_t k);

// loss(xbar_k) + eps^2/2 (tr(C_k H) - grad . lambda_k)
double predicted_expected_loss(const LossModel& loss, const ExpansionOperators& ops,
                               const ExpansionConfig& cfg, const ObservableCorrelation& rho1,
                               const ObservableCorrelation& rho2, double epsilon, std::uint64_t k);

struct MonteCarloLoss {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n_kept = 0;
  std::size_t n_diverged = 0;
};

// Mean loss at step k over independent replicas of the actual iteration
// (scalar multiplicative + additive channels), mu = eps mu0, sigma = eps sigma0.
MonteCarloLoss monte_carlo_expected_loss(const LossModel& loss, const std::vector<double>& x0,
                                         const ExpansionConfig& cfg, double epsilon, std::uint64_t k,
                                         std::size_t n_reps, std::uint64_t seed, int n_threads = 1);

// Direct simulation of the first and second order fluctuation recursions
//   phi_{j+1} = J_j phi_j + g_j,          g_j = -mt v1_j xbar_j + st v2_j
//   psi_{j+1} = J_j psi_j - (eta/2) q_j - mt v1_j phi_j,
//     [q_j]^p = phi_j . Hg_p(xbar_j) phi_j
// with mt = mu0 eta^g1, st = sigma0 eta^g2.  Gives Monte Carlo estimates of
// E[phi_k], E[phi_k phi_k^T] and E[psi_k] to check the closed forms and to
// measure the mean term the lambda_k formula leaves out.
struct HierarchyMoments {
  std::vector<double> mean_phi, mean_phi_se;
  std::vector<double> second_phi, second_phi_se;  // row-major d x d
  std::vector<double> mean_psi, mean_psi_se;
  std::size_t n_reps = 0;
};

HierarchyMoments simulate_hierarchy(const LossModel& loss, const ExpansionOperators& ops,
                                    const ExpansionConfig& cfg, std::uint64_t k, std::size_t n_reps,
                                    std::uint64_t seed, int n_threads = 1);

// Expected loss through second order taken from hierarchy moments instead of
// the closed-form correction:
//   loss(xbar_k) + eps grad . E[phi] + eps^2 (grad . E[psi] + tr(E[phi phi^T] H) / 2)
double hierarchy_expected_loss(const LossModel& loss, const ExpansionOperators& ops,
                               const HierarchyMoments& mom, double epsilon, std::uint64_t k);

enum class PredictionMode {
  full,              // closed-form second order prediction
  baseline_only,     // loss(xbar_k) alone; negative control
  hierarchy,         // second order via simulated fluctuation recursions
};

struct OrderCheckPoint {
  double epsilon = 0.0;
  double mc = 0.0;
  double mc_se = 0.0;
  double predicted = 0.0;
  double residual = 0.0;
  bool noise_dominated = false;  // |residual| < 2 mc_se, excluded from the fit
};

struct OrderCheckResult {
  std::vector<OrderCheckPoint> points;
  double slope = 0.0;  // log|residual| against log eps over the kept points
  std::size_t n_used = 0;
  bool inconclusive = false;  // fewer than two points rose above noise
};

struct OrderCheckConfig {
  std::vector<double> epsilons{0.04, 0.02, 0.01, 0.005};
  std::uint64_t k = 50;
  std::size_t n_reps = 10000;
  std::size_t corr_chains = 4000;
  std::size_t max_lag = 200;
  std::size_t hierarchy_reps = 20000;
  PredictionMode mode = PredictionMode::full;
  int n_threads = 1;
};

OrderCheckResult order_check(const LossModel& loss, const std::vector<double>& x0,
                             const ExpansionConfig& cfg, const OrderCheckConfig& oc,
                             std::uint64_t seed);

}  // namespace mpgd
