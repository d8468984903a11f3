#pragma once
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mpgd/stable.hpp"
#include "mpgd/thaler.hpp"

namespace mpgd {

// ---------------------------------------------------------------------------
// Fast-slow recursions and their stable-driven limit equation.
//
// The fast-slow side iterates
//   x_{k+1} = x_k + m^-1 a(x_k) + m^-gamma b(x_k) v_k
// for floor(m T) steps, one independent chain observable stream per
// coordinate, all chains started exactly in the invariant law.  As m grows
// the time-T state converges in distribution to the time-T marginal of
//   dX = a(X) dt + b(X) dL
// driven by an alpha-stable process with alpha = 1/gamma; the chain
// observable is normalized so L_1 has unit scale.
//
// Two diffusion shapes are supported, the two with an exact jump rule:
// constant b = cI adds c dL outright, and b(x) = c diag(x) has the closed
// jump flow x_i <- x_i exp(c dL_i), so the integrator carries no
// jump-adapted discretization error on top of Euler drift splitting.

using DriftFn = std::function<void(std::span<const double>, std::span<double>)>;

enum class DiffusionKind { additive_constant, diagonal_linear };

struct FastSlowSpec {
  DriftFn drift;                 // a(x), written into the second argument
  DiffusionKind kind = DiffusionKind::additive_constant;
  double coefficient = 1.0;      // c in b = cI or b = c diag(x)
  ThalerParams chain{0.6, 0.0};  // fast noise source per coordinate
  double horizon = 1.0;          // T
  std::uint64_t m = 128;         // scale separation
  std::vector<double> x0;
};

struct SDESpec {
  DriftFn drift;
  DiffusionKind kind = DiffusionKind::additive_constant;
  double coefficient = 1.0;
  StableSpec law{5.0 / 3.0, 0.0, 1.0};  // one driving component per coordinate
  double dt = 1e-3;              // nominal step; rounded so the grid ends at T
  double horizon = 1.0;
  std::vector<double> x0;
};

void validate(const FastSlowSpec& spec);
void validate(const SDESpec& spec);

struct PathEndpoint {
  std::vector<double> state;  // x at time T
  bool diverged = false;      // a coordinate left the finite range mid-run
};

PathEndpoint simulate_fast_slow(const FastSlowSpec& spec, std::uint64_t seed);

// Euler drift step followed by the exact jump flow of the diffusion field,
// with per-step increments dL = h^(1/alpha) xi and xi drawn from the law.
PathEndpoint simulate_stable_sde(const SDESpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Distributional comparison across a ladder of scale separations.
//
// For each m the first state coordinate of n_samples independent fast-slow
// runs is compared against a reference sample of the limit marginal: the
// analytic CDF when one is supplied, otherwise n_samples runs of the SDE
// integrator.  Diverged runs are dropped from the comparison and counted.

struct ConvergenceRow {
  std::uint64_t m = 0;
  double ks = 0.0;                  // distance to the reference at this m
  std::size_t n_effective = 0;      // samples that stayed finite
  std::size_t divergence_count = 0;
};

struct WeakConvergenceReport {
  std::vector<ConvergenceRow> rows;       // one per m, in input order
  double largest_m_ks = 0.0;
  bool has_trend = false;                 // set once m_list has two entries
  double spearman = 0.0;                  // rank correlation of ks against m
  std::size_t ref_n_effective = 0;        // simulated reference only
  std::size_t ref_divergence_count = 0;
};

// base.m is ignored; each row reruns base at the corresponding m_list entry.
// m_list must be strictly increasing and n_samples at least 1000, enough to
// put the KS noise floor near 0.01.
WeakConvergenceReport weak_convergence_report(
    const FastSlowSpec& base, std::span<const std::uint64_t> m_list,
    const SDESpec& ref, std::size_t n_samples, std::uint64_t seed,
    std::function<double(double)> analytic_cdf = nullptr, int n_threads = 1);

}  // namespace mpgd
