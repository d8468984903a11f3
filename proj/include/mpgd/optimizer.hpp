#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "mpgd/losses.hpp"
#include "mpgd/thaler.hpp"

namespace mpgd {

// Shape of the multiplicative channel:
//   hadamard     - one noise value per coordinate, applied elementwise
//   scalar_mult  - a single noise value scales the whole iterate
//   symmetrized  - hadamard with each value replaced by the difference of two
//                  independent chains (both channels), which kills the odd
//                  moments of the perturbation exactly
enum class PerturbationVariant { hadamard, scalar_mult, symmetrized };

enum class Method { gd, gaussian_pgd, mpgd, mpgd_sym };

struct OptimizerConfig {
  double eta = 0.01;    // step size; the slow/fast scale split is m = 1/eta
  double mu = 0.0;      // multiplicative level, applied as mu * eta^gamma1
  double sigma = 0.0;   // additive level, applied as sigma * eta^gamma2
  ThalerParams channel1{0.7, 0.5};
  ThalerParams channel2{0.7, 0.5};
  PerturbationVariant variant = PerturbationVariant::hadamard;
  bool coordinate_chains = true;  // independent chains per coordinate (else one broadcast chain)
  std::uint64_t burn_in = kDefaultBurnIn;
  bool stationary_start = false;  // exact invariant-law chain starts; burn_in is then skipped
  std::uint64_t stop_perturbation_at = 0;  // step index after which both levels read as 0; 0 = never
  double divergence_threshold = 1e10;      // |x|_inf beyond this stops the run with a flag
};

// The chains feeding one perturbation channel.  A paired bank holds two
// chains per slot and emits their difference.  Seeds are derived from
// (master seed, channel tag, slot, half), so channels and slots never share
// a stream.
class PerturbationBank {
 public:
  PerturbationBank(const ThalerParams& params, std::size_t dim, bool paired,
                   std::uint64_t master_seed, std::uint64_t channel_tag, std::uint64_t burn_in,
                   bool stationary_start = false);
  // explicit per-chain seeds, first (and optionally second) half
  PerturbationBank(const ThalerParams& params, std::vector<std::uint64_t> seeds_a,
                   std::vector<std::uint64_t> seeds_b, std::uint64_t burn_in,
                   bool stationary_start = false);

  std::size_t dim() const { return dim_; }
  bool paired() const { return paired_; }
  // emits one value per slot and advances every chain exactly once
  void next(std::span<double> out);
  std::uint64_t step_index() const;

 private:
  std::size_t dim_ = 0;
  bool paired_ = false;
  std::vector<Chain> chains_;
};

// buffers reused across steps by the step functions and the runner
struct StepWorkspace {
  std::vector<double> grad, v1, v2;
  void resize(std::size_t d) {
    grad.assign(d, 0.0);
    v1.assign(d, 0.0);
    v2.assign(d, 0.0);
  }
};

// x <- x - eta grad R(x)
void gd_step(const LossModel& loss, std::vector<double>& x, double eta, StepWorkspace& ws);

// the same two-channel update with i.i.d. standard normal draws in place of
// the chain values, at identical eta^gamma prefactors
void gaussian_pgd_step(const LossModel& loss, std::vector<double>& x, const OptimizerConfig& cfg,
                       Rng& noise, bool perturb, StepWorkspace& ws);

// x <- x - eta grad R(x) - mu eta^gamma1 (v1 o x) + sigma eta^gamma2 v2
// where o is elementwise (or a scalar rescale under scalar_mult).  Banks
// advance once per call whether or not the perturbation is applied.
void mpgd_step(const LossModel& loss, std::vector<double>& x, const OptimizerConfig& cfg,
               PerturbationBank& bank1, PerturbationBank& bank2, bool perturb, StepWorkspace& ws);

struct RunConfig {
  Method method = Method::mpgd;
  OptimizerConfig opt;
  std::uint64_t steps = 1000;
  std::uint64_t record_every = 0;  // 0: record only the initial and final points
  bool record_iterates = false;    // keep x at recorded steps
  bool record_trace = false;       // Hessian trace at recorded steps (needs curvature)
};

struct TrajectoryPoint {
  std::uint64_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double hessian_trace = 0.0;
  std::vector<double> x;  // empty unless record_iterates
};

struct RunResult {
  std::vector<TrajectoryPoint> points;
  std::vector<double> x_final;
  std::uint64_t steps_done = 0;
  bool diverged = false;
  std::uint64_t diverged_at = 0;
};

// Runs the chosen method from x0.  All randomness derives from seed; reruns
// are bit-identical.  On divergence the run stops at the offending step with
// the flag set and the last iterate kept.
RunResult run(const LossModel& loss, std::vector<double> x0, const RunConfig& cfg,
              std::uint64_t seed);

}  // namespace mpgd
