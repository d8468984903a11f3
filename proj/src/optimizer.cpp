#include "mpgd/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mpgd {

namespace {

// stream tags for seed derivation; one namespace per noise consumer
constexpr std::uint64_t kTagChannelBase = 0x10;
constexpr std::uint64_t kTagGaussian = 0x30;

std::vector<std::uint64_t> derive_bank_seeds(std::uint64_t master, std::uint64_t channel_tag,
                                             std::uint64_t half, std::size_t dim) {
  std::vector<std::uint64_t> seeds(dim);
  for (std::size_t i = 0; i < dim; ++i)
    seeds[i] = derive_seed(master, kTagChannelBase + 2 * channel_tag + half, i);
  return seeds;
}

}  // namespace

PerturbationBank::PerturbationBank(const ThalerParams& params, std::size_t dim, bool paired,
                                   std::uint64_t master_seed, std::uint64_t channel_tag,
                                   std::uint64_t burn_in, bool stationary_start)
    : PerturbationBank(params, derive_bank_seeds(master_seed, channel_tag, 0, dim),
                       paired ? derive_bank_seeds(master_seed, channel_tag, 1, dim)
                              : std::vector<std::uint64_t>{},
                       burn_in, stationary_start) {}

PerturbationBank::PerturbationBank(const ThalerParams& params, std::vector<std::uint64_t> seeds_a,
                                   std::vector<std::uint64_t> seeds_b, std::uint64_t burn_in,
                                   bool stationary_start)
    : dim_(seeds_a.size()), paired_(!seeds_b.empty()) {
  if (dim_ == 0) throw std::invalid_argument("perturbation bank: empty seed list");
  if (paired_ && seeds_b.size() != dim_)
    throw std::invalid_argument("perturbation bank: halves must have equal size");
  chains_.reserve(paired_ ? 2 * dim_ : dim_);
  for (auto s : seeds_a)
    chains_.push_back(stationary_start ? Chain::stationary(params, s) : Chain(params, s, burn_in));
  for (auto s : seeds_b)
    chains_.push_back(stationary_start ? Chain::stationary(params, s) : Chain(params, s, burn_in));
}

void PerturbationBank::next(std::span<double> out) {
  if (out.size() != dim_) throw std::invalid_argument("perturbation bank: output size mismatch");
  for (std::size_t i = 0; i < dim_; ++i) out[i] = chains_[i].next();
  if (paired_)
    for (std::size_t i = 0; i < dim_; ++i) out[i] -= chains_[dim_ + i].next();
}

std::uint64_t PerturbationBank::step_index() const {
  const std::uint64_t k = chains_.front().step_index();
  for (const auto& c : chains_)
    if (c.step_index() != k)
      throw std::logic_error("perturbation bank: chains advanced unevenly");
  return k;
}

void gd_step(const LossModel& loss, std::vector<double>& x, double eta, StepWorkspace& ws) {
  loss.gradient(x, ws.grad);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= eta * ws.grad[i];
}

namespace {

// shared tail of the perturbed updates; v1/v2 hold this step's channel values
void apply_two_channel(std::vector<double>& x, const OptimizerConfig& cfg,
                       const StepWorkspace& ws, bool scalar_channel1) {
  const double a = cfg.mu * std::pow(cfg.eta, cfg.channel1.gamma);
  const double b = cfg.sigma * std::pow(cfg.eta, cfg.channel2.gamma);
  if (cfg.mu != 0.0) {
    if (scalar_channel1) {
      const double f = a * ws.v1[0];
      for (auto& xi : x) xi -= f * xi;
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= a * ws.v1[i] * x[i];
    }
  }
  if (cfg.sigma != 0.0)
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += b * ws.v2[i];
}

}  // namespace

void gaussian_pgd_step(const LossModel& loss, std::vector<double>& x, const OptimizerConfig& cfg,
                       Rng& noise, bool perturb, StepWorkspace& ws) {
  const bool scalar1 = cfg.variant == PerturbationVariant::scalar_mult;
  const bool sym = cfg.variant == PerturbationVariant::symmetrized;
  // draws are consumed every step to keep the stream aligned with step count
  const std::size_t n1 = scalar1 ? 1 : x.size();
  for (std::size_t i = 0; i < n1; ++i)
    ws.v1[i] = sym ? noise.normal() - noise.normal() : noise.normal();
  for (std::size_t i = 0; i < x.size(); ++i)
    ws.v2[i] = sym ? noise.normal() - noise.normal() : noise.normal();
  loss.gradient(x, ws.grad);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= cfg.eta * ws.grad[i];
  if (perturb) apply_two_channel(x, cfg, ws, scalar1);
}

void mpgd_step(const LossModel& loss, std::vector<double>& x, const OptimizerConfig& cfg,
               PerturbationBank& bank1, PerturbationBank& bank2, bool perturb,
               StepWorkspace& ws) {
  const bool scalar1 = cfg.variant == PerturbationVariant::scalar_mult;
  bank1.next(std::span(ws.v1).first(bank1.dim()));
  bank2.next(std::span(ws.v2).first(bank2.dim()));
  if (!cfg.coordinate_chains && cfg.variant != PerturbationVariant::scalar_mult) {
    // one broadcast chain per channel
    for (std::size_t i = 1; i < x.size(); ++i) ws.v1[i] = ws.v1[0];
  }
  if (!cfg.coordinate_chains)
    for (std::size_t i = 1; i < x.size(); ++i) ws.v2[i] = ws.v2[0];
  loss.gradient(x, ws.grad);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= cfg.eta * ws.grad[i];
  if (perturb) apply_two_channel(x, cfg, ws, scalar1);
}

namespace {

bool out_of_bounds(const std::vector<double>& x, double threshold) {
  for (double xi : x)
    if (!std::isfinite(xi) || std::abs(xi) > threshold) return true;
  return false;
}

}  // namespace

RunResult run(const LossModel& loss, std::vector<double> x0, const RunConfig& cfg,
              std::uint64_t seed) {
  const std::size_t d = loss.dim();
  if (x0.size() != d) throw std::invalid_argument("run: initial point has wrong dimension");
  if (!(cfg.opt.eta > 0.0)) throw std::invalid_argument("run: eta must be positive");
  const bool record_trace = cfg.record_trace && loss.has_curvature();

  StepWorkspace ws;
  ws.resize(d);
  std::vector<double> x = std::move(x0);

  const bool uses_chains = cfg.method == Method::mpgd || cfg.method == Method::mpgd_sym;
  const bool sym = cfg.method == Method::mpgd_sym ||
                   (uses_chains && cfg.opt.variant == PerturbationVariant::symmetrized);
  OptimizerConfig opt = cfg.opt;
  if (cfg.method == Method::mpgd_sym) opt.variant = PerturbationVariant::symmetrized;

  const std::size_t dim1 = opt.variant == PerturbationVariant::scalar_mult ? 1
                           : opt.coordinate_chains                         ? d
                                                                           : 1;
  const std::size_t dim2 = opt.coordinate_chains ? d : 1;
  std::vector<PerturbationBank> banks;
  if (uses_chains) {
    banks.emplace_back(opt.channel1, dim1, sym, seed, 0, opt.burn_in, opt.stationary_start);
    banks.emplace_back(opt.channel2, dim2, sym, seed, 1, opt.burn_in, opt.stationary_start);
  }
  Rng gauss(derive_seed(seed, kTagGaussian, 0));

  RunResult result;
  auto record = [&](std::uint64_t step) {
    TrajectoryPoint pt;
    pt.step = step;
    pt.loss = loss.value(x);
    loss.gradient(x, ws.grad);
    double g2 = 0.0;
    for (double g : ws.grad) g2 += g * g;
    pt.grad_norm = std::sqrt(g2);
    if (record_trace) pt.hessian_trace = loss.hessian_trace(x);
    if (cfg.record_iterates) pt.x = x;
    result.points.push_back(std::move(pt));
  };

  record(0);
  for (std::uint64_t k = 0; k < cfg.steps; ++k) {
    const bool perturb =
        cfg.opt.stop_perturbation_at == 0 || k < cfg.opt.stop_perturbation_at;
    switch (cfg.method) {
      case Method::gd:
        gd_step(loss, x, opt.eta, ws);
        break;
      case Method::gaussian_pgd:
        gaussian_pgd_step(loss, x, opt, gauss, perturb, ws);
        break;
      case Method::mpgd:
      case Method::mpgd_sym:
        mpgd_step(loss, x, opt, banks[0], banks[1], perturb, ws);
        break;
    }
    result.steps_done = k + 1;
    if (out_of_bounds(x, opt.divergence_threshold)) {
      result.diverged = true;
      result.diverged_at = k + 1;
      break;
    }
    if (cfg.record_every != 0 && (k + 1) % cfg.record_every == 0 && k + 1 != cfg.steps)
      record(k + 1);
  }
  record(result.steps_done);
  result.x_final = std::move(x);
  return result;
}

}  // namespace mpgd
