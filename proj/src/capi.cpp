#include "mpgd.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpgd/dataset.hpp"
#include "mpgd/homogenization.hpp"
#include "mpgd/implicit_reg.hpp"
#include "mpgd/losses.hpp"
#include "mpgd/mlp.hpp"
#include "mpgd/optimizer.hpp"
#include "mpgd/stable.hpp"
#include "mpgd/thaler.hpp"

namespace {

thread_local std::string g_last_error;

// runs the body and translates exceptions into status codes
template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return MPGD_OK;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return MPGD_ERR_INVALID;
  } catch (const std::logic_error& e) {
    g_last_error = e.what();
    return MPGD_ERR_INVALID;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MPGD_ERR_RUNTIME;
  }
}

int fail_invalid(const char* msg) {
  g_last_error = msg;
  return MPGD_ERR_INVALID;
}

}  // namespace

extern "C" {

const char* mpgd_last_error(void) { return g_last_error.c_str(); }

const char* mpgd_version(void) { return "0.1.0"; }

/* ------------------------------------------------------------------ */

struct mpgd_chain {
  mpgd::Chain chain;
};

int mpgd_chain_new(double gamma, double beta, uint64_t seed, uint64_t burn_in,
                   int stationary_start, mpgd_chain** out) {
  if (!out) return fail_invalid("mpgd_chain_new: out is null");
  return guarded([&] {
    const mpgd::ThalerParams params{gamma, beta};
    *out = new mpgd_chain{stationary_start ? mpgd::Chain::stationary(params, seed)
                                           : mpgd::Chain(params, seed, burn_in)};
  });
}

int mpgd_chain_next(mpgd_chain* chain, double* out_value) {
  if (!chain || !out_value) return fail_invalid("mpgd_chain_next: null argument");
  return guarded([&] { *out_value = chain->chain.next(); });
}

int mpgd_chain_state(const mpgd_chain* chain, double* out_y) {
  if (!chain || !out_y) return fail_invalid("mpgd_chain_state: null argument");
  *out_y = chain->chain.y();
  return MPGD_OK;
}

void mpgd_chain_free(mpgd_chain* chain) { delete chain; }

int mpgd_get_observable_constants(double gamma, mpgd_observable_constants* out) {
  if (!out) return fail_invalid("mpgd_get_observable_constants: out is null");
  return guarded([&] {
    const mpgd::ObservableConstants c = mpgd::observable_constants(gamma);
    out->gamma = c.gamma;
    out->alpha = c.alpha;
    out->y_star = c.y_star;
    out->d_alpha = c.d_alpha;
    out->v_low = c.v_low;
    out->v_high = c.v_high;
  });
}

int mpgd_birkhoff_sample(double gamma, double beta, uint64_t k, uint64_t burn_in,
                         int stationary_start, size_t n, uint64_t seed, double* out) {
  if (!out) return fail_invalid("mpgd_birkhoff_sample: out is null");
  if (k == 0) return fail_invalid("mpgd_birkhoff_sample: k must be positive");
  return guarded([&] {
    const mpgd::ThalerParams params{gamma, beta};
    const double scale = std::pow(static_cast<double>(k), -gamma);
    for (size_t i = 0; i < n; ++i) {
      const uint64_t s = mpgd::derive_seed(seed, 0x90, i);
      if (stationary_start) {
        mpgd::Chain chain = mpgd::Chain::stationary(params, s);
        double acc = 0.0;
        for (uint64_t j = 0; j < k; ++j) acc += chain.next();
        out[i] = scale * acc;
      } else {
        out[i] = mpgd::birkhoff_sum(params, s, k, burn_in);
      }
    }
  });
}

/* ------------------------------------------------------------------ */

int mpgd_stable_sample(double alpha, double beta, double scale, uint64_t seed,
                       size_t n, double* out) {
  if (!out) return fail_invalid("mpgd_stable_sample: out is null");
  return guarded([&] {
    const std::vector<double> xs =
        mpgd::sample_stable(mpgd::StableSpec{alpha, beta, scale}, seed, n);
    std::memcpy(out, xs.data(), n * sizeof(double));
  });
}

int mpgd_stable_cdf_symmetric(double x, double alpha, double scale, double* out) {
  if (!out) return fail_invalid("mpgd_stable_cdf_symmetric: out is null");
  return guarded([&] { *out = mpgd::stable_cdf_symmetric(x, alpha, scale); });
}

int mpgd_ecf_distance(const double* xs, size_t n, double alpha, double beta,
                      double scale, double* out) {
  if (!xs || !out) return fail_invalid("mpgd_ecf_distance: null argument");
  return guarded([&] {
    const std::vector<double> v(xs, xs + n);
    *out = mpgd::ecf_distance(v, mpgd::StableSpec{alpha, beta, scale});
  });
}

int mpgd_hill_estimator(const double* xs, size_t n, double tail_fraction,
                        int tail_side, double* out) {
  if (!xs || !out) return fail_invalid("mpgd_hill_estimator: null argument");
  mpgd::TailSide side;
  switch (tail_side) {
    case MPGD_TAIL_ABSOLUTE: side = mpgd::TailSide::absolute; break;
    case MPGD_TAIL_POSITIVE: side = mpgd::TailSide::positive; break;
    case MPGD_TAIL_NEGATIVE: side = mpgd::TailSide::negative; break;
    default: return fail_invalid("mpgd_hill_estimator: unknown tail side");
  }
  return guarded([&] {
    const std::vector<double> v(xs, xs + n);
    *out = mpgd::hill_estimator(v, tail_fraction, side);
  });
}

int mpgd_ks_two_sample(const double* a, size_t na, const double* b, size_t nb,
                       double* out) {
  if (!a || !b || !out) return fail_invalid("mpgd_ks_two_sample: null argument");
  return guarded([&] {
    std::vector<double> va(a, a + na);
    const std::vector<double> vb(b, b + nb);
    *out = mpgd::ks_statistic(std::move(va), vb);
  });
}

/* ------------------------------------------------------------------ */

struct mpgd_dataset {
  mpgd::Dataset data;
};

struct mpgd_loss {
  std::unique_ptr<mpgd::LossModel> model;
  bool is_mlp = false;
};

int mpgd_loss_quadratic_new(const double* a_row_major, size_t d, mpgd_loss** out) {
  if (!a_row_major || !out) return fail_invalid("mpgd_loss_quadratic_new: null argument");
  return guarded([&] {
    std::vector<double> a(a_row_major, a_row_major + d * d);
    *out = new mpgd_loss{std::make_unique<mpgd::QuadraticLoss>(std::move(a), d), false};
  });
}

int mpgd_loss_widening_valley_new(size_t d_u, mpgd_loss** out) {
  if (!out) return fail_invalid("mpgd_loss_widening_valley_new: out is null");
  return guarded([&] {
    *out = new mpgd_loss{std::make_unique<mpgd::WideningValleyLoss>(d_u), false};
  });
}

int mpgd_loss_mlp_new(const mpgd_dataset* train, size_t width, mpgd_loss** out) {
  if (!train || !out) return fail_invalid("mpgd_loss_mlp_new: null argument");
  return guarded([&] {
    *out = new mpgd_loss{std::make_unique<mpgd::MlpLoss>(train->data, width), true};
  });
}

size_t mpgd_loss_dim(const mpgd_loss* loss) { return loss ? loss->model->dim() : 0; }

int mpgd_loss_value(const mpgd_loss* loss, const double* x, double* out) {
  if (!loss || !x || !out) return fail_invalid("mpgd_loss_value: null argument");
  return guarded([&] {
    *out = loss->model->value(std::span<const double>(x, loss->model->dim()));
  });
}

int mpgd_loss_hessian_trace(const mpgd_loss* loss, const double* x, double* out) {
  if (!loss || !x || !out) return fail_invalid("mpgd_loss_hessian_trace: null argument");
  return guarded([&] {
    *out = loss->model->hessian_trace(std::span<const double>(x, loss->model->dim()));
  });
}

void mpgd_loss_free(mpgd_loss* loss) { delete loss; }

int mpgd_mlp_init_params(const mpgd_loss* mlp_loss, uint64_t seed, double* out_params) {
  if (!mlp_loss || !out_params) return fail_invalid("mpgd_mlp_init_params: null argument");
  if (!mlp_loss->is_mlp) return fail_invalid("mpgd_mlp_init_params: loss is not a network");
  return guarded([&] {
    const auto* mlp = static_cast<const mpgd::MlpLoss*>(mlp_loss->model.get());
    const std::vector<double> p = mlp->net().init_params(seed);
    std::memcpy(out_params, p.data(), p.size() * sizeof(double));
  });
}

int mpgd_mlp_rmse(const mpgd_loss* mlp_loss, const mpgd_dataset* eval,
                  const double* params, double* out) {
  if (!mlp_loss || !eval || !params || !out)
    return fail_invalid("mpgd_mlp_rmse: null argument");
  if (!mlp_loss->is_mlp) return fail_invalid("mpgd_mlp_rmse: loss is not a network");
  return guarded([&] {
    const auto* mlp = static_cast<const mpgd::MlpLoss*>(mlp_loss->model.get());
    *out = mlp->rmse(eval->data,
                     std::span<const double>(params, mlp_loss->model->dim()));
  });
}

/* ------------------------------------------------------------------ */

int mpgd_dataset_load(const char* path, size_t target_column, mpgd_dataset** out) {
  if (!path || !out) return fail_invalid("mpgd_dataset_load: null argument");
  return guarded([&] { *out = new mpgd_dataset{mpgd::ingest_csv(path, target_column)}; });
}

int mpgd_dataset_synthesize_airfoil_like(size_t n_rows, uint64_t seed,
                                         mpgd_dataset** out) {
  if (!out) return fail_invalid("mpgd_dataset_synthesize_airfoil_like: out is null");
  return guarded([&] {
    *out = new mpgd_dataset{mpgd::synthetic_airfoil_like(n_rows, seed)};
  });
}

size_t mpgd_dataset_rows(const mpgd_dataset* data) { return data ? data->data.size() : 0; }

size_t mpgd_dataset_features(const mpgd_dataset* data) {
  return data ? data->data.n_features : 0;
}

void mpgd_dataset_free(mpgd_dataset* data) { delete data; }

struct mpgd_split {
  mpgd_dataset train, test;
  double target_mean = 0.0, target_sd = 1.0;
};

int mpgd_split_standardize(const mpgd_dataset* data, size_t train_count,
                           size_t test_count, uint64_t seed, mpgd_split** out) {
  if (!data || !out) return fail_invalid("mpgd_split_standardize: null argument");
  return guarded([&] {
    mpgd::StandardizedSplit s =
        mpgd::split_standardize(data->data, train_count, test_count, seed);
    auto* split = new mpgd_split;
    split->train.data = std::move(s.train);
    split->test.data = std::move(s.test);
    split->target_mean = s.target_mean;
    split->target_sd = s.target_sd;
    *out = split;
  });
}

const mpgd_dataset* mpgd_split_train(const mpgd_split* split) {
  return split ? &split->train : nullptr;
}

const mpgd_dataset* mpgd_split_test(const mpgd_split* split) {
  return split ? &split->test : nullptr;
}

void mpgd_split_free(mpgd_split* split) { delete split; }

/* ------------------------------------------------------------------ */

void mpgd_run_config_defaults(mpgd_run_config* cfg) {
  if (!cfg) return;
  const mpgd::OptimizerConfig opt;
  cfg->method = MPGD_METHOD_MPGD;
  cfg->eta = opt.eta;
  cfg->mu = opt.mu;
  cfg->sigma = opt.sigma;
  cfg->gamma1 = opt.channel1.gamma;
  cfg->beta1 = opt.channel1.beta;
  cfg->gamma2 = opt.channel2.gamma;
  cfg->beta2 = opt.channel2.beta;
  cfg->variant = MPGD_VARIANT_HADAMARD;
  cfg->coordinate_chains = opt.coordinate_chains ? 1 : 0;
  cfg->burn_in = opt.burn_in;
  cfg->stationary_start = opt.stationary_start ? 1 : 0;
  cfg->stop_perturbation_at = opt.stop_perturbation_at;
  cfg->divergence_threshold = opt.divergence_threshold;
  cfg->steps = 1000;
  cfg->record_every = 0;
  cfg->record_trace = 0;
}

struct mpgd_run_result {
  mpgd::RunResult result;
};

namespace {

mpgd::RunConfig to_run_config(const mpgd_run_config& cfg) {
  mpgd::RunConfig rc;
  switch (cfg.method) {
    case MPGD_METHOD_GD: rc.method = mpgd::Method::gd; break;
    case MPGD_METHOD_GAUSSIAN_PGD: rc.method = mpgd::Method::gaussian_pgd; break;
    case MPGD_METHOD_MPGD: rc.method = mpgd::Method::mpgd; break;
    case MPGD_METHOD_MPGD_SYM: rc.method = mpgd::Method::mpgd_sym; break;
    default: throw std::invalid_argument("run config: unknown method");
  }
  switch (cfg.variant) {
    case MPGD_VARIANT_HADAMARD: rc.opt.variant = mpgd::PerturbationVariant::hadamard; break;
    case MPGD_VARIANT_SCALAR: rc.opt.variant = mpgd::PerturbationVariant::scalar_mult; break;
    case MPGD_VARIANT_SYMMETRIZED:
      rc.opt.variant = mpgd::PerturbationVariant::symmetrized;
      break;
    default: throw std::invalid_argument("run config: unknown variant");
  }
  rc.opt.eta = cfg.eta;
  rc.opt.mu = cfg.mu;
  rc.opt.sigma = cfg.sigma;
  rc.opt.channel1 = mpgd::ThalerParams{cfg.gamma1, cfg.beta1};
  rc.opt.channel2 = mpgd::ThalerParams{cfg.gamma2, cfg.beta2};
  rc.opt.coordinate_chains = cfg.coordinate_chains != 0;
  rc.opt.burn_in = cfg.burn_in;
  rc.opt.stationary_start = cfg.stationary_start != 0;
  rc.opt.stop_perturbation_at = cfg.stop_perturbation_at;
  rc.opt.divergence_threshold = cfg.divergence_threshold;
  rc.steps = cfg.steps;
  rc.record_every = cfg.record_every;
  rc.record_trace = cfg.record_trace != 0;
  return rc;
}

}  // namespace

int mpgd_run(const mpgd_loss* loss, const double* x0, size_t d,
             const mpgd_run_config* cfg, uint64_t seed, mpgd_run_result** out) {
  if (!loss || !x0 || !cfg || !out) return fail_invalid("mpgd_run: null argument");
  if (d != loss->model->dim()) return fail_invalid("mpgd_run: x0 length mismatch");
  return guarded([&] {
    std::vector<double> start(x0, x0 + d);
    *out = new mpgd_run_result{
        mpgd::run(*loss->model, std::move(start), to_run_config(*cfg), seed)};
  });
}

size_t mpgd_result_point_count(const mpgd_run_result* result) {
  return result ? result->result.points.size() : 0;
}

int mpgd_result_point(const mpgd_run_result* result, size_t i,
                      mpgd_trajectory_point* out) {
  if (!result || !out) return fail_invalid("mpgd_result_point: null argument");
  if (i >= result->result.points.size())
    return fail_invalid("mpgd_result_point: index out of range");
  const mpgd::TrajectoryPoint& p = result->result.points[i];
  out->step = p.step;
  out->loss = p.loss;
  out->grad_norm = p.grad_norm;
  out->hessian_trace = p.hessian_trace;
  return MPGD_OK;
}

int mpgd_result_final(const mpgd_run_result* result, double* out_x, size_t d) {
  if (!result || !out_x) return fail_invalid("mpgd_result_final: null argument");
  if (d != result->result.x_final.size())
    return fail_invalid("mpgd_result_final: length mismatch");
  std::memcpy(out_x, result->result.x_final.data(), d * sizeof(double));
  return MPGD_OK;
}

int mpgd_result_diverged(const mpgd_run_result* result) {
  return result && result->result.diverged ? 1 : 0;
}

uint64_t mpgd_result_steps_done(const mpgd_run_result* result) {
  return result ? result->result.steps_done : 0;
}

void mpgd_result_free(mpgd_run_result* result) { delete result; }

/* ------------------------------------------------------------------ */

void mpgd_order_check_config_defaults(mpgd_order_check_config* cfg) {
  if (!cfg) return;
  const mpgd::ExpansionConfig ec;
  const mpgd::OrderCheckConfig oc;
  cfg->eta = ec.eta;
  cfg->mu0 = ec.mu0;
  cfg->sigma0 = ec.sigma0;
  cfg->gamma1 = ec.channel1.gamma;
  cfg->beta1 = ec.channel1.beta;
  cfg->gamma2 = ec.channel2.gamma;
  cfg->beta2 = ec.channel2.beta;
  cfg->divergence_threshold = ec.divergence_threshold;
  cfg->epsilons = nullptr; /* null keeps the built-in grid */
  cfg->n_epsilons = 0;
  cfg->k = oc.k;
  cfg->n_reps = oc.n_reps;
  cfg->corr_chains = oc.corr_chains;
  cfg->max_lag = oc.max_lag;
  cfg->hierarchy_reps = oc.hierarchy_reps;
  cfg->mode = MPGD_PRED_FULL;
  cfg->n_threads = oc.n_threads;
}

struct mpgd_order_check_result {
  mpgd::OrderCheckResult result;
};

int mpgd_order_check(const mpgd_loss* loss, const double* x0, size_t d,
                     const mpgd_order_check_config* cfg, uint64_t seed,
                     mpgd_order_check_result** out) {
  if (!loss || !x0 || !cfg || !out) return fail_invalid("mpgd_order_check: null argument");
  if (d != loss->model->dim()) return fail_invalid("mpgd_order_check: x0 length mismatch");
  return guarded([&] {
    mpgd::ExpansionConfig ec;
    ec.eta = cfg->eta;
    ec.mu0 = cfg->mu0;
    ec.sigma0 = cfg->sigma0;
    ec.channel1 = mpgd::ThalerParams{cfg->gamma1, cfg->beta1};
    ec.channel2 = mpgd::ThalerParams{cfg->gamma2, cfg->beta2};
    ec.divergence_threshold = cfg->divergence_threshold;
    mpgd::OrderCheckConfig oc;
    if (cfg->epsilons) {
      oc.epsilons.assign(cfg->epsilons, cfg->epsilons + cfg->n_epsilons);
    }
    oc.k = cfg->k;
    oc.n_reps = cfg->n_reps;
    oc.corr_chains = cfg->corr_chains;
    oc.max_lag = cfg->max_lag;
    oc.hierarchy_reps = cfg->hierarchy_reps;
    switch (cfg->mode) {
      case MPGD_PRED_FULL: oc.mode = mpgd::PredictionMode::full; break;
      case MPGD_PRED_BASELINE_ONLY: oc.mode = mpgd::PredictionMode::baseline_only; break;
      case MPGD_PRED_HIERARCHY: oc.mode = mpgd::PredictionMode::hierarchy; break;
      default: throw std::invalid_argument("order check: unknown prediction mode");
    }
    oc.n_threads = cfg->n_threads;
    const std::vector<double> start(x0, x0 + d);
    *out = new mpgd_order_check_result{
        mpgd::order_check(*loss->model, start, ec, oc, seed)};
  });
}

size_t mpgd_order_point_count(const mpgd_order_check_result* result) {
  return result ? result->result.points.size() : 0;
}

int mpgd_order_point_at(const mpgd_order_check_result* result, size_t i,
                        mpgd_order_point* out) {
  if (!result || !out) return fail_invalid("mpgd_order_point_at: null argument");
  if (i >= result->result.points.size())
    return fail_invalid("mpgd_order_point_at: index out of range");
  const mpgd::OrderCheckPoint& p = result->result.points[i];
  out->epsilon = p.epsilon;
  out->mc_mean = p.mc;
  out->mc_se = p.mc_se;
  out->predicted = p.predicted;
  out->residual = p.residual;
  out->noise_dominated = p.noise_dominated ? 1 : 0;
  return MPGD_OK;
}

double mpgd_order_slope(const mpgd_order_check_result* result) {
  return result ? result->result.slope : 0.0;
}

size_t mpgd_order_points_used(const mpgd_order_check_result* result) {
  return result ? result->result.n_used : 0;
}

int mpgd_order_inconclusive(const mpgd_order_check_result* result) {
  return result && result->result.inconclusive ? 1 : 0;
}

void mpgd_order_result_free(mpgd_order_check_result* result) { delete result; }

/* ------------------------------------------------------------------ */

namespace {

mpgd::DriftFn make_drift(double rate) {
  return [rate](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -rate * x[i];
  };
}

mpgd::DiffusionKind to_kind(int kind) {
  switch (kind) {
    case MPGD_DIFF_ADDITIVE: return mpgd::DiffusionKind::additive_constant;
    case MPGD_DIFF_DIAGONAL: return mpgd::DiffusionKind::diagonal_linear;
    default: throw std::invalid_argument("unknown diffusion kind");
  }
}

mpgd::SDESpec to_sde_spec(const mpgd_sde_config& cfg) {
  mpgd::SDESpec spec;
  spec.drift = make_drift(cfg.drift_rate);
  spec.kind = to_kind(cfg.kind);
  spec.coefficient = cfg.coefficient;
  spec.law = mpgd::StableSpec{cfg.alpha, cfg.beta, cfg.scale};
  spec.dt = cfg.dt;
  spec.horizon = cfg.horizon;
  spec.x0 = {cfg.x0};
  return spec;
}

// time-T scale of c int_0^T exp(-rate (T-s)) dL_s for unit-scale L
double linear_convolution_scale(double rate, double alpha, double horizon) {
  if (rate == 0.0) return std::pow(horizon, 1.0 / alpha);
  return std::pow((1.0 - std::exp(-alpha * rate * horizon)) / (alpha * rate),
                  1.0 / alpha);
}

}  // namespace

int mpgd_sde_sample_endpoints(const mpgd_sde_config* cfg, size_t n, uint64_t seed,
                              double* out, size_t* out_kept, size_t* out_diverged) {
  if (!cfg || !out || !out_kept || !out_diverged)
    return fail_invalid("mpgd_sde_sample_endpoints: null argument");
  return guarded([&] {
    const mpgd::SDESpec spec = to_sde_spec(*cfg);
    size_t kept = 0, diverged = 0;
    for (size_t r = 0; r < n; ++r) {
      const mpgd::PathEndpoint e =
          mpgd::simulate_stable_sde(spec, mpgd::derive_seed(seed, 0x91, r));
      if (e.diverged) {
        ++diverged;
      } else {
        out[kept++] = e.state[0];
      }
    }
    *out_kept = kept;
    *out_diverged = diverged;
  });
}

struct mpgd_convergence_report {
  mpgd::WeakConvergenceReport report;
};

int mpgd_weak_convergence(const mpgd_fast_slow_config* fs, const uint64_t* m_list,
                          size_t n_m, const mpgd_sde_config* ref, size_t n_samples,
                          int analytic, int n_threads, uint64_t seed,
                          mpgd_convergence_report** out) {
  if (!fs || !m_list || !ref || !out)
    return fail_invalid("mpgd_weak_convergence: null argument");
  return guarded([&] {
    mpgd::FastSlowSpec base;
    base.drift = make_drift(fs->drift_rate);
    base.kind = to_kind(fs->kind);
    base.coefficient = fs->coefficient;
    base.chain = mpgd::ThalerParams{fs->gamma, fs->beta};
    base.horizon = fs->horizon;
    base.x0 = {fs->x0};

    std::function<double(double)> cdf;
    if (analytic) {
      if (ref->kind != MPGD_DIFF_ADDITIVE || ref->beta != 0.0)
        throw std::invalid_argument(
            "weak convergence: the closed-form reference needs additive "
            "symmetric noise");
      const double total = ref->coefficient * ref->scale *
          linear_convolution_scale(ref->drift_rate, ref->alpha, ref->horizon);
      const double alpha = ref->alpha;
      // the deterministic part of the linear flow decays the start point
      const double loc = ref->x0 * std::exp(-ref->drift_rate * ref->horizon);
      cdf = [alpha, total, loc](double x) {
        return mpgd::stable_cdf_symmetric(x - loc, alpha, total);
      };
    }
    const std::vector<uint64_t> ms(m_list, m_list + n_m);
    *out = new mpgd_convergence_report{mpgd::weak_convergence_report(
        base, ms, to_sde_spec(*ref), n_samples, seed, std::move(cdf), n_threads)};
  });
}

size_t mpgd_convergence_row_count(const mpgd_convergence_report* report) {
  return report ? report->report.rows.size() : 0;
}

int mpgd_convergence_row_at(const mpgd_convergence_report* report, size_t i,
                            mpgd_convergence_row* out) {
  if (!report || !out) return fail_invalid("mpgd_convergence_row_at: null argument");
  if (i >= report->report.rows.size())
    return fail_invalid("mpgd_convergence_row_at: index out of range");
  const mpgd::ConvergenceRow& row = report->report.rows[i];
  out->m = row.m;
  out->ks = row.ks;
  out->n_effective = row.n_effective;
  out->divergence_count = row.divergence_count;
  return MPGD_OK;
}

double mpgd_convergence_largest_m_ks(const mpgd_convergence_report* report) {
  return report ? report->report.largest_m_ks : 0.0;
}

int mpgd_convergence_has_trend(const mpgd_convergence_report* report) {
  return report && report->report.has_trend ? 1 : 0;
}

double mpgd_convergence_spearman(const mpgd_convergence_report* report) {
  return report ? report->report.spearman : 0.0;
}

size_t mpgd_convergence_ref_effective(const mpgd_convergence_report* report) {
  return report ? report->report.ref_n_effective : 0;
}

size_t mpgd_convergence_ref_divergences(const mpgd_convergence_report* report) {
  return report ? report->report.ref_divergence_count : 0;
}

void mpgd_convergence_report_free(mpgd_convergence_report* report) { delete report; }

} /* extern "C" */
