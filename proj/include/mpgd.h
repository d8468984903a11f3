#ifndef MPGD_H
#define MPGD_H

/* C interface to the mpgd shared library.  Every object is an opaque
 * handle created by a *_new call and released by the matching *_free;
 * every fallible call returns a status code and writes results through
 * out-pointers.  On failure the out-pointers are left untouched and
 * mpgd_last_error() carries a message for the calling thread. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define MPGD_OK 0
#define MPGD_ERR_INVALID 1 /* rejected argument or configuration */
#define MPGD_ERR_RUNTIME 2 /* numerical or internal failure */

const char* mpgd_last_error(void);
const char* mpgd_version(void);

/* ------------------------------------------------------------------ */
/* chain observable streams                                            */

typedef struct mpgd_chain mpgd_chain;

/* stationary_start nonzero draws the initial state exactly from the
 * invariant law and skips the burn-in */
int mpgd_chain_new(double gamma, double beta, uint64_t seed, uint64_t burn_in,
                   int stationary_start, mpgd_chain** out);
int mpgd_chain_next(mpgd_chain* chain, double* out_value);
int mpgd_chain_state(const mpgd_chain* chain, double* out_y);
void mpgd_chain_free(mpgd_chain* chain);

typedef struct {
  double gamma;
  double alpha;
  double y_star;
  double d_alpha;
  double v_low;
  double v_high;
} mpgd_observable_constants;

int mpgd_get_observable_constants(double gamma, mpgd_observable_constants* out);

/* n scaled sums k^(-gamma) (v0 + ... + v_{k-1}) over independent chains */
int mpgd_birkhoff_sample(double gamma, double beta, uint64_t k, uint64_t burn_in,
                         int stationary_start, size_t n, uint64_t seed, double* out);

/* ------------------------------------------------------------------ */
/* stable laws                                                         */

int mpgd_stable_sample(double alpha, double beta, double scale, uint64_t seed,
                       size_t n, double* out);
int mpgd_stable_cdf_symmetric(double x, double alpha, double scale, double* out);
/* sup over the t grid on [-2, 2] of |empirical cf - target cf| */
int mpgd_ecf_distance(const double* xs, size_t n, double alpha, double beta,
                      double scale, double* out);

#define MPGD_TAIL_ABSOLUTE 0
#define MPGD_TAIL_POSITIVE 1
#define MPGD_TAIL_NEGATIVE 2

int mpgd_hill_estimator(const double* xs, size_t n, double tail_fraction,
                        int tail_side, double* out);
int mpgd_ks_two_sample(const double* a, size_t na, const double* b, size_t nb,
                       double* out);

/* ------------------------------------------------------------------ */
/* loss models                                                         */

typedef struct mpgd_loss mpgd_loss;
typedef struct mpgd_dataset mpgd_dataset;

int mpgd_loss_quadratic_new(const double* a_row_major, size_t d, mpgd_loss** out);
int mpgd_loss_widening_valley_new(size_t d_u, mpgd_loss** out);
/* mean squared error of a one-hidden-layer ReLU net over the given data;
 * the dataset is copied into the loss */
int mpgd_loss_mlp_new(const mpgd_dataset* train, size_t width, mpgd_loss** out);
size_t mpgd_loss_dim(const mpgd_loss* loss);
int mpgd_loss_value(const mpgd_loss* loss, const double* x, double* out);
int mpgd_loss_hessian_trace(const mpgd_loss* loss, const double* x, double* out);
void mpgd_loss_free(mpgd_loss* loss);

/* layer-scaled uniform initialization; out_params must hold mpgd_loss_dim values */
int mpgd_mlp_init_params(const mpgd_loss* mlp_loss, uint64_t seed, double* out_params);
/* root mean squared error of the net over an arbitrary compatible dataset */
int mpgd_mlp_rmse(const mpgd_loss* mlp_loss, const mpgd_dataset* eval,
                  const double* params, double* out);

/* ------------------------------------------------------------------ */
/* datasets                                                            */

int mpgd_dataset_load(const char* path, size_t target_column, mpgd_dataset** out);
/* generated five-feature regression table shaped like an airfoil
 * self-noise set; synthetic data, not measurements */
int mpgd_dataset_synthesize_airfoil_like(size_t n_rows, uint64_t seed,
                                         mpgd_dataset** out);
size_t mpgd_dataset_rows(const mpgd_dataset* data);
size_t mpgd_dataset_features(const mpgd_dataset* data);
void mpgd_dataset_free(mpgd_dataset* data);

typedef struct mpgd_split mpgd_split;

/* shuffled train/test split standardized by training-set statistics */
int mpgd_split_standardize(const mpgd_dataset* data, size_t train_count,
                           size_t test_count, uint64_t seed, mpgd_split** out);
/* borrowed views owned by the split; do not free */
const mpgd_dataset* mpgd_split_train(const mpgd_split* split);
const mpgd_dataset* mpgd_split_test(const mpgd_split* split);
void mpgd_split_free(mpgd_split* split);

/* ------------------------------------------------------------------ */
/* optimizer runs                                                      */

#define MPGD_METHOD_GD 0
#define MPGD_METHOD_GAUSSIAN_PGD 1
#define MPGD_METHOD_MPGD 2
#define MPGD_METHOD_MPGD_SYM 3

#define MPGD_VARIANT_HADAMARD 0
#define MPGD_VARIANT_SCALAR 1
#define MPGD_VARIANT_SYMMETRIZED 2

typedef struct {
  int method;
  double eta;
  double mu;    /* multiplicative level, applied as mu * eta^gamma1 */
  double sigma; /* additive level, applied as sigma * eta^gamma2 */
  double gamma1, beta1;
  double gamma2, beta2;
  int variant;
  int coordinate_chains;
  uint64_t burn_in;
  int stationary_start;
  uint64_t stop_perturbation_at; /* 0 = never stop */
  double divergence_threshold;
  uint64_t steps;
  uint64_t record_every; /* 0 records only the initial and final points */
  int record_trace;      /* Hessian trace at recorded steps (needs curvature) */
} mpgd_run_config;

void mpgd_run_config_defaults(mpgd_run_config* cfg);

typedef struct mpgd_run_result mpgd_run_result;

typedef struct {
  uint64_t step;
  double loss;
  double grad_norm;
  double hessian_trace;
} mpgd_trajectory_point;

int mpgd_run(const mpgd_loss* loss, const double* x0, size_t d,
             const mpgd_run_config* cfg, uint64_t seed, mpgd_run_result** out);
size_t mpgd_result_point_count(const mpgd_run_result* result);
int mpgd_result_point(const mpgd_run_result* result, size_t i,
                      mpgd_trajectory_point* out);
int mpgd_result_final(const mpgd_run_result* result, double* out_x, size_t d);
int mpgd_result_diverged(const mpgd_run_result* result);
uint64_t mpgd_result_steps_done(const mpgd_run_result* result);
void mpgd_result_free(mpgd_run_result* result);

/* ------------------------------------------------------------------ */
/* expected-loss expansion order check                                 */

#define MPGD_PRED_FULL 0          /* second-order prediction */
#define MPGD_PRED_BASELINE_ONLY 1 /* unperturbed loss only (negative control) */
#define MPGD_PRED_HIERARCHY 2     /* simulated fluctuation moments */

typedef struct {
  double eta;
  double mu0, sigma0; /* perturbation levels are eps*mu0 and eps*sigma0 */
  double gamma1, beta1;
  double gamma2, beta2;
  double divergence_threshold;
  const double* epsilons;
  size_t n_epsilons;
  uint64_t k;
  size_t n_reps;
  size_t corr_chains;
  size_t max_lag;
  size_t hierarchy_reps;
  int mode;
  int n_threads;
} mpgd_order_check_config;

void mpgd_order_check_config_defaults(mpgd_order_check_config* cfg);

typedef struct mpgd_order_check_result mpgd_order_check_result;

typedef struct {
  double epsilon;
  double mc_mean;
  double mc_se;
  double predicted;
  double residual;
  int noise_dominated;
} mpgd_order_point;

int mpgd_order_check(const mpgd_loss* loss, const double* x0, size_t d,
                     const mpgd_order_check_config* cfg, uint64_t seed,
                     mpgd_order_check_result** out);
size_t mpgd_order_point_count(const mpgd_order_check_result* result);
int mpgd_order_point_at(const mpgd_order_check_result* result, size_t i,
                        mpgd_order_point* out);
double mpgd_order_slope(const mpgd_order_check_result* result);
size_t mpgd_order_points_used(const mpgd_order_check_result* result);
int mpgd_order_inconclusive(const mpgd_order_check_result* result);
void mpgd_order_result_free(mpgd_order_check_result* result);

/* ------------------------------------------------------------------ */
/* fast-slow systems and their stable-driven limit                     */

#define MPGD_DIFF_ADDITIVE 0 /* b = c I */
#define MPGD_DIFF_DIAGONAL 1 /* b(x) = c diag(x), jumps via the exact flow */

typedef struct {
  double drift_rate; /* a(x) = -drift_rate * x */
  int kind;
  double coefficient;
  double gamma, beta; /* chain parameters */
  double horizon;
  double x0;
} mpgd_fast_slow_config;

typedef struct {
  double drift_rate;
  int kind;
  double coefficient;
  double alpha, beta, scale; /* driving stable law */
  double dt;
  double horizon;
  double x0;
} mpgd_sde_config;

/* n endpoint draws, diverged runs skipped and counted; out receives the
 * kept endpoints and *out_kept their number */
int mpgd_sde_sample_endpoints(const mpgd_sde_config* cfg, size_t n, uint64_t seed,
                              double* out, size_t* out_kept, size_t* out_diverged);

typedef struct mpgd_convergence_report mpgd_convergence_report;

typedef struct {
  uint64_t m;
  double ks;
  size_t n_effective;
  size_t divergence_count;
} mpgd_convergence_row;

/* analytic nonzero compares against the closed-form marginal of the linear
 * equation (additive symmetric noise only) instead of simulated reference
 * runs; m_list must be strictly increasing and n_samples at least 1000 */
int mpgd_weak_convergence(const mpgd_fast_slow_config* fs, const uint64_t* m_list,
                          size_t n_m, const mpgd_sde_config* ref, size_t n_samples,
                          int analytic, int n_threads, uint64_t seed,
                          mpgd_convergence_report** out);
size_t mpgd_convergence_row_count(const mpgd_convergence_report* report);
int mpgd_convergence_row_at(const mpgd_convergence_report* report, size_t i,
                            mpgd_convergence_row* out);
double mpgd_convergence_largest_m_ks(const mpgd_convergence_report* report);
int mpgd_convergence_has_trend(const mpgd_convergence_report* report);
double mpgd_convergence_spearman(const mpgd_convergence_report* report);
size_t mpgd_convergence_ref_effective(const mpgd_convergence_report* report);
size_t mpgd_convergence_ref_divergences(const mpgd_convergence_report* report);
void mpgd_convergence_report_free(mpgd_convergence_report* report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MPGD_H */
