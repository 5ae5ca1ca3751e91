/* C interface to the mixture-sampling engine.
 *
 * Every entry point reports failure through an integer status code and leaves
 * a human-readable message in a thread-local buffer readable via
 * pym_last_error(). Handles returned by *_run functions own their memory and
 * must be released with the matching *_free.
 */
#ifndef PYMIX_H
#define PYMIX_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  PYM_OK = 0,
  PYM_ERR_USAGE = 1,     /* invalid configuration or argument */
  PYM_ERR_DATA = 2,      /* unusable input data */
  PYM_ERR_NUMERICAL = 3  /* numerical failure during the run */
};

const char* pym_version(void);

/* Message describing the most recent failure on this thread; empty string if
 * none. The pointer stays valid until the next failing call on the thread. */
const char* pym_last_error(void);

typedef struct pym_config {
  /* "ics" | "marginal" | "slice-dep" | "slice-indep" | "gmddp-ics" */
  const char* algorithm;
  double sigma;            /* discount in [0,1); ignored by gmddp-ics */
  double theta;            /* strength > -sigma (gmddp: total mass > 0) */
  double z;                /* gmddp idiosyncratic share, in (0,1) */
  int m;                   /* auxiliary sample size */
  long iterations;
  long burnin;
  uint64_t seed;
  uint64_t stream_id;
  int threads;             /* conditional sampler only */
  long jump_cap;           /* slice variants: per-iteration stick budget */
  int literal_deviance;    /* 0: -2 sum log f_i; 1: -2 sum f_i */
  /* univariate normal-inverse-gamma base */
  double base_m0, base_k0, base_a0, base_b0;
  /* bivariate normal-inverse-Wishart base: location (base_m0, base_m0),
   * precision scale base_k0, degrees of freedom base_nu0, scale matrix
   * base_s0 * identity */
  double base_nu0, base_s0;
} pym_config;

/* Fill cfg with the documented defaults (ics, sigma 0, theta 1, z 0.5, m 10,
 * 1500 iterations / 500 burn-in, seed 42, 1 thread, jump cap 100000, log
 * deviance, base (0, 0.2, 2, 1), nu0 4, s0 1). */
void pym_config_default(pym_config* cfg);

typedef struct pym_fit pym_fit;

/* Run one chain.
 *   data:   row-major n x dim, dim 1 or 2
 *   group:  length-n group labels, required for gmddp-ics, else NULL
 *   grid:   row-major grid_n x dim evaluation grid (grid_n may be 0)
 * Returns NULL on failure with *err set. */
pym_fit* pym_fit_run(const pym_config* cfg, const double* data, int n, int dim,
                     const int* group, const double* grid, int grid_n,
                     int* err);
void pym_fit_free(pym_fit* fit);

int pym_fit_retained(const pym_fit* fit);
int pym_fit_groups(const pym_fit* fit);       /* 1 unless gmddp */
int pym_fit_grid_size(const pym_fit* fit);
const int* pym_fit_k_trace(const pym_fit* fit);
const double* pym_fit_deviance_trace(const pym_fit* fit);
const double* pym_fit_seconds_trace(const pym_fit* fit);
long pym_fit_cap_hits(const pym_fit* fit);    /* slice variants, else 0 */
double pym_fit_mh_acceptance(const pym_fit* fit);  /* NaN unless gmddp */
/* Pointwise posterior mean and (1 +/- band_level)/2 quantiles of the density
 * realizations for one group; each output buffer holds grid_size values. */
int pym_fit_density_summary(const pym_fit* fit, int group, double band_level,
                            double* mean, double* lower, double* upper);

/* Effective sample size of a scalar trace; NaN on failure with *err set. */
double pym_ess(const double* trace, int len, int* err);

typedef struct pym_trunc pym_trunc;

/* Monte-Carlo truncation study: reps draws of the stick count M_n (clamped at
 * cap) and, when sigma > 0, of the asymptotic proxy L_n, plus exceedance
 * estimates at the given ascending thresholds. */
pym_trunc* pym_trunc_run(double sigma, double theta, int n, int reps,
                         const uint64_t* thresholds, int n_thresholds,
                         uint64_t cap, uint64_t seed, int* err);
void pym_trunc_free(pym_trunc* t);

int pym_trunc_reps(const pym_trunc* t);
const double* pym_trunc_mn_draws(const pym_trunc* t);
const uint8_t* pym_trunc_mn_capped(const pym_trunc* t);
int pym_trunc_has_ln(const pym_trunc* t);
const double* pym_trunc_ln_draws(const pym_trunc* t);
int pym_trunc_thresholds(const pym_trunc* t);
uint64_t pym_trunc_threshold(const pym_trunc* t, int i);
/* NaN where the threshold exceeds the cap (via_proxy is set there). */
double pym_trunc_mn_exceedance(const pym_trunc* t, int i);
double pym_trunc_ln_exceedance(const pym_trunc* t, int i);
int pym_trunc_via_proxy(const pym_trunc* t, int i);

/* Closed-form E[L_n]; defined only for sigma in (0, 1/2). */
double pym_expected_ln(int n, double sigma, double theta, int* err);

/* Draw n points from 0.75 N(-2.5,1) + 0.25 N(2.5,1) into out. */
int pym_synthetic_two_gaussian(uint64_t seed, int n, double* out);

#ifdef __cplusplus
}
#endif

#endif
