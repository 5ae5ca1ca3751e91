#include "pymix.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include "pymix/diagnostics.hpp"
#include "pymix/gmddp.hpp"
#include "pymix/model.hpp"
#include "pymix/samplers.hpp"
#include "pymix/truncation.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

int fail(int* err, int code, const std::string& msg) {
  set_error(msg);
  if (err) *err = code;
  return code;
}

// invalid_argument comes from precondition checks, domain_error from
// numerical domain violations; anything else is treated as numerical.
int code_for(const std::exception& e) {
  if (dynamic_cast<const std::invalid_argument*>(&e)) return PYM_ERR_USAGE;
  return PYM_ERR_NUMERICAL;
}

}  // namespace

struct pym_fit {
  int retained = 0;
  int groups = 1;
  int grid_n = 0;
  std::vector<int> k;
  std::vector<double> deviance;
  std::vector<double> seconds;
  long cap_hits = 0;
  double mh_acceptance = std::numeric_limits<double>::quiet_NaN();
  // group x retained iteration x grid point
  std::vector<std::vector<std::vector<double>>> density;
};

struct pym_trunc {
  pymix::TruncationReport report;
  std::vector<uint8_t> capped;
};

namespace {

using pymix::Algorithm;

bool parse_algorithm(const char* s, Algorithm& out, bool& gmddp) {
  if (!s) return false;
  const std::string a(s);
  gmddp = false;
  if (a == "ics") out = Algorithm::kIcs;
  else if (a == "marginal") out = Algorithm::kMarginal;
  else if (a == "slice-dep") out = Algorithm::kSliceDependent;
  else if (a == "slice-indep") out = Algorithm::kSliceIndependent;
  else if (a == "gmddp-ics") gmddp = true;
  else return false;
  return true;
}

pymix::ChainConfig chain_config(const pym_config& cfg, Algorithm alg) {
  pymix::ChainConfig c;
  c.algorithm = alg;
  c.params = {cfg.sigma, cfg.theta};
  c.m = cfg.m;
  c.iterations = cfg.iterations;
  c.burnin = cfg.burnin;
  c.seed = cfg.seed;
  c.stream_id = cfg.stream_id;
  c.threads = cfg.threads;
  c.jump_cap = cfg.jump_cap;
  c.deviance_mode = cfg.literal_deviance ? pymix::DevianceMode::kLiteral
                                         : pymix::DevianceMode::kLog;
  return c;
}

template <class Model>
pym_fit* fit_single(const Model& model, const pym_config& cfg, Algorithm alg,
                    const std::vector<typename Model::Obs>& data,
                    const std::vector<typename Model::Obs>& grid) {
  auto trace = pymix::run_chain(model, chain_config(cfg, alg), data, grid);
  auto* fit = new pym_fit;
  fit->retained = static_cast<int>(trace.k.size());
  fit->grid_n = static_cast<int>(grid.size());
  fit->k = std::move(trace.k);
  fit->deviance = std::move(trace.deviance);
  fit->seconds = std::move(trace.seconds);
  for (char c : trace.cap_hit) fit->cap_hits += c;
  fit->density.push_back(std::move(trace.density));
  return fit;
}

template <class Model>
pym_fit* fit_gmddp(const Model& model, const pym_config& cfg,
                   const std::vector<typename Model::Obs>& data,
                   const int* group, int n,
                   const std::vector<typename Model::Obs>& grid) {
  if (!group)
    throw std::invalid_argument("gmddp-ics requires a group label per row");
  std::map<int, int> index;  // raw label -> dense 0-based group
  for (int i = 0; i < n; ++i) index.emplace(group[i], 0);
  int next = 0;
  for (auto& kv : index) kv.second = next++;
  if (next < 2)
    throw std::invalid_argument("gmddp-ics needs at least 2 distinct groups");

  std::vector<std::vector<typename Model::Obs>> grouped(next);
  for (int i = 0; i < n; ++i) grouped[index.at(group[i])].push_back(data[i]);

  pymix::GMDDPParams params{cfg.theta, cfg.z, next};
  auto trace = pymix::run_gmddp_chain(
      model, params, chain_config(cfg, Algorithm::kIcs), grouped, grid);
  auto* fit = new pym_fit;
  fit->retained = static_cast<int>(trace.k_total.size());
  fit->groups = next;
  fit->grid_n = static_cast<int>(grid.size());
  fit->k = std::move(trace.k_total);
  fit->deviance = std::move(trace.deviance);
  fit->seconds = std::move(trace.seconds);
  fit->mh_acceptance = trace.mh_acceptance;
  fit->density = std::move(trace.density);
  return fit;
}

}  // namespace

extern "C" {

const char* pym_version(void) { return "0.1.0"; }

const char* pym_last_error(void) { return g_last_error.c_str(); }

void pym_config_default(pym_config* cfg) {
  if (!cfg) return;
  std::memset(cfg, 0, sizeof(*cfg));
  cfg->algorithm = "ics";
  cfg->sigma = 0.0;
  cfg->theta = 1.0;
  cfg->z = 0.5;
  cfg->m = 10;
  cfg->iterations = 1500;
  cfg->burnin = 500;
  cfg->seed = 42;
  cfg->stream_id = 0;
  cfg->threads = 1;
  cfg->jump_cap = 100000;
  cfg->literal_deviance = 0;
  cfg->base_m0 = 0.0;
  cfg->base_k0 = 0.2;
  cfg->base_a0 = 2.0;
  cfg->base_b0 = 1.0;
  cfg->base_nu0 = 4.0;
  cfg->base_s0 = 1.0;
}

pym_fit* pym_fit_run(const pym_config* cfg, const double* data, int n, int dim,
                     const int* group, const double* grid, int grid_n,
                     int* err) {
  if (err) *err = PYM_OK;
  if (!cfg || !data) {
    fail(err, PYM_ERR_USAGE, "pym_fit_run: null config or data");
    return nullptr;
  }
  if (n < 1) {
    fail(err, PYM_ERR_DATA, "pym_fit_run: need at least one observation");
    return nullptr;
  }
  if (dim != 1 && dim != 2) {
    fail(err, PYM_ERR_DATA, "pym_fit_run: dim must be 1 or 2");
    return nullptr;
  }
  if (grid_n > 0 && !grid) {
    fail(err, PYM_ERR_USAGE, "pym_fit_run: grid_n > 0 with null grid");
    return nullptr;
  }
  Algorithm alg = Algorithm::kIcs;
  bool gmddp = false;
  if (!parse_algorithm(cfg->algorithm, alg, gmddp)) {
    fail(err, PYM_ERR_USAGE,
         std::string("pym_fit_run: unknown algorithm '") +
             (cfg->algorithm ? cfg->algorithm : "(null)") + "'");
    return nullptr;
  }
  for (int i = 0; i < n * dim; ++i)
    if (!std::isfinite(data[i])) {
      fail(err, PYM_ERR_DATA,
           "pym_fit_run: non-finite value at row " + std::to_string(i / dim + 1));
      return nullptr;
    }

  try {
    if (dim == 1) {
      pymix::UniNormalModel model(
          {cfg->base_m0, cfg->base_k0, cfg->base_a0, cfg->base_b0});
      std::vector<double> xs(data, data + n);
      std::vector<double> gs(grid, grid + grid_n);
      return gmddp ? fit_gmddp(model, *cfg, xs, group, n, gs)
                   : fit_single(model, *cfg, alg, xs, gs);
    }
    pymix::NIWBase base;
    base.m0 = Eigen::VectorXd::Constant(2, cfg->base_m0);
    base.k0 = cfg->base_k0;
    base.nu0 = cfg->base_nu0;
    base.S0 = cfg->base_s0 * Eigen::MatrixXd::Identity(2, 2);
    pymix::MvNormalModel model(base);
    std::vector<Eigen::VectorXd> xs(n), gs(grid_n);
    for (int i = 0; i < n; ++i)
      xs[i] = Eigen::Vector2d(data[2 * i], data[2 * i + 1]);
    for (int g = 0; g < grid_n; ++g)
      gs[g] = Eigen::Vector2d(grid[2 * g], grid[2 * g + 1]);
    return gmddp ? fit_gmddp(model, *cfg, xs, group, n, gs)
                 : fit_single(model, *cfg, alg, xs, gs);
  } catch (const std::exception& e) {
    fail(err, code_for(e), e.what());
    return nullptr;
  }
}

void pym_fit_free(pym_fit* fit) { delete fit; }

int pym_fit_retained(const pym_fit* fit) { return fit ? fit->retained : 0; }
int pym_fit_groups(const pym_fit* fit) { return fit ? fit->groups : 0; }
int pym_fit_grid_size(const pym_fit* fit) { return fit ? fit->grid_n : 0; }
const int* pym_fit_k_trace(const pym_fit* fit) {
  return fit ? fit->k.data() : nullptr;
}
const double* pym_fit_deviance_trace(const pym_fit* fit) {
  return fit ? fit->deviance.data() : nullptr;
}
const double* pym_fit_seconds_trace(const pym_fit* fit) {
  return fit ? fit->seconds.data() : nullptr;
}
long pym_fit_cap_hits(const pym_fit* fit) { return fit ? fit->cap_hits : 0; }
double pym_fit_mh_acceptance(const pym_fit* fit) {
  return fit ? fit->mh_acceptance : std::numeric_limits<double>::quiet_NaN();
}

int pym_fit_density_summary(const pym_fit* fit, int group, double band_level,
                            double* mean, double* lower, double* upper) {
  if (!fit || !mean || !lower || !upper)
    return fail(nullptr, PYM_ERR_USAGE, "density_summary: null argument");
  if (group < 0 || group >= fit->groups)
    return fail(nullptr, PYM_ERR_USAGE, "density_summary: group out of range");
  if (fit->grid_n == 0)
    return fail(nullptr, PYM_ERR_USAGE,
                "density_summary: the fit was run without a grid");
  try {
    auto s = pymix::density_summary(fit->density[group], band_level);
    std::copy(s.mean.begin(), s.mean.end(), mean);
    std::copy(s.lower.begin(), s.lower.end(), lower);
    std::copy(s.upper.begin(), s.upper.end(), upper);
    return PYM_OK;
  } catch (const std::exception& e) {
    return fail(nullptr, code_for(e), e.what());
  }
}

double pym_ess(const double* trace, int len, int* err) {
  if (err) *err = PYM_OK;
  if (!trace || len < 1) {
    fail(err, PYM_ERR_USAGE, "pym_ess: null or empty trace");
    return std::numeric_limits<double>::quiet_NaN();
  }
  try {
    return pymix::ess(std::span<const double>(trace, static_cast<std::size_t>(len)));
  } catch (const std::exception& e) {
    fail(err, code_for(e), e.what());
    return std::numeric_limits<double>::quiet_NaN();
  }
}

pym_trunc* pym_trunc_run(double sigma, double theta, int n, int reps,
                         const uint64_t* thresholds, int n_thresholds,
                         uint64_t cap, uint64_t seed, int* err) {
  if (err) *err = PYM_OK;
  if (n_thresholds > 0 && !thresholds) {
    fail(err, PYM_ERR_USAGE, "pym_trunc_run: null thresholds");
    return nullptr;
  }
  try {
    pymix::RngStream rng(seed);
    std::vector<uint64_t> thr(thresholds, thresholds + n_thresholds);
    auto* t = new pym_trunc;
    t->report = pymix::exceedance_table(rng, n, {sigma, theta}, thr, reps, cap);
    t->capped.reserve(t->report.mn_capped.size());
    for (bool b : t->report.mn_capped) t->capped.push_back(b ? 1 : 0);
    return t;
  } catch (const std::exception& e) {
    fail(err, code_for(e), e.what());
    return nullptr;
  }
}

void pym_trunc_free(pym_trunc* t) { delete t; }

int pym_trunc_reps(const pym_trunc* t) {
  return t ? static_cast<int>(t->report.mn_draws.size()) : 0;
}
const double* pym_trunc_mn_draws(const pym_trunc* t) {
  return t ? t->report.mn_draws.data() : nullptr;
}
const uint8_t* pym_trunc_mn_capped(const pym_trunc* t) {
  return t ? t->capped.data() : nullptr;
}
int pym_trunc_has_ln(const pym_trunc* t) {
  return t && !t->report.ln_draws.empty() ? 1 : 0;
}
const double* pym_trunc_ln_draws(const pym_trunc* t) {
  return t ? t->report.ln_draws.data() : nullptr;
}
int pym_trunc_thresholds(const pym_trunc* t) {
  return t ? static_cast<int>(t->report.thresholds.size()) : 0;
}
uint64_t pym_trunc_threshold(const pym_trunc* t, int i) {
  return t ? t->report.thresholds.at(i) : 0;
}
double pym_trunc_mn_exceedance(const pym_trunc* t, int i) {
  return t ? t->report.mn_exceedance.at(i)
           : std::numeric_limits<double>::quiet_NaN();
}
double pym_trunc_ln_exceedance(const pym_trunc* t, int i) {
  return t ? t->report.ln_exceedance.at(i)
           : std::numeric_limits<double>::quiet_NaN();
}
int pym_trunc_via_proxy(const pym_trunc* t, int i) {
  return t ? (t->report.via_proxy.at(i) ? 1 : 0) : 0;
}

double pym_expected_ln(int n, double sigma, double theta, int* err) {
  if (err) *err = PYM_OK;
  try {
    return pymix::expected_Ln(n, {sigma, theta});
  } catch (const std::exception& e) {
    fail(err, code_for(e), e.what());
    return std::numeric_limits<double>::quiet_NaN();
  }
}

int pym_synthetic_two_gaussian(uint64_t seed, int n, double* out) {
  if (!out || n < 1)
    return fail(nullptr, PYM_ERR_USAGE, "synthetic: null output or n < 1");
  pymix::RngStream rng(seed, 0x5d47a1);
  for (int i = 0; i < n; ++i)
    out[i] = rng.uniform() < 0.75 ? -2.5 + rng.normal() : 2.5 + rng.normal();
  return PYM_OK;
}

}  // extern "C"
