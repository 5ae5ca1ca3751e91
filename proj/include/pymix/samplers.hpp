#ifndef PYMIX_SAMPLERS_HPP
#define PYMIX_SAMPLERS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pymix/diagnostics.hpp"
#include "pymix/pyprocess.hpp"
#include "pymix/rng.hpp"

namespace pymix {

// Substream index spaces within one iteration: per-observation streams use the
// raw observation index, sequential per-iteration draws and the acceleration
// step are keyed above 2^32.
inline constexpr std::uint64_t kStepStreamKey = 1ULL << 33;
inline constexpr std::uint64_t kAccelStreamBase = 1ULL << 32;

inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t t = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += t) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

template <class Model>
struct AllocationState {
  std::vector<int> labels;                   // per observation, 0-based
  std::vector<typename Model::Atom> atoms;   // per cluster
  std::vector<int> counts;

  int k() const { return static_cast<int>(atoms.size()); }

  // Slice states keep empty intermediate sticks, so those pass
  // allow_empty = true; urn-based states must have no empty cluster.
  void check(std::size_t n, bool allow_empty = false) const {
    if (labels.size() != n) throw std::logic_error("state: label count mismatch");
    if (atoms.size() != counts.size())
      throw std::logic_error("state: atom/count mismatch");
    std::vector<int> recount(counts.size(), 0);
    for (int c : labels) {
      if (c < 0 || c >= k()) throw std::logic_error("state: dangling label");
      ++recount[c];
    }
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (recount[j] != counts[j] || (!allow_empty && counts[j] < 1))
        throw std::logic_error("state: empty cluster or stale counts");
  }

  int occupied() const {
    int occ = 0;
    for (int c : counts)
      if (c > 0) ++occ;
    return occ;
  }
};

template <class Model>
AllocationState<Model> init_single_cluster(
    const Model& model, RngStream& rng,
    std::span<const typename Model::Obs> data) {
  if (data.empty()) throw std::invalid_argument("init: empty data");
  AllocationState<Model> st;
  st.labels.assign(data.size(), 0);
  st.counts.assign(1, static_cast<int>(data.size()));
  st.atoms.push_back(model.posterior_draw(rng, data));
  return st;
}

// Conjugate refresh of every cluster atom given its members.
template <class Model>
void accelerate(const Model& model, const RngStream& base, std::uint64_t iter,
                AllocationState<Model>& state,
                std::span<const typename Model::Obs> data) {
  std::vector<std::vector<typename Model::Obs>> members(state.atoms.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    members[state.labels[i]].push_back(data[i]);
  for (std::size_t j = 0; j < state.atoms.size(); ++j) {
    auto rng = base.substream(iter, kAccelStreamBase + j);
    state.atoms[j] = model.posterior_draw(rng, members[j]);
  }
}

// Finite summary (s, t, p) of the mixing measure used by one ICS iteration.
template <class Model>
struct MeasureSummary {
  double p0 = 1.0;
  std::vector<double> fixed_weights;             // p_j
  std::vector<typename Model::Atom> fixed_atoms; // t_j
  std::vector<double> aux_weights;               // m_l / m
  std::vector<typename Model::Atom> aux_atoms;   // s_l

  double density(const Model& model, const typename Model::Obs& x) const {
    double f = 0.0;
    for (std::size_t l = 0; l < aux_atoms.size(); ++l)
      f += p0 * aux_weights[l] * model.kernel(x, aux_atoms[l]);
    for (std::size_t j = 0; j < fixed_atoms.size(); ++j)
      f += fixed_weights[j] * model.kernel(x, fixed_atoms[j]);
    return f;
  }
};

// One importance conditional sampling iteration. Steps, in order: freeze the
// summary (t, p, s), reallocate every observation independently from the
// categorical over auxiliary and fixed atoms, then refresh surviving atoms
// from their conjugate full conditionals. The reallocation loop is
// deterministic in the substream scheme, so the result does not depend on the
// thread count.
template <class Model>
MeasureSummary<Model> ics_step(const Model& model, const RngStream& base,
                               std::uint64_t iter, AllocationState<Model>& state,
                               std::span<const typename Model::Obs> data,
                               const PYParams& params, int m, int threads = 1) {
  params.validate();
  if (m < 1) throw std::invalid_argument("ics_step: m must be >= 1");
  const std::size_t n = data.size();
  auto step_rng = base.substream(iter, kStepStreamKey);

  MeasureSummary<Model> summary;
  summary.fixed_atoms = state.atoms;
  auto p = posterior_weights_draw(step_rng, state.counts, params);
  summary.p0 = p[0];
  summary.fixed_weights.assign(p.begin() + 1, p.end());

  const UrnSample aux = auxiliary_sample(step_rng, m, state.k(), params);
  const std::size_t r_m = aux.multiplicities.size();
  summary.aux_weights.resize(r_m);
  summary.aux_atoms.reserve(r_m);
  for (std::size_t l = 0; l < r_m; ++l) {
    summary.aux_weights[l] = static_cast<double>(aux.multiplicities[l]) / m;
    summary.aux_atoms.push_back(model.prior_draw(step_rng));
  }
  const std::size_t k = summary.fixed_atoms.size();

  // choice < r_m: auxiliary atom, else fixed atom (choice - r_m)
  std::vector<int> choice(n);
  parallel_for(n, threads, [&](std::size_t i) {
    auto rng = base.substream(iter, i);
    std::vector<double> logw(r_m + k);
    for (std::size_t l = 0; l < r_m; ++l)
      logw[l] = std::log(summary.p0) + std::log(summary.aux_weights[l]) +
                model.log_kernel(data[i], summary.aux_atoms[l]);
    for (std::size_t j = 0; j < k; ++j)
      logw[r_m + j] = std::log(summary.fixed_weights[j]) +
                      model.log_kernel(data[i], summary.fixed_atoms[j]);
    choice[i] = static_cast<int>(categorical_draw_log(rng, logw));
  });

  // compact to clusters in order of first appearance
  std::vector<int> remap(r_m + k, -1);
  AllocationState<Model> next;
  next.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = choice[i];
    if (remap[c] < 0) {
      remap[c] = next.k();
      next.atoms.push_back(c < static_cast<int>(r_m)
                               ? summary.aux_atoms[c]
                               : summary.fixed_atoms[c - r_m]);
      next.counts.push_back(0);
    }
    next.labels[i] = remap[c];
    ++next.counts[remap[c]];
  }
  state = std::move(next);
  accelerate(model, base, iter, state, data);
  return summary;
}

// One sweep of the marginal (urn-based) sampler: sequential reallocation with
// weights (n_j - sigma) K and (theta + sigma k) * prior predictive, then the
// conjugate acceleration step.
template <class Model>
void marginal_step(const Model& model, const RngStream& base, std::uint64_t iter,
                   AllocationState<Model>& state,
                   std::span<const typename Model::Obs> data,
                   const PYParams& params) {
  params.validate();
  auto rng = base.substream(iter, kStepStreamKey);
  const std::size_t n = data.size();
  for (std::size_t i = 0; i < n; ++i) {
    // remove observation i
    const int old = state.labels[i];
    if (--state.counts[old] == 0) {
      state.counts.erase(state.counts.begin() + old);
      state.atoms.erase(state.atoms.begin() + old);
      for (auto& c : state.labels)
        if (c > old) --c;
      state.labels[i] = -1;
    }
    const std::size_t k = state.atoms.size();
    std::vector<double> logw(k + 1);
    for (std::size_t j = 0; j < k; ++j)
      logw[j] = std::log(state.counts[j] - params.sigma) +
                model.log_kernel(data[i], state.atoms[j]);
    logw[k] = std::log(params.theta + params.sigma * static_cast<double>(k)) +
              model.log_marginal_likelihood(data[i]);
    const std::size_t c = categorical_draw_log(rng, logw);
    if (c < k) {
      state.labels[i] = static_cast<int>(c);
      ++state.counts[c];
    } else {
      state.labels[i] = static_cast<int>(k);
      state.counts.push_back(1);
      std::vector<typename Model::Obs> single{data[i]};
      state.atoms.push_back(model.posterior_draw(rng, single));
    }
  }
  accelerate(model, base, iter, state, data);
}

template <class Model>
struct SliceState {
  AllocationState<Model> alloc;  // atoms/counts of the active sticks
  std::vector<double> v;         // stick-breaking fractions, one per stick
  std::vector<double> p;         // p_j = v_j prod_{l<j} (1 - v_l)
};

struct SliceStepInfo {
  long jumps_drawn = 0;
  bool cap_hit = false;
};

// Deterministic sequence xi_j = E[p_j] for the independent slice variant.
inline double xi_first(const PYParams& params) {
  return (1.0 - params.sigma) / (params.theta + 1.0);
}
inline double xi_next(double xi_k, std::size_t k, const PYParams& params) {
  const double kk = static_cast<double>(k);
  return xi_k * (params.theta + kk * params.sigma) /
         (params.theta + 1.0 + kk * params.sigma);
}

template <class Model>
SliceState<Model> init_slice(const Model& model, RngStream& rng,
                             std::span<const typename Model::Obs> data,
                             const PYParams& params) {
  SliceState<Model> st;
  st.alloc = init_single_cluster(model, rng, data);
  st.v.push_back(rng.beta(1.0 - params.sigma, params.theta + params.sigma));
  st.p.push_back(st.v[0]);
  return st;
}

// One sweep of the slice-efficient sampler (Walker/Kalli et al. scheme).
// dependent = true uses the slice bound u_i < p_j; the independent variant
// bounds with the deterministic xi_j sequence and corrects weights by p_j/xi_j.
// Empty sticks are compacted away after reallocation, relabelling clusters in
// order of first appearance.
template <class Model>
SliceStepInfo slice_step(const Model& model, const RngStream& base,
                         std::uint64_t iter, SliceState<Model>& state,
                         std::span<const typename Model::Obs> data,
                         const PYParams& params, bool dependent, long jump_cap) {
  params.validate();
  if (jump_cap < 1) throw std::invalid_argument("slice_step: jump_cap >= 1");
  auto rng = base.substream(iter, kStepStreamKey);
  const std::size_t n = data.size();
  SliceStepInfo info;

  std::vector<double> xi;
  if (!dependent) {
    xi.resize(state.p.size());
    xi[0] = xi_first(params);
    for (std::size_t j = 1; j < xi.size(); ++j) xi[j] = xi_next(xi[j - 1], j, params);
  }

  // slice variables
  std::vector<double> u(n);
  double min_u = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = state.alloc.labels[i];
    const double bound = dependent ? state.p[c] : xi[c];
    u[i] = rng.uniform() * bound;
    min_u = std::min(min_u, u[i]);
  }

  // extend sticks until the admissible set is surely covered
  double leftover = 1.0;
  for (double vj : state.v) leftover *= (1.0 - vj);
  double sum_bound = dependent
                         ? 1.0 - leftover
                         : std::accumulate(xi.begin(), xi.end(), 0.0);
  while (sum_bound < 1.0 - min_u) {
    if (info.jumps_drawn >= jump_cap) {
      info.cap_hit = true;
      break;
    }
    const std::size_t j = state.v.size();  // new stick index (0-based)
    const double vj =
        rng.beta(1.0 - params.sigma,
                 params.theta + static_cast<double>(j + 1) * params.sigma);
    state.v.push_back(vj);
    state.p.push_back(vj * leftover);
    leftover *= (1.0 - vj);
    state.alloc.atoms.push_back(model.prior_draw(rng));
    state.alloc.counts.push_back(0);
    ++info.jumps_drawn;
    if (dependent) {
      sum_bound = 1.0 - leftover;
    } else {
      xi.push_back(xi_next(xi.back(), j, params));
      sum_bound += xi.back();
    }
  }

  // reallocate; only sticks whose bound exceeds u_i are admissible, so scan
  // candidates through the bounds sorted descending instead of over all k
  // sticks (k can be enormous right after a capped extension)
  const std::size_t k = state.p.size();
  const std::vector<double>& bound = dependent ? state.p : xi;
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bound[a] > bound[b];
  });
  std::vector<double> sorted_bound(k);
  for (std::size_t r = 0; r < k; ++r) sorted_bound[r] = bound[order[r]];
  std::vector<int> choice(n);
  std::vector<double> logw;
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = static_cast<std::size_t>(
        std::lower_bound(sorted_bound.begin(), sorted_bound.end(), u[i],
                         [](double b, double ui) { return b > ui; }) -
        sorted_bound.begin());
    logw.clear();
    cand.clear();
    for (std::size_t r = 0; r < len; ++r) {
      const std::size_t j = order[r];
      double w = model.log_kernel(data[i], state.alloc.atoms[j]);
      if (!dependent) w += std::log(state.p[j]) - std::log(xi[j]);
      logw.push_back(w);
      cand.push_back(j);
    }
    choice[i] = static_cast<int>(cand[categorical_draw_log(rng, logw)]);
  }

  // truncate at the highest occupied stick, keeping empty intermediate
  // sticks at their indices; sticks above max(c_i) are discarded. Gaps left
  // by emptied low-index sticks are what lets the slice variables shrink and
  // the jump count grow on later iterations.
  int kmax = 0;
  for (int c : choice) kmax = std::max(kmax, c);
  const std::size_t keep = static_cast<std::size_t>(kmax) + 1;
  state.alloc.labels.assign(choice.begin(), choice.end());
  state.alloc.atoms.resize(keep);
  state.alloc.counts.assign(keep, 0);
  for (int c : choice) ++state.alloc.counts[c];
  accelerate(model, base, iter, state.alloc, data);

  // refresh sticks: v_j ~ Beta(1 - sigma + n_j, theta + j sigma + n_j^+)
  const std::size_t kk = state.alloc.atoms.size();
  state.v.resize(kk);
  state.p.resize(kk);
  const int ntot = static_cast<int>(n);
  int cum = 0;
  double prod = 1.0;
  for (std::size_t j = 0; j < kk; ++j) {
    cum += state.alloc.counts[j];
    const int nj_plus = ntot - cum;
    state.v[j] = rng.beta(
        1.0 - params.sigma + state.alloc.counts[j],
        params.theta + static_cast<double>(j + 1) * params.sigma + nj_plus);
    state.p[j] = state.v[j] * prod;
    prod *= (1.0 - state.v[j]);
  }
  return info;
}

enum class Algorithm { kIcs, kMarginal, kSliceDependent, kSliceIndependent };

struct ChainConfig {
  Algorithm algorithm = Algorithm::kIcs;
  PYParams params;
  int m = 10;
  long iterations = 1500;
  long burnin = 500;
  std::uint64_t seed = 42;
  std::uint64_t stream_id = 0;
  int threads = 1;
  long jump_cap = 100000;
  DevianceMode deviance_mode = DevianceMode::kLog;
};

struct ChainTrace {
  std::vector<int> k;
  std::vector<double> deviance;
  std::vector<double> seconds;          // wall-clock per retained iteration
  std::vector<long> jumps;              // slice variants, else 0
  std::vector<char> cap_hit;
  std::vector<std::vector<double>> density;  // retained iteration x grid point
};

template <class Model>
double allocation_deviance(const Model& model,
                           const AllocationState<Model>& state,
                           std::span<const typename Model::Obs> data,
                           DevianceMode mode) {
  const double n = static_cast<double>(data.size());
  std::vector<double> f(data.size(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < state.atoms.size(); ++j)
      if (state.counts[j] > 0)
        f[i] += (state.counts[j] / n) * model.kernel(data[i], state.atoms[j]);
  return deviance_from_densities(f, mode);
}

// Conditional-mean density implied by the urn weights (marginal sampler).
template <class Model>
double urn_mean_density(const Model& model, const AllocationState<Model>& state,
                        const PYParams& params, std::size_t n,
                        const typename Model::Obs& x) {
  const double denom = params.theta + static_cast<double>(n);
  double f = (params.theta + params.sigma * state.k()) / denom *
             model.marginal_likelihood(x);
  for (std::size_t j = 0; j < state.atoms.size(); ++j)
    f += (state.counts[j] - params.sigma) / denom *
         model.kernel(x, state.atoms[j]);
  return f;
}

template <class Model>
ChainTrace run_chain(const Model& model, const ChainConfig& config,
                     std::span<const typename Model::Obs> data,
                     std::span<const typename Model::Obs> grid) {
  if (data.empty()) throw std::invalid_argument("run_chain: empty data");
  if (config.iterations <= config.burnin || config.burnin < 0)
    throw std::invalid_argument("run_chain: need iterations > burnin >= 0");
  config.params.validate();

  RngStream base(config.seed, config.stream_id);
  auto init_rng = base.substream(~0ULL);

  ChainTrace trace;
  const long retained = config.iterations - config.burnin;
  trace.k.reserve(retained);
  trace.density.reserve(retained);

  AllocationState<Model> alloc;
  SliceState<Model> slice;
  const bool is_slice = config.algorithm == Algorithm::kSliceDependent ||
                        config.algorithm == Algorithm::kSliceIndependent;
  if (is_slice)
    slice = init_slice(model, init_rng, data, config.params);
  else
    alloc = init_single_cluster(model, init_rng, data);

  for (long it = 1; it <= config.iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    SliceStepInfo sinfo;
    MeasureSummary<Model> summary;
    switch (config.algorithm) {
      case Algorithm::kIcs:
        summary = ics_step(model, base, static_cast<std::uint64_t>(it), alloc,
                           data, config.params, config.m, config.threads);
        break;
      case Algorithm::kMarginal:
        marginal_step(model, base, static_cast<std::uint64_t>(it), alloc, data,
                      config.params);
        break;
      case Algorithm::kSliceDependent:
      case Algorithm::kSliceIndependent:
        sinfo = slice_step(model, base, static_cast<std::uint64_t>(it), slice,
                           data, config.params,
                           config.algorithm == Algorithm::kSliceDependent,
                           config.jump_cap);
        break;
    }
    const auto t1 = std::chrono::steady_clock::now();
    if (it <= config.burnin) continue;

    const AllocationState<Model>& st = is_slice ? slice.alloc : alloc;
    trace.k.push_back(st.occupied());
    trace.deviance.push_back(
        allocation_deviance(model, st, data, config.deviance_mode));
    trace.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    trace.jumps.push_back(sinfo.jumps_drawn);
    trace.cap_hit.push_back(sinfo.cap_hit ? 1 : 0);

    if (!grid.empty()) {
      std::vector<double> f(grid.size(), 0.0);
      switch (config.algorithm) {
        case Algorithm::kIcs:
          for (std::size_t g = 0; g < grid.size(); ++g)
            f[g] = summary.density(model, grid[g]);
          break;
        case Algorithm::kMarginal:
          for (std::size_t g = 0; g < grid.size(); ++g)
            f[g] = urn_mean_density(model, alloc, config.params, data.size(),
                                    grid[g]);
          break;
        default: {
          double leftover = 1.0;
          for (double vj : slice.v) leftover *= (1.0 - vj);
          for (std::size_t g = 0; g < grid.size(); ++g) {
            double val = leftover * model.marginal_likelihood(grid[g]);
            for (std::size_t j = 0; j < slice.p.size(); ++j)
              val += slice.p[j] * model.kernel(grid[g], slice.alloc.atoms[j]);
            f[g] = val;
          }
        }
      }
      trace.density.push_back(std::move(f));
    }
  }
  return trace;
}

}  // namespace pymix

#endif
