#ifndef PYMIX_GMDDP_HPP
#define PYMIX_GMDDP_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pymix/pyprocess.hpp"
#include "pymix/rng.hpp"
#include "pymix/samplers.hpp"

namespace pymix {

struct GMDDPParams {
  double theta = 1.0;  // total DP mass, > 0
  double z = 0.5;      // idiosyncratic share, in (0,1)
  int groups = 2;      // L >= 2

  void validate() const {
    if (!(theta > 0.0)) throw std::invalid_argument("GMDDPParams: theta > 0");
    if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("GMDDPParams: z in (0,1)");
    if (groups < 2) throw std::invalid_argument("GMDDPParams: need >= 2 groups");
  }
};

// w_l = G_l / (G_l + G_0), G_l ~ Gamma(theta z, 1) iid, G_0 ~ Gamma(theta(1-z), 1)
// shared across components (Olkin-Liu multivariate beta).
inline std::vector<double> gmddp_prior_weights(RngStream& rng,
                                               const GMDDPParams& params) {
  params.validate();
  const double g0 = rng.gamma(params.theta * (1.0 - params.z), 1.0);
  std::vector<double> w(params.groups);
  for (auto& wl : w) {
    const double gl = rng.gamma(params.theta * params.z, 1.0);
    wl = gl / (gl + g0);
  }
  return w;
}

// Log full conditional of w at v, up to an additive constant. q_idio[l][i] and
// q_common[l][i] are the scalar mixture-likelihood weights of observation i in
// group l under the idiosyncratic and common process summaries; pass empty
// vectors for a no-data state (the prior).
inline double w_logdensity_fullcond(
    std::span<const double> v, const GMDDPParams& params,
    const std::vector<std::vector<double>>& q_idio,
    const std::vector<std::vector<double>>& q_common) {
  params.validate();
  if (static_cast<int>(v.size()) != params.groups)
    throw std::invalid_argument("w_logdensity_fullcond: dimension mismatch");
  const double tz = params.theta * params.z;
  double logp = 0.0;
  double odds_sum = 0.0;
  for (int l = 0; l < params.groups; ++l) {
    const double vl = v[l];
    if (!(vl > 0.0 && vl < 1.0))
      throw std::domain_error("w_logdensity_fullcond: v on the boundary");
    logp += (tz - 1.0) * std::log(vl) - (tz + 1.0) * std::log(1.0 - vl);
    odds_sum += vl / (1.0 - vl);
    if (!q_idio.empty()) {
      for (std::size_t i = 0; i < q_idio[l].size(); ++i) {
        const double mix = vl * q_idio[l][i] + (1.0 - vl) * q_common[l][i];
        if (!(mix > 0.0)) return -std::numeric_limits<double>::infinity();
        logp += std::log(mix);
      }
    }
  }
  logp -= (params.groups * tz + params.theta * (1.0 - params.z)) *
          std::log1p(odds_sum);
  return logp;
}

template <class Model>
struct GMDDPState {
  // processes[0] is the common process, processes[l] the group-l idiosyncratic
  struct Process {
    std::vector<typename Model::Atom> atoms;
    std::vector<int> counts;
  };
  std::vector<Process> processes;         // size L+1
  std::vector<std::vector<int>> proc_of;  // per group per obs: 0 or l
  std::vector<std::vector<int>> label_of; // cluster index within that process
  std::vector<double> w;
  // logit-scale random-walk step sizes, one per coordinate
  std::vector<double> mh_step;
  long mh_proposals = 0;
  long mh_accepts = 0;

  void check(const std::vector<std::vector<typename Model::Obs>>& data) const {
    const std::size_t L = data.size();
    std::vector<std::vector<int>> recount(processes.size());
    for (std::size_t p = 0; p < processes.size(); ++p)
      recount[p].assign(processes[p].counts.size(), 0);
    for (std::size_t l = 0; l < L; ++l) {
      if (proc_of[l].size() != data[l].size() ||
          label_of[l].size() != data[l].size())
        throw std::logic_error("gmddp state: per-group size mismatch");
      for (std::size_t i = 0; i < data[l].size(); ++i) {
        const int p = proc_of[l][i];
        if (p != 0 && p != static_cast<int>(l) + 1)
          throw std::logic_error("gmddp state: bad process flag");
        ++recount[p].at(label_of[l][i]);
      }
    }
    for (std::size_t p = 0; p < processes.size(); ++p)
      for (std::size_t j = 0; j < processes[p].counts.size(); ++j)
        if (recount[p][j] != processes[p].counts[j] || processes[p].counts[j] < 1)
          throw std::logic_error("gmddp state: stale counts or empty cluster");
  }
};

// All observations start idiosyncratic, one cluster per group.
template <class Model>
GMDDPState<Model> gmddp_init(
    const Model& model, RngStream& rng, const GMDDPParams& params,
    const std::vector<std::vector<typename Model::Obs>>& data) {
  params.validate();
  if (static_cast<int>(data.size()) != params.groups)
    throw std::invalid_argument("gmddp_init: group count mismatch");
  GMDDPState<Model> st;
  st.processes.resize(params.groups + 1);
  st.proc_of.resize(params.groups);
  st.label_of.resize(params.groups);
  for (int l = 0; l < params.groups; ++l) {
    st.proc_of[l].assign(data[l].size(), l + 1);
    st.label_of[l].assign(data[l].size(), 0);
    if (!data[l].empty()) {
      st.processes[l + 1].atoms.push_back(model.posterior_draw(rng, data[l]));
      st.processes[l + 1].counts.push_back(static_cast<int>(data[l].size()));
    }
  }
  st.w = gmddp_prior_weights(rng, params);
  st.mh_step.assign(params.groups, 1.0);
  return st;
}

// Per-group density realization from one iteration's summaries.
template <class Model>
struct GMDDPSummary {
  std::vector<MeasureSummary<Model>> process;  // size L+1, index 0 common
  std::vector<double> w;

  double density(const Model& model, int group,
                 const typename Model::Obs& x) const {
    return w[group] * process[group + 1].density(model, x) +
           (1.0 - w[group]) * process[0].density(model, x);
  }
};

// One ICS sweep for the GM-DDP mixture: refresh each process summary from its
// DP posterior decomposition, Metropolis-update w, reallocate every (i,l)
// across the four branches (idiosyncratic/common x auxiliary/fixed), then run
// the conjugate acceleration per process.
template <class Model>
GMDDPSummary<Model> gmddp_ics_step(
    const Model& model, const RngStream& base, std::uint64_t iter,
    GMDDPState<Model>& state,
    const std::vector<std::vector<typename Model::Obs>>& data,
    const GMDDPParams& params, int m, bool adapt_mh = false) {
  params.validate();
  const int L = params.groups;
  auto rng = base.substream(iter, kStepStreamKey);

  GMDDPSummary<Model> summary;
  summary.process.resize(L + 1);
  for (int p = 0; p <= L; ++p) {
    const double mass =
        p == 0 ? params.theta * (1.0 - params.z) : params.theta * params.z;
    const PYParams dp{0.0, mass};
    auto& s = summary.process[p];
    s.fixed_atoms = state.processes[p].atoms;
    auto weights = posterior_weights_draw(rng, state.processes[p].counts, dp);
    s.p0 = weights[0];
    s.fixed_weights.assign(weights.begin() + 1, weights.end());
    const UrnSample aux = auxiliary_sample(rng, m, 0, dp);
    s.aux_weights.resize(aux.multiplicities.size());
    for (std::size_t j = 0; j < aux.multiplicities.size(); ++j) {
      s.aux_weights[j] = static_cast<double>(aux.multiplicities[j]) / m;
      s.aux_atoms.push_back(model.prior_draw(rng));
    }
  }

  // scalar mixture weights entering the w full conditional
  std::vector<std::vector<double>> q_idio(L), q_common(L);
  for (int l = 0; l < L; ++l) {
    q_idio[l].resize(data[l].size());
    q_common[l].resize(data[l].size());
    for (std::size_t i = 0; i < data[l].size(); ++i) {
      q_idio[l][i] = summary.process[l + 1].density(model, data[l][i]);
      q_common[l][i] = summary.process[0].density(model, data[l][i]);
    }
  }

  // coordinate-wise random-walk Metropolis on logit(w_l)
  double cur_logp = w_logdensity_fullcond(state.w, params, q_idio, q_common);
  for (int l = 0; l < L; ++l) {
    const double logit = std::log(state.w[l]) - std::log1p(-state.w[l]);
    const double prop_logit = logit + state.mh_step[l] * rng.normal();
    std::vector<double> prop = state.w;
    prop[l] = 1.0 / (1.0 + std::exp(-prop_logit));
    if (!(prop[l] > 0.0 && prop[l] < 1.0)) continue;  // underflowed proposal
    const double prop_logp = w_logdensity_fullcond(prop, params, q_idio, q_common);
    // Jacobian of the logit transform: + log v(1-v) for each scale
    const double log_ratio = prop_logp - cur_logp +
                             std::log(prop[l]) + std::log1p(-prop[l]) -
                             std::log(state.w[l]) - std::log1p(-state.w[l]);
    ++state.mh_proposals;
    bool accepted = false;
    if (std::log(rng.uniform()) < log_ratio) {
      state.w = prop;
      cur_logp = prop_logp;
      ++state.mh_accepts;
      accepted = true;
    }
    if (adapt_mh) {
      const double gain = 1.0 / std::sqrt(static_cast<double>(iter) + 1.0);
      state.mh_step[l] *= std::exp(gain * ((accepted ? 1.0 : 0.0) - 0.44));
    }
  }
  summary.w = state.w;

  // reallocation across the four branches
  std::vector<std::vector<int>> new_proc(L), new_choice(L);
  for (int l = 0; l < L; ++l) {
    const auto& si = summary.process[l + 1];
    const auto& sc = summary.process[0];
    const std::size_t ri = si.aux_atoms.size(), ki = si.fixed_atoms.size();
    const std::size_t rc = sc.aux_atoms.size(), kc = sc.fixed_atoms.size();
    new_proc[l].resize(data[l].size());
    new_choice[l].resize(data[l].size());
    const double log_w = std::log(state.w[l]);
    const double log_1mw = std::log1p(-state.w[l]);
    for (std::size_t i = 0; i < data[l].size(); ++i) {
      std::vector<double> logw(ri + ki + rc + kc);
      std::size_t idx = 0;
      for (std::size_t j = 0; j < ri; ++j)
        logw[idx++] = log_w + std::log(si.p0) + std::log(si.aux_weights[j]) +
                      model.log_kernel(data[l][i], si.aux_atoms[j]);
      for (std::size_t j = 0; j < ki; ++j)
        logw[idx++] = log_w + std::log(si.fixed_weights[j]) +
                      model.log_kernel(data[l][i], si.fixed_atoms[j]);
      for (std::size_t j = 0; j < rc; ++j)
        logw[idx++] = log_1mw + std::log(sc.p0) + std::log(sc.aux_weights[j]) +
                      model.log_kernel(data[l][i], sc.aux_atoms[j]);
      for (std::size_t j = 0; j < kc; ++j)
        logw[idx++] = log_1mw + std::log(sc.fixed_weights[j]) +
                      model.log_kernel(data[l][i], sc.fixed_atoms[j]);
      const std::size_t c = categorical_draw_log(rng, logw);
      if (c < ri + ki) {
        new_proc[l][i] = l + 1;
        new_choice[l][i] = static_cast<int>(c);
      } else {
        new_proc[l][i] = 0;
        new_choice[l][i] = static_cast<int>(c - (ri + ki));
      }
    }
  }

  // rebuild processes, first-appearance order per process
  for (int p = 0; p <= L; ++p) {
    state.processes[p].atoms.clear();
    state.processes[p].counts.clear();
  }
  // remaps: per process, choice index -> new cluster label
  std::vector<std::vector<int>> remap(L + 1);
  remap[0].assign(summary.process[0].aux_atoms.size() +
                      summary.process[0].fixed_atoms.size(),
                  -1);
  for (int l = 0; l < L; ++l)
    remap[l + 1].assign(summary.process[l + 1].aux_atoms.size() +
                            summary.process[l + 1].fixed_atoms.size(),
                        -1);
  for (int l = 0; l < L; ++l) {
    for (std::size_t i = 0; i < data[l].size(); ++i) {
      const int p = new_proc[l][i];
      const int c = new_choice[l][i];
      const auto& s = summary.process[p];
      const std::size_t r = s.aux_atoms.size();
      if (remap[p][c] < 0) {
        remap[p][c] = static_cast<int>(state.processes[p].atoms.size());
        state.processes[p].atoms.push_back(
            c < static_cast<int>(r) ? s.aux_atoms[c] : s.fixed_atoms[c - r]);
        state.processes[p].counts.push_back(0);
      }
      state.proc_of[l][i] = p;
      state.label_of[l][i] = remap[p][c];
      ++state.processes[p].counts[remap[p][c]];
    }
  }

  // acceleration: common clusters pool members across groups
  {
    std::vector<std::vector<typename Model::Obs>> members(
        state.processes[0].atoms.size());
    for (int l = 0; l < L; ++l)
      for (std::size_t i = 0; i < data[l].size(); ++i)
        if (state.proc_of[l][i] == 0)
          members[state.label_of[l][i]].push_back(data[l][i]);
    for (std::size_t j = 0; j < members.size(); ++j)
      state.processes[0].atoms[j] = model.posterior_draw(rng, members[j]);
  }
  for (int l = 0; l < L; ++l) {
    std::vector<std::vector<typename Model::Obs>> members(
        state.processes[l + 1].atoms.size());
    for (std::size_t i = 0; i < data[l].size(); ++i)
      if (state.proc_of[l][i] == l + 1)
        members[state.label_of[l][i]].push_back(data[l][i]);
    for (std::size_t j = 0; j < members.size(); ++j)
      state.processes[l + 1].atoms[j] = model.posterior_draw(rng, members[j]);
  }
  return summary;
}

struct GMDDPTrace {
  std::vector<int> k_total;                  // distinct clusters, all processes
  std::vector<double> deviance;
  std::vector<double> seconds;
  // per group: retained iteration x grid point
  std::vector<std::vector<std::vector<double>>> density;
  double mh_acceptance = 0.0;
};

template <class Model>
GMDDPTrace run_gmddp_chain(
    const Model& model, const GMDDPParams& params, const ChainConfig& config,
    const std::vector<std::vector<typename Model::Obs>>& data,
    std::span<const typename Model::Obs> grid) {
  params.validate();
  if (config.iterations <= config.burnin || config.burnin < 0)
    throw std::invalid_argument("run_gmddp_chain: iterations > burnin >= 0");
  RngStream base(config.seed, config.stream_id);
  auto init_rng = base.substream(~0ULL);
  auto state = gmddp_init(model, init_rng, params, data);

  GMDDPTrace trace;
  trace.density.resize(params.groups);
  for (long it = 1; it <= config.iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    auto summary = gmddp_ics_step(model, base, static_cast<std::uint64_t>(it),
                                  state, data, params, config.m,
                                  /*adapt_mh=*/it <= config.burnin);
    const auto t1 = std::chrono::steady_clock::now();
    if (it <= config.burnin) continue;

    int k = 0;
    for (const auto& p : state.processes) k += static_cast<int>(p.atoms.size());
    trace.k_total.push_back(k);
    trace.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());

    // deviance from each observation's group-level cluster frequencies
    std::vector<double> f;
    for (int l = 0; l < params.groups; ++l) {
      const double nl = static_cast<double>(data[l].size());
      if (data[l].empty()) continue;
      std::vector<std::vector<int>> group_counts(2);
      const int procs[2] = {0, l + 1};
      for (int pi = 0; pi < 2; ++pi)
        group_counts[pi].assign(state.processes[procs[pi]].atoms.size(), 0);
      for (std::size_t i = 0; i < data[l].size(); ++i) {
        const int pi = state.proc_of[l][i] == 0 ? 0 : 1;
        ++group_counts[pi][state.label_of[l][i]];
      }
      for (std::size_t i = 0; i < data[l].size(); ++i) {
        double fi = 0.0;
        for (int pi = 0; pi < 2; ++pi) {
          const auto& proc = state.processes[procs[pi]];
          for (std::size_t j = 0; j < proc.atoms.size(); ++j)
            if (group_counts[pi][j] > 0)
              fi += (group_counts[pi][j] / nl) *
                    model.kernel(data[l][i], proc.atoms[j]);
        }
        f.push_back(fi);
      }
    }
    trace.deviance.push_back(
        deviance_from_densities(f, config.deviance_mode));

    if (!grid.empty()) {
      for (int l = 0; l < params.groups; ++l) {
        std::vector<double> fl(grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g)
          fl[g] = summary.density(model, l, grid[g]);
        trace.density[l].push_back(std::move(fl));
      }
    }
  }
  trace.mh_acceptance =
      state.mh_proposals > 0
          ? static_cast<double>(state.mh_accepts) / state.mh_proposals
          : 0.0;
  return trace;
}

}  // namespace pymix

#endif
