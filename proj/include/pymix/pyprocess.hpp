#ifndef PYMIX_PYPROCESS_HPP
#define PYMIX_PYPROCESS_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pymix/rng.hpp"

namespace pymix {

struct PYParams {
  double sigma = 0.0;  // discount, in [0,1)
  double theta = 1.0;  // strength, > -sigma

  void validate() const {
    if (!(sigma >= 0.0 && sigma < 1.0))
      throw std::invalid_argument("PYParams: sigma must lie in [0,1)");
    if (!(theta > -sigma))
      throw std::invalid_argument("PYParams: theta must exceed -sigma");
  }
};

// Cluster frequencies of a partition; counts[j] >= 1 for each of k clusters.
using PartitionCounts = std::vector<int>;

// One predictive urn step: returns the 0-based index of the cluster joined,
// or nullopt for a fresh value. Fresh probability (theta + k*sigma)/(theta+n).
std::optional<std::size_t> urn_predictive_draw(RngStream& rng,
                                               const PartitionCounts& counts,
                                               const PYParams& params);

struct StickPrefix {
  std::vector<double> weights;  // p_1..p_L
  double leftover = 1.0;        // prod_{l<=L} (1 - V_l)
  bool cap_hit = false;
};

// Break sticks V_j ~ Beta(1-sigma, theta+j*sigma) until the leftover mass
// drops below stop_mass, or the cap is reached.
StickPrefix stick_breaking_prefix(RngStream& rng, const PYParams& params,
                                  double stop_mass,
                                  std::uint64_t cap = 100000000ULL);

// Dirichlet(theta + k*sigma, n_1 - sigma, ..., n_k - sigma); element 0 is the
// mass p0 of the leftover process.
std::vector<double> posterior_weights_draw(RngStream& rng,
                                           const PartitionCounts& counts,
                                           const PYParams& params);

struct UrnSample {
  std::vector<int> multiplicities;  // m_j, summing to m
  std::vector<int> labels;          // draw i -> distinct-value index
};

// m exchangeable draws from a PY(sigma, theta + sigma*k) urn; atoms are
// identified by integer labels only, the caller attaches parameter values.
UrnSample auxiliary_sample(RngStream& rng, int m, int k, const PYParams& params);

// Exact E[number of distinct values among n urn draws], by iterating the
// fresh-draw probability: E[K_{i+1}] = E[K_i] + (theta + sigma E[K_i])/(theta + i).
double expected_cluster_count(int n, const PYParams& params);

}  // namespace pymix

#endif
