#include "pymix/pyprocess.hpp"

#include <numeric>

namespace pymix {

std::optional<std::size_t> urn_predictive_draw(RngStream& rng,
                                               const PartitionCounts& counts,
                                               const PYParams& params) {
  params.validate();
  const int k = static_cast<int>(counts.size());
  const int n = std::accumulate(counts.begin(), counts.end(), 0);
  if (k == 0) return std::nullopt;
  const double fresh = params.theta + params.sigma * k;
  const double u = rng.uniform() * (params.theta + n);
  if (u < fresh) return std::nullopt;
  double acc = fresh;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    acc += counts[j] - params.sigma;
    if (u < acc) return j;
  }
  return counts.size() - 1;
}

StickPrefix stick_breaking_prefix(RngStream& rng, const PYParams& params,
                                  double stop_mass, std::uint64_t cap) {
  params.validate();
  if (!(stop_mass > 0.0 && stop_mass <= 1.0))
    throw std::invalid_argument("stick_breaking_prefix: stop_mass in (0,1]");
  StickPrefix out;
  double leftover = 1.0;
  std::uint64_t j = 0;
  while (leftover >= stop_mass) {
    if (j >= cap) {
      out.cap_hit = true;
      break;
    }
    ++j;
    const double v = rng.beta(1.0 - params.sigma,
                              params.theta + static_cast<double>(j) * params.sigma);
    out.weights.push_back(v * leftover);
    leftover *= (1.0 - v);
  }
  out.leftover = leftover;
  return out;
}

std::vector<double> posterior_weights_draw(RngStream& rng,
                                           const PartitionCounts& counts,
                                           const PYParams& params) {
  params.validate();
  if (counts.empty()) return {1.0};
  std::vector<double> alpha;
  alpha.reserve(counts.size() + 1);
  alpha.push_back(params.theta + params.sigma * static_cast<double>(counts.size()));
  for (int nj : counts) alpha.push_back(static_cast<double>(nj) - params.sigma);
  return dirichlet_draw(rng, alpha);
}

UrnSample auxiliary_sample(RngStream& rng, int m, int k, const PYParams& params) {
  params.validate();
  if (m < 1) throw std::invalid_argument("auxiliary_sample: m must be >= 1");
  PYParams updated{params.sigma, params.theta + params.sigma * k};
  UrnSample out;
  out.labels.reserve(m);
  PartitionCounts counts;
  for (int i = 0; i < m; ++i) {
    auto idx = urn_predictive_draw(rng, counts, updated);
    if (idx) {
      ++counts[*idx];
      out.labels.push_back(static_cast<int>(*idx));
    } else {
      counts.push_back(1);
      out.labels.push_back(static_cast<int>(counts.size()) - 1);
    }
  }
  out.multiplicities = std::move(counts);
  return out;
}

double expected_cluster_count(int n, const PYParams& params) {
  params.validate();
  if (n < 1) throw std::invalid_argument("expected_cluster_count: n must be >= 1");
  double ek = 1.0;
  for (int i = 1; i < n; ++i)
    ek += (params.theta + params.sigma * ek) / (params.theta + i);
  return ek;
}

}  // namespace pymix
