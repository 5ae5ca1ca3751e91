#include "pymix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pymix {

double ess(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 10) throw std::invalid_argument("ess: trace too short (need >= 10)");
  double mean = 0.0;
  for (double x : trace) mean += x;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double x : trace) c0 += (x - mean) * (x - mean);
  c0 /= static_cast<double>(n);
  if (!(c0 > 0.0)) throw std::invalid_argument("ess: constant trace");

  auto autocov = [&](std::size_t lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i)
      c += (trace[i] - mean) * (trace[i + lag] - mean);
    return c / static_cast<double>(n);
  };

  // Geyer: sum paired autocorrelations Gamma_k = rho_{2k} + rho_{2k+1}
  // while they stay positive.
  double tau = 1.0;  // includes rho_0, paired below starting at lag 1
  double rho_sum = 0.0;
  for (std::size_t k = 1; k + 1 < n; k += 2) {
    const double g = (autocov(k) + autocov(k + 1)) / c0;
    if (g <= 0.0) break;
    rho_sum += g;
  }
  tau += 2.0 * rho_sum;
  // Gamma_0 in Geyer's formulation is rho_0 + rho_1; pairing from lag 1 keeps
  // tau >= 1 automatically, so only the upper cap needs enforcing.
  const double e = static_cast<double>(n) / tau;
  return std::min(e, static_cast<double>(n));
}

double deviance_from_densities(std::span<const double> mixture_density,
                               DevianceMode mode) {
  double acc = 0.0;
  for (double f : mixture_density) {
    if (mode == DevianceMode::kLog) {
      if (!(f > 0.0))
        throw std::domain_error("deviance: zero mixture density in log mode");
      acc += std::log(f);
    } else {
      acc += f;
    }
  }
  return -2.0 * acc;
}

DensitySummary density_summary(const std::vector<std::vector<double>>& realizations,
                               double band_level) {
  if (realizations.size() < 2)
    throw std::invalid_argument("density_summary: need >= 2 realizations");
  if (!(band_level > 0.0 && band_level < 1.0))
    throw std::invalid_argument("density_summary: band_level in (0,1)");
  const std::size_t g = realizations.front().size();
  for (const auto& r : realizations)
    if (r.size() != g)
      throw std::invalid_argument("density_summary: mismatched grids");

  DensitySummary out;
  out.band_level = band_level;
  out.mean.resize(g);
  out.lower.resize(g);
  out.upper.resize(g);
  const std::size_t r = realizations.size();
  std::vector<double> col(r);
  const double lo_q = 0.5 * (1.0 - band_level);
  const double hi_q = 0.5 * (1.0 + band_level);
  auto quantile = [&](double q) {
    // type-7 interpolation on the sorted column
    const double h = q * (static_cast<double>(r) - 1.0);
    const std::size_t i = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(i);
    if (i + 1 >= r) return col[r - 1];
    return col[i] * (1.0 - frac) + col[i + 1] * frac;
  };
  for (std::size_t j = 0; j < g; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      col[i] = realizations[i][j];
      m += col[i];
    }
    out.mean[j] = m / static_cast<double>(r);
    std::sort(col.begin(), col.end());
    out.lower[j] = quantile(lo_q);
    out.upper[j] = quantile(hi_q);
  }
  return out;
}

}  // namespace pymix
