#ifndef PYMIX_DIAGNOSTICS_HPP
#define PYMIX_DIAGNOSTICS_HPP

#include <span>
#include <vector>

namespace pymix {

// Effective sample size N / (1 + 2 sum rho_k), autocorrelations truncated by
// Geyer's initial positive sequence rule. Capped at N (antithetic traces would
// otherwise report ESS > N). Throws on constant or too-short traces.
double ess(std::span<const double> trace);

enum class DevianceMode {
  kLog,     // -2 sum_i log( sum_j (n_j/n) K(X_i; theta_j) )
  kLiteral  // -2 sum_i sum_j (n_j/n) K(X_i; theta_j), no logarithm
};

// Deviance from per-observation mixture densities f_i = sum_j (n_j/n) K(X_i;.).
double deviance_from_densities(std::span<const double> mixture_density,
                               DevianceMode mode);

struct DensitySummary {
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  double band_level = 0.9;
};

// Pointwise mean and empirical (1 +/- band_level)/2 quantiles over posterior
// density realizations sharing one grid.
DensitySummary density_summary(const std::vector<std::vector<double>>& realizations,
                               double band_level);

}  // namespace pymix

#endif
