#ifndef PYMIX_TRUNCATION_HPP
#define PYMIX_TRUNCATION_HPP

#include <cstdint>
#include <vector>

#include "pymix/pyprocess.hpp"
#include "pymix/rng.hpp"

namespace pymix {

struct MnDraw {
  std::uint64_t value = 0;
  bool cap_exceeded = false;
};

// Number of stick weights needed before the leftover mass drops below
// B_n ~ Beta(1, n): min{ l >= 1 : prod_{j<=l} (1 - V_j) < B_n }.
MnDraw sample_Mn(RngStream& rng, int n, const PYParams& params, std::uint64_t cap);

// Asymptotic proxy L_n = (B_n * T / sigma)^(-sigma/(1-sigma)) with T a
// polynomially tilted stable variable; requires sigma in (0,1).
double sample_Ln(RngStream& rng, int n, const PYParams& params);

// E[L_n] = c_{sigma,theta} * Gamma(n+1)/Gamma(n+2-1/(1-sigma)); finite only
// for sigma in (0, 1/2).
double expected_Ln(int n, const PYParams& params);

struct TruncationReport {
  std::vector<double> mn_draws;          // capped draws recorded at the cap value
  std::vector<bool> mn_capped;
  std::vector<double> ln_draws;          // empty when sigma == 0
  std::vector<std::uint64_t> thresholds;
  std::vector<double> mn_exceedance;     // NaN where the threshold exceeds the cap
  std::vector<double> ln_exceedance;
  std::vector<bool> via_proxy;           // true where mn estimate is unavailable
  std::uint64_t cap = 0;
};

// Monte-Carlo exceedance estimates P(M_n > K) (direct, up to cap) and
// P(L_n > K). Thresholds must be sorted ascending.
TruncationReport exceedance_table(RngStream& rng, int n, const PYParams& params,
                                  const std::vector<std::uint64_t>& thresholds,
                                  int reps, std::uint64_t cap);

}  // namespace pymix

#endif
