#include "pymix/truncation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pymix {

MnDraw sample_Mn(RngStream& rng, int n, const PYParams& params,
                 std::uint64_t cap) {
  params.validate();
  if (n < 1) throw std::invalid_argument("sample_Mn: n must be >= 1");
  if (cap < 1) throw std::invalid_argument("sample_Mn: cap must be >= 1");
  const double b = rng.beta(1.0, static_cast<double>(n));
  const double log_b = std::log(b);
  double log_leftover = 0.0;
  std::uint64_t l = 0;
  while (log_leftover >= log_b) {
    if (l >= cap) return {cap, true};
    ++l;
    const double v = rng.beta(1.0 - params.sigma,
                              params.theta + static_cast<double>(l) * params.sigma);
    log_leftover += std::log1p(-v);
  }
  return {l, false};
}

double sample_Ln(RngStream& rng, int n, const PYParams& params) {
  params.validate();
  if (!(params.sigma > 0.0))
    throw std::domain_error("sample_Ln: sigma must be in (0,1); at sigma=0 the "
                            "Poisson mixture law applies");
  if (n < 1) throw std::invalid_argument("sample_Ln: n must be >= 1");
  const double b = rng.beta(1.0, static_cast<double>(n));
  const double t = rng.tilted_stable(params.sigma, params.theta);
  const double expo = -params.sigma / (1.0 - params.sigma);
  return std::exp(expo * (std::log(b) + std::log(t) - std::log(params.sigma)));
}

double expected_Ln(int n, const PYParams& params) {
  params.validate();
  const double s = params.sigma;
  const double th = params.theta;
  if (!(s > 0.0 && s < 0.5))
    throw std::domain_error("expected_Ln: finite only for sigma in (0, 1/2)");
  const double r = 1.0 / (1.0 - s);
  // log-gamma throughout: the arguments exceed 100 for the sample sizes of
  // interest. E[L] = sigma^{s/(1-s)} E[B^{-s/(1-s)}] E[T^{-s/(1-s)}]; the
  // moments of the tilted variable carry the normalizing constant
  // Gamma(1+theta)/Gamma(1+theta/sigma) of its density (trivially 1 at theta=0).
  const double log_c = s / (1.0 - s) * std::log(s) + std::lgamma(2.0 - r) +
                       std::lgamma(1.0 + th / s + r) - std::lgamma(th + r) +
                       std::lgamma(1.0 + th) - std::lgamma(1.0 + th / s);
  const double log_ratio = std::lgamma(static_cast<double>(n) + 1.0) -
                           std::lgamma(static_cast<double>(n) + 2.0 - r);
  return std::exp(log_c + log_ratio);
}

TruncationReport exceedance_table(RngStream& rng, int n, const PYParams& params,
                                  const std::vector<std::uint64_t>& thresholds,
                                  int reps, std::uint64_t cap) {
  params.validate();
  if (reps < 1) throw std::invalid_argument("exceedance_table: reps must be >= 1");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (thresholds[i] < thresholds[i - 1])
      throw std::invalid_argument("exceedance_table: thresholds must ascend");

  TruncationReport report;
  report.thresholds = thresholds;
  report.cap = cap;
  report.mn_draws.reserve(reps);
  report.mn_capped.reserve(reps);
  const bool have_ln = params.sigma > 0.0;
  for (int r = 0; r < reps; ++r) {
    auto stream = rng.substream(static_cast<std::uint64_t>(r));
    const MnDraw d = sample_Mn(stream, n, params, cap);
    report.mn_draws.push_back(static_cast<double>(d.value));
    report.mn_capped.push_back(d.cap_exceeded);
    if (have_ln) report.ln_draws.push_back(sample_Ln(stream, n, params));
  }
  for (std::uint64_t k : thresholds) {
    if (k < cap) {
      int count = 0;
      for (std::size_t i = 0; i < report.mn_draws.size(); ++i)
        if (report.mn_capped[i] || report.mn_draws[i] > static_cast<double>(k))
          ++count;
      report.mn_exceedance.push_back(static_cast<double>(count) / reps);
      report.via_proxy.push_back(false);
    } else {
      report.mn_exceedance.push_back(std::numeric_limits<double>::quiet_NaN());
      report.via_proxy.push_back(true);
    }
    if (have_ln) {
      int count = 0;
      for (double v : report.ln_draws)
        if (v > static_cast<double>(k)) ++count;
      report.ln_exceedance.push_back(static_cast<double>(count) / reps);
    } else {
      report.ln_exceedance.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return report;
}

}  // namespace pymix
