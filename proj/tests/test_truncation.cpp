#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pymix/rng.hpp"
#include "pymix/truncation.hpp"

using namespace pymix;

TEST_CASE("Mn sampling basics") {
  RngStream rng(41);
  SUBCASE("at least one stick is always needed") {
    for (int i = 0; i < 5000; ++i) {
      auto d = sample_Mn(rng, 10, {0.3, 1.0}, 1000000);
      CHECK(d.value >= 1);
      CHECK(!d.cap_exceeded);
    }
  }
  SUBCASE("cap truncates and flags") {
    auto d = sample_Mn(rng, 1000000, {0.9, 100.0}, 3);
    if (d.cap_exceeded) CHECK(d.value == 3);
    CHECK(d.value <= 3);
  }
}

TEST_CASE("Dirichlet-process mean of Mn") {
  // sigma=0, theta=1, n=100: E[Mn] = H_100 + 1 = 6.18738
  RngStream rng(42);
  double hn = 0.0;
  for (int i = 1; i <= 100; ++i) hn += 1.0 / i;
  const int reps = 200000;
  double mean = 0.0;
  for (int i = 0; i < reps; ++i)
    mean += static_cast<double>(sample_Mn(rng, 100, {0.0, 1.0}, 1000000).value);
  CHECK(mean / reps == doctest::Approx(hn + 1.0).epsilon(0.02));
  CHECK(hn + 1.0 == doctest::Approx(6.18738).epsilon(1e-5));
}

TEST_CASE("Poisson mixture law of Mn - 1 at sigma = 0") {
  // (Mn - 1) | Bn ~ Poisson(theta log(1/Bn)); so P(Mn = 1) = E[Bn^theta],
  // which for Bn ~ Beta(1, n) and theta = 1 is 1/(n+1).
  RngStream rng(43);
  const int n = 10, reps = 300000;
  int ones = 0;
  double mean = 0.0;
  for (int i = 0; i < reps; ++i) {
    const auto v = sample_Mn(rng, n, {0.0, 1.0}, 1000000).value;
    if (v == 1) ++ones;
    mean += static_cast<double>(v);
  }
  CHECK(static_cast<double>(ones) / reps ==
        doctest::Approx(1.0 / (n + 1)).epsilon(0.03));
  // E[Mn] = H_n + 1
  double hn = 0.0;
  for (int i = 1; i <= n; ++i) hn += 1.0 / i;
  CHECK(mean / reps == doctest::Approx(hn + 1.0).epsilon(0.02));
}

TEST_CASE("Ln proxy") {
  RngStream rng(44);
  SUBCASE("requires a positive discount") {
    CHECK_THROWS_AS((void)sample_Ln(rng, 10, {0.0, 1.0}), std::domain_error);
  }
  SUBCASE("positive support") {
    for (int i = 0; i < 5000; ++i) CHECK(sample_Ln(rng, 20, {0.3, 1.0}) > 0.0);
  }
  SUBCASE("Monte-Carlo mean matches the closed form at sigma = 0.25") {
    const PYParams params{0.25, 1.0};
    const int n = 10, reps = 400000;
    double mean = 0.0;
    for (int i = 0; i < reps; ++i) mean += sample_Ln(rng, n, params);
    // independent oracle via moment composition:
    //   E[L] = sigma^r E[B^-r] E[T^-r],  r = sigma/(1-sigma),
    // with E[B^-r] from the beta integral and E[T^-r] from the stable
    // negative-moment formula E[S^-q] = Gamma(1+q/sigma)/Gamma(1+q).
    const double s = params.sigma, th = params.theta;
    const double r = s / (1.0 - s);
    const double log_eb = std::lgamma(1.0 - r) + std::lgamma(n + 1.0) -
                          std::lgamma(n + 1.0 - r);
    auto log_stable_negmom = [&](double q) {
      return std::lgamma(1.0 + q / s) - std::lgamma(1.0 + q);
    };
    const double log_et = log_stable_negmom(th + r) - log_stable_negmom(th);
    const double expect = std::exp(r * std::log(s) + log_eb + log_et);
    CHECK(expected_Ln(n, params) == doctest::Approx(expect).epsilon(1e-10));
    CHECK(mean / reps == doctest::Approx(expect).epsilon(0.05));
  }
  SUBCASE("closed-form mean defined only for sigma in (0, 1/2)") {
    CHECK_THROWS_AS((void)expected_Ln(10, {0.6, 1.0}), std::domain_error);
    CHECK_THROWS_AS((void)expected_Ln(10, {0.5, 1.0}), std::domain_error);
    CHECK_THROWS_AS((void)expected_Ln(10, {0.0, 1.0}), std::domain_error);
    CHECK(expected_Ln(10, {0.49, 1.0}) > 0.0);
  }
  SUBCASE("proxy scale grows with n") {
    const PYParams params{0.25, 1.0};
    CHECK(expected_Ln(100, params) > expected_Ln(10, params));
  }
}

TEST_CASE("exceedance table") {
  RngStream rng(45);
  const PYParams params{0.25, 1.0};
  std::vector<std::uint64_t> thr{1, 2, 5, 10, 50};
  auto rep = exceedance_table(rng, 50, params, thr, 20000, 1000000);
  REQUIRE(rep.mn_exceedance.size() == thr.size());
  REQUIRE(rep.ln_exceedance.size() == thr.size());
  SUBCASE("probabilities are monotone in the threshold") {
    for (std::size_t i = 1; i < thr.size(); ++i) {
      CHECK(rep.mn_exceedance[i] <= rep.mn_exceedance[i - 1]);
      CHECK(rep.ln_exceedance[i] <= rep.ln_exceedance[i - 1]);
    }
    for (double p : rep.mn_exceedance) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
    for (bool v : rep.via_proxy) CHECK(!v);
  }
  SUBCASE("direct estimate matches the raw draws") {
    int over = 0;
    for (double d : rep.mn_draws)
      if (d > 5.0) ++over;
    CHECK(rep.mn_exceedance[2] ==
          doctest::Approx(static_cast<double>(over) / rep.mn_draws.size()));
  }
  SUBCASE("thresholds beyond the cap fall back to the proxy") {
    std::vector<std::uint64_t> far{2, 100};
    auto rep2 = exceedance_table(rng, 50, params, far, 2000, 10);
    CHECK(!rep2.via_proxy[0]);
    CHECK(rep2.via_proxy[1]);
    CHECK(std::isnan(rep2.mn_exceedance[1]));
    CHECK(!std::isnan(rep2.ln_exceedance[1]));
  }
  SUBCASE("dirichlet case still reports Mn but no Ln draws") {
    auto repdp = exceedance_table(rng, 20, {0.0, 1.0}, {1, 3}, 2000, 100000);
    CHECK(repdp.ln_draws.empty());
    CHECK(repdp.mn_exceedance[0] > 0.0);
  }
}
