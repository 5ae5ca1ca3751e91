#include "doctest.h"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pymix/model.hpp"
#include "pymix/rng.hpp"

using namespace pymix;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, 0.5 * eps, depth - 1) +
         simpson(f, m, b, fm, frm, fb, 0.5 * eps, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double eps = 1e-10) {
  const int panels = 32;
  double total = 0.0;
  double lo = a;
  for (int i = 1; i <= panels; ++i) {
    const double hi = a + (b - a) * static_cast<double>(i) / panels;
    const double m = 0.5 * (lo + hi);
    total += simpson(f, lo, hi, f(lo), f(m), f(hi), eps / panels, 40);
    lo = hi;
  }
  return total;
}

const NIGBase kPaperBase{0.0, 0.2, 2.0, 1.0};

}  // namespace

TEST_CASE("univariate kernel density") {
  UniNormalModel model(kPaperBase);
  CHECK(model.kernel(0.0, {0.0, 1.0}) == doctest::Approx(0.398942).epsilon(1e-5));
  // Gaussian symmetry about the mean
  for (double x : {-3.0, -0.5, 1.7}) {
    const UniAtom atom{0.8, 2.5};
    CHECK(model.kernel(x, atom) ==
          doctest::Approx(model.kernel(2.0 * atom.mu - x, atom)));
  }
  CHECK_THROWS_AS((void)model.kernel(0.0, {0.0, -1.0}), std::invalid_argument);
  // integrates to 1 on a grid
  const UniAtom atom{1.0, 4.0};
  const double mass = integrate([&](double x) { return model.kernel(x, atom); },
                                1.0 - 24.0, 1.0 + 24.0);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("bivariate kernel density") {
  NIWBase base;
  base.m0 = Eigen::VectorXd::Zero(2);
  base.k0 = 2.0;
  base.nu0 = 5.0;
  base.S0 = Eigen::MatrixXd::Identity(2, 2);
  MvNormalModel model(base);
  MvAtom atom{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  CHECK(model.kernel(Eigen::VectorXd::Zero(2), atom) ==
        doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-6));
  Eigen::VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS((void)model.kernel(bad, atom), std::invalid_argument);
  MvAtom notpd{Eigen::VectorXd::Zero(2), -Eigen::MatrixXd::Identity(2, 2)};
  CHECK_THROWS_AS((void)model.kernel(Eigen::VectorXd::Zero(2), notpd),
                  std::invalid_argument);
}

TEST_CASE("prior draws follow the base measure") {
  RngStream rng(11);
  SUBCASE("inverse-gamma variance mean") {
    UniNormalModel model(kPaperBase);  // E[var] = b0/(a0-1) = 1
    const int reps = 100000;
    double vmean = 0.0;
    for (int i = 0; i < reps; ++i) vmean += model.prior_draw(rng).var;
    CHECK(vmean / reps == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("mean concentrates at m0 for large k0") {
    UniNormalModel model(NIGBase{5.0, 1e8, 2.0, 1.0});
    double mmean = 0.0;
    const int reps = 20000;
    for (int i = 0; i < reps; ++i) mmean += model.prior_draw(rng).mu;
    CHECK(mmean / reps == doctest::Approx(5.0).epsilon(1e-3));
  }
  SUBCASE("NIW draws are SPD") {
    NIWBase base;
    base.m0 = Eigen::VectorXd::Zero(2);
    base.k0 = 2.0;
    base.nu0 = 5.0;
    base.S0 = Eigen::MatrixXd::Identity(2, 2);
    MvNormalModel model(base);
    for (int i = 0; i < 100000; ++i) {
      auto atom = model.prior_draw(rng);
      Eigen::LLT<Eigen::MatrixXd> llt(atom.cov);
      REQUIRE(llt.info() == Eigen::Success);
    }
  }
}

TEST_CASE("conjugate posterior draws") {
  RngStream rng(12);
  UniNormalModel model(kPaperBase);
  SUBCASE("empty data equals prior in distribution") {
    const int reps = 100000;
    double post = 0.0, prior = 0.0;
    for (int i = 0; i < reps; ++i) {
      post += model.posterior_draw(rng, {}).var;
      prior += model.prior_draw(rng).var;
    }
    CHECK(post / reps == doctest::Approx(prior / reps).epsilon(0.03));
  }
  SUBCASE("single-observation location update") {
    // m' = (k0 m0 + n xbar)/(k0 + n) = 2/1.2
    std::vector<double> data{2.0};
    const int reps = 200000;
    double mmean = 0.0;
    for (int i = 0; i < reps; ++i)
      mmean += model.posterior_draw(rng, data).mu;
    CHECK(mmean / reps == doctest::Approx(2.0 / 1.2).epsilon(0.01));
  }
  SUBCASE("posterior concentration on synthetic data") {
    std::vector<double> data(10000);
    for (auto& x : data) x = 3.0 + rng.normal();
    double mmean = 0.0;
    const int reps = 2000;
    for (int i = 0; i < reps; ++i)
      mmean += model.posterior_draw(rng, data).mu;
    CHECK(std::abs(mmean / reps - 3.0) < 0.05);
  }
  SUBCASE("conjugacy coherence: batch vs sequential base update") {
    // applying D then D' through the updated base must match D union D'
    std::vector<double> d1{1.0, 2.5, -0.3};
    std::vector<double> d2{0.7, 4.1};
    // updated base after d1, via the closed-form NIG update
    const double n = 3.0, xbar = (1.0 + 2.5 - 0.3) / 3.0;
    double ss = 0.0;
    for (double x : d1) ss += (x - xbar) * (x - xbar);
    NIGBase upd;
    upd.k0 = kPaperBase.k0 + n;
    upd.m0 = (kPaperBase.k0 * kPaperBase.m0 + n * xbar) / upd.k0;
    upd.a0 = kPaperBase.a0 + 0.5 * n;
    upd.b0 = kPaperBase.b0 + 0.5 * ss +
             0.5 * kPaperBase.k0 * n * (xbar - kPaperBase.m0) * (xbar - kPaperBase.m0) /
                 upd.k0;
    UniNormalModel staged(upd);
    std::vector<double> all{1.0, 2.5, -0.3, 0.7, 4.1};
    const int reps = 100000;
    double m_batch = 0.0, v_batch = 0.0, m_staged = 0.0, v_staged = 0.0;
    for (int i = 0; i < reps; ++i) {
      auto a = model.posterior_draw(rng, all);
      auto b = staged.posterior_draw(rng, d2);
      m_batch += a.mu;
      v_batch += a.var;
      m_staged += b.mu;
      v_staged += b.var;
    }
    CHECK(m_batch / reps == doctest::Approx(m_staged / reps).epsilon(0.02));
    CHECK(v_batch / reps == doctest::Approx(v_staged / reps).epsilon(0.03));
  }
}

TEST_CASE("marginal likelihood") {
  UniNormalModel model(kPaperBase);
  SUBCASE("closed form at the center") {
    const double expect =
        std::tgamma(2.5) / (std::tgamma(2.0) * std::sqrt(4.0 * std::numbers::pi * 3.0));
    CHECK(model.marginal_likelihood(0.0) == doctest::Approx(expect).epsilon(1e-7));
    CHECK(model.marginal_likelihood(0.0) == doctest::Approx(0.21650).epsilon(1e-4));
  }
  SUBCASE("symmetry about m0") {
    UniNormalModel shifted(NIGBase{1.5, 0.2, 2.0, 1.0});
    for (double c : {0.3, 1.0, 4.2})
      CHECK(shifted.marginal_likelihood(1.5 + c) ==
            doctest::Approx(shifted.marginal_likelihood(1.5 - c)));
  }
  SUBCASE("agrees with 2-D quadrature of the NIG mixture") {
    // integrate K(x; mu, var) * NIG(mu, var) over var then mu, at x = 1
    const double x = 1.0;
    auto inner = [&](double mu) {
      return integrate(
          [&](double var) {
            const UniAtom atom{mu, var};
            UniNormalModel m(kPaperBase);
            const double b = kPaperBase.b0, a = kPaperBase.a0, k = kPaperBase.k0;
            const double ig = std::pow(b, a) / std::tgamma(a) *
                              std::pow(var, -a - 1.0) * std::exp(-b / var);
            const double nm = std::exp(-0.5 * k * mu * mu / var) /
                              std::sqrt(2.0 * std::numbers::pi * var / k);
            return m.kernel(x, atom) * ig * nm;
          },
          1e-4, 60.0);
    };
    const double quad = integrate(inner, -40.0, 40.0, 1e-8);
    CHECK(model.marginal_likelihood(x) == doctest::Approx(quad).epsilon(1e-4));
  }
  SUBCASE("integrates to 1 over a wide grid") {
    const double s = std::sqrt(3.0);  // predictive scale
    const double mass = integrate(
        [&](double x) { return model.marginal_likelihood(x); }, -12.0 * s,
        12.0 * s);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("NIW marginal is a proper density (grid check)") {
    NIWBase base;
    base.m0 = Eigen::VectorXd::Zero(2);
    base.k0 = 2.0;
    base.nu0 = 5.0;
    base.S0 = Eigen::MatrixXd::Identity(2, 2);
    MvNormalModel model2(base);
    double mass = 0.0;
    const int g = 200;
    const double lo = -15.0, hi = 15.0, h = (hi - lo) / g;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        Eigen::VectorXd p(2);
        p << lo + (i + 0.5) * h, lo + (j + 0.5) * h;
        mass += model2.marginal_likelihood(p) * h * h;
      }
    CHECK(mass == doctest::Approx(1.0).epsilon(0.01));
  }
}
