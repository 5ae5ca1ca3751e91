#include "doctest.h"

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pymix/model.hpp"
#include "pymix/rng.hpp"
#include "pymix/samplers.hpp"

using namespace pymix;

namespace {

// Stub model whose kernel is a lookup table on rounded (x, atom) pairs.
// Atoms are identified by value; the conjugate refresh maps a member set to
// the sum of its values, so clusters stay identifiable across a sweep when
// observation values are distinct powers of two.
struct LookupModel {
  using Obs = double;
  using Atom = double;

  std::map<std::pair<long, long>, double> table;
  double prior_atom = 0.0;
  long marg_x = -1;       // marginal likelihood is marg_val at this x,
  double marg_val = 0.1;  // negligible elsewhere

  double kernel(double x, double a) const {
    auto it = table.find({std::lround(x), std::lround(a)});
    return it != table.end() ? it->second : 1e-300;
  }
  double log_kernel(double x, double a) const { return std::log(kernel(x, a)); }
  double marginal_likelihood(double x) const {
    return std::lround(x) == marg_x ? marg_val : 1e-300;
  }
  double log_marginal_likelihood(double x) const {
    return std::log(marginal_likelihood(x));
  }
  Atom prior_draw(RngStream&) const { return prior_atom; }
  Atom posterior_draw(RngStream&, std::span<const double> xs) const {
    double s = 0.0;
    for (double v : xs) s += v;
    return s;
  }
};

// Bitmask stub: an atom "contains" an observation when their integer bits
// overlap. Containment gives kernel 1, everything else is negligible, which
// pins each observation to its own cluster.
struct MaskModel {
  using Obs = double;
  using Atom = double;

  double kernel(double x, double a) const {
    return (std::lround(x) & std::lround(a)) ? 1.0 : 1e-300;
  }
  double log_kernel(double x, double a) const { return std::log(kernel(x, a)); }
  double marginal_likelihood(double) const { return 1e-300; }
  double log_marginal_likelihood(double) const { return std::log(1e-300); }
  Atom prior_draw(RngStream&) const { return 0.0; }
  Atom posterior_draw(RngStream&, std::span<const double> xs) const {
    double s = 0.0;
    for (double v : xs) s += v;
    return s;
  }
};

std::vector<double> two_gaussian_data(RngStream& rng, int n) {
  std::vector<double> data(n);
  for (auto& x : data)
    x = rng.uniform() < 0.75 ? -2.5 + rng.normal() : 2.5 + rng.normal();
  return data;
}

const NIGBase kBase{0.0, 0.2, 2.0, 1.0};

}  // namespace

TEST_CASE("measure summary density arithmetic") {
  // p0 = 0.5, one auxiliary atom of full weight with K = 0.2, one fixed atom
  // with p1 = 0.5 and K = 0.3: density 0.5*0.2 + 0.5*0.3 = 0.25, and the
  // implied allocation probabilities are (0.4, 0.6).
  LookupModel model;
  model.table[{1, 5}] = 0.2;
  model.table[{1, 7}] = 0.3;
  MeasureSummary<LookupModel> summary;
  summary.p0 = 0.5;
  summary.aux_weights = {1.0};
  summary.aux_atoms = {5.0};
  summary.fixed_weights = {0.5};
  summary.fixed_atoms = {7.0};
  CHECK(summary.density(model, 1.0) == doctest::Approx(0.25));
  const double w_aux = 0.5 * 1.0 * 0.2, w_fix = 0.5 * 0.3;
  CHECK(w_aux / (w_aux + w_fix) == doctest::Approx(0.4));
  CHECK(w_fix / (w_aux + w_fix) == doctest::Approx(0.6));
}

TEST_CASE("conditional reallocation weights, statistically") {
  // Two observations, one fixed cluster. Observation 1 is pinned to the fixed
  // atom; observation 0 sees K = 0.2 on the auxiliary atom and K = 0.3 on the
  // fixed one. Conditional on the Dirichlet weights p = (p0, p1) the chance of
  // picking the auxiliary atom is 0.2 p0 / (0.2 p0 + 0.3 p1); the marginal
  // chance integrates that over p0 ~ Beta(theta + sigma, n1 - sigma).
  LookupModel model;
  model.prior_atom = 5.0;
  model.table[{1, 5}] = 0.2;
  model.table[{1, 7}] = 0.3;
  model.table[{2, 7}] = 1.0;
  const PYParams params{0.5, 1.0};
  const std::vector<double> data{1.0, 2.0};

  RngStream oracle_rng(61);
  const int oracle_reps = 2000000;
  double oracle = 0.0;
  for (int i = 0; i < oracle_reps; ++i) {
    const double p0 = oracle_rng.beta(1.5, 1.5);
    oracle += 0.2 * p0 / (0.2 * p0 + 0.3 * (1.0 - p0));
  }
  oracle /= oracle_reps;

  RngStream base(62);
  const int reps = 200000;
  int split = 0;
  for (int rep = 1; rep <= reps; ++rep) {
    AllocationState<LookupModel> state;
    state.labels = {0, 0};
    state.counts = {2};
    state.atoms = {7.0};
    (void)ics_step(model, base, static_cast<std::uint64_t>(rep), state, data,
                   params, 1);
    state.check(2);
    if (state.k() == 2) ++split;
  }
  CHECK(static_cast<double>(split) / reps == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("sequential urn reallocation weights") {
  // theta=1, sigma=0.5, removing the first observation leaves clusters of
  // sizes (2, 1); with kernel values (0.3, 0.2) and marginal 0.1 the
  // unnormalized weights are (0.45, 0.10, 0.20) -> (0.6, 0.1333, 0.2667).
  // The probe observation (value 1) comes last so every pinned cluster keeps
  // at least one member when a pinned observation is temporarily removed.
  LookupModel model;
  model.marg_x = 1;
  model.marg_val = 0.1;
  model.table[{1, 6}] = 0.3;
  model.table[{1, 8}] = 0.2;
  model.table[{2, 6}] = 1.0;
  model.table[{4, 6}] = 1.0;
  model.table[{8, 8}] = 1.0;
  const PYParams params{0.5, 1.0};
  const std::vector<double> data{2.0, 4.0, 8.0, 1.0};

  RngStream base(63);
  const int reps = 200000;
  int join_a = 0, join_b = 0, fresh = 0;
  for (int rep = 1; rep <= reps; ++rep) {
    AllocationState<LookupModel> state;
    state.labels = {0, 0, 1, 1};
    state.counts = {2, 2};
    state.atoms = {6.0, 8.0};
    marginal_step(model, base, static_cast<std::uint64_t>(rep), state, data,
                  params);
    state.check(4);
    if (state.labels[3] == state.labels[0])
      ++join_a;
    else if (state.labels[3] == state.labels[2])
      ++join_b;
    else
      ++fresh;
  }
  CHECK(static_cast<double>(join_a) / reps == doctest::Approx(0.6).epsilon(0.01));
  CHECK(static_cast<double>(join_b) / reps ==
        doctest::Approx(0.4 / 3.0).epsilon(0.03));
  CHECK(static_cast<double>(fresh) / reps ==
        doctest::Approx(0.8 / 3.0).epsilon(0.02));
}

TEST_CASE("independent slice bound sequence") {
  // sigma=0, theta=1: xi halves each step (1/2, 1/4, 1/8, ...)
  const PYParams dp{0.0, 1.0};
  double xi = xi_first(dp);
  CHECK(xi == doctest::Approx(0.5));
  xi = xi_next(xi, 1, dp);
  CHECK(xi == doctest::Approx(0.25));
  xi = xi_next(xi, 2, dp);
  CHECK(xi == doctest::Approx(0.125));
  // general first term (1 - sigma) / (theta + 1)
  CHECK(xi_first({0.4, 3.0}) == doctest::Approx(0.6 / 4.0));
}

TEST_CASE("slice stick refresh follows the posterior beta law") {
  // Two pinned clusters of sizes 3 and 2 (observations never move): the
  // refreshed sticks are v1 ~ Beta(1-sigma+3, theta+sigma+2) and
  // v2 ~ Beta(1-sigma+2, theta+2 sigma).
  MaskModel model;
  const PYParams params{0.2, 2.0};
  const std::vector<double> data{1.0, 2.0, 4.0, 8.0, 16.0};
  for (bool dependent : {true, false}) {
    CAPTURE(dependent);
    SliceState<MaskModel> state;
    state.alloc.labels = {0, 0, 0, 1, 1};
    state.alloc.counts = {3, 2};
    state.alloc.atoms = {7.0, 24.0};
    state.v = {0.5, 0.5};
    state.p = {0.5, 0.25};
    RngStream base(dependent ? 64 : 65);
    const int reps = 20000;
    double v0 = 0.0, v1 = 0.0;
    for (int rep = 1; rep <= reps; ++rep) {
      auto info = slice_step(model, base, static_cast<std::uint64_t>(rep), state,
                             data, params, dependent, 100000);
      CHECK(!info.cap_hit);
      state.alloc.check(5);
      REQUIRE(state.alloc.k() == 2);
      v0 += state.v[0];
      v1 += state.v[1];
    }
    CHECK(v0 / reps == doctest::Approx(3.8 / 8.0).epsilon(0.01));
    CHECK(v1 / reps == doctest::Approx(2.8 / 5.2).epsilon(0.01));
  }
}

TEST_CASE("slice extension respects the jump cap") {
  MaskModel model;
  const PYParams params{0.3, 5.0};
  const std::vector<double> data{1.0, 2.0, 4.0};
  SliceState<MaskModel> state;
  state.alloc.labels = {0, 0, 0};
  state.alloc.counts = {3};
  state.alloc.atoms = {7.0};
  state.v = {1e-3};
  state.p = {1e-3};
  RngStream base(66);
  auto info = slice_step(model, base, 1, state, data, params, true, 1);
  CHECK(info.cap_hit);
  CHECK(info.jumps_drawn == 1);
  state.alloc.check(3);
  CHECK_THROWS_AS((void)slice_step(model, base, 2, state, data, params, true, 0),
                  std::invalid_argument);
}

TEST_CASE("single-observation steps keep the state consistent") {
  UniNormalModel model(kBase);
  const std::vector<double> data{0.7};
  const PYParams params{0.3, 1.0};
  RngStream base(67);
  SUBCASE("conditional") {
    auto init = base.substream(~0ULL);
    auto state = init_single_cluster(model, init, data);
    for (int it = 1; it <= 50; ++it) {
      auto summary =
          ics_step(model, base, static_cast<std::uint64_t>(it), state, data,
                   params, 5);
      state.check(1);
      CHECK(state.k() == 1);
      double wsum = summary.p0;
      for (double w : summary.fixed_weights) wsum += w;
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
      double asum = 0.0;
      for (double w : summary.aux_weights) asum += w;
      CHECK(asum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("sequential urn") {
    auto init = base.substream(~0ULL);
    auto state = init_single_cluster(model, init, data);
    for (int it = 1; it <= 50; ++it) {
      marginal_step(model, base, static_cast<std::uint64_t>(it), state, data,
                    params);
      state.check(1);
      CHECK(state.k() == 1);
    }
  }
  SUBCASE("slice variants") {
    for (bool dependent : {true, false}) {
      auto init = base.substream(~0ULL, dependent ? 1 : 2);
      auto state = init_slice(model, init, data, params);
      for (int it = 1; it <= 50; ++it) {
        (void)slice_step(model, base, static_cast<std::uint64_t>(it), state,
                         data, params, dependent, 100000);
        // empty sticks below the occupied one are retained by design
        state.alloc.check(1, true);
        CHECK(state.alloc.occupied() == 1);
        CHECK(state.v.size() == state.alloc.atoms.size());
      }
    }
  }
}

TEST_CASE("chain driver") {
  UniNormalModel model(kBase);
  RngStream data_rng(68);
  const auto data = two_gaussian_data(data_rng, 60);
  std::vector<double> grid;
  for (int g = 0; g < 64; ++g) grid.push_back(-8.0 + 16.0 * g / 63.0);

  SUBCASE("trace shape and sanity for every algorithm") {
    for (auto alg : {Algorithm::kIcs, Algorithm::kMarginal,
                     Algorithm::kSliceDependent, Algorithm::kSliceIndependent}) {
      ChainConfig config;
      config.algorithm = alg;
      config.params = {0.25, 1.0};
      config.iterations = 60;
      config.burnin = 20;
      config.seed = 99;
      auto trace = run_chain(model, config, data, grid);
      REQUIRE(trace.k.size() == 40);
      REQUIRE(trace.deviance.size() == 40);
      REQUIRE(trace.density.size() == 40);
      const bool is_slice = alg == Algorithm::kSliceDependent ||
                            alg == Algorithm::kSliceIndependent;
      for (std::size_t i = 0; i < trace.k.size(); ++i) {
        CHECK(trace.k[i] >= 1);
        CHECK(std::isfinite(trace.deviance[i]));
        CHECK(trace.seconds[i] >= 0.0);
        if (!is_slice) CHECK(trace.jumps[i] == 0);
        REQUIRE(trace.density[i].size() == grid.size());
        // each realization is a density: trapezoid mass close to 1
        double mass = 0.0;
        for (std::size_t g = 1; g < grid.size(); ++g)
          mass += 0.5 * (trace.density[i][g] + trace.density[i][g - 1]) *
                  (grid[g] - grid[g - 1]);
        CHECK(mass == doctest::Approx(1.0).epsilon(0.02));
      }
    }
  }
  SUBCASE("bad configurations are rejected") {
    ChainConfig config;
    config.iterations = 10;
    config.burnin = 10;
    CHECK_THROWS_AS((void)run_chain(model, config, data, grid),
                    std::invalid_argument);
    config.burnin = -1;
    CHECK_THROWS_AS((void)run_chain(model, config, data, grid),
                    std::invalid_argument);
    ChainConfig ok;
    ok.iterations = 5;
    ok.burnin = 1;
    std::vector<double> empty;
    CHECK_THROWS_AS((void)run_chain(model, ok, empty, grid),
                    std::invalid_argument);
  }
}

TEST_CASE("conditional sampler is thread-count invariant") {
  UniNormalModel model(kBase);
  RngStream data_rng(69);
  const auto data = two_gaussian_data(data_rng, 150);
  std::vector<double> grid;
  for (int g = 0; g < 32; ++g) grid.push_back(-6.0 + 12.0 * g / 31.0);
  ChainConfig config;
  config.algorithm = Algorithm::kIcs;
  config.params = {0.25, 1.0};
  config.iterations = 30;
  config.burnin = 5;
  config.seed = 7;
  config.threads = 1;
  auto t1 = run_chain(model, config, data, grid);
  config.threads = 8;
  auto t8 = run_chain(model, config, data, grid);
  REQUIRE(t1.k.size() == t8.k.size());
  CHECK(t1.k == t8.k);
  CHECK(t1.deviance == t8.deviance);
  CHECK(t1.density == t8.density);
}
