#ifndef PYMIX_RNG_HPP
#define PYMIX_RNG_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace pymix {

// Splittable counter-keyed random stream. A stream is fully determined by its
// (seed, stream_id) key: two streams built from the same key produce identical
// variate sequences, regardless of thread placement. Substreams are derived by
// hashing the key with caller-supplied indices, so per-iteration/per-unit
// streams can be spawned without shared mutable state.
//
// The engine is xoshiro256++ with splitmix64 state expansion.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  // Pure function of (seed, stream_id, a, b); does not advance this stream.
  RngStream substream(std::uint64_t a, std::uint64_t b = 0) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  // Uniform on (0,1); never returns an exact endpoint.
  double uniform();
  double uniform(double lo, double hi);
  double normal();                       // standard normal, Box-Muller
  double exponential();                  // rate 1
  double gamma(double shape, double rate);
  double beta(double a, double b);

  // One-sided (positive) stable with Laplace transform exp(-lambda^sigma),
  // sigma in (0,1). Kanter's exact method.
  double stable_onesided(double sigma);
  // Density proportional to exp(-tilt*t) f_sigma(t). Exact block rejection.
  double exp_tilted_stable(double sigma, double tilt);
  // Density proportional to t^(-theta) f_sigma(t), theta >= 0.
  double tilted_stable(double sigma, double theta);

 private:
  std::uint64_t seed_, stream_id_;
  std::uint64_t s_[4];
};

// Draw on the simplex; every alpha component must be > 0.
std::vector<double> dirichlet_draw(RngStream& rng, std::span<const double> alpha);

// Index i with probability w_i / sum(w); weights nonnegative, not all zero.
// Returned index is 0-based.
std::size_t categorical_draw(RngStream& rng, std::span<const double> weights);

// Categorical from unnormalized log-weights (max-subtraction in place).
// Entries may be -inf; throws std::domain_error if all are.
std::size_t categorical_draw_log(RngStream& rng, std::span<const double> logw);

}  // namespace pymix

#endif
