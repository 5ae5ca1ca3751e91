#include "pymix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pymix {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(x);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t x = mix_key(seed, stream_id);
  for (auto& s : s_) s = splitmix64(x);
}

RngStream RngStream::substream(std::uint64_t a, std::uint64_t b) const {
  return RngStream(seed_, mix_key(stream_id_, mix_key(a, b)));
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() {
  // 53-bit mantissa, shifted into (0,1)
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("gamma: shape and rate must be positive");
  if (shape < 1.0) {
    // boost: G(a) = G(a+1) * U^(1/a)
    double g = gamma(shape + 1.0, 1.0);
    return g * std::pow(uniform(), 1.0 / shape) / rate;
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double RngStream::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("beta: parameters must be positive");
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

double RngStream::stable_onesided(double sigma) {
  if (!(sigma > 0.0 && sigma < 1.0))
    throw std::invalid_argument("stable_onesided: sigma must be in (0,1)");
  // Kanter: S = (A(U)/E)^((1-sigma)/sigma), U ~ Unif(0,pi), E ~ Exp(1)
  const double u = uniform(0.0, std::numbers::pi);
  const double e = exponential();
  const double a = std::pow(std::sin(sigma * u), sigma) *
                   std::pow(std::sin((1.0 - sigma) * u), 1.0 - sigma) /
                   std::sin(u);
  // a here is A(u)^... raised stepwise to avoid overflow in intermediates
  const double logA = (std::log(a)) / (1.0 - sigma);
  return std::exp((1.0 - sigma) / sigma * (logA - std::log(e)));
}

double RngStream::exp_tilted_stable(double sigma, double tilt) {
  if (!(sigma > 0.0 && sigma < 1.0))
    throw std::invalid_argument("exp_tilted_stable: sigma must be in (0,1)");
  if (tilt < 0.0) throw std::invalid_argument("exp_tilted_stable: negative tilt");
  if (tilt == 0.0) return stable_onesided(sigma);
  // Block rejection: split into m blocks so per-block acceptance >= exp(-1).
  const double lam_sigma = std::pow(tilt, sigma);
  const std::uint64_t m =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(lam_sigma)));
  const double scale = std::pow(static_cast<double>(m), -1.0 / sigma);
  double total = 0.0;
  for (std::uint64_t block = 0; block < m; ++block) {
    for (;;) {
      const double s = scale * stable_onesided(sigma);
      if (exponential() > tilt * s) {  // accept w.p. exp(-tilt*s)
        total += s;
        break;
      }
    }
  }
  return total;
}

double RngStream::tilted_stable(double sigma, double theta) {
  if (!(sigma > 0.0 && sigma < 1.0))
    throw std::invalid_argument("tilted_stable: sigma must be in (0,1)");
  if (theta < 0.0)
    throw std::invalid_argument("tilted_stable: theta must be >= 0");
  if (theta == 0.0) return stable_onesided(sigma);
  // t^(-theta) = 1/Gamma(theta) Int lam^(theta-1) exp(-lam t) dlam, so drawing
  // lam^sigma ~ Gamma(theta/sigma, 1) and then the exp-tilted stable at lam is
  // an exact two-stage scheme.
  const double g = gamma(theta / sigma, 1.0);
  const double lam = std::pow(g, 1.0 / sigma);
  return exp_tilted_stable(sigma, lam);
}

std::vector<double> dirichlet_draw(RngStream& rng, std::span<const double> alpha) {
  if (alpha.empty()) throw std::invalid_argument("dirichlet_draw: empty alpha");
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0))
      throw std::invalid_argument("dirichlet_draw: nonpositive alpha component");
    out[i] = rng.gamma(alpha[i], 1.0);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

std::size_t categorical_draw(RngStream& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0)
      throw std::invalid_argument("categorical_draw: negative weight");
    total += w;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("categorical_draw: all weights zero");
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    u -= weights[i];
    if (u <= 0.0) return i;
  }
  return weights.size() - 1;
}

std::size_t categorical_draw_log(RngStream& rng, std::span<const double> logw) {
  if (logw.empty()) throw std::invalid_argument("categorical_draw_log: empty");
  const double mx = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(mx))
    throw std::domain_error("categorical_draw_log: degenerate weights");
  std::vector<double> w(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) w[i] = std::exp(logw[i] - mx);
  return categorical_draw(rng, w);
}

}  // namespace pymix
