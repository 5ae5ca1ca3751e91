#include "pymix/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pymix {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

UniNormalModel::UniNormalModel(NIGBase base) : base_(base) {
  if (!(base_.k0 > 0.0) || !(base_.a0 > 0.0) || !(base_.b0 > 0.0))
    throw std::invalid_argument("NIGBase: k0, a0, b0 must be positive");
}

double UniNormalModel::log_kernel(double x, const Atom& atom) const {
  if (!(atom.var > 0.0)) throw std::invalid_argument("UniAtom: var must be positive");
  const double d = x - atom.mu;
  return -0.5 * (kLog2Pi + std::log(atom.var)) - 0.5 * d * d / atom.var;
}

double UniNormalModel::kernel(double x, const Atom& atom) const {
  return std::exp(log_kernel(x, atom));
}

UniAtom UniNormalModel::prior_draw(RngStream& rng) const {
  const double var = 1.0 / rng.gamma(base_.a0, base_.b0);
  const double mu = base_.m0 + rng.normal() * std::sqrt(var / base_.k0);
  return {mu, var};
}

UniAtom UniNormalModel::posterior_draw(RngStream& rng,
                                       std::span<const double> data) const {
  if (data.empty()) return prior_draw(rng);
  const double n = static_cast<double>(data.size());
  double mean = 0.0;
  for (double x : data) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : data) ss += (x - mean) * (x - mean);
  const double kn = base_.k0 + n;
  const double mn = (base_.k0 * base_.m0 + n * mean) / kn;
  const double an = base_.a0 + 0.5 * n;
  const double dn = mean - base_.m0;
  const double bn = base_.b0 + 0.5 * ss + 0.5 * base_.k0 * n * dn * dn / kn;
  const double var = 1.0 / rng.gamma(an, bn);
  const double mu = mn + rng.normal() * std::sqrt(var / kn);
  return {mu, var};
}

double UniNormalModel::log_marginal_likelihood(double x) const {
  const double nu = 2.0 * base_.a0;
  const double s2 = base_.b0 * (1.0 + 1.0 / base_.k0) / base_.a0;
  const double d = x - base_.m0;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * std::numbers::pi * s2) -
         0.5 * (nu + 1.0) * std::log1p(d * d / (nu * s2));
}

double UniNormalModel::marginal_likelihood(double x) const {
  return std::exp(log_marginal_likelihood(x));
}

MvNormalModel::MvNormalModel(NIWBase base) : base_(std::move(base)) {
  const auto d = base_.m0.size();
  if (d < 1) throw std::invalid_argument("NIWBase: empty location");
  if (!(base_.k0 > 0.0)) throw std::invalid_argument("NIWBase: k0 must be positive");
  if (!(base_.nu0 > static_cast<double>(d) - 1.0))
    throw std::invalid_argument("NIWBase: nu0 must exceed dim-1");
  if (base_.S0.rows() != d || base_.S0.cols() != d)
    throw std::invalid_argument("NIWBase: S0 dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(base_.S0);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("NIWBase: S0 not positive definite");
}

double MvNormalModel::log_kernel(const Obs& x, const Atom& atom) const {
  const auto d = atom.mu.size();
  if (x.size() != d || atom.cov.rows() != d || atom.cov.cols() != d)
    throw std::invalid_argument("MvAtom: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(atom.cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("MvAtom: cov not positive definite");
  const Eigen::VectorXd diff = x - atom.mu;
  const Eigen::VectorXd z = llt.matrixL().solve(diff);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    logdet += std::log(llt.matrixL()(i, i));
  return -0.5 * static_cast<double>(d) * kLog2Pi - logdet - 0.5 * z.squaredNorm();
}

double MvNormalModel::kernel(const Obs& x, const Atom& atom) const {
  return std::exp(log_kernel(x, atom));
}

MvAtom MvNormalModel::niw_draw(RngStream& rng, const Eigen::VectorXd& m, double k,
                               double nu, const Eigen::MatrixXd& S) const {
  const auto d = m.size();
  // Sigma ~ IW(nu, S): invert a Wishart(nu, S^-1) draw built by Bartlett
  // decomposition.
  Eigen::LLT<Eigen::MatrixXd> lltS(S);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    A(i, i) = std::sqrt(2.0 * rng.gamma(0.5 * (nu - static_cast<double>(i)), 1.0));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  // W = C A A^T C^T with C C^T = S^-1, C = L^-T. Then
  // Sigma = W^-1 = (A^-1 L^T)^T (A^-1 L^T).
  Eigen::MatrixXd Ainv =
      A.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd B = Ainv * Eigen::MatrixXd(lltS.matrixL()).transpose();
  Eigen::MatrixXd Sigma = B.transpose() * B;
  Eigen::LLT<Eigen::MatrixXd> lltSig(Sigma);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = rng.normal();
  Eigen::VectorXd mu = m + Eigen::MatrixXd(lltSig.matrixL()) * z / std::sqrt(k);
  return {std::move(mu), std::move(Sigma)};
}

MvAtom MvNormalModel::prior_draw(RngStream& rng) const {
  return niw_draw(rng, base_.m0, base_.k0, base_.nu0, base_.S0);
}

MvAtom MvNormalModel::posterior_draw(RngStream& rng,
                                     std::span<const Obs> data) const {
  if (data.empty()) return prior_draw(rng);
  const auto d = base_.m0.size();
  const double n = static_cast<double>(data.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : data) {
    if (x.size() != d) throw std::invalid_argument("posterior_draw: dim mismatch");
    mean += x;
  }
  mean /= n;
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : data) {
    Eigen::VectorXd c = x - mean;
    scatter += c * c.transpose();
  }
  const double kn = base_.k0 + n;
  const Eigen::VectorXd mn = (base_.k0 * base_.m0 + n * mean) / kn;
  const double nun = base_.nu0 + n;
  const Eigen::VectorXd dm = mean - base_.m0;
  const Eigen::MatrixXd Sn =
      base_.S0 + scatter + (base_.k0 * n / kn) * (dm * dm.transpose());
  return niw_draw(rng, mn, kn, nun, Sn);
}

double MvNormalModel::log_marginal_likelihood(const Obs& x) const {
  const auto d = base_.m0.size();
  if (x.size() != d)
    throw std::invalid_argument("marginal_likelihood: dimension mismatch");
  const double dd = static_cast<double>(d);
  const double nu = base_.nu0 - dd + 1.0;
  const Eigen::MatrixXd scale =
      base_.S0 * ((base_.k0 + 1.0) / (base_.k0 * nu));
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  const Eigen::VectorXd z = llt.matrixL().solve(x - base_.m0);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    logdet += std::log(llt.matrixL()(i, i));
  return std::lgamma(0.5 * (nu + dd)) - std::lgamma(0.5 * nu) -
         0.5 * dd * std::log(nu * std::numbers::pi) - logdet -
         0.5 * (nu + dd) * std::log1p(z.squaredNorm() / nu);
}

double MvNormalModel::marginal_likelihood(const Obs& x) const {
  return std::exp(log_marginal_likelihood(x));
}

}  // namespace pymix
