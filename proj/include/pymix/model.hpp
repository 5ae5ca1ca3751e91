#ifndef PYMIX_MODEL_HPP
#define PYMIX_MODEL_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pymix/rng.hpp"

namespace pymix {

// Univariate Gaussian kernel with conjugate normal-inverse-gamma base measure:
//   var ~ InvGamma(a0, b0),  mean | var ~ Normal(m0, var / k0).
struct NIGBase {
  double m0 = 0.0;
  double k0 = 1.0;
  double a0 = 1.0;
  double b0 = 1.0;
};

struct UniAtom {
  double mu = 0.0;
  double var = 1.0;
};

class UniNormalModel {
 public:
  using Atom = UniAtom;
  using Obs = double;

  explicit UniNormalModel(NIGBase base);

  const NIGBase& base() const { return base_; }

  double log_kernel(double x, const Atom& atom) const;
  double kernel(double x, const Atom& atom) const;
  Atom prior_draw(RngStream& rng) const;
  Atom posterior_draw(RngStream& rng, std::span<const double> data) const;
  // Prior predictive density: Student-t with df 2*a0, location m0,
  // squared scale b0*(1+1/k0)/a0.
  double marginal_likelihood(double x) const;
  double log_marginal_likelihood(double x) const;

 private:
  NIGBase base_;
};

// d-variate Gaussian kernel with conjugate normal-inverse-Wishart base:
//   Sigma ~ IW(nu0, S0),  mean | Sigma ~ Normal(m0, Sigma / k0).
struct NIWBase {
  Eigen::VectorXd m0;
  double k0 = 1.0;
  double nu0 = 1.0;
  Eigen::MatrixXd S0;
};

struct MvAtom {
  Eigen::VectorXd mu;
  Eigen::MatrixXd cov;
};

class MvNormalModel {
 public:
  using Atom = MvAtom;
  using Obs = Eigen::VectorXd;

  explicit MvNormalModel(NIWBase base);

  const NIWBase& base() const { return base_; }
  int dim() const { return static_cast<int>(base_.m0.size()); }

  double log_kernel(const Obs& x, const Atom& atom) const;
  double kernel(const Obs& x, const Atom& atom) const;
  Atom prior_draw(RngStream& rng) const;
  Atom posterior_draw(RngStream& rng, std::span<const Obs> data) const;
  // Prior predictive: multivariate t with df nu0-d+1, location m0,
  // scale S0*(k0+1)/(k0*(nu0-d+1)).
  double marginal_likelihood(const Obs& x) const;
  double log_marginal_likelihood(const Obs& x) const;

 private:
  MvAtom niw_draw(RngStream& rng, const Eigen::VectorXd& m, double k, double nu,
                  const Eigen::MatrixXd& S) const;
  NIWBase base_;
};

}  // namespace pymix

#endif
