#pragma once

// Transforms between the open simplex and the natural-parameter space, the
// log-Jacobian of the log-ratio map, and the Dirichlet, logistic-Dirichlet
// and logistic-normal log-densities.
//
// Concentration vectors are laid out (beta_0, beta_1, ..., beta_d) with the
// reference category first.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "dygauss/specfun.hpp"

namespace dygauss {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Interior point of the d-simplex. Stores pi_1..pi_d together with pi_0 so
/// that pi_0 keeps full relative precision when it is tiny.
class SimplexPoint {
 public:
  /// From (pi_1, ..., pi_d); pi_0 is implied as 1 - sum.
  static SimplexPoint from_probs(const Vector& probs) {
    return SimplexPoint(probs, 1.0 - probs.sum());
  }

  /// From all d+1 probabilities (pi_0 first). Must sum to one within 1e-10.
  static SimplexPoint from_full(const Vector& full) {
    if (full.size() < 2) throw std::domain_error("SimplexPoint: need at least two categories");
    if (std::abs(full.sum() - 1.0) > 1e-10)
      throw std::domain_error("SimplexPoint: probabilities must sum to one");
    return SimplexPoint(full.tail(full.size() - 1), full[0]);
  }

  SimplexPoint(Vector probs, double pi0) : probs_(std::move(probs)), pi0_(pi0) {
    if (probs_.size() < 1) throw std::domain_error("SimplexPoint: dimension must be >= 1");
    if (!(pi0_ > 0.0) || !std::isfinite(pi0_))
      throw std::domain_error("SimplexPoint: point lies on the simplex boundary (pi_0 <= 0)");
    for (Eigen::Index j = 0; j < probs_.size(); ++j)
      if (!(probs_[j] > 0.0) || !std::isfinite(probs_[j]))
        throw std::domain_error("SimplexPoint: point lies on the simplex boundary (pi_" +
                                std::to_string(j + 1) + " <= 0)");
  }

  Eigen::Index dim() const { return probs_.size(); }
  const Vector& probs() const { return probs_; }
  double pi0() const { return pi0_; }

  /// (pi_0, pi_1, ..., pi_d)
  Vector full() const {
    Vector out(dim() + 1);
    out[0] = pi0_;
    out.tail(dim()) = probs_;
    return out;
  }

 private:
  Vector probs_;
  double pi0_;
};

class NaturalParam {
 public:
  explicit NaturalParam(Vector theta) : theta_(std::move(theta)) {
    if (theta_.size() < 1) throw std::domain_error("NaturalParam: dimension must be >= 1");
    if (!theta_.allFinite()) throw std::domain_error("NaturalParam: entries must be finite");
  }

  Eigen::Index dim() const { return theta_.size(); }
  const Vector& theta() const { return theta_; }
  double operator[](Eigen::Index j) const { return theta_[j]; }

 private:
  Vector theta_;
};

/// log(1 + sum_l exp(theta_l)), computed with the max-shift.
inline double log1p_sum_exp(const Vector& theta) {
  const double m = std::max(0.0, theta.maxCoeff());
  return m + std::log(std::exp(-m) + (theta.array() - m).exp().sum());
}

inline SimplexPoint logistic(const NaturalParam& theta) {
  const double m = std::max(0.0, theta.theta().maxCoeff());
  const Vector shifted = (theta.theta().array() - m).exp();
  const double base = std::exp(-m);
  const double denom = base + shifted.sum();
  return SimplexPoint(shifted / denom, base / denom);
}

inline NaturalParam log_ratio(const SimplexPoint& pi) {
  return NaturalParam((pi.probs().array().log() - std::log(pi.pi0())).matrix());
}

/// log |J|^{-1} of the log-ratio map at theta, i.e. sum_{j=0..d} log pi_j.
inline double jacobian_logdet_inv(const NaturalParam& theta) {
  const double d = static_cast<double>(theta.dim());
  return theta.theta().sum() - (d + 1.0) * log1p_sum_exp(theta.theta());
}

namespace detail {

inline void require_concentration(const Vector& beta, Eigen::Index d, const char* fn) {
  if (beta.size() != d + 1)
    throw std::invalid_argument(std::string(fn) + ": concentration vector must have length d+1");
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (!(beta[j] > 0.0) || !std::isfinite(beta[j]))
      throw std::domain_error(std::string(fn) + ": concentration parameters must be positive");
}

/// log Gamma(sum beta) - sum log Gamma(beta_j).
inline double log_dirichlet_normalizer(const Vector& beta) {
  double acc = log_gamma(beta.sum());
  for (Eigen::Index j = 0; j < beta.size(); ++j) acc -= log_gamma(beta[j]);
  return acc;
}

}  // namespace detail

inline double dirichlet_logpdf(const SimplexPoint& pi, const Vector& beta) {
  detail::require_concentration(beta, pi.dim(), "dirichlet_logpdf");
  double acc = detail::log_dirichlet_normalizer(beta) + (beta[0] - 1.0) * std::log(pi.pi0());
  for (Eigen::Index j = 0; j < pi.dim(); ++j) acc += (beta[j + 1] - 1.0) * std::log(pi.probs()[j]);
  return acc;
}

/// Logistic-Dirichlet log-density of theta = log(pi/pi_0) when pi ~ Dirichlet(beta).
inline double ld_logpdf(const NaturalParam& theta, const Vector& beta) {
  detail::require_concentration(beta, theta.dim(), "ld_logpdf");
  return detail::log_dirichlet_normalizer(beta) + beta.tail(theta.dim()).dot(theta.theta()) -
         beta.sum() * log1p_sum_exp(theta.theta());
}

/// Multivariate normal log-density using a Cholesky factor of Sigma.
inline double gaussian_logpdf(const Vector& x, const Vector& mu, const Matrix& sigma) {
  if (x.size() != mu.size() || sigma.rows() != mu.size() || sigma.cols() != mu.size())
    throw std::invalid_argument("gaussian_logpdf: dimension mismatch");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::domain_error("gaussian_logpdf: covariance is not positive definite");
  const Vector z = llt.matrixL().solve(x - mu);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  constexpr double log_2pi = 1.8378770664093454836;
  return -0.5 * (static_cast<double>(x.size()) * log_2pi + logdet + z.squaredNorm());
}

inline double logistic_normal_logpdf(const SimplexPoint& pi, const Vector& mu, const Matrix& sigma) {
  const NaturalParam theta = log_ratio(pi);
  const double log_prod = std::log(pi.pi0()) + pi.probs().array().log().sum();
  return gaussian_logpdf(theta.theta(), mu, sigma) - log_prod;
}

}  // namespace dygauss
