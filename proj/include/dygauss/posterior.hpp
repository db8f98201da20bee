#pragma once

// Conjugate updating of the logistic-Dirichlet law, its KL-optimal Gaussian
// approximation N(mu*, Sigma*), compound-symmetry covariance algebra, the
// closed-form KL divergence to any Gaussian, and the finite-sample KL bound.
//
//   mu*_j        = psi(beta_j) - psi(beta_0)
//   Sigma*_{jk}  = psi'(beta_j) [j == k] + psi'(beta_0)
//
// Sigma* is stored as Diag(psi'(beta_1..d)) + psi'(beta_0) 11^T and only
// densified when mapped to another parametrization.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dygauss/parametrization.hpp"
#include "dygauss/simplex.hpp"
#include "dygauss/specfun.hpp"

namespace dygauss {

/// Positive concentration vector (beta_0, ..., beta_d).
class DirichletParams {
 public:
  explicit DirichletParams(Vector beta) : beta_(std::move(beta)) {
    if (beta_.size() < 2) throw std::invalid_argument("DirichletParams: need at least two categories");
    for (Eigen::Index j = 0; j < beta_.size(); ++j)
      if (!(beta_[j] > 0.0) || !std::isfinite(beta_[j]))
        throw std::domain_error("DirichletParams: beta_" + std::to_string(j) + " must be positive and finite");
  }

  /// Symmetric Dirichlet(a, ..., a) over `categories` cells.
  static DirichletParams symmetric(Eigen::Index categories, double a) {
    return DirichletParams(Vector::Constant(categories, a));
  }

  const Vector& beta() const { return beta_; }
  double operator[](Eigen::Index j) const { return beta_[j]; }
  Eigen::Index dim() const { return beta_.size() - 1; }
  double total() const { return beta_.sum(); }

 private:
  Vector beta_;
};

/// beta = alpha + y.
inline DirichletParams dy_update(const DirichletParams& alpha, const Vector& y) {
  if (y.size() != alpha.beta().size())
    throw std::invalid_argument("dy_update: count vector length " + std::to_string(y.size()) +
                                " does not match prior length " + std::to_string(alpha.beta().size()));
  for (Eigen::Index j = 0; j < y.size(); ++j)
    if (!(y[j] >= 0.0) || y[j] != std::floor(y[j]))
      throw std::invalid_argument("dy_update: counts must be nonnegative integers");
  return DirichletParams(alpha.beta() + y);
}

inline DirichletParams dy_update(const DirichletParams& alpha, const ContingencyTable& table) {
  return dy_update(alpha, table.count_vector());
}

/// Diag(diag) + common * 11^T with positive diagonal and common term.
class CompoundSymmetryMatrix {
 public:
  CompoundSymmetryMatrix(Vector diag, double common) : diag_(std::move(diag)), common_(common) {
    if (diag_.size() < 1) throw std::invalid_argument("CompoundSymmetryMatrix: empty diagonal");
    if (!(diag_.array() > 0.0).all() || !diag_.allFinite())
      throw std::domain_error("CompoundSymmetryMatrix: diagonal entries must be positive");
    if (!(common_ > 0.0) || !std::isfinite(common_))
      throw std::domain_error("CompoundSymmetryMatrix: common term must be positive");
  }

  Eigen::Index dim() const { return diag_.size(); }
  const Vector& diag() const { return diag_; }
  double common() const { return common_; }

  Matrix dense() const {
    Matrix m = Matrix::Constant(dim(), dim(), common_);
    m.diagonal() += diag_;
    return m;
  }

  /// Diagonal of the full matrix.
  Vector variances() const { return diag_.array() + common_; }

  /// 1 + c * sum_j 1/d_j
  double sherman_morrison_denominator() const { return 1.0 + common_ * diag_.cwiseInverse().sum(); }

 private:
  Vector diag_;
  double common_;
};

/// M^{-1} v by Sherman-Morrison:
/// M^{-1} = D^{-1} - c D^{-1} 1 1^T D^{-1} / (1 + c sum 1/d_j).
inline Vector cs_solve(const CompoundSymmetryMatrix& m, const Vector& v) {
  if (v.size() != m.dim()) throw std::invalid_argument("cs_solve: dimension mismatch");
  const Vector dinv_v = v.cwiseQuotient(m.diag());
  const double scale = m.common() * dinv_v.sum() / m.sherman_morrison_denominator();
  return dinv_v - scale * m.diag().cwiseInverse();
}

/// Matrix solve against several right-hand sides.
inline Matrix cs_solve(const CompoundSymmetryMatrix& m, const Matrix& rhs) {
  if (rhs.rows() != m.dim()) throw std::invalid_argument("cs_solve: dimension mismatch");
  const Vector dinv = m.diag().cwiseInverse();
  Matrix out = dinv.asDiagonal() * rhs;
  const Eigen::RowVectorXd col_sums = out.colwise().sum() * (m.common() / m.sherman_morrison_denominator());
  out.noalias() -= dinv * col_sums;
  return out;
}

/// log|M| = sum log d_j + log(1 + c sum 1/d_j).
inline double cs_logdet(const CompoundSymmetryMatrix& m) {
  return m.diag().array().log().sum() + std::log1p(m.common() * m.diag().cwiseInverse().sum());
}

/// v^T M^{-1} v.
inline double cs_mahalanobis(const CompoundSymmetryMatrix& m, const Vector& v) {
  if (v.size() != m.dim()) throw std::invalid_argument("cs_mahalanobis: dimension mismatch");
  const double quad = v.cwiseAbs2().cwiseQuotient(m.diag()).sum();
  const double s = v.cwiseQuotient(m.diag()).sum();
  return std::max(0.0, quad - m.common() * s * s / m.sherman_morrison_denominator());
}

/// Dense Sherman-Morrison inverse.
inline Matrix cs_inverse(const CompoundSymmetryMatrix& m) {
  const Vector dinv = m.diag().cwiseInverse();
  Matrix out = -(m.common() / m.sherman_morrison_denominator()) * dinv * dinv.transpose();
  out.diagonal() += dinv;
  return out;
}

using Covariance = std::variant<Matrix, CompoundSymmetryMatrix>;

inline Matrix dense(const Covariance& cov) {
  if (const auto* cs = std::get_if<CompoundSymmetryMatrix>(&cov)) return cs->dense();
  return std::get<Matrix>(cov);
}

inline Vector variances(const Covariance& cov) {
  if (const auto* cs = std::get_if<CompoundSymmetryMatrix>(&cov)) return cs->variances();
  return std::get<Matrix>(cov).diagonal();
}

/// Gaussian approximation in a declared parametrization.
struct GaussianApprox {
  Vector mean;
  Covariance cov;
  DesignKind parametrization = DesignKind::identity;
  std::vector<std::string> labels;  // optional coordinate labels

  Eigen::Index dim() const { return mean.size(); }
  Matrix dense_cov() const { return dense(cov); }
  Vector marginal_variances() const { return variances(cov); }

  void validate() const {
    const Eigen::Index d = mean.size();
    const auto* cs = std::get_if<CompoundSymmetryMatrix>(&cov);
    const Eigen::Index rows = cs ? cs->dim() : std::get<Matrix>(cov).rows();
    const Eigen::Index cols = cs ? cs->dim() : std::get<Matrix>(cov).cols();
    if (rows != d || cols != d) throw std::invalid_argument("GaussianApprox: mean/covariance dimension mismatch");
  }
};

struct LdMoments {
  Vector mean;
  CompoundSymmetryMatrix cov;
};

/// Mean and covariance of theta = log(pi/pi_0) under pi ~ Dirichlet(beta).
inline LdMoments ld_moments(const DirichletParams& beta) {
  const Eigen::Index d = beta.dim();
  const double psi0 = digamma(beta[0]);
  Vector mean(d);
  Vector diag(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    mean[j] = digamma(beta[j + 1]) - psi0;
    diag[j] = trigamma(beta[j + 1]);
  }
  return {std::move(mean), CompoundSymmetryMatrix(std::move(diag), trigamma(beta[0]))};
}

/// The KL-optimal Gaussian approximation to LD(beta) in the identity parametrization.
inline GaussianApprox optimal_gaussian(const DirichletParams& beta) {
  LdMoments m = ld_moments(beta);
  return GaussianApprox{std::move(m.mean), std::move(m.cov), DesignKind::identity, {}};
}

enum class TransformDirection {
  to_theta_star,    // theta* = X^{-1} theta
  from_theta_star,  // theta = X theta*
};

namespace detail {
inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }
}  // namespace detail

/// Linear change of variables for a general non-singular X.
inline GaussianApprox transform_gaussian(const GaussianApprox& g, const Matrix& x, TransformDirection dir) {
  if (x.rows() != x.cols() || x.rows() != g.dim())
    throw std::invalid_argument("transform_gaussian: dimension mismatch");
  const Matrix sigma = g.dense_cov();
  GaussianApprox out;
  out.parametrization = DesignKind::custom;
  if (dir == TransformDirection::from_theta_star) {
    out.mean = x * g.mean;
    out.cov = detail::symmetrize(x * sigma * x.transpose());
    return out;
  }
  Eigen::FullPivLU<Matrix> lu(x);
  if (!lu.isInvertible()) throw std::invalid_argument("transform_gaussian: X is singular");
  out.mean = lu.solve(g.mean);
  const Matrix left = lu.solve(sigma);                       // X^{-1} Sigma
  out.cov = detail::symmetrize(lu.solve(Matrix(left.transpose())));  // X^{-1} Sigma X^{-T}
  return out;
}

inline GaussianApprox transform_gaussian(const GaussianApprox& g, const DesignMatrix& x,
                                         TransformDirection dir = TransformDirection::to_theta_star) {
  if (x.dim() != g.dim()) throw std::invalid_argument("transform_gaussian: dimension mismatch");
  if (x.kind() == DesignKind::identity) {
    GaussianApprox out = g;
    out.labels = x.labels();
    return out;
  }
  const Matrix sigma = g.dense_cov();
  GaussianApprox out;
  out.labels = x.labels();
  if (dir == TransformDirection::from_theta_star) {
    out.parametrization = DesignKind::identity;
    out.mean = x.entries() * g.mean;
    out.cov = detail::symmetrize(x.entries() * sigma * x.entries().transpose());
    return out;
  }
  out.parametrization = x.kind();
  out.mean = x.solve(g.mean);
  const Matrix left = x.solve(sigma);
  out.cov = detail::symmetrize(x.solve(Matrix(left.transpose())));
  return out;
}

namespace detail {

/// log B_beta + sum_j beta_j (psi(beta_j) - psi(B)): the part of the KL that
/// does not depend on the Gaussian.
inline double kl_beta_terms(const DirichletParams& beta) {
  const double b = beta.total();
  const double psi_b = digamma(b);
  double acc = log_dirichlet_normalizer(beta.beta());
  for (Eigen::Index j = 0; j < beta.beta().size(); ++j) acc += beta[j] * (digamma(beta[j]) - psi_b);
  return acc;
}

inline constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace detail

/// Minimum over Gaussians of KL(LD(beta) || N(mu, Sigma)), attained at (mu*, Sigma*).
inline double exact_min_kl(const DirichletParams& beta) {
  const LdMoments m = ld_moments(beta);
  const double d = static_cast<double>(beta.dim());
  return detail::kl_beta_terms(beta) + 0.5 * d * (1.0 + detail::kLog2Pi) + 0.5 * cs_logdet(m.cov);
}

/// KL(LD(beta) || N(mu, Sigma)) in closed form.
inline double kl_to_gaussian(const DirichletParams& beta, const Vector& mu, const Matrix& sigma) {
  const Eigen::Index d = beta.dim();
  if (mu.size() != d || sigma.rows() != d || sigma.cols() != d)
    throw std::invalid_argument("kl_to_gaussian: dimension mismatch");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::domain_error("kl_to_gaussian: covariance is not positive definite");
  const LdMoments m = ld_moments(beta);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double trace = llt.solve(m.cov.dense()).trace();
  const Vector diff = m.mean - mu;
  const double quad = diff.dot(llt.solve(diff));
  return detail::kl_beta_terms(beta) + 0.5 * static_cast<double>(d) * detail::kLog2Pi + 0.5 * logdet +
         0.5 * (trace + quad);
}

inline double kl_to_gaussian(const DirichletParams& beta, const GaussianApprox& g) {
  if (g.parametrization != DesignKind::identity)
    throw std::invalid_argument("kl_to_gaussian: approximation must be in the identity parametrization");
  return kl_to_gaussian(beta, g.mean, g.dense_cov());
}

struct KlBound {
  double value;
  bool valid;  // all beta_j > 1/2
};

/// 1/2 sum 1/beta_j + 1/(6B); the bound holds when every beta_j > 1/2.
inline KlBound kl_bound(const DirichletParams& beta) {
  const double value = 0.5 * beta.beta().cwiseInverse().sum() + 1.0 / (6.0 * beta.total());
  return {value, (beta.beta().array() > 0.5).all()};
}

}  // namespace dygauss
