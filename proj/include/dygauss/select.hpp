#pragma once

// Penalized credible region selection under a Gaussian posterior N(theta_hat, Sigma):
//   1. delta_max = chi-square (1 - alpha) quantile with d - 1 degrees of freedom;
//   2. delta(theta0) = (theta_hat - theta0)^T Sigma^{-1} (theta_hat - theta0)
//      for every model on a lasso path;
//   3. the sparsest path model with delta <= delta_max is selected.
//
// The path solves  min_theta (theta - theta_hat)^T Q (theta - theta_hat) + lambda |theta|_1
// with Q = Sigma^{-1}, by cyclic coordinate descent with warm starts on a
// log-spaced grid from lambda_max = 2 |Q theta_hat|_inf downwards.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dygauss/parametrization.hpp"
#include "dygauss/posterior.hpp"
#include "dygauss/specfun.hpp"

namespace dygauss {

inline constexpr double kSupportThreshold = 1e-10;

struct LassoOptions {
  int n_lambda = 100;
  double lambda_min_ratio = 1e-3;
  double tol = 1e-12;  // on |delta theta_j| sqrt(Q_jj), relative to the Mahalanobis norm of theta_hat
  int max_sweeps = 100000;

  void validate() const {
    if (n_lambda < 1) throw std::invalid_argument("lasso: n_lambda must be >= 1");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
      throw std::invalid_argument("lasso: lambda_min_ratio must lie in (0,1)");
    if (!(tol > 0.0)) throw std::invalid_argument("lasso: tol must be > 0");
  }
};

struct LassoPath {
  std::vector<double> lambdas;
  std::vector<Vector> coefs;
  std::vector<std::vector<int>> supports;

  std::size_t size() const { return lambdas.size(); }
};

inline std::vector<int> support_of(const Vector& theta, double threshold = kSupportThreshold) {
  std::vector<int> s;
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (std::abs(theta[j]) > threshold) s.push_back(static_cast<int>(j));
  return s;
}

/// Largest KKT violation of theta for the penalized problem at lambda.
inline double kkt_residual(const Vector& theta, const Vector& theta_hat, const Matrix& precision, double lambda) {
  const Vector grad = 2.0 * precision * (theta - theta_hat);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (theta[j] != 0.0) {
      worst = std::max(worst, std::abs(grad[j] + lambda * (theta[j] > 0.0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::abs(grad[j]) - lambda);
    }
  }
  return worst;
}

namespace detail {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

inline Matrix spd_inverse(const Matrix& sigma, const char* fn) {
  if (sigma.rows() != sigma.cols()) throw std::invalid_argument(std::string(fn) + ": covariance must be square");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::domain_error(std::string(fn) + ": covariance is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(sigma.rows(), sigma.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace detail

/// Lasso path given the precision matrix Q = Sigma^{-1}.
inline LassoPath lasso_path_precision(const Vector& theta_hat, const Matrix& precision, const LassoOptions& opts = {}) {
  opts.validate();
  const Eigen::Index d = theta_hat.size();
  if (precision.rows() != d || precision.cols() != d) throw std::invalid_argument("lasso_path: dimension mismatch");
  if (!(precision.diagonal().array() > 0.0).all())
    throw std::domain_error("lasso_path: precision matrix must have a positive diagonal");

  LassoPath path;
  const Vector q_theta = precision * theta_hat;
  const double lambda_max = 2.0 * q_theta.cwiseAbs().maxCoeff();
  if (!(lambda_max > 0.0)) {
    path.lambdas.push_back(0.0);
    path.coefs.push_back(Vector::Zero(d));
    path.supports.emplace_back();
    return path;
  }

  const double scale = std::sqrt(std::max(0.0, theta_hat.dot(q_theta)));
  const double tol = opts.tol * std::max(1.0, scale);
  const Vector qdiag = precision.diagonal();
  const Vector qsqrt = qdiag.cwiseSqrt();

  Vector theta = Vector::Zero(d);
  Vector resid = -q_theta;  // Q (theta - theta_hat)
  std::vector<Eigen::Index> active;

  auto sweep = [&](double lambda, bool all) {
    double max_change = 0.0;
    auto update = [&](Eigen::Index j) {
      const double old = theta[j];
      const double z = old - resid[j] / qdiag[j];
      const double next = detail::soft_threshold(z, 0.5 * lambda / qdiag[j]);
      if (next != old) {
        resid += precision.col(j) * (next - old);
        theta[j] = next;
        max_change = std::max(max_change, std::abs(next - old) * qsqrt[j]);
      }
    };
    if (all) {
      for (Eigen::Index j = 0; j < d; ++j) update(j);
    } else {
      for (Eigen::Index j : active) update(j);
    }
    return max_change;
  };

  const int n = opts.n_lambda;
  for (int k = 0; k < n; ++k) {
    const double lambda =
        (n == 1) ? lambda_max : lambda_max * std::pow(opts.lambda_min_ratio, static_cast<double>(k) / (n - 1));
    int sweeps = 0;
    for (;;) {
      const double change = sweep(lambda, true);
      ++sweeps;
      if (change <= tol || sweeps >= opts.max_sweeps) break;
      active.clear();
      for (Eigen::Index j = 0; j < d; ++j)
        if (theta[j] != 0.0) active.push_back(j);
      while (sweeps < opts.max_sweeps) {
        ++sweeps;
        if (sweep(lambda, false) <= tol) break;
      }
    }
    if (sweeps >= opts.max_sweeps)
      throw std::runtime_error("lasso_path: coordinate descent did not converge at lambda=" + std::to_string(lambda));
    // Recompute the residual from scratch to shed accumulated rounding.
    resid = precision * (theta - theta_hat);
    path.lambdas.push_back(lambda);
    path.coefs.push_back(theta);
    path.supports.push_back(support_of(theta));
  }
  return path;
}

inline LassoPath lasso_path(const Vector& theta_hat, const Matrix& sigma, const LassoOptions& opts = {}) {
  if (sigma.rows() != theta_hat.size()) throw std::invalid_argument("lasso_path: dimension mismatch");
  return lasso_path_precision(theta_hat, detail::spd_inverse(sigma, "lasso_path"), opts);
}

inline LassoPath lasso_path(const Vector& theta_hat, const CompoundSymmetryMatrix& sigma, const LassoOptions& opts = {}) {
  if (sigma.dim() != theta_hat.size()) throw std::invalid_argument("lasso_path: dimension mismatch");
  return lasso_path_precision(theta_hat, cs_inverse(sigma), opts);
}

inline double mahalanobis_delta(const Vector& theta0, const Vector& theta_hat, const Matrix& sigma) {
  if (theta0.size() != theta_hat.size() || sigma.rows() != theta_hat.size())
    throw std::invalid_argument("mahalanobis_delta: dimension mismatch");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::domain_error("mahalanobis_delta: covariance is not positive definite");
  return llt.matrixL().solve(theta_hat - theta0).squaredNorm();
}

inline double mahalanobis_delta(const Vector& theta0, const Vector& theta_hat, const CompoundSymmetryMatrix& sigma) {
  if (theta0.size() != theta_hat.size()) throw std::invalid_argument("mahalanobis_delta: dimension mismatch");
  return cs_mahalanobis(sigma, theta_hat - theta0);
}

struct SelectionResult {
  Vector chosen;
  std::vector<int> support;
  double delta = 0.0;
  double delta_max = 0.0;
  double alpha = 0.0;
  bool fallback = false;  // no path model was feasible; chosen = theta_hat
  int path_index = -1;
  double lambda = 0.0;
};

/// 1 - alpha quantile of chi-square with d - 1 degrees of freedom. With d = 1
/// the distribution is a point mass at zero.
inline double pcr_threshold(Eigen::Index d, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("pcr_select: alpha must lie in (0,1)");
  if (d - 1 < 1) return 0.0;
  return chi2_quantile(1.0 - alpha, static_cast<int>(d - 1));
}

namespace detail {
template <typename DeltaFn>
SelectionResult pcr_select_impl(const LassoPath& path, const Vector& theta_hat, double alpha, DeltaFn&& delta_of) {
  SelectionResult best;
  best.alpha = alpha;
  best.delta_max = pcr_threshold(theta_hat.size(), alpha);
  bool found = false;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double delta = delta_of(path.coefs[k]);
    if (!(delta <= best.delta_max)) continue;
    const bool better = !found || path.supports[k].size() < best.support.size() ||
                        (path.supports[k].size() == best.support.size() && delta < best.delta);
    if (better) {
      found = true;
      best.chosen = path.coefs[k];
      best.support = path.supports[k];
      best.delta = delta;
      best.path_index = static_cast<int>(k);
      best.lambda = path.lambdas[k];
    }
  }
  if (!found) {
    best.chosen = theta_hat;
    best.support = support_of(theta_hat);
    best.delta = 0.0;
    best.fallback = true;
  }
  return best;
}
}  // namespace detail

inline SelectionResult pcr_select(const LassoPath& path, const Vector& theta_hat, const Matrix& sigma, double alpha) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::domain_error("pcr_select: covariance is not positive definite");
  return detail::pcr_select_impl(path, theta_hat, alpha, [&](const Vector& theta0) {
    return llt.matrixL().solve(theta_hat - theta0).squaredNorm();
  });
}

inline SelectionResult pcr_select(const LassoPath& path, const Vector& theta_hat, const CompoundSymmetryMatrix& sigma,
                                  double alpha) {
  return detail::pcr_select_impl(path, theta_hat, alpha,
                                 [&](const Vector& theta0) { return cs_mahalanobis(sigma, theta_hat - theta0); });
}

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;

  /// FP / (TP + FP); zero when nothing was selected.
  double fdr() const { return (tp + fp) ? static_cast<double>(fp) / static_cast<double>(tp + fp) : 0.0; }
  /// 2TP / (2TP + FP + FN); one when there is nothing to get wrong.
  double f1() const {
    const auto denom = 2 * tp + fp + fn;
    return denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 1.0;
  }
};

/// Aggregates selected-vs-reference indicators over every hypothesis slot.
inline ConfusionCounts edge_confusion(const std::vector<std::vector<bool>>& selected,
                                      const std::vector<std::vector<bool>>& reference) {
  if (selected.size() != reference.size()) throw std::invalid_argument("edge_confusion: list length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i].size() != reference[i].size())
      throw std::invalid_argument("edge_confusion: slot count mismatch in entry " + std::to_string(i));
    for (std::size_t k = 0; k < selected[i].size(); ++k) {
      const bool s = selected[i][k];
      const bool r = reference[i][k];
      if (s && r) ++c.tp;
      else if (s) ++c.fp;
      else if (r) ++c.fn;
      else ++c.tn;
    }
  }
  return c;
}

/// Variable pairs (u, v), u < v, in lexicographic order.
inline std::vector<std::pair<int, int>> variable_pairs(int p) {
  std::vector<std::pair<int, int>> pairs;
  for (int u = 0; u < p; ++u)
    for (int v = u + 1; v < p; ++v) pairs.emplace_back(u, v);
  return pairs;
}

/// Interaction graph implied by a corner-parametrization support: the edge
/// (u, v) is present when some selected term involves both u and v.
inline std::vector<bool> edges_from_support(const TableSchema& schema, const std::vector<int>& support) {
  const auto pairs = variable_pairs(schema.num_vars());
  std::vector<bool> edges(pairs.size(), false);
  for (int col : support) {
    const Cell cell = schema.cell_at(col + 1);
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (cell[static_cast<std::size_t>(pairs[k].first)] != 0 && cell[static_cast<std::size_t>(pairs[k].second)] != 0)
        edges[k] = true;
  }
  return edges;
}

}  // namespace dygauss
