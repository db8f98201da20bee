#pragma once

// Comparison approximations to LD(beta):
//  - Monte Carlo: Dirichlet draws mapped through log(pi/pi_0), optionally
//    into theta* = X^{-1} theta;
//  - Laplace: Newton-Raphson MAP with the inverse negative Hessian of the log
//    posterior as covariance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dygauss/parametrization.hpp"
#include "dygauss/posterior.hpp"
#include "dygauss/random.hpp"
#include "dygauss/simplex.hpp"

namespace dygauss {

/// Non-convergence or another numerical breakdown; carries the last iterate.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, Vector last_iterate = {}, double residual = NAN)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}
  const Vector& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  Vector last_iterate_;
  double residual_;
};

struct SampleBatch {
  Matrix draws;  // mc x d
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  DesignKind parametrization = DesignKind::identity;
  std::vector<std::string> labels;
};

/// Streams mc draws of theta = log(pi/pi_0), pi ~ Dirichlet(beta), to
/// `visit(const Matrix& block)` in row blocks of at most `block_rows`.
template <typename Visitor>
void for_each_theta_block(const DirichletParams& beta, std::int64_t mc, RngStream& rng, Visitor&& visit,
                          Eigen::Index block_rows = 2048) {
  if (mc < 1) throw std::invalid_argument("Monte Carlo sample size must be >= 1");
  const Eigen::Index d = beta.dim();
  Vector lg(d + 1);
  Matrix block(std::min<std::int64_t>(block_rows, mc), d);
  std::int64_t done = 0;
  while (done < mc) {
    const Eigen::Index rows = static_cast<Eigen::Index>(std::min<std::int64_t>(block.rows(), mc - done));
    for (Eigen::Index i = 0; i < rows; ++i) {
      // log-space draws keep theta finite; the guard only trips on NaN/inf.
      for (;;) {
        log_gamma_vector(beta.beta(), rng, lg);
        if (lg.allFinite()) break;
      }
      block.row(i) = (lg.tail(d).array() - lg[0]).matrix().transpose();
    }
    if (rows == block.rows()) visit(static_cast<const Matrix&>(block));
    else visit(Matrix(block.topRows(rows)));
    done += rows;
  }
}

/// Monte Carlo sample of theta (or theta* when X is given).
inline SampleBatch mc_approx(const DirichletParams& beta, std::int64_t mc, std::uint64_t seed,
                             const DesignMatrix* x = nullptr, std::uint64_t stream = 0) {
  if (x && x->dim() != beta.dim()) throw std::invalid_argument("mc_approx: design dimension mismatch");
  SampleBatch batch;
  batch.seed = seed;
  batch.stream = stream;
  batch.draws.resize(mc, beta.dim());
  if (x) {
    batch.parametrization = x->kind();
    batch.labels = x->labels();
  }
  RngStream rng(seed, stream);
  Eigen::Index row = 0;
  for_each_theta_block(beta, mc, rng, [&](const Matrix& block) {
    if (x && x->kind() != DesignKind::identity)
      batch.draws.middleRows(row, block.rows()) = x->solve(block.transpose()).transpose();
    else
      batch.draws.middleRows(row, block.rows()) = block;
    row += block.rows();
  });
  return batch;
}

/// Running mean and covariance of row vectors, accumulated about a fixed
/// shift for numerical stability.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(Eigen::Index dim) : sum_(Vector::Zero(dim)), cross_(Matrix::Zero(dim, dim)) {}

  void add(const Matrix& block) {
    if (block.cols() != sum_.size()) throw std::invalid_argument("MomentAccumulator: dimension mismatch");
    if (block.rows() == 0) return;
    if (count_ == 0) shift_ = block.colwise().mean().transpose();
    const Matrix centered = block.rowwise() - shift_.transpose();
    sum_ += centered.colwise().sum().transpose();
    cross_.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    count_ += block.rows();
  }

  std::int64_t count() const { return count_; }
  Vector mean() const { return shift_ + sum_ / static_cast<double>(count_); }

  /// Unbiased sample covariance (divisor n - 1).
  Matrix covariance() const {
    if (count_ < 2) throw std::logic_error("MomentAccumulator: need at least two rows");
    const double n = static_cast<double>(count_);
    const Vector m = sum_ / n;
    Matrix c = cross_.selfadjointView<Eigen::Lower>();
    c.noalias() -= n * m * m.transpose();
    return c / (n - 1.0);
  }

 private:
  Vector shift_;
  Vector sum_;
  Matrix cross_;
  std::int64_t count_ = 0;
};

struct SampleMoments {
  Vector mean;
  Matrix cov;
};

/// Monte Carlo mean and covariance without storing the draws. With a design
/// matrix the moments are mapped to theta* (exact for sample moments).
inline SampleMoments mc_moments(const DirichletParams& beta, std::int64_t mc, std::uint64_t seed,
                                const DesignMatrix* x = nullptr, std::uint64_t stream = 0) {
  RngStream rng(seed, stream);
  MomentAccumulator acc(beta.dim());
  for_each_theta_block(beta, mc, rng, [&](const Matrix& block) { acc.add(block); });
  SampleMoments out{acc.mean(), acc.covariance()};
  if (x && x->kind() != DesignKind::identity) {
    out.mean = x->solve(out.mean);
    const Matrix left = x->solve(out.cov);
    out.cov = x->solve(Matrix(left.transpose()));
    out.cov = 0.5 * (out.cov + out.cov.transpose());
  }
  return out;
}

struct MapEstimate {
  NaturalParam theta;
  int iterations;
  double grad_norm;
};

/// Unnormalized LD(beta) log-density: sum_j beta_j theta_j - B log(1 + sum e^theta).
inline double ld_log_kernel(const Vector& theta, const DirichletParams& beta) {
  return beta.beta().tail(theta.size()).dot(theta) - beta.total() * log1p_sum_exp(theta);
}

/// Newton-Raphson MAP of LD(beta) from theta = 0 with step halving. The
/// Hessian inverse is applied in O(d):
///   [B (Diag(pi) - pi pi^T)]^{-1} = (Diag(1/pi) + 11^T / pi_0) / B.
inline MapEstimate map_estimate(const DirichletParams& beta, double tol = 1e-10, int max_iter = 100) {
  const Eigen::Index d = beta.dim();
  const double b = beta.total();
  const Vector target = beta.beta().tail(d);
  Vector theta = Vector::Zero(d);
  double value = ld_log_kernel(theta, beta);
  double grad_norm = INFINITY;
  for (int it = 0; it <= max_iter; ++it) {
    const SimplexPoint pi = logistic(NaturalParam(theta));
    const Vector grad = target - b * pi.probs();
    grad_norm = grad.norm();
    if (grad_norm < tol) return {NaturalParam(theta), it, grad_norm};
    if (it == max_iter) break;

    const Vector step = (grad.cwiseQuotient(pi.probs()).array() + grad.sum() / pi.pi0()).matrix() / b;
    // Near the optimum the kernel changes by less than its rounding error,
    // so "does not decrease" is judged up to that slack.
    const double slack = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
    double t = 1.0;
    Vector next = theta + step;
    double next_value = ld_log_kernel(next, beta);
    while (!(next_value >= value - slack) && t > 1e-12) {
      t *= 0.5;
      next = theta + t * step;
      next_value = ld_log_kernel(next, beta);
    }
    if (!(next_value >= value - slack)) break;
    theta = std::move(next);
    value = next_value;
  }
  char msg[96];
  std::snprintf(msg, sizeof msg, "map_estimate: Newton-Raphson did not converge (gradient norm %.3g)", grad_norm);
  throw NumericalError(msg,
                       theta, grad_norm);
}

/// Laplace approximation: N(theta_MAP, [B (Diag(pi) - pi pi^T)]^{-1}) evaluated
/// at the MAP, i.e. Diag(1/(B pi_j)) + 11^T / (B pi_0).
inline GaussianApprox laplace_approx(const DirichletParams& beta, double tol = 1e-10, int max_iter = 100) {
  MapEstimate map = map_estimate(beta, tol, max_iter);
  const SimplexPoint pi = logistic(map.theta);
  const double b = beta.total();
  CompoundSymmetryMatrix cov((b * pi.probs()).cwiseInverse(), 1.0 / (b * pi.pi0()));
  return GaussianApprox{map.theta.theta(), std::move(cov), DesignKind::identity, {}};
}

}  // namespace dygauss
