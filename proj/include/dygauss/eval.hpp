#pragma once

// Evaluation metrics for posterior approximations: unexplained variation,
// credible-interval coverage, relative Frobenius loss of a covariance
// estimate, and the one-sample Kolmogorov-Smirnov statistic against a normal.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dygauss/simplex.hpp"
#include "dygauss/specfun.hpp"

namespace dygauss {

enum class UvScale {
  total,           // sqrt(sum_j (theta_hat_j - theta0_j)^2) / sd(theta0)
  per_coordinate,  // the same divided by sqrt(d): RMS error / sd(theta0)
};

/// Sample standard deviation (divisor n - 1) of the entries of v.
inline double sample_sd(const Vector& v) {
  if (v.size() < 2) throw std::invalid_argument("sample_sd: need at least two entries");
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

inline double unexplained_variation(const Vector& theta_hat, const Vector& theta0, UvScale scale = UvScale::total) {
  if (theta_hat.size() != theta0.size()) throw std::invalid_argument("unexplained_variation: length mismatch");
  if (theta0.size() < 2) throw std::invalid_argument("unexplained_variation: need d >= 2");
  const double sd = sample_sd(theta0);
  if (!(sd > 0.0)) throw std::domain_error("unexplained_variation: true parameter vector is constant");
  double err = (theta_hat - theta0).squaredNorm();
  if (scale == UvScale::per_coordinate) err /= static_cast<double>(theta0.size());
  return std::sqrt(err) / sd;
}

struct Interval {
  double lo;
  double hi;
};

/// mean_j -/+ z_{(1+level)/2} sqrt(var_j).
inline std::vector<Interval> gaussian_intervals(const Vector& mean, const Vector& variances, double level = 0.95) {
  if (mean.size() != variances.size()) throw std::invalid_argument("gaussian_intervals: length mismatch");
  const double z = normal_quantile(0.5 * (1.0 + level));
  std::vector<Interval> out(static_cast<std::size_t>(mean.size()));
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    const double half = z * std::sqrt(variances[j]);
    out[static_cast<std::size_t>(j)] = {mean[j] - half, mean[j] + half};
  }
  return out;
}

/// Empirical quantile with linear interpolation between order statistics
/// (the (n-1)p + 1 rule). `sorted` must be ascending.
inline double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Per-column equal-tailed intervals from Monte Carlo draws (rows = draws).
inline std::vector<Interval> empirical_intervals(const Matrix& draws, double level = 0.95) {
  std::vector<Interval> out(static_cast<std::size_t>(draws.cols()));
  std::vector<double> col(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    Eigen::Map<Vector>(col.data(), draws.rows()) = draws.col(j);
    std::sort(col.begin(), col.end());
    out[static_cast<std::size_t>(j)] = {empirical_quantile(col, 0.5 * (1.0 - level)),
                                        empirical_quantile(col, 0.5 * (1.0 + level))};
  }
  return out;
}

inline double coverage(const std::vector<Interval>& intervals, const Vector& theta0) {
  if (static_cast<Eigen::Index>(intervals.size()) != theta0.size())
    throw std::invalid_argument("coverage: length mismatch");
  if (intervals.empty()) throw std::invalid_argument("coverage: no intervals");
  std::size_t hits = 0;
  for (std::size_t j = 0; j < intervals.size(); ++j) {
    const auto [lo, hi] = intervals[j];
    if (lo > hi) throw std::invalid_argument("coverage: interval " + std::to_string(j) + " has lo > hi");
    const double t = theta0[static_cast<Eigen::Index>(j)];
    if (lo <= t && t <= hi) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

/// ||Sigma_hat - Sigma||_F / ||Sigma||_F
inline double frobenius_loss(const Matrix& sigma_hat, const Matrix& sigma) {
  if (sigma_hat.rows() != sigma.rows() || sigma_hat.cols() != sigma.cols())
    throw std::invalid_argument("frobenius_loss: shape mismatch");
  const double denom = sigma.norm();
  if (!(denom > 0.0)) throw std::domain_error("frobenius_loss: reference matrix is zero");
  return (sigma_hat - sigma).norm() / denom;
}

/// One-sample KS statistic of ascending `sorted` against N(mu, sigma^2):
/// max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n).
inline double ks_statistic(std::span<const double> sorted, double mu, double sigma) {
  if (sorted.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  if (!(sigma > 0.0)) throw std::domain_error("ks_statistic: sigma must be positive");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf((sorted[i] - mu) / sigma);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// One metric value with its grouping keys; one CSV row.
struct MetricReport {
  std::string metric;
  std::string method;
  std::string parametrization;
  std::string prior;
  std::int64_t n = 0;
  std::int64_t mc = 0;
  int replicate = 0;
  double value = 0.0;

  static constexpr const char* csv_header = "metric,method,parametrization,a,N,mc,replicate,value";
};

inline std::ostream& write_csv_row(std::ostream& os, const MetricReport& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", r.value);
  return os << r.metric << ',' << r.method << ',' << r.parametrization << ',' << r.prior << ',' << r.n << ','
            << r.mc << ',' << r.replicate << ',' << buf << '\n';
}

}  // namespace dygauss
