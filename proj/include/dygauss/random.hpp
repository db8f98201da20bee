#pragma once

// Seeded random streams and the variate generators used by the Monte Carlo
// baseline and the simulation harness.
//
// Each RngStream is a std::mt19937_64 seeded through std::seed_seq from the
// pair (seed, stream id), so replicate r of a study always draws from stream
// r regardless of which worker thread runs it. Uniforms, normals and gamma
// variates are generated here rather than through <random> distributions so
// the sequences do not depend on the standard library implementation.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dygauss/simplex.hpp"

namespace dygauss {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x6479u /* "dy" */};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::mt19937_64& engine() { return engine_; }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// log of a Gamma(shape, 1) variate. Marsaglia-Tsang squeeze/rejection for
  /// shape >= 1; smaller shapes are boosted by one and multiplied by
  /// U^{1/shape}, which is applied in log space so tiny shapes cannot
  /// underflow to zero.
  double log_gamma_variate(double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw std::domain_error("gamma variate: shape must be positive");
    if (shape < 1.0) return log_gamma_variate(shape + 1.0) + std::log(uniform()) / shape;
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
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
    }
  }

  double gamma_variate(double shape) { return std::exp(log_gamma_variate(shape)); }

  std::int64_t binomial(std::int64_t n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Fills `out` (length d+1) with log G_j, G_j ~ Gamma(beta_j) independent.
/// Normalizing exp(log G) gives a Dirichlet(beta) draw.
inline void log_gamma_vector(const Vector& beta, RngStream& rng, Eigen::Ref<Vector> out) {
  for (Eigen::Index j = 0; j < beta.size(); ++j) out[j] = rng.log_gamma_variate(beta[j]);
}

/// n Dirichlet(beta) draws as rows (pi_0, ..., pi_d).
inline Matrix sample_dirichlet(const Vector& beta, std::int64_t n, std::uint64_t seed, std::uint64_t stream = 0) {
  if (n < 1) throw std::invalid_argument("sample_dirichlet: n must be >= 1");
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (!(beta[j] > 0.0)) throw std::domain_error("sample_dirichlet: concentration parameters must be positive");
  RngStream rng(seed, stream);
  Matrix out(n, beta.size());
  Vector lg(beta.size());
  for (std::int64_t i = 0; i < n; ++i) {
    log_gamma_vector(beta, rng, lg);
    const double m = lg.maxCoeff();
    const Vector g = (lg.array() - m).exp();
    out.row(i) = (g / g.sum()).transpose();
  }
  return out;
}

/// Multinomial(N, pi) by sequential binomial conditioning. `pi` holds all
/// d+1 cell probabilities and is normalized internally.
inline std::vector<std::int64_t> multinomial_sample(std::int64_t n, const Vector& pi, RngStream& rng) {
  if (n < 0) throw std::invalid_argument("multinomial_sample: N must be >= 0");
  if (pi.size() < 1 || (pi.array() < 0.0).any() || !(pi.sum() > 0.0))
    throw std::domain_error("multinomial_sample: probabilities must be nonnegative with positive sum");
  const Eigen::Index k = pi.size();
  // tail[j] = sum_{l >= j} pi_l, accumulated from the end to keep precision.
  std::vector<double> tail(static_cast<std::size_t>(k) + 1, 0.0);
  for (Eigen::Index j = k; j-- > 0;) tail[static_cast<std::size_t>(j)] = tail[static_cast<std::size_t>(j) + 1] + pi[j];
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  std::int64_t remaining = n;
  for (Eigen::Index j = 0; j + 1 < k && remaining > 0; ++j) {
    const double t = tail[static_cast<std::size_t>(j)];
    const double p = t > 0.0 ? std::min(1.0, pi[j] / t) : 0.0;
    const std::int64_t c = rng.binomial(remaining, p);
    counts[static_cast<std::size_t>(j)] = c;
    remaining -= c;
  }
  counts.back() += remaining;
  return counts;
}

}  // namespace dygauss
