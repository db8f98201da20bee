#pragma once

// Scalar special functions: log-gamma, digamma, trigamma, the standard normal
// CDF and quantile, the regularized incomplete gamma function and chi-square
// quantiles. All functions are pure and throw std::domain_error on inputs
// outside their domain.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dygauss {

struct ToleranceConfig {
  double abs_tol = 1e-12;
  int max_iter = 200;

  void validate() const {
    if (!(abs_tol > 0.0)) throw std::invalid_argument("ToleranceConfig: abs_tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("ToleranceConfig: max_iter must be >= 1");
  }
};

namespace detail {

inline void require_positive(double z, const char* fn) {
  if (!std::isfinite(z) || !(z > 0.0))
    throw std::domain_error(std::string(fn) + ": argument must be positive and finite, got " +
                            std::to_string(z));
}

// Recurrences shift the argument up to this point before the asymptotic
// series is applied; truncation error there is below 1e-16.
inline constexpr double kAsymptoticStart = 10.0;

// Horner evaluation of c[0] + c[1] x + ... + c[N-1] x^{N-1}.
template <std::size_t N>
constexpr double horner(const double (&c)[N], double x) {
  double acc = 0.0;
  for (std::size_t i = N; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

}  // namespace detail

/// log Gamma(z) for z > 0.
inline double log_gamma(double z) {
  detail::require_positive(z, "log_gamma");
  double shift = 0.0;
  while (z < detail::kAsymptoticStart) {
    shift += std::log(z);
    z += 1.0;
  }
  // Stirling series in 1/z^2: 1/12, -1/360, 1/1260, -1/1680, 1/1188, -691/360360.
  static constexpr double c[] = {1.0 / 12.0,   -1.0 / 360.0, 1.0 / 1260.0,
                                 -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0};
  const double inv = 1.0 / z;
  const double series = inv * detail::horner(c, inv * inv);
  constexpr double half_log_2pi = 0.91893853320467274178;
  return (z - 0.5) * std::log(z) - z + half_log_2pi + series - shift;
}

/// Digamma psi(z) = d/dz log Gamma(z), z > 0.
inline double digamma(double z) {
  detail::require_positive(z, "digamma");
  double shift = 0.0;
  while (z < detail::kAsymptoticStart) {
    shift -= 1.0 / z;
    z += 1.0;
  }
  // -B_{2k} / (2k): 1/12, -1/120, 1/252, -1/240, 1/132, -691/32760, 1/12.
  static constexpr double c[] = {1.0 / 12.0,  -1.0 / 120.0, 1.0 / 252.0,       -1.0 / 240.0,
                                 1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0};
  const double inv2 = 1.0 / (z * z);
  return std::log(z) - 0.5 / z - inv2 * detail::horner(c, inv2) + shift;
}

/// Trigamma psi'(z), z > 0.
inline double trigamma(double z) {
  detail::require_positive(z, "trigamma");
  double shift = 0.0;
  while (z < detail::kAsymptoticStart) {
    shift += 1.0 / (z * z);
    z += 1.0;
  }
  // B_{2k}: 1/6, -1/30, 1/42, -1/30, 5/66, -691/2730, 7/6.
  static constexpr double c[] = {1.0 / 6.0, -1.0 / 30.0,     1.0 / 42.0, -1.0 / 30.0,
                                 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0};
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  return inv + 0.5 * inv2 + inv * inv2 * detail::horner(c, inv2) + shift;
}

inline double normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::domain_error("normal_cdf: argument must be finite");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_logpdf(double x) {
  constexpr double half_log_2pi = 0.91893853320467274178;
  return -0.5 * x * x - half_log_2pi;
}

/// Standard normal quantile. Rational initial approximation polished by
/// Newton steps against normal_cdf.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 3; ++it) {
    const double err = (x < 0.0) ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
    const double dens = std::exp(normal_logpdf(x));
    if (!(dens > 0.0)) break;
    x -= err / dens;
  }
  return x;
}

/// Regularized lower incomplete gamma P(a, x).
inline double regularized_lower_gamma(double a, double x, const ToleranceConfig& tol = {}) {
  detail::require_positive(a, "regularized_lower_gamma");
  if (!(x >= 0.0) || std::isnan(x)) throw std::domain_error("regularized_lower_gamma: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double log_prefactor = -x + a * std::log(x) - log_gamma(a);
  // Series length grows like sqrt(a) near the mode.
  const int max_iter = tol.max_iter + static_cast<int>(20.0 * std::sqrt(a));
  constexpr double eps = std::numeric_limits<double>::epsilon();

  if (x < a + 1.0) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < max_iter; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    return std::min(1.0, sum * std::exp(log_prefactor));
  }

  // Modified Lentz continued fraction for Q(a, x).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= max_iter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefactor) * h);
}

inline double chi2_cdf(double x, int k, const ToleranceConfig& tol = {}) {
  if (k < 1) throw std::domain_error("chi2_cdf: degrees of freedom must be >= 1");
  if (x <= 0.0) return 0.0;
  return regularized_lower_gamma(0.5 * k, 0.5 * x, tol);
}

/// Quantile of the chi-square distribution with k degrees of freedom.
/// Wilson-Hilferty start, safeguarded Newton on P(k/2, x/2), bisection fallback.
inline double chi2_quantile(double p, int k, const ToleranceConfig& tol = {}) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("chi2_quantile: p must lie in (0,1)");
  if (k < 1) throw std::domain_error("chi2_quantile: degrees of freedom must be >= 1");
  tol.validate();
  const double a = 0.5 * k;
  const double log_gamma_a = log_gamma(a);

  // Work with y = x/2 ~ Gamma(a, 1).
  auto cdf = [&](double y) { return regularized_lower_gamma(a, y, tol); };
  auto log_density = [&](double y) { return (a - 1.0) * std::log(y) - y - log_gamma_a; };

  double y;
  {
    const double z = normal_quantile(p);
    const double h = 2.0 / (9.0 * k);
    const double wh = k * std::pow(1.0 - h + z * std::sqrt(h), 3);
    // Small-y expansion P(a,y) ~ y^a / Gamma(a+1) where Wilson-Hilferty breaks down.
    const double small = std::exp((std::log(p) + log_gamma(a + 1.0)) / a);
    y = (wh > 0.0 && k > 2) ? 0.5 * wh : std::min(small, std::max(0.5 * wh, 1e-300));
    if (!(y > 0.0) || !std::isfinite(y)) y = small;
  }

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < tol.max_iter; ++it) {
    const double f = cdf(y) - p;
    if (f < 0.0) lo = y; else hi = y;
    if (std::abs(f) <= 1e-15) { converged = true; break; }
    double next = y - f / std::exp(log_density(y));
    if (!std::isfinite(next) || next <= lo || next >= hi)
      next = std::isinf(hi) ? 2.0 * y + 1.0 : 0.5 * (lo + hi);
    if (std::abs(next - y) <= 4.0 * std::numeric_limits<double>::epsilon() * y) {
      y = next;
      converged = true;
      break;
    }
    y = next;
  }
  if (!converged) {
    if (std::isinf(hi)) {
      hi = std::max(y, 1.0);
      while (cdf(hi) < p) hi *= 2.0;
    }
    for (int it = 0; it < 2000 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p) lo = mid; else hi = mid;
    }
    y = 0.5 * (lo + hi);
  }
  return 2.0 * y;
}

}  // namespace dygauss
