#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dygauss/simplex.hpp"
#include "oracles.hpp"

using namespace dygauss;

namespace {
Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}
}  // namespace

TEST(Logistic, Examples) {
  const SimplexPoint a = logistic(NaturalParam(Vector::Zero(3)));
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(a.probs()[j], 0.25, 1e-15);
  EXPECT_NEAR(a.pi0(), 0.25, 1e-15);

  EXPECT_NEAR(logistic(NaturalParam(vec({std::log(2.0)}))).probs()[0], 2.0 / 3.0, 1e-15);

  const SimplexPoint c = logistic(NaturalParam(vec({1.0, -1.0})));
  const double z = 1 + std::exp(1.0) + std::exp(-1.0);
  EXPECT_NEAR(c.probs()[0], std::exp(1.0) / z, 1e-15);
  EXPECT_NEAR(c.probs()[1], std::exp(-1.0) / z, 1e-15);
}

TEST(Logistic, LargeEntriesDoNotOverflow) {
  const SimplexPoint p = logistic(NaturalParam(vec({700.0, 699.0})));
  EXPECT_TRUE(p.probs().allFinite());
  EXPECT_GT(p.pi0(), 0.0);
  EXPECT_NEAR(p.probs()[0] / p.probs()[1], std::exp(1.0), 1e-12);
}

TEST(NaturalParam, RejectsNonFinite) {
  EXPECT_THROW(NaturalParam(vec({0.0, NAN})), std::domain_error);
  EXPECT_THROW(NaturalParam(vec({INFINITY})), std::domain_error);
}

TEST(LogRatio, Examples) {
  EXPECT_NEAR(log_ratio(SimplexPoint::from_probs(vec({0.5}))).theta()[0], 0.0, 1e-15);
  const NaturalParam u = log_ratio(SimplexPoint::from_probs(vec({0.25, 0.25, 0.25})));
  EXPECT_LT(u.theta().norm(), 1e-15);
  const NaturalParam t = log_ratio(SimplexPoint::from_probs(vec({0.5, 0.25})));
  EXPECT_NEAR(t.theta()[0], std::log(2.0), 1e-15);
  EXPECT_NEAR(t.theta()[1], 0.0, 1e-15);
}

TEST(SimplexPoint, RejectsBoundary) {
  EXPECT_THROW(SimplexPoint::from_probs(vec({0.0, 0.5})), std::domain_error);
  EXPECT_THROW(SimplexPoint::from_probs(vec({0.5, 0.5})), std::domain_error);
  EXPECT_THROW(SimplexPoint::from_probs(vec({0.7, 0.6})), std::domain_error);
}

TEST(LogRatio, RoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::uniform_int_distribution<int> ud(1, 64);
  for (int rep = 0; rep < 1000; ++rep) {
    Vector th(ud(rng));
    for (auto& x : th) x = u(rng);
    const NaturalParam back = log_ratio(logistic(NaturalParam(th)));
    EXPECT_LT((back.theta() - th).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Jacobian, Examples) {
  EXPECT_NEAR(jacobian_logdet_inv(NaturalParam(vec({0.0}))), std::log(0.25), 1e-15);
  EXPECT_NEAR(jacobian_logdet_inv(NaturalParam(Vector::Zero(3))), 4 * std::log(0.25), 1e-14);
  const NaturalParam th(vec({1.0, -1.0}));
  const SimplexPoint p = logistic(th);
  EXPECT_NEAR(jacobian_logdet_inv(th), std::log(p.pi0()) + p.probs().array().log().sum(), 1e-14);
}

TEST(DirichletLogpdf, Examples) {
  EXPECT_NEAR(dirichlet_logpdf(SimplexPoint::from_probs(vec({0.3})), vec({1, 1})), 0.0, 1e-14);
  EXPECT_NEAR(dirichlet_logpdf(SimplexPoint::from_probs(vec({0.5})), vec({2, 2})), std::log(1.5), 1e-14);
  // pi_0 = 0.5: Gamma(4)/Gamma(2) * 0.5^(2-1) = 3.
  EXPECT_NEAR(dirichlet_logpdf(SimplexPoint::from_probs(vec({0.2, 0.3})), vec({2, 1, 1})), std::log(3.0), 1e-14);
}

TEST(DirichletLogpdf, RejectsBadBeta) {
  EXPECT_THROW(dirichlet_logpdf(SimplexPoint::from_probs(vec({0.3})), vec({1, 0})), std::domain_error);
  EXPECT_THROW(dirichlet_logpdf(SimplexPoint::from_probs(vec({0.3})), vec({1, 1, 1})), std::invalid_argument);
}

TEST(LdLogpdf, Examples) {
  EXPECT_NEAR(ld_logpdf(NaturalParam(vec({0.0})), vec({1, 1})), std::log(0.25), 1e-14);
  const double mass =
      oracle::simpson([](double t) { return std::exp(ld_logpdf(NaturalParam(vec({t})), vec({1, 1}))); }, -40, 40, 1e-10);
  EXPECT_NEAR(mass, 1.0, 1e-6);

  const SimplexPoint p = SimplexPoint::from_probs(vec({0.2, 0.3}));
  const NaturalParam th = log_ratio(p);
  EXPECT_NEAR(ld_logpdf(th, vec({2, 1, 1})), std::log(3.0) + jacobian_logdet_inv(th), 1e-12);
}

TEST(LdLogpdf, ChangeOfVariables) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ut(-5, 5), ub(0.2, 20);
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 1 + rep % 9;
    Vector th(d), beta(d + 1);
    for (auto& x : th) x = ut(rng);
    for (auto& x : beta) x = ub(rng);
    const NaturalParam t(th);
    EXPECT_NEAR(ld_logpdf(t, beta), dirichlet_logpdf(logistic(t), beta) + jacobian_logdet_inv(t), 1e-10);
  }
}

TEST(LdLogpdf, NormalizesInOneAndTwoDimensions) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ub(0.5, 5);
  for (int rep = 0; rep < 4; ++rep) {
    const Vector b1 = vec({ub(rng), ub(rng)});
    const double m1 = oracle::simpson([&](double t) { return std::exp(ld_logpdf(NaturalParam(vec({t})), b1)); },
                                      -60, 60, 1e-9);
    EXPECT_NEAR(m1, 1.0, 1e-4);

    const Vector b2 = vec({ub(rng), ub(rng), ub(rng)});
    const double m2 = oracle::simpson_panels(
        [&](double s) {
          return oracle::simpson_panels(
              [&](double t) { return std::exp(ld_logpdf(NaturalParam(vec({s, t})), b2)); }, -40, 40, 8);
        },
        -40, 40, 8);
    EXPECT_NEAR(m2, 1.0, 1e-4);
  }
}

TEST(LogisticNormal, Examples) {
  Matrix one(1, 1);
  one << 1.0;
  EXPECT_NEAR(logistic_normal_logpdf(SimplexPoint::from_probs(vec({0.5})), vec({0.0}), one),
              -0.5 * std::log(2 * std::numbers::pi) + std::log(4.0), 1e-14);
  EXPECT_NEAR(logistic_normal_logpdf(SimplexPoint::from_probs(vec({1.0 / 3, 1.0 / 3})), Vector::Zero(2),
                                     Matrix::Identity(2, 2)),
              -std::log(2 * std::numbers::pi) + 3 * std::log(3.0), 1e-13);
}

TEST(LogisticNormal, GaussianMinusJacobian) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 1 + rep % 6;
    Vector th(d), mu(d);
    for (int j = 0; j < d; ++j) {
      th[j] = n01(rng);
      mu[j] = n01(rng);
    }
    const Matrix sigma = oracle::random_spd(d, rng);
    const NaturalParam t(th);
    EXPECT_NEAR(logistic_normal_logpdf(logistic(t), mu, sigma), gaussian_logpdf(th, mu, sigma) - jacobian_logdet_inv(t),
                1e-10);
  }
}

TEST(LogisticNormal, RejectsIndefiniteCovariance) {
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  EXPECT_THROW(logistic_normal_logpdf(SimplexPoint::from_probs(vec({0.2, 0.3})), Vector::Zero(2), bad),
               std::domain_error);
}
