#include <memory>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "invuq/distributions.hpp"
#include "invuq/errors.hpp"

using namespace invuq;

namespace {

constexpr double kPi = std::numbers::pi;

Vector random_vector(Index n, std::mt19937_64& g, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(g);
  return v;
}

// Zero-boundary differences of a signal: x_0, x_1 - x_0, ..., -x_{n-1}.
Vector diffs_1d(const Vector& x) {
  const Index n = x.size();
  Vector d(n + 1);
  d[0] = x[0];
  for (Index i = 1; i < n; ++i) d[i] = x[i] - x[i - 1];
  d[n] = -x[n - 1];
  return d;
}

Matrix laplacian(Index n) {
  Matrix L = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    L(i, i) = 2.0;
    if (i > 0) L(i, i - 1) = L(i - 1, i) = -1.0;
  }
  return L;
}

void expect_gradient_matches_fd(const Distribution& p, const Vector& x, double rel = 1e-5) {
  const Vector g = p.gradient(x);
  for (Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    Vector a = x, b = x;
    a[i] += h;
    b[i] -= h;
    const double fd = (p.logpdf(a) - p.logpdf(b)) / (2.0 * h);
    EXPECT_NEAR(fd, g[i], rel * std::max(1.0, std::abs(g[i]))) << p.family_name() << " coordinate " << i;
  }
}

}  // namespace

TEST(Gaussian, StandardLogpdf) {
  const auto p = Distribution::gaussian("x", 0.0, 1.0);
  EXPECT_NEAR(p.logpdf(Vector::Zero(1)), -0.918938533204673, 1e-12);
}

TEST(Gaussian, ParameterizationsAgree) {
  const auto geo = Geometry::continuous_1d(3);
  const Vector x{{0.3, -1.0, 2.0}};
  const double ref = Distribution::gaussian("x", 1.0, 4.0, CovTag::cov, geo).logpdf(x);
  EXPECT_NEAR(Distribution::gaussian("x", 1.0, 0.25, CovTag::prec, geo).logpdf(x), ref, 1e-12);
  EXPECT_NEAR(Distribution::gaussian("x", 1.0, 2.0, CovTag::sqrtcov, geo).logpdf(x), ref, 1e-12);
  EXPECT_NEAR(Distribution::gaussian("x", 1.0, 0.5, CovTag::sqrtprec, geo).logpdf(x), ref, 1e-12);
  // Direct formula.
  const double direct = -0.5 * (x.array() - 1.0).square().sum() / 4.0 - 1.5 * std::log(2.0 * kPi * 4.0);
  EXPECT_NEAR(ref, direct, 1e-12);
}

TEST(Gaussian, DenseCovariance) {
  const Matrix S{{2.0, 0.5}, {0.5, 1.0}};
  const Vector mu{{1.0, -1.0}};
  const auto p = Distribution::gaussian_dense("x", mu, S);
  const Vector x{{0.2, 0.7}};
  const Vector r = x - mu;
  const double direct = -0.5 * r.dot(S.inverse() * r) - 0.5 * std::log(S.determinant()) - std::log(2.0 * kPi);
  EXPECT_NEAR(p.logpdf(x), direct, 1e-12);
  EXPECT_TRUE(p.gradient(x).isApprox(-S.inverse() * r, 1e-12));
  EXPECT_TRUE(p.covariance().isApprox(S));
}

TEST(Gaussian, GradientZeroAtMean) {
  const auto p = Distribution::gaussian("x", Vector{{1.0, 2.0}}, 0.3);
  EXPECT_TRUE(p.gradient(Vector{{1.0, 2.0}}).isZero());
}

TEST(Gaussian, SampleMeanWithinClt) {
  const auto p = Distribution::gaussian("x", 0.0, 0.01, CovTag::cov, Geometry::continuous_1d(4));
  Rng rng(1);
  const Samples s = p.sample(rng, 100000);
  const Vector m = s.mean();
  for (Index i = 0; i < 4; ++i) EXPECT_LT(std::abs(m[i]), 4.0 * 0.1 / std::sqrt(1e5));
}

TEST(Gaussian, DimensionMismatch) {
  const auto p = Distribution::gaussian("x", 0.0, 1.0, CovTag::cov, Geometry::continuous_1d(3));
  EXPECT_THROW(p.logpdf(Vector::Zero(4)), DimensionError);
  EXPECT_THROW(Distribution::gaussian("x", Vector(Vector::Zero(3)), Vector(Vector::Ones(2))).logpdf(Vector::Zero(3)),
               DimensionError);
}

TEST(Gamma, RateParameterization) {
  const auto p = Distribution::gamma("s", 1.0, 1e-4);
  EXPECT_NEAR(p.logpdf(scalar_vector(1e-300)), std::log(1e-4), 1e-9);
  const auto q = Distribution::gamma("s", 3.0, 2.0);
  const double x = 1.7;
  EXPECT_NEAR(q.logpdf(scalar_vector(x)), 3.0 * std::log(2.0) - std::lgamma(3.0) + 2.0 * std::log(x) - 2.0 * x,
              1e-12);
  EXPECT_EQ(q.logpdf(scalar_vector(-1.0)), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(q.logpdf(scalar_vector(0.0)), -std::numeric_limits<double>::infinity());
}

TEST(Gamma, SampleMean) {
  const auto p = Distribution::gamma("s", 1.0, 1e-4);
  Rng rng(2);
  const double m = p.sample(rng, 1000000).mean()[0];
  EXPECT_NEAR(m, 1e4, 0.02 * 1e4);
}

TEST(Lognormal, DensityAndGradient) {
  const auto p = Distribution::lognormal("t", 5.0, 1.0);
  const double x = 120.0;
  const double direct = -std::log(x) - 0.5 * std::log(2.0 * kPi) - 0.5 * std::pow(std::log(x) - 5.0, 2);
  EXPECT_NEAR(p.logpdf(scalar_vector(x)), direct, 1e-12);
  expect_gradient_matches_fd(p, scalar_vector(x));
  EXPECT_EQ(p.logpdf(scalar_vector(-1.0)), -std::numeric_limits<double>::infinity());
}

TEST(Uniform, SupportAndNoGradient) {
  const auto p = Distribution::uniform("u", Vector{{0.0, -1.0}}, Vector{{2.0, 1.0}});
  EXPECT_NEAR(p.logpdf(Vector{{1.0, 0.0}}), -std::log(4.0), 1e-14);
  EXPECT_EQ(p.logpdf(Vector{{3.0, 0.0}}), -std::numeric_limits<double>::infinity());
  EXPECT_FALSE(p.has_gradient());
  EXPECT_THROW(p.gradient(Vector{{1.0, 0.0}}), CapabilityError);
}

TEST(Gmrf, LogpdfMatchesDenseGaussian) {
  const Index n = 12;
  const double d = 50.0;
  const auto p = Distribution::gmrf("x", 0.0, d, Geometry::continuous_1d(n));
  const Matrix Q = d * laplacian(n);
  std::mt19937_64 g(3);
  for (int k = 0; k < 5; ++k) {
    const Vector x = random_vector(n, g, 0.3);
    const double direct = -0.5 * x.dot(Q * x) + 0.5 * std::log(Q.determinant()) - 0.5 * n * std::log(2.0 * kPi);
    EXPECT_NEAR(p.logpdf(x), direct, 1e-9);
    EXPECT_TRUE(p.gradient(x).isApprox(-Q * x, 1e-12));
  }
}

TEST(Gmrf, DoublingPrecisionIdentity) {
  const Index n = 20;
  const Geometry geo = Geometry::continuous_1d(n);
  std::mt19937_64 g(4);
  const Vector x = random_vector(n, g);
  const double d = 3.0;
  const double lhs = Distribution::gmrf("x", 0.0, 2.0 * d, geo).logpdf(x) - Distribution::gmrf("x", 0.0, d, geo).logpdf(x);
  EXPECT_NEAR(lhs, 0.5 * n * std::log(2.0) - 0.5 * d * x.dot(laplacian(n) * x), 1e-10);
}

TEST(Gmrf, TwoDimensionalLogDet) {
  const Index N = 5;
  const auto p = Distribution::gmrf("x", 0.0, 2.0, Geometry::image_2d(N, N));
  Matrix Q = Matrix::Zero(N * N, N * N);
  const Matrix L = laplacian(N), I = Matrix::Identity(N, N);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) Q.block(i * N, j * N, N, N) = I(i, j) * L + L(i, j) * I;
  Q *= 2.0;
  std::mt19937_64 g(5);
  const Vector x = random_vector(N * N, g);
  const double direct = -0.5 * x.dot(Q * x) + 0.5 * std::log(Q.determinant()) - 0.5 * N * N * std::log(2.0 * kPi);
  EXPECT_NEAR(p.logpdf(x), direct, 1e-9);
}

TEST(Gmrf, SampleCovarianceMatchesInverse) {
  const Index n = 16;
  const double d = 50.0;
  const auto p = Distribution::gmrf("x", 0.0, d, Geometry::continuous_1d(n));
  Rng rng(6);
  const Index N = 100000;
  const Matrix X = p.sample(rng, N).draws();
  const Matrix C = (X.transpose() * X) / static_cast<double>(N);
  const Matrix S = (d * laplacian(n)).inverse();
  double worst = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      // Var of x_i x_j under a zero-mean Gaussian is S_ii S_jj + S_ij^2.
      const double se = std::sqrt((S(i, i) * S(j, j) + S(i, j) * S(i, j)) / static_cast<double>(N));
      worst = std::max(worst, std::abs(C(i, j) - S(i, j)) / se);
    }
  EXPECT_LT(worst, 5.0);
}

TEST(Lmrf, LogpdfDifferenceIsL1) {
  const Index n = 15;
  const double b = 0.3;
  const auto p = Distribution::lmrf("x", 0.0, b, Geometry::continuous_1d(n));
  std::mt19937_64 g(7);
  const Vector x1 = random_vector(n, g), x2 = random_vector(n, g);
  EXPECT_NEAR(p.logpdf(x1) - p.logpdf(x2), -(diffs_1d(x1).lpNorm<1>() - diffs_1d(x2).lpNorm<1>()) / b, 1e-12);
  EXPECT_NEAR(p.logpdf(Vector::Zero(n)), -(n + 1) * std::log(2.0 * b), 1e-12);
  EXPECT_FALSE(p.has_gradient());
  EXPECT_THROW(p.gradient(x1), CapabilityError);
  EXPECT_FALSE(p.has_direct_sampler());
  EXPECT_THROW(p.sample_one(*std::make_unique<Rng>(0)), CapabilityError);
}

TEST(Lmrf, TwoDimensionalTermCount) {
  EXPECT_EQ(mrf_difference_count(16, 2), 2 * 4 * 5);
  EXPECT_EQ(mrf_difference_count(16, 1), 17);
  const auto p = Distribution::lmrf("x", 0.0, 1.0, Geometry::image_2d(4, 4));
  EXPECT_NEAR(p.logpdf(Vector::Zero(16)), -40.0 * std::log(2.0), 1e-12);
}

TEST(Cmrf, ZeroSignal) {
  const auto p = Distribution::cmrf("x", 0.0, 1.0, Geometry::continuous_1d(2));
  // Three factors b / (pi (b^2 + 0)).
  EXPECT_NEAR(p.logpdf(Vector::Zero(2)), -3.0 * std::log(kPi), 1e-14);
  EXPECT_FALSE(p.has_direct_sampler());
}

TEST(Cmrf, GradientMatchesFiniteDifferences) {
  const auto p1 = Distribution::cmrf("x", 0.0, 0.05, Geometry::continuous_1d(10));
  const auto p2 = Distribution::cmrf("x", 0.0, 0.2, Geometry::image_2d(3, 3));
  std::mt19937_64 g(8);
  for (int k = 0; k < 20; ++k) {
    expect_gradient_matches_fd(p1, random_vector(10, g, 0.2));
    expect_gradient_matches_fd(p2, random_vector(9, g, 0.2));
  }
}

TEST(Distributions, GradientsMatchFiniteDifferences) {
  std::mt19937_64 g(9);
  const Matrix S{{1.0, 0.3, 0.0}, {0.3, 2.0, 0.1}, {0.0, 0.1, 0.5}};
  const auto gd = Distribution::gaussian_dense("x", Vector{{0.1, 0.2, 0.3}}, S, CovTag::prec);
  const auto gm = Distribution::gmrf("x", 0.0, 7.0, Geometry::image_2d(3, 3));
  const auto gam = Distribution::gamma("s", Vector{{2.0, 3.0}}, 1.5, Geometry::continuous_1d(2));
  for (int k = 0; k < 20; ++k) {
    expect_gradient_matches_fd(gd, random_vector(3, g));
    expect_gradient_matches_fd(gm, random_vector(9, g));
    expect_gradient_matches_fd(gam, (random_vector(2, g).array().abs() + 0.5).matrix());
  }
}

TEST(Condition, DeferredCovariance) {
  const auto p = Distribution::gaussian(
      "x", 0.0, Param::function({"d"}, [](const Assignment& a) { return Vector(a.at("d").array().square()); }),
      CovTag::cov, Geometry::continuous_1d(4));
  EXPECT_EQ(p.conditioning_variables(), std::vector<std::string>{"d"});
  EXPECT_THROW(p.logpdf(Vector::Zero(4)), InvalidArgument);
  const auto q = p.condition({{"d", scalar_vector(0.1)}});
  EXPECT_TRUE(q.is_fully_specified());
  const auto ref = Distribution::gaussian("x", 0.0, 0.01, CovTag::cov, Geometry::continuous_1d(4));
  const Vector x{{0.1, -0.2, 0.05, 0.0}};
  EXPECT_NEAR(q.logpdf(x), ref.logpdf(x), 1e-12);
  Rng rng(10);
  EXPECT_EQ(q.sample(rng, 10).size(), 10);
}

TEST(Condition, EmptyBindingIsIdentity) {
  const auto p = Distribution::gaussian("x", 1.0, 2.0);
  EXPECT_NEAR(p.condition({}).logpdf(scalar_vector(0.3)), p.logpdf(scalar_vector(0.3)), 0.0);
}

TEST(Condition, UnknownNameListsValidNames) {
  const auto p = Distribution::gmrf("x", 0.0, Param::variable("d"), Geometry::continuous_1d(4));
  try {
    p.condition({{"s", scalar_vector(1.0)}});
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("d"), std::string::npos);
  }
}

TEST(Condition, ModelMeanDataDistribution) {
  auto model = std::make_shared<ForwardModel>(
      ForwardModel::linear(std::make_shared<MatrixOperator>(MatrixOperator::dense(Matrix{{1.0, 2.0}, {0.0, 1.0}}))));
  const auto y = Distribution::gaussian("y", Param::model(model, "x"), 0.01 * 0.01, CovTag::cov,
                                        Geometry::continuous_1d(2));
  const auto yc = y.condition({{"x", Vector{{1.0, 1.0}}}});
  EXPECT_TRUE(yc.mean_vector().isApprox(Vector{{3.0, 1.0}}));
  Rng rng(11);
  EXPECT_EQ(yc.sample(rng, 5).size(), 5);
}

TEST(UserDefined, ForwardsCallbacks) {
  const auto p = Distribution::user_defined(
      "x", Geometry::continuous_1d(2), [](const Vector& x) { return -x.squaredNorm(); },
      [](const Vector& x) { return Vector(-2.0 * x); });
  EXPECT_DOUBLE_EQ(p.logpdf(Vector{{1.0, 1.0}}), -2.0);
  EXPECT_TRUE(p.has_gradient());
  EXPECT_FALSE(p.has_direct_sampler());
}

TEST(MrfDifferences, AdjointPair) {
  std::mt19937_64 g(12);
  for (int dims : {1, 2}) {
    const Index n = dims == 1 ? 11 : 16;
    const Vector x = random_vector(n, g);
    const Vector y = random_vector(mrf_difference_count(n, dims), g);
    EXPECT_NEAR(y.dot(mrf_differences(x, dims)), mrf_differences_transpose(y, n, dims).dot(x), 1e-12);
    EXPECT_TRUE(mrf_difference_operator(n, dims)->apply(x).isApprox(mrf_differences(x, dims)));
  }
  const Vector x = random_vector(7, g);
  EXPECT_TRUE(mrf_differences(x, 1).isApprox(diffs_1d(x)));
  EXPECT_NEAR(lmrf_functional(x, 1), diffs_1d(x).lpNorm<1>(), 1e-14);
}
