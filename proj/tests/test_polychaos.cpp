#include "bayesid/polychaos.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace bayesid;
using namespace bayesid::pc;

namespace {

// Brute-force oracle: every vector in {0..p}^M with entry sum <= p.
std::size_t brute_force_count(int dims, int order) {
  std::size_t count = 0;
  std::vector<int> a(static_cast<std::size_t>(dims), 0);
  while (true) {
    if (total_degree(a) <= order) ++count;
    std::size_t k = 0;
    while (k < a.size() && ++a[k] > order) a[k++] = 0;
    if (k == a.size()) break;
  }
  return count;
}

std::shared_ptr<const MultiIndexSet> make_set(int dims, int order) {
  return std::make_shared<const MultiIndexSet>(build_total_degree_set(dims, order));
}

// Quadrature of a product of univariate Hermite polynomials, independent of the
// closed forms: a 30-point rule is exact far beyond the degrees used here.
double quad_expectation(const std::vector<MultiIndex>& factors) {
  const int dims = static_cast<int>(factors.front().size());
  GaussHermiteRule rule(30, dims);
  double sum = 0.0;
  rule.for_each([&](std::span<const double> theta, double w) {
    double v = w;
    for (const auto& f : factors)
      for (int d = 0; d < dims; ++d) v *= hermite_eval(f[static_cast<std::size_t>(d)], theta[static_cast<std::size_t>(d)]);
    sum += v;
  });
  return sum;
}

}  // namespace

TEST(MultiIndexSet, ConstantBasisOnly) {
  auto s = build_total_degree_set(1, 0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (MultiIndex{0}));
}

TEST(MultiIndexSet, GradedLexOrderForTwoDimsOrderTwo) {
  auto s = build_total_degree_set(2, 2);
  std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(s.indices(), expected);
}

TEST(MultiIndexSet, CardinalityMatchesEnumeration) {
  for (int m = 1; m <= 5; ++m)
    for (int p = 0; p <= 4; ++p) {
      auto s = build_total_degree_set(m, p);
      EXPECT_EQ(s.size(), brute_force_count(m, p)) << "M=" << m << " p=" << p;
      std::set<MultiIndex> distinct(s.begin(), s.end());
      EXPECT_EQ(distinct.size(), s.size());
      EXPECT_EQ(total_degree(s[0]), 0);
      for (std::size_t i = 1; i < s.size(); ++i)
        EXPECT_LE(total_degree(s[i - 1]), total_degree(s[i]));
    }
  EXPECT_EQ(build_total_degree_set(10, 3).size(), 286u);
}

TEST(MultiIndexSet, RejectsBadSizes) {
  EXPECT_THROW(build_total_degree_set(0, 2), InvalidArgument);
  EXPECT_THROW(build_total_degree_set(2, -1), InvalidArgument);
  // binomial(43, 3) = 12341 > default cap
  EXPECT_THROW(build_total_degree_set(40, 3), InvalidArgument);
}

TEST(Hermite, RecurrenceValues) {
  EXPECT_DOUBLE_EQ(hermite_eval(0, 3.7), 1.0);
  EXPECT_DOUBLE_EQ(hermite_eval(2, 2.0), 3.0);
  EXPECT_DOUBLE_EQ(hermite_eval(3, 1.0), -2.0);
}

TEST(Hermite, MatchesExplicitPolynomials) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    EXPECT_LT(rel(hermite_eval(2, x), x * x - 1), 1e-12);
    EXPECT_LT(rel(hermite_eval(3, x), x * x * x - 3 * x), 1e-12);
    EXPECT_LT(rel(hermite_eval(4, x), std::pow(x, 4) - 6 * x * x + 3), 1e-12);
  }
}

TEST(Hermite, BasisEval) {
  std::vector<double> t1{5, -2}, t2{2, 3}, t3{2, 9};
  EXPECT_DOUBLE_EQ(basis_eval(MultiIndex{0, 0}, t1), 1.0);
  EXPECT_DOUBLE_EQ(basis_eval(MultiIndex{1, 1}, t2), 6.0);
  EXPECT_DOUBLE_EQ(basis_eval(MultiIndex{2, 0}, t3), 3.0);
  EXPECT_THROW(basis_eval(MultiIndex{1}, t1), InvalidArgument);
}

TEST(Hermite, NormSquaredMatchesQuadrature) {
  EXPECT_DOUBLE_EQ(basis_norm_sq(MultiIndex{0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(basis_norm_sq(MultiIndex{2, 1}), 2.0);
  EXPECT_DOUBLE_EQ(basis_norm_sq(MultiIndex{3, 2, 1}), 12.0);
  EXPECT_NEAR(quad_expectation({{2, 1}, {2, 1}}), 2.0, 1e-12);
  EXPECT_NEAR(quad_expectation({{3, 2, 1}, {3, 2, 1}}), 12.0, 1e-10);
}

TEST(Hermite, TripleProductExamples) {
  EXPECT_DOUBLE_EQ(triple_product(MultiIndex{1}, MultiIndex{1}, MultiIndex{2}), 2.0);
  EXPECT_DOUBLE_EQ(triple_product(MultiIndex{1}, MultiIndex{1}, MultiIndex{1}), 0.0);
  MultiIndex beta{2, 1};
  EXPECT_DOUBLE_EQ(triple_product(MultiIndex{0, 0}, beta, beta), basis_norm_sq(beta));
  EXPECT_NEAR(quad_expectation({{1}, {1}, {2}}), 2.0, 1e-12);
  EXPECT_NEAR(quad_expectation({{1}, {1}, {1}}), 0.0, 1e-12);
}

TEST(Hermite, TripleProductSymmetricAndMatchesQuadrature) {
  for (int m = 1; m <= 2; ++m) {
    auto s = build_total_degree_set(m, 3);
    for (const auto& a : s)
      for (const auto& b : s)
        for (const auto& c : s) {
          const double v = triple_product(a, b, c);
          EXPECT_EQ(v, triple_product(a, c, b));
          EXPECT_EQ(v, triple_product(b, a, c));
          EXPECT_EQ(v, triple_product(b, c, a));
          EXPECT_EQ(v, triple_product(c, a, b));
          EXPECT_EQ(v, triple_product(c, b, a));
          EXPECT_NEAR(v, quad_expectation({a, b, c}), 1e-10 * std::max(1.0, v));
        }
  }
}

TEST(Quadrature, WeightsNormalizedAndExactForPolynomials) {
  for (int n = 1; n <= 12; ++n) {
    GaussHermiteRule rule(n, 1);
    double wsum = 0;
    for (double w : rule.weights_1d()) wsum += w;
    EXPECT_NEAR(wsum, 1.0, 1e-14);
    // E[x^(2k)] = (2k-1)!! for degree <= 2n-1
    for (int k = 0; 2 * k <= 2 * n - 1; ++k) {
      double m = 0;
      for (int i = 0; i < n; ++i)
        m += rule.weights_1d()[static_cast<std::size_t>(i)] * std::pow(rule.nodes_1d()[static_cast<std::size_t>(i)], 2 * k);
      double df = 1;
      for (int j = 2 * k - 1; j > 0; j -= 2) df *= j;
      EXPECT_NEAR(m / df, 1.0, 1e-12) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Quadrature, NodeCapGuard) { EXPECT_THROW(GaussHermiteRule(10, 10, 1000), InvalidArgument); }

TEST(Quadrature, OrthogonalityOfTotalDegreeBasis) {
  for (int m = 1; m <= 4; ++m)
    for (int p = 0; p <= 5; ++p) {
      auto s = build_total_degree_set(m, p);
      GaussHermiteRule rule(p + 1, m);
      Matrix gram = Matrix::Zero(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.size()));
      rule.for_each([&](std::span<const double> theta, double w) {
        const Vector h = basis_eval_all(s, theta);
        gram.noalias() += w * h * h.transpose();
      });
      for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = 0; b < s.size(); ++b) {
          const double expected = a == b ? basis_norm_sq(s[a]) : 0.0;
          const double scale = std::sqrt(basis_norm_sq(s[a]) * basis_norm_sq(s[b]));
          EXPECT_NEAR(gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), expected, 1e-10 * scale);
        }
    }
}

TEST(Projection, PolynomialsAreReproduced) {
  auto s = make_set(1, 2);
  GaussHermiteRule rule(3, 1);
  auto lin = project_function([](std::span<const double> t) { return t[0]; }, s, rule);
  EXPECT_NEAR(lin.coeffs()(0, 0), 0.0, 1e-14);
  EXPECT_NEAR(lin.coeffs()(0, 1), 1.0, 1e-14);
  EXPECT_NEAR(lin.coeffs()(0, 2), 0.0, 1e-14);
  auto sq = project_function([](std::span<const double> t) { return t[0] * t[0]; }, s, rule);
  EXPECT_NEAR(sq.coeffs()(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(sq.coeffs()(0, 1), 0.0, 1e-14);
  EXPECT_NEAR(sq.coeffs()(0, 2), 1.0, 1e-14);
}

TEST(Projection, ExponentialHasLognormalCoefficients) {
  auto s = make_set(1, 5);
  GaussHermiteRule rule(20, 1);
  auto q = project_function([](std::span<const double> t) { return std::exp(t[0]); }, s, rule);
  const double e = std::exp(0.5);
  for (int k = 0; k <= 5; ++k)
    EXPECT_NEAR(q.coeffs()(0, k), e / factorial(k), 1e-12) << k;
  // Monte Carlo oracle for the mean E[e^theta]
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  const int n = 1'000'000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = std::exp(n01(rng));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_NEAR(q.coeffs()(0, 0), mean, 3 * se);
}

TEST(Projection, IdempotentOnOwnBasis) {
  auto s = make_set(3, 3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  Matrix c(2, static_cast<Eigen::Index>(s->size()));
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = n01(rng);
  PceTensor q(s, c);
  GaussHermiteRule rule(4, 3);
  auto back = project_vector_function([&](std::span<const double> t) { return pce_sample(q, t); },
                                      2, s, rule);
  EXPECT_LT((back.coeffs() - c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PceMoments, MeanAndCovarianceExamples) {
  auto s1 = make_set(1, 1);
  Vector m(2);
  m << 3, 4;
  auto c = PceTensor::constant(make_set(2, 2), m);
  EXPECT_EQ(pce_mean(c), m);
  EXPECT_TRUE(pce_covariance(c, c).isZero(0));

  Matrix qc(1, 2), yc(1, 2);
  qc << 1, 2;
  yc << 0, 5;
  PceTensor q(s1, qc), y(s1, yc);
  EXPECT_DOUBLE_EQ(pce_mean(q)[0], 1.0);
  EXPECT_DOUBLE_EQ(pce_covariance(q, y)(0, 0), 10.0);
  EXPECT_THROW(pce_covariance(q, PceTensor::zeros(make_set(2, 1), 1)), InvalidArgument);
}

TEST(PceMoments, SampleEvaluation) {
  auto s = make_set(2, 1);
  Matrix c(1, 3);
  c << 1, 2, -1;
  PceTensor q(s, c);
  std::vector<double> theta{1, 1};
  EXPECT_DOUBLE_EQ(pce_sample(q, theta)[0], 2.0);
  std::vector<double> bad{1};
  EXPECT_THROW(pce_sample(q, bad), InvalidArgument);

  Vector m(1);
  m << 7;
  auto k = PceTensor::constant(make_set(3, 2), m);
  std::vector<double> anything{0.3, -2, 5};
  EXPECT_DOUBLE_EQ(pce_sample(k, anything)[0], 7.0);
}

TEST(PceMoments, SamplingOracleAgreesWithCoefficientMoments) {
  auto s = make_set(2, 2);
  Matrix c(2, 6);
  c << 1.0, 0.5, -0.3, 0.2, 0.1, 0.05,
      -2.0, 0.1, 0.4, 0.0, -0.2, 0.3;
  PceTensor q(s, c);
  const Vector mean = pce_mean(q);
  const Matrix cov = pce_covariance(q, q);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  const int n = 1'000'000;
  Vector sum = Vector::Zero(2);
  Matrix sum2 = Matrix::Zero(2, 2);
  std::vector<double> theta(2);
  std::vector<Vector> keep;
  for (int i = 0; i < n; ++i) {
    theta[0] = n01(rng);
    theta[1] = n01(rng);
    const Vector v = pce_sample(q, theta);
    sum += v;
    sum2 += v * v.transpose();
  }
  const Vector mc_mean = sum / n;
  const Matrix mc_cov = sum2 / n - mc_mean * mc_mean.transpose();
  for (int i = 0; i < 2; ++i) {
    const double se = std::sqrt(cov(i, i) / n);
    EXPECT_NEAR(mc_mean[i], mean[i], 3 * se);
  }
  // standard error of a covariance entry is bounded by sqrt(E[x^2 y^2]/n); use a loose 4th-moment bound
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt(3.0 * cov(i, i) * cov(j, j) / n) * 2.0;
      EXPECT_NEAR(mc_cov(i, j), cov(i, j), 3 * se);
    }
}

TEST(PceMoments, CovarianceIsPositiveSemidefinite) {
  auto s = make_set(3, 2);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix c(15, static_cast<Eigen::Index>(s->size()));
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = n01(rng);
    PceTensor q(s, c);
    const Matrix cov = pce_covariance(q, q);
    EXPECT_LT((cov - cov.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * eig.eigenvalues().maxCoeff());
    EXPECT_LT((pce_variance(q) - cov.diagonal()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PceJson, BitExactRoundTrip) {
  auto s = make_set(3, 2);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01;
  Matrix c(4, static_cast<Eigen::Index>(s->size()));
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = n01(rng) * std::pow(10.0, static_cast<double>(i % 7) - 3);
  PceTensor q(s, c);
  const std::string text = to_json(q).dump();
  auto back = pce_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.index_set(), q.index_set());
  for (Eigen::Index i = 0; i < c.size(); ++i) EXPECT_EQ(back.coeffs().data()[i], c.data()[i]);
}
