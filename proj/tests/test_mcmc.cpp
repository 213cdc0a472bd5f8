#include "bayesid/experiment/problems.hpp"
#include "bayesid/forward.hpp"
#include "bayesid/mcmc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bayesid;
using namespace bayesid::mcmc;

namespace {

std::vector<double> normal_samples(std::size_t n, double m, double s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(m, s);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

fwd::ForwardModel scalar_model() {
  auto prob = experiment::rectangle_problem();
  std::vector<int> all(static_cast<std::size_t>(prob->node_count()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return {prob, fem::MeasurementOperator::nodal(prob->mesh(), all)};
}

fwd::GermMap scalar_parameter(Eigen::Index nodes) {
  return {1, [nodes](std::span<const double> t) { return Vector(Vector::Constant(nodes, 2.0 + 0.3 * t[0])); }};
}

}  // namespace

TEST(Discrete, SymmetricTwoBins) {
  Vector rho(2);
  rho << 1.0, 1.0;
  auto c = metropolis_discrete(rho, 100000, 1, 0.0);
  const double p = c.occupancy()[0];
  EXPECT_NEAR(p, 0.5, 3 * std::sqrt(0.25 / 100000));
  EXPECT_EQ(c.acceptance_rate(), 1.0);
}

TEST(Discrete, OccupancyProportionalToWeights) {
  Vector rho(3);
  rho << 1.0, 2.0, 1.0;
  auto c = metropolis_discrete(rho, 100000, 2);
  const Vector occ = c.occupancy();
  const double n = static_cast<double>(c.states.size() - c.burn_in);
  const Vector target = rho / rho.sum();
  // successive states are correlated; 3 sigma with a 3x inflation for the chain
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(occ[i], target[i], 3 * 3 * std::sqrt(target[i] * (1 - target[i]) / n)) << i;
}

TEST(Discrete, TransitionMatrixStationaryIsNormalizedWeights) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int x = 2; x <= 10; ++x) {
    Vector rho(x);
    for (int i = 0; i < x; ++i) rho[i] = u(rng);
    const Matrix p = discrete_transition_matrix(rho);
    EXPECT_LT((p.rowwise().sum() - Vector::Ones(x)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((stationary_distribution(p) - rho / rho.sum()).cwiseAbs().maxCoeff(), 1e-10) << x;
  }
}

TEST(Discrete, ScalingWeightsKeepsPath) {
  Vector rho(4);
  rho << 0.3, 1.7, 0.9, 2.2;
  auto a = metropolis_discrete(rho, 5000, 9);
  auto b = metropolis_discrete(rho * 8.0, 5000, 9);
  auto c = metropolis_discrete(rho * 1e-7, 5000, 9);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.states, c.states);
}

TEST(Discrete, AllZeroWeightsThrow) {
  EXPECT_THROW(metropolis_discrete(Vector::Zero(3), 10, 0), InvalidArgument);
  EXPECT_THROW(metropolis_discrete(Vector::Ones(1), 10, 0), InvalidArgument);
}

TEST(RandomWalk, StandardGaussianTarget) {
  auto c = metropolis_rw(
      [](std::span<const double> x) { return -0.5 * (x[0] * x[0] + x[1] * x[1]); }, 1.0, 200000,
      Vector::Zero(2), 5);
  const Vector m = c.mean(), v = c.variance();
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(m[i]), 0.02) << i;
    EXPECT_NEAR(v[i], 1.0, 0.05) << i;
  }
  EXPECT_TRUE(stationarity_check(c));
}

TEST(RandomWalk, ConjugateLinearProblem) {
  const double m = 2.0, s = 0.3, e = 0.2, z = 2.5;
  // germ theta with q = m + s theta and y = q
  auto lik = LikelihoodModel::from_map([&](std::span<const double> t) { return Vector(Vector::Constant(1, m + s * t[0])); },
                                       Vector::Constant(1, z), Vector::Constant(1, e));
  auto c = run_chain(lik, 1, {200000, 1.0, 0.2, 31, {}});
  const double qm = m + s * c.mean()[0];
  const double qv = s * s * c.variance()[0];
  const double pm = m + s * s / (s * s + e * e) * (z - m);
  const double pv = s * s * e * e / (s * s + e * e);
  EXPECT_NEAR(qm, pm, 0.02 * pm);
  EXPECT_NEAR(qv, pv, 0.02 * pv * 2.5);
}

TEST(RandomWalk, TinyStepAcceptsAlmostEverything) {
  auto c = metropolis_rw([](std::span<const double> x) { return -0.5 * x[0] * x[0]; }, 1e-6, 2000, Vector::Zero(1), 1);
  EXPECT_GT(c.acceptance_rate(), 0.999);
}

TEST(RandomWalk, ShiftedLogTargetKeepsPath) {
  auto f = [](std::span<const double> x) { return -0.5 * x[0] * x[0] - std::pow(x[0], 4) / 8; };
  auto a = metropolis_rw(f, 0.5, 5000, Vector::Zero(1), 3);
  auto b = metropolis_rw([&](std::span<const double> x) { return f(x) + 3.0; }, 0.5, 5000, Vector::Zero(1), 3);
  EXPECT_EQ(a.states, b.states);
}

TEST(RandomWalk, NonFiniteInitThrows) {
  EXPECT_THROW(metropolis_rw([](std::span<const double>) { return -INFINITY; }, 0.1, 10, Vector::Zero(1), 0),
               InvalidArgument);
  EXPECT_THROW(metropolis_rw([](std::span<const double>) { return 0.0; }, 0.0, 10, Vector::Zero(1), 0),
               InvalidArgument);
}

TEST(RandomWalk, ChainCsv) {
  auto c = metropolis_rw([](std::span<const double> x) { return -0.5 * x[0] * x[0]; }, 0.5, 3, Vector::Zero(1), 1);
  auto t = chain_to_csv(c, {"theta"});
  EXPECT_EQ(t.header, (std::vector<std::string>{"step", "theta", "accepted"}));
  EXPECT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(parse_csv(t.str()).rows, t.rows);
}

TEST(Likelihood, ExactDataIsMaximal) {
  auto m = scalar_model();
  auto par = scalar_parameter(m.state_dim());
  const double t0 = 1.0;
  const Vector z = m.observe(par.eval(std::span(&t0, 1)));
  auto lik = LikelihoodModel::direct(par, m, z, Vector::Constant(z.size(), 10.0));
  EXPECT_EQ(log_likelihood(lik, std::span(&t0, 1)), 0.0);
  const double t1 = 0.5;
  EXPECT_LT(log_likelihood(lik, std::span(&t1, 1)), 0.0);
}

TEST(Likelihood, CurvatureOfLinearMap) {
  Vector g(3), sd(3);
  g << 1.0, -2.0, 0.5;
  sd << 0.5, 1.0, 2.0;
  auto lik = LikelihoodModel::from_map([&](std::span<const double> t) { return Vector(g * t[0]); }, Vector::Zero(3), sd);
  const double h = 1e-3, x = 0.3;
  const double xs[3] = {x - h, x, x + h};
  const double fd = (log_likelihood(lik, std::span(&xs[0], 1)) - 2 * log_likelihood(lik, std::span(&xs[1], 1)) +
                     log_likelihood(lik, std::span(&xs[2], 1))) /
                    (h * h);
  EXPECT_NEAR(fd, -(g.array().square() / sd.array().square()).sum(), 1e-5);
}

TEST(Likelihood, SurrogateApproachesDirectWithOrder) {
  auto m = scalar_model();
  auto par = scalar_parameter(m.state_dim());
  auto surrogate = [&](int p) {
    auto q = pc::PceTensor::zeros(std::make_shared<const pc::MultiIndexSet>(pc::build_total_degree_set(1, p)),
                                  m.state_dim());
    q.coeffs().col(0).setConstant(2.0);
    q.coeffs().col(1).setConstant(0.3);
    return fwd::propagate_pspp(q, m).y;
  };
  const double tt = 5.0 / 3.0;
  const Vector sd = Vector::Constant(m.measurement_dim(), 10.0);
  const Vector z = fem::add_noise(m.observe(par.eval(std::span(&tt, 1))), sd, 1);
  auto direct = LikelihoodModel::direct(par, m, z, sd);
  auto s2 = LikelihoodModel::pce(surrogate(2), z, sd);
  auto s5 = LikelihoodModel::pce(surrogate(5), z, sd);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  double worst2 = 0, worst5 = 0;
  for (int i = 0; i < 20; ++i) {
    const double t = n01(rng);
    const double d = log_likelihood(direct, std::span(&t, 1));
    worst2 = std::max(worst2, std::abs(d - log_likelihood(s2, std::span(&t, 1))));
    worst5 = std::max(worst5, std::abs(d - log_likelihood(s5, std::span(&t, 1))));
  }
  // 1 / kappa has a pole at theta = -20/3, so the Hermite tail decays slowly
  EXPECT_LT(worst5, 0.25);
  EXPECT_LT(10 * worst5, worst2);
}

TEST(Likelihood, ForwardFailureRejectedInPosterior) {
  auto m = scalar_model();
  auto par = scalar_parameter(m.state_dim());
  auto lik = LikelihoodModel::direct(par, m, Vector::Zero(m.measurement_dim()), Vector::Ones(m.measurement_dim()));
  const double t = -10.0;
  EXPECT_THROW(log_likelihood(lik, std::span(&t, 1)), NumericalError);
  EXPECT_EQ(log_posterior(lik, std::span(&t, 1)), -INFINITY);
}

TEST(Kde, StandardNormal) {
  auto x = normal_samples(100000, 0.0, 1.0, 3);
  auto grid = linspace(-5, 5, 201);
  auto d = kde(x, grid);
  double err = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    err = std::max(err, std::abs(d.pdf[i] - std::exp(-0.5 * grid[i] * grid[i]) / std::sqrt(2 * std::numbers::pi)));
  EXPECT_LT(err, 0.02);
  EXPECT_NEAR(trapezoid(d.grid, d.pdf), 1.0, 1e-12);
}

TEST(Kde, ConstantSamplesWithBandwidth) {
  std::vector<double> x(200, 1.5);
  auto grid = linspace(-1, 4, 501);
  auto d = kde(x, grid, 0.25);
  for (std::size_t i = 0; i < grid.size(); i += 50) {
    const double u = (grid[i] - 1.5) / 0.25;
    EXPECT_NEAR(d.pdf[i], std::exp(-0.5 * u * u) / (0.25 * std::sqrt(2 * std::numbers::pi)), 1e-6);
  }
  EXPECT_THROW(kde(x, grid), InvalidArgument);
  EXPECT_THROW(kde(std::vector<double>(50, 0.0), grid, 0.1), InvalidArgument);
}

TEST(Kl, IdenticalIsZero) {
  auto x = normal_samples(1000, 0.0, 1.0, 3);
  auto grid = linspace(-5, 5, 101);
  auto d = kde(x, grid);
  EXPECT_NEAR(kl_divergence(d, d).value, 0.0, 1e-15);
}

TEST(Kl, GaussianShiftClosedForm) {
  const double m = 0.5;
  auto a = normal_samples(100000, 0.0, 1.0, 7);
  auto b = normal_samples(100000, m, 1.0, 8);
  auto grid = linspace(-6, 6.5, 501);
  auto da = kde(a, grid), db = kde(b, grid);
  EXPECT_NEAR(kl_divergence(da, db).value, m * m / 2, 0.1 * m * m / 2);
}

TEST(Kl, Asymmetric) {
  auto grid = linspace(-6, 8, 701);
  std::vector<double> p, q;
  for (double x : grid) {
    p.push_back(std::exp(-0.5 * x * x));
    q.push_back(x > 0 ? std::exp(-0.5 * x * x / 4) : std::exp(-0.5 * x * x));  // skewed
  }
  auto dp = density_from_values(grid, p), dq = density_from_values(grid, q);
  EXPECT_GT(std::abs(kl_divergence(dp, dq).value - kl_divergence(dq, dp).value), 1e-3);
}

TEST(Kl, GridMismatchThrowsAndFloorIsReported) {
  auto a = density_from_values(linspace(0, 1, 11), std::vector<double>(11, 1.0));
  auto b = density_from_values(linspace(0, 2, 11), std::vector<double>(11, 1.0));
  EXPECT_THROW(kl_divergence(a, b), InvalidArgument);
  std::vector<double> v(11, 1.0);
  v[5] = 0.0;
  auto c = density_from_values(linspace(0, 1, 11), v);
  EXPECT_TRUE(kl_divergence(a, c).floored);
  EXPECT_FALSE(kl_divergence(c, a).floored);
}

TEST(Study, SingleOrderGivesOneRow) {
  SurrogateStudyInput in;
  in.dims = 1;
  in.forward = [](std::span<const double> t) { return Vector(Vector::Constant(1, 1.0 + t[0] + 0.2 * t[0] * t[0])); };
  in.measurement_dim = 1;
  in.z = Vector::Constant(1, 1.5);
  in.noise_sd = Vector::Constant(1, 0.5);
  in.chain = {20000, 0.8, 0.2, 4, {}};
  auto r = surrogate_convergence_study({1}, in);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(kld_to_csv(r.rows).str().substr(0, 10), "order,kld\n");
}

TEST(Study, PolynomialForwardMapIsReproduced) {
  SurrogateStudyInput in;
  in.dims = 1;
  in.forward = [](std::span<const double> t) {
    Vector y(2);
    y << 1.0 + t[0] + 0.2 * t[0] * t[0], 0.5 * t[0] * t[0] - 0.1 * t[0] * t[0] * t[0];
    return y;
  };
  in.measurement_dim = 2;
  in.z = Vector::Constant(2, 1.2);
  in.noise_sd = Vector::Constant(2, 0.4);
  in.chain = {40000, 0.8, 0.2, 4, {}};
  auto r = surrogate_convergence_study({3, 4}, in);
  for (const auto& row : r.rows) EXPECT_LT(row.kld, 0.05) << row.order;
}

TEST(Study, MoreMeasurementChannelsDoNotWidenPosterior) {
  auto m = scalar_model();
  auto q = pc::PceTensor::zeros(std::make_shared<const pc::MultiIndexSet>(pc::build_total_degree_set(1, 5)),
                                m.state_dim());
  q.coeffs().col(0).setConstant(2.0);
  q.coeffs().col(1).setConstant(0.3);
  auto f = fwd::propagate_pspp(q, m);
  const Vector y = m.observe(Vector::Constant(m.state_dim(), 2.5));
  const Vector sd = Vector::Constant(y.size(), 10.0);
  const Vector z1 = fem::add_noise(y, sd, 1), z2 = fem::add_noise(y, sd, 2);
  pc::PceTensor y2(f.y.index_set_ptr(), Matrix(2 * y.size(), f.y.terms()));
  y2.coeffs() << f.y.coeffs(), f.y.coeffs();
  Vector zz(2 * y.size()), sd2 = Vector::Constant(2 * y.size(), 10.0);
  zz << z1, z2;
  ChainSettings cs{100000, 1.0, 0.2, 5, {}};
  auto c1 = run_chain(LikelihoodModel::pce(f.y, z1, sd), 1, cs);
  auto c2 = run_chain(LikelihoodModel::pce(y2, zz, sd2), 1, cs);
  // variance estimates from correlated chains: allow 3 sigma with batch-means-sized slack
  EXPECT_LT(c2.variance()[0], c1.variance()[0] * 1.15);
}
