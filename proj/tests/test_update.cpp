#include "bayesid/experiment/problems.hpp"
#include "bayesid/forward.hpp"
#include "bayesid/randfield.hpp"
#include "bayesid/update.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bayesid;
using namespace bayesid::upd;

namespace {

std::shared_ptr<const pc::MultiIndexSet> make_set(int m, int p) {
  return std::make_shared<const pc::MultiIndexSet>(pc::build_total_degree_set(m, p));
}

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }
Vector v1(double v) { return Vector::Constant(1, v); }

// q = m + s theta as a one-dimensional PCE
pc::PceTensor scalar_gaussian(double m, double s, int p = 1) {
  auto q = pc::PceTensor::zeros(make_set(1, p), 1);
  q.coeffs()(0, 0) = m;
  q.coeffs()(0, 1) = s;
  return q;
}

Matrix random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = n01(rng);
  return a * a.transpose() + Matrix::Identity(n, n);
}

fwd::Ensemble gaussian_ensemble(double m, double s, Eigen::Index z, std::uint64_t seed) {
  fwd::Ensemble e;
  e.seed = seed;
  e.thetas = fwd::draw_germs(1, z, seed);
  e.samples = (m + s * e.thetas.array()).matrix();
  return e;
}

fwd::ForwardModel scalar_model() {
  auto prob = experiment::rectangle_problem();
  std::vector<int> all(static_cast<std::size_t>(prob->node_count()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return {prob, fem::MeasurementOperator::nodal(prob->mesh(), all)};
}

}  // namespace

TEST(Gain, ScalarTextbook) {
  const double s2 = 0.09, e2 = 0.04;
  auto g = kalman_gain(m1(s2), m1(s2), m1(e2));
  EXPECT_NEAR(g.K(0, 0), s2 / (s2 + e2), 1e-15);
  EXPECT_FALSE(g.pseudo_inverse_used);
}

TEST(Gain, HugeNoiseGivesVanishingGain) {
  const double s = 0.3, e = 1e6 * s;
  auto g = kalman_gain(m1(s * s), m1(s * s), m1(e * e));
  EXPECT_GE(g.K(0, 0), 0.0);
  EXPECT_LE(g.K(0, 0), s * s / (e * e));
  EXPECT_LT(g.K(0, 0), 1e-11);
}

TEST(Gain, SolvesNormalEquations) {
  std::mt19937_64 rng(3);
  const Matrix cy = random_spd(4, rng), ce = random_spd(4, rng);
  Matrix cqy = Matrix::Random(6, 4);
  auto g = kalman_gain(cqy, cy, ce);
  EXPECT_LT((g.K * (cy + ce) - cqy).norm(), 1e-12 * cqy.norm());
}

TEST(Gain, RankOnePseudoInverseIsMinimumNorm) {
  Vector v(3);
  v << 1.0, 2.0, -1.0;
  Vector a(2);
  a << 0.5, -3.0;
  const Matrix cy = v * v.transpose();
  const Matrix cqy = a * v.transpose();
  auto g = kalman_gain(cqy, cy, Matrix::Zero(3, 3));
  EXPECT_TRUE(g.pseudo_inverse_used);
  const Matrix oracle = a * v.transpose() / v.squaredNorm();
  EXPECT_LT((g.K - oracle).norm(), 1e-12);
  EXPECT_LT((g.K * cy - cqy).norm(), 1e-12);
}

TEST(Gain, ZeroCovarianceGivesZeroGain) {
  auto g = kalman_gain(Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2));
  EXPECT_EQ(g.K, Matrix::Zero(2, 2));
}

TEST(Gain, PseudoInverseRequested) {
  std::mt19937_64 rng(5);
  const Matrix cy = random_spd(3, rng);
  const Matrix cqy = Matrix::Random(2, 3);
  auto exact = kalman_gain(cqy, cy, Matrix::Identity(3, 3));
  auto pinv = kalman_gain(cqy, cy, Matrix::Identity(3, 3), {Regularization::Kind::pseudo_inverse, 1e-10});
  EXPECT_TRUE(pinv.pseudo_inverse_used);
  EXPECT_LT((exact.K - pinv.K).norm(), 1e-12);
}

TEST(Gain, DimensionMismatchThrows) {
  EXPECT_THROW(kalman_gain(Matrix::Zero(2, 3), Matrix::Zero(3, 3), Matrix::Zero(2, 2)), InvalidArgument);
  EXPECT_THROW(kalman_gain(Matrix::Zero(2, 2), Matrix::Zero(3, 3), Matrix::Zero(3, 3)), InvalidArgument);
}

TEST(PceUpdate, HugeNoiseLeavesPriorUnchanged) {
  auto q = scalar_gaussian(2.0, 0.3, 2);
  auto res = pce_update(q, q, v1(2.5), m1(1e300));
  EXPECT_EQ(res.q_a.coeffs(), q.coeffs());
}

TEST(PceUpdate, ConjugateGaussianWithNoiseGerm) {
  const double m = 2.0, s = 0.3, e = 0.2, z = 2.5;
  auto q = scalar_gaussian(m, s);
  auto aug = augment_with_noise(q, q, v1(z), v1(e));
  auto res = pce_update(aug.q_f, aug.y_f, aug.z, m1(e * e));
  const double k = s * s / (s * s + e * e);
  EXPECT_NEAR(pc::pce_mean(res.q_a)[0], m + k * (z - m), 1e-10);
  EXPECT_NEAR(pc::pce_variance(res.q_a)[0], s * s * e * e / (s * s + e * e), 1e-10);
}

TEST(PceUpdate, DeterministicObservationShrinksTwice) {
  const double m = 2.0, s = 0.3, e = 0.2;
  auto q = scalar_gaussian(m, s);
  auto res = pce_update(q, q, v1(2.5), m1(e * e));
  const double f = e * e / (s * s + e * e);
  EXPECT_NEAR(pc::pce_variance(res.q_a)[0], s * s * f * f, 1e-12);
}

TEST(PceUpdate, MatchesKalmanFilterFormulas) {
  std::mt19937_64 rng(9);
  auto set = make_set(3, 1);
  Vector mean(3);
  mean << 1.0, -0.5, 2.0;
  Matrix l(3, 3);
  l << 0.5, 0.0, 0.0, 0.2, 0.4, 0.0, -0.1, 0.3, 0.6;
  auto q = pc::PceTensor::zeros(set, 3);
  q.coeffs().col(0) = mean;
  q.coeffs().rightCols(3) = l;
  Matrix h(2, 3);
  h << 1.0, 0.5, 0.0, 0.0, -1.0, 2.0;
  const pc::PceTensor y(set, h * q.coeffs());
  Vector z(2), sd(2);
  z << 1.3, 2.2;
  sd << 0.1, 0.3;
  auto aug = augment_with_noise(q, y, z, sd);
  auto res = pce_update(aug.q_f, aug.y_f, aug.z, diagonal_noise(sd));

  const Matrix p = l * l.transpose();
  const Matrix r = diagonal_noise(sd);
  const Matrix k = p * h.transpose() * (h * p * h.transpose() + r).inverse();
  const Vector m_a = mean + k * (z - h * mean);
  const Matrix p_a = p - k * h * p;
  EXPECT_LT((pc::pce_mean(res.q_a) - m_a).norm(), 1e-8);
  EXPECT_LT((pc::pce_covariance(res.q_a, res.q_a) - p_a).norm(), 1e-8);
  EXPECT_LT((res.gain.K - k).norm(), 1e-8);
}

TEST(SquareRootClosure, ConjugateGaussian) {
  const double m = 2.0, s = 0.3, e = 0.2, z = 2.5;
  for (int p : {1, 3}) {
    auto q = scalar_gaussian(m, s, p);
    auto det = pce_update(q, q, v1(z), m1(e * e));
    auto q_a = square_root_closure(q, q, det.q_a, m1(e * e));
    EXPECT_EQ(pc::pce_mean(q_a)[0], pc::pce_mean(det.q_a)[0]);
    EXPECT_NEAR(pc::pce_variance(q_a)[0], s * s * e * e / (s * s + e * e), 1e-12) << p;
  }
}

TEST(SquareRootClosure, CovarianceMatchesNoiseGerm) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01;
  auto set = make_set(2, 3);
  const auto j = static_cast<Eigen::Index>(set->size());
  auto q = pc::PceTensor::zeros(set, 3);
  auto y = pc::PceTensor::zeros(set, 2);
  for (Eigen::Index a = 0; a < j; ++a) {
    for (int i = 0; i < 3; ++i) q.coeffs()(i, a) = n01(rng) / (1.0 + a);
    for (int i = 0; i < 2; ++i) y.coeffs()(i, a) = n01(rng) / (1.0 + a);
  }
  Vector z(2), sd(2);
  z << 0.4, -1.1;
  sd << 0.3, 0.05;
  const Matrix r = diagonal_noise(sd);
  auto closed = square_root_closure(q, y, pce_update(q, y, z, r).q_a, r);
  auto aug = augment_with_noise(q, y, z, sd);
  auto full = pce_update(aug.q_f, aug.y_f, aug.z, r).q_a;
  EXPECT_LT((pc::pce_mean(closed) - pc::pce_mean(full)).norm(), 1e-10);
  EXPECT_LT((pc::pce_covariance(closed, closed) - pc::pce_covariance(full, full)).norm(), 1e-10);
  EXPECT_EQ(closed.index_set().dims(), 2);
}

TEST(SquareRootClosure, NeverBelowDeterministicUpdate) {
  const double e = 0.5;
  auto q = scalar_gaussian(0.0, 1.0, 2);
  q.coeffs()(0, 2) = 0.3;
  pc::PceTensor y(q.index_set_ptr(), q.coeffs().array().square().matrix());
  auto det = pce_update(q, y, v1(0.7), m1(e * e)).q_a;
  auto closed = square_root_closure(q, y, det, m1(e * e));
  EXPECT_GT(pc::pce_variance(closed)[0], pc::pce_variance(det)[0]);
  EXPECT_LT(pc::pce_variance(closed)[0], pc::pce_variance(q)[0]);
}

TEST(PceUpdate, IndexSetMismatchThrows) {
  auto a = scalar_gaussian(0, 1, 1);
  auto b = scalar_gaussian(0, 1, 2);
  EXPECT_THROW(pce_update(a, b, v1(0), m1(1)), InvalidArgument);
}

TEST(PceUpdate, PosteriorCovarianceIsBelowPrior) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n01;
  auto set = make_set(4, 1);
  auto q = pc::PceTensor::zeros(set, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j) q.coeffs()(i, j) = n01(rng);
  Matrix h = Matrix::Random(2, 4);
  const pc::PceTensor y(set, h * q.coeffs());
  const Vector sd = Vector::Constant(2, 0.5);
  auto res = pce_update(q, y, Vector::Zero(2), diagonal_noise(sd));
  const Matrix cqq = pc::pce_covariance(q, q);
  const Matrix post = cqq - res.gain.K * res.gain.c_qy.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> e1(post), e2(cqq - post);
  EXPECT_GE(e1.eigenvalues().minCoeff(), -1e-10);
  EXPECT_GE(e2.eigenvalues().minCoeff(), -1e-10);
}

TEST(PceUpdate, NoiselessCompleteMeasurementRemovesVariance) {
  auto set = make_set(2, 1);
  auto q = pc::PceTensor::zeros(set, 2);
  q.coeffs() << 1.0, 0.4, 0.1, 2.0, -0.2, 0.3;
  Matrix h(2, 2);
  h << 1.0, 1.0, 0.0, 2.0;
  const pc::PceTensor y(set, h * q.coeffs());
  auto res = pce_update(q, y, Vector::Zero(2), diagonal_noise(Vector::Constant(2, 1e-9)));
  const Vector prior = pc::pce_variance(q), post = pc::pce_variance(res.q_a);
  for (int i = 0; i < 2; ++i) EXPECT_LT(post[i], 1e-8 * prior[i]);
}

TEST(PceUpdate, AffineEquivariance) {
  auto set = make_set(2, 2);
  auto q = pc::PceTensor::zeros(set, 2);
  q.coeffs() << 1.0, 0.4, 0.1, 0.05, 0.0, 0.02, 2.0, -0.2, 0.3, 0.0, 0.01, 0.0;
  const pc::PceTensor y(set, q.coeffs() + q.coeffs().cwiseAbs2());
  const Vector z = pc::pce_mean(y) + Vector::Constant(2, 0.1);
  const Vector sd = Vector::Constant(2, 0.2);
  auto base = pce_update(q, y, z, diagonal_noise(sd));

  const double c = 10.0;
  auto scale = [&](const pc::PceTensor& t) {
    pc::PceTensor s = t;
    s.coeffs().rightCols(t.terms() - 1) *= c;
    return s;
  };
  const Vector zc = pc::pce_mean(y) + c * (z - pc::pce_mean(y));
  auto scaled = pce_update(scale(q), scale(y), zc, diagonal_noise(c * sd));
  const Matrix fa = base.q_a.coeffs().rightCols(q.terms() - 1);
  const Matrix fb = scaled.q_a.coeffs().rightCols(q.terms() - 1);
  EXPECT_LT((fb - c * fa).norm(), 1e-10 * fb.norm());
  EXPECT_LT((scaled.q_a.coeffs().col(0) - pc::pce_mean(q) - c * (base.q_a.coeffs().col(0) - pc::pce_mean(q))).norm(),
            1e-10);
}

TEST(Enkf, IdenticalMembersLeavePriorUnchanged) {
  fwd::Ensemble q;
  q.samples = Matrix::Constant(1, 2, 2.0);
  q.thetas = Matrix::Zero(1, 2);
  auto res = enkf_update(q, q, v1(2.5), m1(0.04), true, 1);
  EXPECT_EQ(res.q_a.samples, q.samples);
}

TEST(Enkf, ConjugateGaussianLargeEnsemble) {
  const double m = 2.0, s = 0.3, e = 0.2, z = 2.5;
  auto q = gaussian_ensemble(m, s, 100000, 17);
  auto res = enkf_update(q, q, v1(z), m1(e * e), true, 18);
  const double mean = m + s * s / (s * s + e * e) * (z - m);
  const double var = s * s * e * e / (s * s + e * e);
  EXPECT_NEAR(res.q_a.mean()[0], mean, 0.01 * mean);
  EXPECT_NEAR(res.q_a.variance()[0], var, 0.03 * var);
  const double exact_k = s * s / (s * s + e * e);
  EXPECT_NEAR(res.gain.K(0, 0), exact_k, 0.02 * exact_k);
}

TEST(Enkf, UnperturbedMatchesPceMean) {
  const double m = 2.0, s = 0.3, e = 0.2, z = 2.5;
  auto q = gaussian_ensemble(m, s, 100000, 23);
  auto ens = enkf_update(q, q, v1(z), m1(e * e), false, 0);
  auto pq = scalar_gaussian(m, s);
  auto pce = pce_update(pq, pq, v1(z), m1(e * e));
  EXPECT_NEAR(ens.q_a.mean()[0], pc::pce_mean(pce.q_a)[0], 0.01);
}

TEST(Enkf, SeedDeterminesPerturbations) {
  auto q = gaussian_ensemble(2.0, 0.3, 50, 2);
  auto a = enkf_update(q, q, v1(2.5), m1(0.04), true, 7);
  auto b = enkf_update(q, q, v1(2.5), m1(0.04), true, 7);
  auto c = enkf_update(q, q, v1(2.5), m1(0.04), true, 8);
  EXPECT_EQ(a.q_a.samples, b.q_a.samples);
  EXPECT_NE(a.q_a.samples, c.q_a.samples);
}

TEST(Enkf, BadInputsThrow) {
  auto q = gaussian_ensemble(2.0, 0.3, 1, 2);
  EXPECT_THROW(enkf_update(q, q, v1(2.5), m1(0.04), true, 7), InvalidArgument);
  auto r = gaussian_ensemble(2.0, 0.3, 5, 2);
  EXPECT_THROW(enkf_update(r, r, Vector::Zero(2), m1(0.04), true, 7), InvalidArgument);
}

TEST(Metrics, ExactMeanGivesZeroError) {
  FieldMoments m;
  m.q_mean = m.kappa_mean = Vector::Constant(3, 2.0);
  m.q_var = m.kappa_var = Vector::Constant(3, 0.1);
  auto r = error_metrics(m, Vector::Constant(3, 2.0), 1, fwd::Transform::identity);
  EXPECT_EQ(r.eps_bar, 0.0);
  EXPECT_EQ(r.eps_m, r.eps_bar);
  EXPECT_EQ(r.var_point, 0.1);
}

TEST(Metrics, LognormalModeClosedForm) {
  Vector mu(3), s2(3), truth(3);
  mu << 0.5, 0.7, 0.9;
  s2 << 0.01, 0.04, 0.09;
  truth << 1.7, 2.0, 2.3;
  FieldMoments m;
  m.q_mean = mu;
  m.q_var = s2;
  m.kappa_mean = (mu + 0.5 * s2).array().exp();
  m.kappa_var = ((2 * mu + s2).array().exp() * (s2.array().exp() - 1.0)).matrix();
  auto r = error_metrics(m, truth, 2, fwd::Transform::exp);
  double num = 0;
  for (int i = 0; i < 3; ++i) num += std::pow(std::exp(mu[i] - s2[i]) - truth[i], 2);
  EXPECT_NEAR(r.eps_m, std::sqrt(num) / truth.norm(), 1e-10);
  EXPECT_NEAR(r.var_point, m.kappa_var[2], 1e-15);
}

TEST(Metrics, LognormalPceMomentsByQuadrature) {
  auto q = scalar_gaussian(0.3, 0.2, 3);
  auto mom = field_moments(q, fwd::Transform::exp, pc::GaussHermiteRule(12, 1));
  EXPECT_NEAR(mom.kappa_mean[0], std::exp(0.3 + 0.02), 1e-10);
  EXPECT_NEAR(mom.kappa_var[0], std::exp(0.6 + 0.04) * (std::exp(0.04) - 1), 1e-10);
}

TEST(Metrics, CsvLayout) {
  UpdateReport r;
  r.step = 2;
  r.method = "pce";
  r.eps_m = 0.5;
  r.eps_bar = 0.25;
  r.var_point = 0.125;
  auto t = reports_to_csv({r});
  EXPECT_EQ(t.str(), "step,method,eps_m,eps_bar,var_point\n2,pce,0.5,0.25,0.125\n");
  EXPECT_EQ(parse_csv(t.str()).rows, t.rows);
}

TEST(Sequential, SingleExperimentMatchesSingleUpdate) {
  auto model = scalar_model();
  const auto n = model.state_dim();
  auto set = make_set(1, 2);
  auto q = pc::PceTensor::zeros(set, n);
  q.coeffs().col(0).setConstant(2.0);
  q.coeffs().col(1).setConstant(0.3);
  const Vector truth = Vector::Constant(n, 2.5);
  const Vector sd = Vector::Constant(n, 10.0);
  const Vector z = model.observe(truth);
  SequentialConfig cfg;
  auto seq = sequential_update(q, model, {{fem::LoadDescriptor::none(), z, sd}}, truth, cfg);
  auto f = fwd::propagate_pspp(q, model);
  auto single = pce_update(q, f.y, z, diagonal_noise(sd));
  EXPECT_EQ(seq.pce->coeffs(), square_root_closure(q, f.y, single.q_a, diagonal_noise(sd)).coeffs());
  ASSERT_EQ(seq.reports.size(), 2u);
  EXPECT_LT(seq.reports[1].eps_bar, seq.reports[0].eps_bar);

  cfg.square_root = false;
  seq = sequential_update(q, model, {{fem::LoadDescriptor::none(), z, sd}}, truth, cfg);
  EXPECT_EQ(seq.pce->coeffs(), single.q_a.coeffs());

  cfg.method = Method::enkf;
  cfg.ensemble_size = 40;
  cfg.ensemble_seed = 5;
  cfg.observation_seed = 6;
  auto es = sequential_update(q, model, {{fem::LoadDescriptor::none(), z, sd}}, truth, cfg);
  fwd::Ensemble e0;
  e0.thetas = fwd::draw_germs(1, 40, 5);
  e0.samples.resize(n, 40);
  for (int k = 0; k < 40; ++k) e0.samples.col(k) = pc::pce_sample(q, std::span<const double>(&e0.thetas(0, k), 1));
  auto ef = fwd::propagate_ensemble(e0, model);
  auto single_e = enkf_update(e0, ef.y, z, diagonal_noise(sd), true, 6);
  EXPECT_EQ(es.ensemble->samples, single_e.q_a.samples);
}

TEST(Sequential, RepeatedExperimentHasDiminishingEffect) {
  auto model = scalar_model();
  const auto n = model.state_dim();
  auto set = make_set(1, 3);
  auto q = pc::PceTensor::zeros(set, n);
  q.coeffs().col(0).setConstant(2.0);
  q.coeffs().col(1).setConstant(0.3);
  const Vector truth = Vector::Constant(n, 2.5);
  const Vector sd = Vector::Constant(n, 10.0);
  const Vector z = fem::add_noise(model.observe(truth), sd, 3);
  Experiment e{fem::LoadDescriptor::none(), z, sd};
  auto seq = sequential_update(q, model, {e, e}, truth, {});
  const double d1 = (seq.moments[1].kappa_mean - seq.moments[0].kappa_mean).norm();
  const double d2 = (seq.moments[2].kappa_mean - seq.moments[1].kappa_mean).norm();
  EXPECT_LT(d2, d1);
  EXPECT_LT(seq.moments[2].kappa_var[0], seq.moments[1].kappa_var[0]);
}

TEST(Sequential, LognormalFieldErrorDecreases) {
  auto load = fem::LoadDescriptor::sinusoid(50.0, 1.0, 0.0, 0.0);
  auto prob = experiment::lshape_problem(3, load);
  fwd::ForwardModel model{prob, fem::MeasurementOperator::patches(prob->mesh(), fem::spread_nodes(prob->mesh(), 0.3)),
                          fwd::Transform::exp};
  auto [mu, sig] = field::calibrate_lognormal(2.4, 0.8944);
  field::CovarianceKernel k{field::CovarianceKernel::Kind::squared_exponential, sig * sig, 2.0};
  auto kle = field::kle_decompose(k, prob->mesh(), 3, Vector::Constant(model.state_dim(), mu));
  auto q = field::field_pce(kle, make_set(3, 2));
  const Vector truth = Vector::Constant(model.state_dim(), 3.0);
  const Vector y = model.measurement.apply(prob->solve(truth).u);
  const Vector sd = fem::relative_noise_sd(y, 0.01);
  std::vector<Experiment> exps;
  for (int i = 0; i < 2; ++i) {
    auto l = fem::LoadDescriptor::sinusoid(50.0, 1.0 + i, 0.5 * i, 0.3 * i);
    const Vector yi = model.measurement.apply(prob->with_load(l).solve(truth).u);
    exps.push_back({l, fem::add_noise(yi, sd, 10 + static_cast<std::uint64_t>(i)), fem::relative_noise_sd(yi, 0.01)});
  }
  auto seq = sequential_update(q, model, exps, truth, {});
  EXPECT_LT(seq.reports[1].eps_bar, seq.reports[0].eps_bar);
  EXPECT_LT(seq.reports[2].eps_bar, seq.reports[0].eps_bar);
  EXPECT_NE(seq.reports[1].eps_m, seq.reports[1].eps_bar);
}

TEST(Sequential, PropagationFailureNamesStep) {
  auto model = scalar_model();
  auto q = pc::PceTensor::zeros(make_set(1, 2), model.state_dim());
  q.coeffs().col(0).setConstant(0.5);
  q.coeffs().col(1).setConstant(1.0);
  const Vector truth = Vector::Constant(model.state_dim(), 2.5);
  try {
    sequential_update(q, model, {{fem::LoadDescriptor::none(), model.observe(truth), Vector::Constant(truth.size(), 10.0)}},
                      truth, {});
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("update step 1"), std::string::npos);
  }
}
