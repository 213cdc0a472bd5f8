#pragma once

#include "bayesid/forward/propagate.hpp"
#include "bayesid/randfield/lognormal.hpp"
#include "bayesid/update/enkf.hpp"
#include "bayesid/update/metrics.hpp"
#include "bayesid/update/pce_update.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bayesid::upd {

enum class Method { pce, enkf };

inline std::string to_string(Method m) { return m == Method::pce ? "pce" : "enkf"; }

/// One excitation of the system and the data observed under it.
struct Experiment {
  fem::LoadDescriptor load;
  Vector z;
  Vector noise_sd;
  /// Replaces the base problem for this step (for example scaled boundary fluxes);
  /// `load` is ignored when set.
  std::shared_ptr<const fem::DiffusionProblem> problem = nullptr;
};

struct SequentialConfig {
  Method method = Method::pce;
  unsigned threads = 1;
  Regularization regularization{};
  /// Quadrature for the pseudo-spectral forecast; order p+1 when unset.
  std::optional<pc::GaussHermiteRule> rule;
  Eigen::Index ensemble_size = 100;
  std::uint64_t ensemble_seed = 0;
  bool perturb_obs = true;
  /// PCE branch: restore the observation-noise share of the posterior covariance.
  bool square_root = true;
  std::uint64_t observation_seed = 0;
  /// Update the Gaussian log-field (true) or the exp-transformed PCE itself (false).
  bool log_space = true;
  Eigen::Index probe = 0;
  /// Conductivity moments of a lognormal PCE use tensor quadrature up to this many
  /// nodes and seeded sampling beyond.
  std::size_t moment_quadrature_cap = 65536;
  Eigen::Index moment_samples = 20000;
  std::uint64_t moment_seed = 0;
};

struct SequentialResult {
  std::vector<UpdateReport> reports;  // step 0 is the prior
  std::vector<FieldMoments> moments;
  std::optional<pc::PceTensor> pce;
  std::optional<fwd::Ensemble> ensemble;
  // state after each step, prior first
  std::vector<pc::PceTensor> pce_steps;
  std::vector<fwd::Ensemble> ensemble_steps;
  fwd::Transform transform = fwd::Transform::identity;
};

inline FieldMoments pce_moments(const pc::PceTensor& q, fwd::Transform t, const SequentialConfig& cfg) {
  if (t == fwd::Transform::identity) return field_moments(q, t, pc::GaussHermiteRule(1, q.index_set().dims()));
  const auto& set = q.index_set();
  const double nodes = std::pow(static_cast<double>(set.order() + 2), set.dims());
  if (nodes <= static_cast<double>(cfg.moment_quadrature_cap))
    return field_moments(q, t, pc::GaussHermiteRule(set.order() + 2, set.dims()));
  fwd::Ensemble e;
  e.thetas = fwd::draw_germs(set.dims(), cfg.moment_samples, cfg.moment_seed);
  e.samples = q.coeffs() * [&] {
    Matrix h(static_cast<Eigen::Index>(set.size()), e.thetas.cols());
    for (Eigen::Index z = 0; z < e.thetas.cols(); ++z) {
      const Vector th = e.thetas.col(z);
      h.col(z) = pc::basis_eval_all(set, std::span<const double>(th.data(), static_cast<std::size_t>(th.size())));
    }
    return h;
  }();
  auto m = field_moments(e, t);
  m.q_mean = pc::pce_mean(q);
  m.q_var = pc::pce_variance(q);
  return m;
}

namespace detail {

inline UpdateReport report(int step, Method method, const FieldMoments& prior, const FieldMoments& post,
                           const Vector& truth, Eigen::Index probe, fwd::Transform t) {
  UpdateReport r = error_metrics(post, truth, probe, t);
  r.step = step;
  r.method = to_string(method);
  r.prior_mean = prior.kappa_mean;
  r.prior_var = prior.kappa_var;
  return r;
}

inline fwd::ForwardModel model_for(const fwd::ForwardModel& base, const Experiment& e) {
  if (e.problem) return base.with_problem(e.problem);
  return base.with_problem(std::make_shared<const fem::DiffusionProblem>(base.problem->with_load(e.load)));
}

}  // namespace detail

/// EnKF chain over an existing parameter ensemble (samples of q, in the space the
/// model's transform acts on).
inline SequentialResult sequential_update(const fwd::Ensemble& prior, const fwd::ForwardModel& model,
                                          const std::vector<Experiment>& experiments, const Vector& truth,
                                          const SequentialConfig& cfg) {
  require(!experiments.empty(), "sequential_update: at least one experiment is required");
  require(cfg.method == Method::enkf, "sequential_update: an ensemble prior needs the enkf method");
  SequentialResult res;
  res.transform = model.transform;
  res.moments.push_back(field_moments(prior, res.transform));
  res.reports.push_back(detail::report(0, cfg.method, res.moments[0], res.moments[0], truth, cfg.probe, res.transform));
  fwd::Ensemble cur = prior;
  res.ensemble_steps.push_back(cur);
  for (std::size_t k = 0; k < experiments.size(); ++k) {
    const auto& e = experiments[k];
    fwd::SampledForecast f;
    try {
      f = fwd::propagate_ensemble(cur, detail::model_for(model, e), cfg.threads);
    } catch (const NumericalError& err) {
      throw NumericalError("propagation failed in update step " + std::to_string(k + 1) + ": " + err.what());
    }
    cur = enkf_update(cur, f.y, e.z, diagonal_noise(e.noise_sd), cfg.perturb_obs, cfg.observation_seed + k,
                      cfg.regularization)
              .q_a;
    res.ensemble_steps.push_back(cur);
    res.moments.push_back(field_moments(cur, res.transform));
    res.reports.push_back(detail::report(static_cast<int>(k + 1), cfg.method, res.moments[k], res.moments[k + 1],
                                         truth, cfg.probe, res.transform));
  }
  res.ensemble = std::move(cur);
  return res;
}

/// Chains forecast and update over the experiments: the posterior of step k is the
/// prior of step k+1. With an exp transform and log_space the update acts on the
/// Gaussian log-field coefficients; error metrics are reported for kappa.
inline SequentialResult sequential_update(const pc::PceTensor& prior, const fwd::ForwardModel& base,
                                          const std::vector<Experiment>& experiments, const Vector& truth,
                                          const SequentialConfig& cfg) {
  require(!experiments.empty(), "sequential_update: at least one experiment is required");
  SequentialResult res;
  fwd::ForwardModel model = base;
  pc::PceTensor q = prior;
  if (!cfg.log_space && model.transform == fwd::Transform::exp) {
    q = field::exp_pce(q, cfg.rule ? *cfg.rule : pc::default_rule(q.index_set()), cfg.threads);
    model.transform = fwd::Transform::identity;
  }
  res.transform = model.transform;

  if (cfg.method == Method::pce) {
    res.moments.push_back(pce_moments(q, res.transform, cfg));
    res.reports.push_back(detail::report(0, cfg.method, res.moments[0], res.moments[0], truth, cfg.probe, res.transform));
    const auto rule = cfg.rule ? *cfg.rule : pc::default_rule(q.index_set());
    res.pce_steps.push_back(q);
    for (std::size_t k = 0; k < experiments.size(); ++k) {
      const auto& e = experiments[k];
      fwd::PceForecast f;
      try {
        f = fwd::propagate_pspp(q, detail::model_for(model, e), rule, cfg.threads);
      } catch (const NumericalError& err) {
        throw NumericalError("propagation failed in update step " + std::to_string(k + 1) + ": " + err.what());
      }
      const Matrix c_eps = diagonal_noise(e.noise_sd);
      auto q_a = pce_update(q, f.y, e.z, c_eps, cfg.regularization).q_a;
      q = cfg.square_root ? square_root_closure(q, f.y, q_a, c_eps, cfg.regularization) : std::move(q_a);
      res.pce_steps.push_back(q);
      res.moments.push_back(pce_moments(q, res.transform, cfg));
      res.reports.push_back(detail::report(static_cast<int>(k + 1), cfg.method, res.moments[k], res.moments[k + 1],
                                           truth, cfg.probe, res.transform));
    }
    res.pce = std::move(q);
    return res;
  }

  fwd::Ensemble ens;
  ens.seed = cfg.ensemble_seed;
  ens.thetas = fwd::draw_germs(q.index_set().dims(), cfg.ensemble_size, cfg.ensemble_seed);
  ens.samples.resize(q.space_dim(), cfg.ensemble_size);
  for (Eigen::Index z = 0; z < cfg.ensemble_size; ++z) {
    const Vector th = ens.thetas.col(z);
    ens.samples.col(z) = pc::pce_sample(q, std::span<const double>(th.data(), static_cast<std::size_t>(th.size())));
  }
  SequentialConfig ec = cfg;
  ec.log_space = true;
  return sequential_update(ens, model, experiments, truth, ec);
}

}  // namespace bayesid::upd
