#pragma once

#include "bayesid/csv.hpp"
#include "bayesid/forward/model.hpp"
#include "bayesid/forward/propagate.hpp"
#include "bayesid/polychaos/pce.hpp"

#include <string>
#include <vector>

namespace bayesid::upd {

/// Pointwise moments of the updated quantity q and of the conductivity kappa = T(q).
struct FieldMoments {
  Vector q_mean, q_var;
  Vector kappa_mean, kappa_var;
};

/// Moments of a PCE by quadrature; for the identity transform they come straight
/// from the coefficients.
inline FieldMoments field_moments(const pc::PceTensor& q, fwd::Transform t, const pc::GaussHermiteRule& rule) {
  FieldMoments m;
  m.q_mean = pc::pce_mean(q);
  m.q_var = pc::pce_variance(q);
  if (t == fwd::Transform::identity) {
    m.kappa_mean = m.q_mean;
    m.kappa_var = m.q_var;
    return m;
  }
  require(rule.dims() == q.index_set().dims(), "field_moments: rule does not match the index set");
  Vector s1 = Vector::Zero(q.space_dim()), s2 = Vector::Zero(q.space_dim());
  rule.for_each([&](std::span<const double> theta, double w) {
    const Vector k = pc::pce_sample(q, theta).array().exp();
    s1 += w * k;
    s2 += w * k.cwiseAbs2();
  });
  m.kappa_mean = s1;
  m.kappa_var = (s2 - s1.cwiseAbs2()).cwiseMax(0.0);
  return m;
}

inline FieldMoments field_moments(const fwd::Ensemble& q, fwd::Transform t) {
  FieldMoments m;
  m.q_mean = q.mean();
  m.q_var = q.variance();
  if (t == fwd::Transform::identity) {
    m.kappa_mean = m.q_mean;
    m.kappa_var = m.q_var;
    return m;
  }
  fwd::Ensemble k = q;
  k.samples = q.samples.array().exp();
  m.kappa_mean = k.mean();
  m.kappa_var = k.variance();
  return m;
}

/// One row of the sequential error table.
struct UpdateReport {
  int step = 0;
  std::string method;
  Vector prior_mean, posterior_mean;
  Vector prior_var, posterior_var;
  double eps_m = 0.0;
  double eps_bar = 0.0;
  double var_point = 0.0;
};

/// Pointwise mode of the posterior marginal: exp(mu - sigma^2) of the log-space
/// moments for lognormal fields, the mean otherwise.
inline Vector pointwise_mode(const FieldMoments& m, fwd::Transform t) {
  if (t == fwd::Transform::identity) return m.kappa_mean;
  return (m.q_mean - m.q_var).array().exp();
}

inline UpdateReport error_metrics(const FieldMoments& posterior, const Vector& truth, Eigen::Index probe,
                                  fwd::Transform t) {
  require(truth.size() == posterior.kappa_mean.size(), "error_metrics: truth and posterior differ in size");
  require(probe >= 0 && probe < truth.size(), "error_metrics: probe node out of range");
  const double tn = std::max(truth.norm(), 1e-300);
  UpdateReport r;
  r.posterior_mean = posterior.kappa_mean;
  r.posterior_var = posterior.kappa_var;
  r.eps_bar = (posterior.kappa_mean - truth).norm() / tn;
  r.eps_m = (pointwise_mode(posterior, t) - truth).norm() / tn;
  r.var_point = posterior.kappa_var[probe];
  return r;
}

inline CsvTable reports_to_csv(const std::vector<UpdateReport>& reports) {
  CsvTable t;
  t.header = {"step", "method", "eps_m", "eps_bar", "var_point"};
  for (const auto& r : reports)
    t.add({std::to_string(r.step), r.method, format_double(r.eps_m), format_double(r.eps_bar),
           format_double(r.var_point)});
  return t;
}

}  // namespace bayesid::upd
