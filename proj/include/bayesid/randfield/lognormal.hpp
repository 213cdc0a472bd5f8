#pragma once

#include "bayesid/polychaos/pce.hpp"
#include "bayesid/randfield/kle.hpp"

#include <cmath>
#include <utility>

namespace bayesid::field {

/// Gaussian germ PCE of a KLE field: mean in column 0 and sigma_c sqrt(lambda_j) q_j in
/// the column of e_j. The index set may have more dimensions than the model has terms;
/// extra dimensions stay unused.
inline pc::PceTensor field_pce(const KleModel& model, std::shared_ptr<const pc::MultiIndexSet> set) {
  require(set->dims() >= model.terms(), "field_pce: index set has fewer dimensions than KLE terms");
  auto q = pc::PceTensor::zeros(set, model.nodes());
  q.coeffs().col(0) = model.mean_field;
  if (set->order() == 0) return q;
  const Matrix s = model.scaled_modes();
  for (Eigen::Index j = 0; j < model.terms(); ++j) {
    const auto col = set->first_order(static_cast<int>(j));
    if (col >= set->size()) throw InvalidArgument("field_pce: index set lacks first-order indices");
    q.coeffs().col(static_cast<Eigen::Index>(col)) = s.col(j);
  }
  return q;
}

inline Vector exp_transform(const Vector& log_field) { return log_field.array().exp(); }

inline Vector log_transform(const Vector& field) {
  if (!(field.array() > 0.0).all()) throw InvalidArgument("log transform needs a strictly positive field");
  return field.array().log();
}

/// Nodewise projection of exp(q(x, theta)) onto the basis of q.
inline pc::PceTensor exp_pce(const pc::PceTensor& q, const pc::GaussHermiteRule& rule, unsigned threads = 1) {
  return pc::project_vector_function(
      [&](std::span<const double> theta) { return Vector(pc::pce_sample(q, theta).array().exp()); },
      q.space_dim(), q.index_set_ptr(), rule, threads);
}

/// PCE of the lognormal field exp(q_f) for a Gaussian KLE model q_f.
///
/// Throws NumericalError when an order-p coefficient exceeds 10% of the mean at any node,
/// which signals that the truncation order is too low for the field's variance.
inline pc::PceTensor lognormal_pce(const KleModel& model, std::shared_ptr<const pc::MultiIndexSet> set,
                                   const pc::GaussHermiteRule& rule) {
  const auto g = field_pce(model, set);
  auto k = exp_pce(g, rule);
  const int p = set->order();
  if (p >= 1) {
    for (std::size_t a = 0; a < set->size(); ++a) {
      if (pc::total_degree((*set)[a]) != p) continue;
      const auto col = static_cast<Eigen::Index>(a);
      for (Eigen::Index i = 0; i < k.space_dim(); ++i)
        if (std::abs(k.coeffs()(i, col)) > 0.1 * std::abs(k.coeffs()(i, 0)))
          throw NumericalError("lognormal PCE under-resolved at node " + std::to_string(i) +
                               ": order-" + std::to_string(p) + " coefficient exceeds 10% of the mean");
    }
  }
  return k;
}

/// Gaussian (mu, sigma) whose exponential has the given mean and standard deviation.
inline std::pair<double, double> calibrate_lognormal(double mean_target, double sd_target) {
  require(mean_target > 0.0, "lognormal mean must be positive");
  require(sd_target >= 0.0, "lognormal standard deviation must be non-negative");
  const double s2 = std::log1p((sd_target * sd_target) / (mean_target * mean_target));
  return {std::log(mean_target) - 0.5 * s2, std::sqrt(s2)};
}

}  // namespace bayesid::field
