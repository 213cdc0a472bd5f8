#pragma once

#include "bayesid/fem/diffusion.hpp"
#include "bayesid/fem/measurement.hpp"
#include "bayesid/polychaos/pce.hpp"
#include "bayesid/randfield/kle.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>

namespace bayesid::fwd {

/// Map from the identified quantity q to the conductivity: kappa = q or kappa = exp(q).
enum class Transform { identity, exp };

inline std::string to_string(Transform t) { return t == Transform::exp ? "exp" : "identity"; }

inline Transform transform_from_string(const std::string& s) {
  if (s == "identity" || s == "none" || s == "gaussian") return Transform::identity;
  if (s == "exp" || s == "lognormal") return Transform::exp;
  throw InvalidArgument("unknown parameter transform '" + s + "'");
}

inline Vector apply_transform(Transform t, const Vector& q) {
  return t == Transform::exp ? Vector(q.array().exp()) : q;
}

/// Deterministic forward map q -> (u, y): conductivity transform, FEM solve
/// (linear, or Picard for kappa(u) = kappa0 + kappa1 u) and measurement.
struct ForwardModel {
  std::shared_ptr<const fem::DiffusionProblem> problem;
  fem::MeasurementOperator measurement;
  Transform transform = Transform::identity;
  double kappa1 = 0.0;
  fem::PicardOptions picard{};

  bool linear() const { return kappa1 == 0.0; }
  Eigen::Index state_dim() const { return problem->node_count(); }
  Eigen::Index measurement_dim() const { return static_cast<Eigen::Index>(measurement.size()); }

  Vector solve(const Vector& q) const {
    const Vector kappa = apply_transform(transform, q);
    return linear() ? problem->solve(kappa).u : fem::solve_nonlinear(*problem, kappa, kappa1, picard).u;
  }

  Vector observe(const Vector& q) const { return measurement.apply(solve(q)); }

  ForwardModel with_problem(std::shared_ptr<const fem::DiffusionProblem> p) const {
    ForwardModel m = *this;
    m.problem = std::move(p);
    return m;
  }
};

/// A parameter field as a function of the Gaussian germ.
struct GermMap {
  int dims = 0;
  std::function<Vector(std::span<const double>)> eval;
};

inline GermMap germ_map(const pc::PceTensor& q) {
  return {q.index_set().dims(), [q](std::span<const double> t) { return pc::pce_sample(q, t); }};
}

inline GermMap germ_map(const field::KleModel& m) {
  return {static_cast<int>(m.terms()), [m](std::span<const double> t) { return field::kle_synthesize(m, t); }};
}

}  // namespace bayesid::fwd
