#pragma once

#include "bayesid/forward/model.hpp"
#include "bayesid/polychaos/pce.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace bayesid::mcmc {

/// Gaussian likelihood of observed data z with independent channel noise, evaluated
/// either through the FEM model (parameter germ -> field -> solve -> measure) or
/// through a PCE surrogate of the measurement.
struct LikelihoodModel {
  enum class Kind { direct_fem, pce_surrogate, function };

  Kind kind = Kind::direct_fem;
  Vector z;
  Vector noise_sd;
  // direct_fem
  fwd::GermMap parameter;
  std::optional<fwd::ForwardModel> forward;
  // pce_surrogate
  std::optional<pc::PceTensor> surrogate;
  // function: arbitrary germ -> measurement map
  std::function<Vector(std::span<const double>)> map;

  static LikelihoodModel direct(fwd::GermMap parameter, fwd::ForwardModel forward, Vector z, Vector noise_sd) {
    LikelihoodModel m;
    m.kind = Kind::direct_fem;
    m.parameter = std::move(parameter);
    m.forward = std::move(forward);
    m.z = std::move(z);
    m.noise_sd = std::move(noise_sd);
    m.validate();
    return m;
  }

  static LikelihoodModel pce(pc::PceTensor y, Vector z, Vector noise_sd) {
    LikelihoodModel m;
    m.kind = Kind::pce_surrogate;
    m.surrogate = std::move(y);
    m.z = std::move(z);
    m.noise_sd = std::move(noise_sd);
    m.validate();
    return m;
  }

  static LikelihoodModel from_map(std::function<Vector(std::span<const double>)> f, Vector z, Vector noise_sd) {
    LikelihoodModel m;
    m.kind = Kind::function;
    m.map = std::move(f);
    m.z = std::move(z);
    m.noise_sd = std::move(noise_sd);
    m.validate();
    return m;
  }

  /// Predicted measurement Y(xi).
  Vector predict(std::span<const double> xi) const {
    switch (kind) {
      case Kind::direct_fem:
        return forward->observe(parameter.eval(xi));
      case Kind::pce_surrogate:
        return pc::pce_sample(*surrogate, xi);
      case Kind::function:
        return map(xi);
    }
    return {};
  }

  void validate() const {
    require(z.size() == noise_sd.size(), "likelihood: one noise sd per observed channel");
    require((noise_sd.array() > 0.0).all(), "likelihood: noise sd must be positive");
    if (kind == Kind::pce_surrogate) require(surrogate->space_dim() == z.size(), "likelihood: surrogate length differs from z");
    if (kind == Kind::direct_fem)
      require(forward->measurement_dim() == z.size(), "likelihood: measurement length differs from z");
  }
};

/// -1/2 (Y(xi) - z)^T C_eps^-1 (Y(xi) - z) for diagonal C_eps.
inline double log_likelihood(const LikelihoodModel& m, std::span<const double> xi) {
  const Vector y = m.predict(xi);
  require(y.size() == m.z.size(), "likelihood: forward map returned wrong length");
  return -0.5 * ((y - m.z).array() / m.noise_sd.array()).square().sum();
}

/// Log posterior in germ coordinates: standard normal prior plus log-likelihood.
/// Forward failures (for example non-positive conductivity) give -inf so the chain
/// rejects the proposal.
inline double log_posterior(const LikelihoodModel& m, std::span<const double> xi) {
  double prior = 0.0;
  for (double v : xi) prior -= 0.5 * v * v;
  try {
    return prior + log_likelihood(m, xi);
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace bayesid::mcmc
