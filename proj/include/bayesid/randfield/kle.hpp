#pragma once

#include "bayesid/common.hpp"
#include "bayesid/fem/mesh.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace bayesid::field {

using fem::Point;

/// Stationary isotropic covariance c(r) = variance * exp(-r / l_c) or variance * exp(-r^2 / l_c^2).
struct CovarianceKernel {
  enum class Kind { exponential, squared_exponential };

  Kind kind = Kind::exponential;
  double variance = 1.0;
  double correlation_length = 1.0;

  double operator()(const Point& a, const Point& b) const {
    const double r = std::hypot(a.x - b.x, a.y - b.y);
    switch (kind) {
      case Kind::exponential:
        return variance * std::exp(-r / correlation_length);
      case Kind::squared_exponential:
        return variance * std::exp(-(r * r) / (correlation_length * correlation_length));
    }
    return 0.0;
  }

  void validate() const {
    require(variance > 0.0, "kernel variance must be positive");
    require(correlation_length > 0.0, "kernel correlation length must be positive");
  }
};

inline std::string to_string(CovarianceKernel::Kind k) {
  return k == CovarianceKernel::Kind::exponential ? "exponential" : "squared_exponential";
}

inline CovarianceKernel::Kind kernel_kind_from_string(const std::string& s) {
  if (s == "exponential") return CovarianceKernel::Kind::exponential;
  if (s == "squared_exponential" || s == "gaussian") return CovarianceKernel::Kind::squared_exponential;
  throw InvalidArgument("unknown kernel kind '" + s + "'");
}

/// Truncated, variance-corrected Karhunen-Loeve model on a nodal point set:
///   q(x) = mean(x) + sigma_c * sum_j sqrt(lambda_j) xi_j q_j(x),
/// with modes orthonormal in the weighted inner product q_i^T W q_j = delta_ij.
struct KleModel {
  Vector mean_field;
  Vector eigenvalues;   // lambda_1 >= ... >= lambda_M > 0
  Matrix modes;         // N x M, column j is q_j
  Vector weights;       // nodal quadrature weights W
  Vector spectrum;      // every discrete eigenvalue, non-increasing
  double sigma_c = 1.0;
  double total_variance = 0.0;
  double residual_variance = 0.0;

  Eigen::Index terms() const { return eigenvalues.size(); }
  Eigen::Index nodes() const { return mean_field.size(); }

  /// Nodal fluctuation basis sigma_c sqrt(lambda_j) q_j as an N x M matrix.
  Matrix scaled_modes() const {
    return modes * (sigma_c * eigenvalues.array().sqrt()).matrix().asDiagonal();
  }
};

/// Nystrom discretization of the Fredholm problem: C W q = lambda q, solved through the
/// symmetric form W^1/2 C W^1/2 v = lambda v with q = W^-1/2 v.
///
/// The total variance is the weighted trace sum_i w_i c(x_i, x_i), which equals the
/// sum of all discrete eigenvalues. sigma_c rescales the retained modes so that the
/// truncated model carries the same total variance.
inline KleModel kle_decompose(const CovarianceKernel& kernel, std::span<const Point> points,
                              const Vector& weights, int terms, const Vector& mean = Vector()) {
  kernel.validate();
  const auto n = static_cast<Eigen::Index>(points.size());
  require(weights.size() == n, "kle_decompose: one weight per point required");
  require(terms >= 1 && terms <= n, "kle_decompose: number of terms must be in [1, node count]");
  require((weights.array() > 0.0).all(), "kle_decompose: weights must be positive");
  require(mean.size() == 0 || mean.size() == n, "kle_decompose: mean must be nodal");

  const Vector sw = weights.array().sqrt();
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = sw[i] * kernel(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]) * sw[j];
      b(i, j) = v;
      b(j, i) = v;
    }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
  if (eig.info() != Eigen::Success) throw NumericalError("KLE eigensolve did not converge");

  KleModel model;
  model.weights = weights;
  model.mean_field = mean.size() == n ? mean : Vector::Zero(n);
  model.spectrum = eig.eigenvalues().reverse();
  model.total_variance = (weights.array() * kernel.variance).sum();

  const double lead = model.spectrum[0];
  if (!(model.spectrum[terms - 1] > 1e-12 * lead))
    throw NumericalError("requested " + std::to_string(terms) +
                         " KLE terms but the discrete spectrum is numerically zero beyond " +
                         std::to_string((model.spectrum.array() > 1e-12 * lead).count()));

  model.eigenvalues = model.spectrum.head(terms);
  model.modes.resize(n, terms);
  for (int j = 0; j < terms; ++j) {
    Vector q = eig.eigenvectors().col(n - 1 - j).cwiseQuotient(sw);
    // fix the sign: positive weighted mean, or positive largest entry for mean-free modes
    const double s = weights.dot(q);
    if (std::abs(s) > 1e-8 * q.cwiseAbs().maxCoeff() * weights.sum()) {
      if (s < 0) q = -q;
    } else {
      Eigen::Index imax = 0;
      q.cwiseAbs().maxCoeff(&imax);
      if (q[imax] < 0) q = -q;
    }
    q /= std::sqrt(q.dot(weights.asDiagonal() * q));
    model.modes.col(j) = q;
  }
  const double retained = model.eigenvalues.sum();
  model.residual_variance = std::max(0.0, model.total_variance - retained);
  model.sigma_c = std::sqrt(model.total_variance / retained);
  return model;
}

inline KleModel kle_decompose(const CovarianceKernel& kernel, const fem::Mesh& mesh, int terms,
                              const Vector& mean = Vector()) {
  return kle_decompose(kernel, mesh.nodes, fem::lumped_mass(mesh), terms, mean);
}

/// Nodal values of the truncated, variance-corrected expansion for coordinates xi.
inline Vector kle_synthesize(const KleModel& model, std::span<const double> xi) {
  if (static_cast<Eigen::Index>(xi.size()) != model.terms())
    throw InvalidArgument("kle_synthesize: expected " + std::to_string(model.terms()) + " coordinates");
  const Eigen::Map<const Vector> x(xi.data(), static_cast<Eigen::Index>(xi.size()));
  return model.mean_field + model.scaled_modes() * x;
}

/// Inverse of kle_synthesize on the span of the retained modes:
/// xi_j = q_j^T W (field - mean) / (sigma_c sqrt(lambda_j)).
inline Vector kle_project(const KleModel& model, const Vector& field, const Vector& weights) {
  require(field.size() == model.nodes() && weights.size() == model.nodes(),
          "kle_project: field and weights must be nodal");
  const Vector centred = field - model.mean_field;
  Vector xi = model.modes.transpose() * weights.asDiagonal() * centred;
  return xi.cwiseQuotient((model.sigma_c * model.eigenvalues.array().sqrt()).matrix());
}

inline Vector kle_project(const KleModel& model, const Vector& field) {
  return kle_project(model, field, model.weights);
}

/// Weighted integral of the pointwise variance of the corrected truncated model.
inline double corrected_total_variance(const KleModel& model) {
  const Matrix s = model.scaled_modes();
  return model.weights.dot(s.rowwise().squaredNorm());
}

inline nlohmann::json to_json(const KleModel& m) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json modes = nlohmann::json::array();
  for (Eigen::Index j = 0; j < m.modes.cols(); ++j) modes.push_back(vec(m.modes.col(j)));
  return {{"mean_field", vec(m.mean_field)}, {"eigenvalues", vec(m.eigenvalues)},
          {"modes", modes},                  {"weights", vec(m.weights)},
          {"sigma_c", m.sigma_c},            {"total_variance", m.total_variance},
          {"residual_variance", m.residual_variance}};
}

inline KleModel kle_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  KleModel m;
  m.mean_field = vec(j.at("mean_field"));
  m.eigenvalues = vec(j.at("eigenvalues"));
  m.weights = vec(j.at("weights"));
  m.spectrum = m.eigenvalues;
  const auto& modes = j.at("modes");
  m.modes.resize(m.mean_field.size(), static_cast<Eigen::Index>(modes.size()));
  for (std::size_t k = 0; k < modes.size(); ++k) m.modes.col(static_cast<Eigen::Index>(k)) = vec(modes[k]);
  m.sigma_c = j.at("sigma_c").get<double>();
  m.total_variance = j.at("total_variance").get<double>();
  m.residual_variance = j.at("residual_variance").get<double>();
  return m;
}

}  // namespace bayesid::field
