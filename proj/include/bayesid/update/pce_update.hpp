#pragma once

#include "bayesid/polychaos/pce.hpp"
#include "bayesid/update/gain.hpp"

#include <memory>

namespace bayesid::upd {

struct PceUpdateResult {
  pc::PceTensor q_a;
  GainOperator gain;
};

/// Sampling-free linear Bayesian update applied to every PC coefficient:
///   q_a^alpha = q_f^alpha + K (z^alpha - y_f^alpha),
/// with C_qy and C_y computed exactly from the coefficients.
inline PceUpdateResult pce_update(const pc::PceTensor& q_f, const pc::PceTensor& y_f, const pc::PceTensor& z,
                                  const Matrix& c_eps, const Regularization& reg = {}) {
  if (!q_f.same_basis(y_f) || !q_f.same_basis(z)) throw InvalidArgument("pce_update: index set mismatch");
  require(z.space_dim() == y_f.space_dim(), "pce_update: z and y_f differ in length");
  PceUpdateResult res;
  res.gain = kalman_gain(pc::pce_covariance(q_f, y_f), pc::pce_covariance(y_f, y_f), c_eps, reg);
  res.q_a = pc::PceTensor(q_f.index_set_ptr(), q_f.coeffs() + res.gain.K * (z.coeffs() - y_f.coeffs()));
  return res;
}

/// Square-root closure of an update with deterministic z. The mean of q_a is kept and
/// its fluctuation is rebuilt from the forecast columns as Q_f E^{1/2} D^{-1/2}, where
/// E = (I - G Y) D (I - G Y)^T + G C_eps G^T, G = D Y^T (C_y + C_eps)^-1 and D holds the
/// basis norms. The result has covariance C_q - K C_yq, which is what the update gives
/// when z carries the noise as a random variable, without adding germs.
inline pc::PceTensor square_root_closure(const pc::PceTensor& q_f, const pc::PceTensor& y_f,
                                         const pc::PceTensor& q_a, const Matrix& c_eps,
                                         const Regularization& reg = {}) {
  if (!q_f.same_basis(y_f) || !q_f.same_basis(q_a)) throw InvalidArgument("square_root_closure: index set mismatch");
  const auto j = static_cast<Eigen::Index>(q_f.index_set().size());
  if (j < 2) return q_a;
  const Vector d = basis_norms(q_f.index_set()).tail(j - 1);
  const Matrix y = y_f.coeffs().rightCols(j - 1);
  const Matrix g = kalman_gain(d.asDiagonal() * y.transpose(), pc::pce_covariance(y_f, y_f), c_eps, reg).K;
  const Matrix m = Matrix::Identity(j - 1, j - 1) - g * y;
  Matrix e = m * d.asDiagonal() * m.transpose() + g * c_eps * g.transpose();
  e = 0.5 * (e + e.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(e);
  if (eig.info() != Eigen::Success) throw NumericalError("square_root_closure: eigensolve failed");
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix b = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose() *
                   d.cwiseSqrt().cwiseInverse().asDiagonal();
  pc::PceTensor out = q_a;
  out.coeffs().rightCols(j - 1) = q_f.coeffs().rightCols(j - 1) * b;
  return out;
}

/// Deterministic observation vector as a PCE on the given basis.
inline pc::PceTensor observation(std::shared_ptr<const pc::MultiIndexSet> set, const Vector& z) {
  return pc::PceTensor::constant(std::move(set), z);
}

inline PceUpdateResult pce_update(const pc::PceTensor& q_f, const pc::PceTensor& y_f, const Vector& z,
                                  const Matrix& c_eps, const Regularization& reg = {}) {
  return pce_update(q_f, y_f, observation(q_f.index_set_ptr(), z), c_eps, reg);
}

/// Forecasts and observation lifted onto a basis with one extra germ per measurement
/// channel, where z = z_obs + sum_r sd_r theta_{M+r} carries the observation noise
/// as a random variable.
struct NoiseAugmented {
  pc::PceTensor q_f, y_f, z;
};

inline NoiseAugmented augment_with_noise(const pc::PceTensor& q_f, const pc::PceTensor& y_f, const Vector& z_obs,
                                         const Vector& noise_sd,
                                         std::size_t max_size = pc::kDefaultMaxIndexSetSize) {
  if (!q_f.same_basis(y_f)) throw InvalidArgument("augment_with_noise: index set mismatch");
  require(z_obs.size() == y_f.space_dim() && noise_sd.size() == z_obs.size(),
          "augment_with_noise: observation and noise must match y_f");
  const auto& old_set = q_f.index_set();
  const int m = old_set.dims();
  const auto r = static_cast<int>(z_obs.size());
  const int p = std::max(old_set.order(), 1);
  auto set = std::make_shared<const pc::MultiIndexSet>(pc::build_total_degree_set(m + r, p, max_size));
  auto lift = [&](const pc::PceTensor& t) {
    auto out = pc::PceTensor::zeros(set, t.space_dim());
    for (std::size_t a = 0; a < old_set.size(); ++a) {
      pc::MultiIndex alpha = old_set[a];
      alpha.resize(static_cast<std::size_t>(m + r), 0);
      out.coeffs().col(static_cast<Eigen::Index>(set->find(alpha))) = t.coeffs().col(static_cast<Eigen::Index>(a));
    }
    return out;
  };
  NoiseAugmented res{lift(q_f), lift(y_f), observation(set, z_obs)};
  for (int i = 0; i < r; ++i)
    res.z.coeffs()(i, static_cast<Eigen::Index>(set->first_order(m + i))) = noise_sd[i];
  return res;
}

}  // namespace bayesid::upd
