#pragma once

#include "bayesid/forward/propagate.hpp"
#include "bayesid/update/gain.hpp"

#include <cstdint>
#include <random>

namespace bayesid::upd {

struct EnkfResult {
  fwd::Ensemble q_a;
  GainOperator gain;
};

/// Symmetric square root factor L with L L^T = C for a PSD matrix.
inline Matrix psd_factor(const Matrix& c) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (c + c.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("noise covariance factorization failed");
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

/// Ensemble Kalman filter analysis step Q_a = Q_f + K (Z_obs - Y_f) with sample
/// covariances. With perturb_obs every column of Z_obs is z plus a fresh draw
/// from N(0, C_eps); otherwise all columns equal z.
inline EnkfResult enkf_update(const fwd::Ensemble& q_f, const fwd::Ensemble& y_f, const Vector& z,
                              const Matrix& c_eps, bool perturb_obs, std::uint64_t seed,
                              const Regularization& reg = {}) {
  const Eigen::Index n = q_f.size();
  require(n >= 2, "enkf_update: ensemble size must be >= 2");
  if (y_f.size() != n) throw InvalidArgument("enkf_update: q and y ensembles differ in size");
  if (z.size() != y_f.dim()) throw InvalidArgument("enkf_update: z does not match the forecast measurement");
  const Matrix qc = q_f.samples.colwise() - q_f.mean();
  const Matrix yc = y_f.samples.colwise() - y_f.mean();
  const double denom = static_cast<double>(n - 1);
  EnkfResult res;
  res.gain = kalman_gain(qc * yc.transpose() / denom, yc * yc.transpose() / denom, c_eps, reg);

  Matrix obs = z.replicate(1, n);
  if (perturb_obs) {
    const Matrix l = psd_factor(c_eps);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    Vector e(z.size());
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = n01(rng);
      obs.col(k) += l * e;
    }
  }
  res.q_a = q_f;
  res.q_a.samples = q_f.samples + res.gain.K * (obs - y_f.samples);
  return res;
}

}  // namespace bayesid::upd
