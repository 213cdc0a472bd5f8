#pragma once

#include "bayesid/common.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace bayesid::upd {

struct Regularization {
  enum class Kind { exact_inverse, pseudo_inverse };
  Kind kind = Kind::exact_inverse;
  /// Relative singular-value cutoff; also the reciprocal condition number beyond
  /// which the exact path falls back to the pseudo-inverse.
  double tolerance = 1e-10;
};

/// K = C_qy (C_y + C_eps)^-1 together with the covariances it was built from.
struct GainOperator {
  Matrix K;
  Regularization regularization;
  bool pseudo_inverse_used = false;
  Matrix c_qy, c_y, c_eps;
};

inline Matrix diagonal_noise(const Vector& sd) { return sd.array().square().matrix().asDiagonal(); }

/// Solves K (C_y + C_eps) = C_qy. The innovation covariance is diagonalized once;
/// when it is rank-deficient or worse conditioned than 1/tolerance (or when the
/// pseudo-inverse is requested) the truncated spectral pseudo-inverse is used.
inline GainOperator kalman_gain(const Matrix& c_qy, const Matrix& c_y, const Matrix& c_eps,
                                const Regularization& reg = {}) {
  const Eigen::Index r = c_y.rows();
  if (c_y.cols() != r || c_eps.rows() != r || c_eps.cols() != r || c_qy.cols() != r)
    throw InvalidArgument("kalman_gain: dimension mismatch (C_qy " + std::to_string(c_qy.rows()) + "x" +
                          std::to_string(c_qy.cols()) + ", C_y " + std::to_string(c_y.rows()) + "x" +
                          std::to_string(c_y.cols()) + ", C_eps " + std::to_string(c_eps.rows()) + "x" +
                          std::to_string(c_eps.cols()) + ")");
  require(reg.tolerance > 0.0 && reg.tolerance < 1.0, "kalman_gain: tolerance must lie in (0, 1)");
  GainOperator g;
  g.regularization = reg;
  g.c_qy = c_qy;
  g.c_y = c_y;
  g.c_eps = c_eps;

  const Matrix s = 0.5 * ((c_y + c_eps) + (c_y + c_eps).transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) throw NumericalError("kalman_gain: eigensolve of C_y + C_eps failed");
  const Vector& ev = eig.eigenvalues();
  const double top = r > 0 ? std::max(ev.cwiseAbs().maxCoeff(), 0.0) : 0.0;
  if (top == 0.0) {
    g.K = Matrix::Zero(c_qy.rows(), r);
    g.pseudo_inverse_used = true;
    return g;
  }
  const double cutoff = reg.tolerance * top;
  const bool well_posed = ev.minCoeff() > cutoff;
  if (reg.kind == Regularization::Kind::exact_inverse && well_posed) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() == Eigen::Success) {
      g.K = llt.solve(c_qy.transpose()).transpose();
      return g;
    }
  }
  Vector inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv[i] = ev[i] > cutoff ? 1.0 / ev[i] : 0.0;
  const Matrix& v = eig.eigenvectors();
  g.K = c_qy * v * inv.asDiagonal() * v.transpose();
  g.pseudo_inverse_used = true;
  return g;
}

}  // namespace bayesid::upd
