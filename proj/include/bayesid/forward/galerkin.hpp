#pragma once

#include "bayesid/forward/propagate.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <vector>

namespace bayesid::fwd {

struct GalerkinOptions {
  double tolerance = 1e-8;
  int max_iterations = 2000;
};

struct GalerkinResult {
  PceForecast forecast;
  int iterations = 0;
  double residual = 0.0;
};

/// Intrusive stochastic Galerkin solve of the linear diffusion problem with a PCE
/// conductivity kappa = sum_beta kappa^beta H_beta:
///   sum_{beta,gamma} E[H_alpha H_beta H_gamma] K(kappa^beta) u^gamma = alpha! f^alpha,
/// with the state projected onto the index set of kappa. Dirichlet data sit in the
/// mean; the remaining coefficients vanish on the Dirichlet boundary. Solved by block
/// conjugate gradients preconditioned with alpha! K(kappa^0) on each block.
inline GalerkinResult propagate_galerkin_linear(const pc::PceTensor& kappa, const ForwardModel& model,
                                                const GalerkinOptions& opt = {}) {
  require(model.linear(), "stochastic Galerkin supports only the linear diffusion model");
  require(model.transform == Transform::identity,
          "stochastic Galerkin expects the conductivity PCE itself (identity transform)");
  const auto& prob = *model.problem;
  require(kappa.space_dim() == prob.node_count(), "Galerkin: conductivity PCE must be nodal");
  const auto& set = kappa.index_set();
  const auto j = static_cast<Eigen::Index>(set.size());
  const auto nf = static_cast<Eigen::Index>(prob.free_nodes().size());

  const Vector mean = kappa.coeffs().col(0);
  prob.check_kappa(mean);

  std::vector<int> active;
  std::vector<fem::SparseMatrix> k_beta(static_cast<std::size_t>(j));
  Matrix rhs = Matrix::Zero(nf, j);
  const Vector norms = pc::basis_norms(set);
  const Vector f_free = prob.restrict_free(prob.load_vector());
  for (Eigen::Index b = 0; b < j; ++b) {
    if (b > 0 && kappa.coeffs().col(b).cwiseAbs().maxCoeff() == 0.0) continue;
    auto red = prob.reduced_stiffness(kappa.coeffs().col(b));
    k_beta[static_cast<std::size_t>(b)] = std::move(red.k_ff);
    rhs.col(b) = -norms[b] * red.coupling;
    active.push_back(static_cast<int>(b));
  }
  rhs.col(0) += f_free;

  struct Entry {
    int alpha, beta, gamma;
    double value;
  };
  std::vector<Entry> entries;
  for (int b : active)
    for (Eigen::Index a = 0; a < j; ++a)
      for (Eigen::Index g = 0; g < j; ++g) {
        const double v = pc::triple_product(set[static_cast<std::size_t>(a)], set[static_cast<std::size_t>(b)],
                                            set[static_cast<std::size_t>(g)]);
        if (v != 0.0) entries.push_back({static_cast<int>(a), b, static_cast<int>(g), v});
      }

  auto apply = [&](const Matrix& x) {
    Matrix y = Matrix::Zero(nf, j);
    for (const auto& e : entries)
      y.col(e.alpha).noalias() += e.value * (k_beta[static_cast<std::size_t>(e.beta)] * x.col(e.gamma));
    return y;
  };

  Eigen::SimplicialLLT<fem::SparseMatrix> pre(k_beta[0]);
  if (pre.info() != Eigen::Success) throw NumericalError("mean stiffness is not positive definite");
  auto precondition = [&](const Matrix& r) {
    Matrix z(nf, j);
    for (Eigen::Index a = 0; a < j; ++a) z.col(a) = pre.solve(r.col(a)) / norms[a];
    return z;
  };
  auto inner = [](const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); };

  Matrix x = Matrix::Zero(nf, j);
  for (Eigen::Index a = 0; a < j; ++a) x.col(a) = pre.solve(rhs.col(a)) / norms[a];
  Matrix r = rhs - apply(x);
  Matrix z = precondition(r);
  Matrix p = z;
  double rz = inner(r, z);
  const double bnorm = std::max(rhs.norm(), 1e-300);
  GalerkinResult res;
  res.residual = r.norm() / bnorm;
  int it = 0;
  while (res.residual > opt.tolerance) {
    if (++it > opt.max_iterations)
      throw NumericalError("stochastic Galerkin CG did not converge (residual " + format_double(res.residual) + ")");
    const Matrix ap = apply(p);
    const double pap = inner(p, ap);
    if (!(pap > 0.0))
      throw NumericalError("stochastic Galerkin block system is indefinite: conductivity fluctuation too large");
    const double step = rz / pap;
    x += step * p;
    r -= step * ap;
    res.residual = r.norm() / bnorm;
    z = precondition(r);
    const double rz_new = inner(r, z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  res.iterations = it;

  const auto n = prob.node_count();
  Matrix u = Matrix::Zero(n, j);
  u.col(0) = prob.expand(x.col(0), prob.dirichlet_values());
  const Vector zero = Vector::Zero(n);
  for (Eigen::Index a = 1; a < j; ++a) u.col(a) = prob.expand(x.col(a), zero);
  res.forecast.q = kappa;
  res.forecast.u = pc::PceTensor(kappa.index_set_ptr(), u);
  res.forecast.y = pc::PceTensor(kappa.index_set_ptr(), model.measurement.matrix() * u);
  return res;
}

}  // namespace bayesid::fwd
