#pragma once

#include "bayesid/parallel.hpp"
#include "bayesid/polychaos/hermite.hpp"
#include "bayesid/polychaos/multi_index.hpp"
#include "bayesid/polychaos/quadrature.hpp"

#include <functional>
#include <memory>
#include <span>

namespace bayesid::pc {

/// Coefficient tensor q = sum_alpha q^alpha (x) e^alpha.
///
/// Column alpha of `coeffs()` holds the spatial vector q^alpha, so the matrix has
/// shape (N_space, J). Column 0 is the mean. The index set is shared, not copied.
class PceTensor {
 public:
  PceTensor() = default;

  PceTensor(std::shared_ptr<const MultiIndexSet> set, Matrix coeffs)
      : set_(std::move(set)), coeffs_(std::move(coeffs)) {
    require(set_ != nullptr, "PceTensor requires an index set");
    require(static_cast<std::size_t>(coeffs_.cols()) == set_->size(),
            "PceTensor: coefficient columns must equal index set size");
  }

  static PceTensor zeros(std::shared_ptr<const MultiIndexSet> set, Eigen::Index space_dim) {
    const auto j = static_cast<Eigen::Index>(set->size());
    return PceTensor(std::move(set), Matrix::Zero(space_dim, j));
  }

  /// Deterministic vector: only the mean column is populated.
  static PceTensor constant(std::shared_ptr<const MultiIndexSet> set, const Vector& mean) {
    PceTensor t = zeros(std::move(set), mean.size());
    t.coeffs_.col(0) = mean;
    return t;
  }

  const MultiIndexSet& index_set() const { return *set_; }
  const std::shared_ptr<const MultiIndexSet>& index_set_ptr() const { return set_; }
  const Matrix& coeffs() const { return coeffs_; }
  Matrix& coeffs() { return coeffs_; }
  Eigen::Index space_dim() const { return coeffs_.rows(); }
  Eigen::Index terms() const { return coeffs_.cols(); }

  bool same_basis(const PceTensor& other) const {
    return set_ == other.set_ || (set_ && other.set_ && *set_ == *other.set_);
  }

 private:
  std::shared_ptr<const MultiIndexSet> set_;
  Matrix coeffs_;
};

inline Vector pce_mean(const PceTensor& q) { return q.coeffs().col(0); }

/// alpha! for every index of the set, as a vector aligned with the PCE columns.
inline Vector basis_norms(const MultiIndexSet& set) {
  Vector n(static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i)
    n[static_cast<Eigen::Index>(i)] = basis_norm_sq(set[i]);
  return n;
}

/// C_{q,y} = sum_{alpha != 0} alpha! q^alpha (y^alpha)^T.
inline Matrix pce_covariance(const PceTensor& q, const PceTensor& y) {
  if (!q.same_basis(y)) throw InvalidArgument("pce_covariance: index set mismatch");
  const Vector norms = basis_norms(q.index_set());
  const Eigen::Index j = q.terms();
  if (j <= 1) return Matrix::Zero(q.space_dim(), y.space_dim());
  const auto qf = q.coeffs().rightCols(j - 1);
  const auto yf = y.coeffs().rightCols(j - 1);
  return qf * norms.tail(j - 1).asDiagonal() * yf.transpose();
}

/// Pointwise variance, the diagonal of pce_covariance(q, q).
inline Vector pce_variance(const PceTensor& q) {
  const Vector norms = basis_norms(q.index_set());
  const Eigen::Index j = q.terms();
  if (j <= 1) return Vector::Zero(q.space_dim());
  return q.coeffs().rightCols(j - 1).array().square().matrix() * norms.tail(j - 1);
}

/// Evaluates sum_alpha q^alpha H_alpha(theta).
inline Vector pce_sample(const PceTensor& q, std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != q.index_set().dims())
    throw InvalidArgument("pce_sample: germ dimension mismatch");
  return q.coeffs() * basis_eval_all(q.index_set(), theta);
}

/// Vector-valued version of project_function: f maps a germ to a vector of length
/// `space_dim`. Coefficients are (sum_z w_z f(theta_z) H_alpha(theta_z)) / alpha!.
inline PceTensor project_vector_function(
    const std::function<Vector(std::span<const double>)>& f, Eigen::Index space_dim,
    std::shared_ptr<const MultiIndexSet> set, const GaussHermiteRule& rule, unsigned threads = 1) {
  require(rule.dims() == set->dims(), "projection: rule and index set dimensions differ");
  const auto j = static_cast<Eigen::Index>(set->size());
  const std::size_t nodes = rule.size();
  constexpr std::size_t kBatch = 1024;
  // f is evaluated in parallel per batch; accumulation stays serial for a fixed summation order.
  std::vector<Vector> values(std::min(nodes, kBatch));
  Matrix acc = Matrix::Zero(space_dim, j);
  std::vector<double> theta(static_cast<std::size_t>(rule.dims()));
  for (std::size_t start = 0; start < nodes; start += kBatch) {
    const std::size_t count = std::min(kBatch, nodes - start);
    parallel_for(count, threads, [&](std::size_t b) {
      std::vector<double> local(static_cast<std::size_t>(rule.dims()));
      rule.node(start + b, local);
      values[b] = f(local);
      if (values[b].size() != space_dim)
        throw InvalidArgument("projection: function returned wrong length");
    });
    for (std::size_t b = 0; b < count; ++b) {
      const double w = rule.node(start + b, theta);
      const Vector h = basis_eval_all(*set, theta);
      acc.noalias() += values[b] * (w * h).transpose();
    }
  }
  const Vector norms = basis_norms(*set);
  acc = acc * norms.cwiseInverse().asDiagonal();
  return PceTensor(std::move(set), std::move(acc));
}

/// Orthogonal projection of a scalar function of the germ onto span{H_alpha}.
inline PceTensor project_function(const std::function<double(std::span<const double>)>& f,
                                  std::shared_ptr<const MultiIndexSet> set,
                                  const GaussHermiteRule& rule) {
  return project_vector_function(
      [&](std::span<const double> theta) {
        Vector v(1);
        v[0] = f(theta);
        return v;
      },
      1, std::move(set), rule);
}

/// Default rule for projecting onto `set`: order p+1 per dimension.
inline GaussHermiteRule default_rule(const MultiIndexSet& set,
                                     std::size_t max_nodes = kDefaultMaxQuadratureNodes) {
  return GaussHermiteRule(set.order() + 1, set.dims(), max_nodes);
}

}  // namespace bayesid::pc
