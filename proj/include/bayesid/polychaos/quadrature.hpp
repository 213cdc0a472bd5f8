#pragma once

#include "bayesid/common.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace bayesid::pc {

inline constexpr std::size_t kDefaultMaxQuadratureNodes = 2'000'000;

/// Tensor-product Gauss-Hermite rule for the standard Gaussian measure.
/// Weights are normalized so that they sum to one.
class GaussHermiteRule {
 public:
  GaussHermiteRule() = default;

  GaussHermiteRule(int order, int dims, std::size_t max_nodes = kDefaultMaxQuadratureNodes)
      : order_(order), dims_(dims) {
    require(order >= 1, "quadrature order must be >= 1");
    require(dims >= 1, "quadrature needs at least one dimension");
    const double count = std::pow(static_cast<double>(order), dims);
    if (count > static_cast<double>(max_nodes))
      throw InvalidArgument("tensor quadrature with " + format_double(count) +
                            " nodes exceeds cap " + std::to_string(max_nodes));
    size_ = static_cast<std::size_t>(count);
    golub_welsch();
  }

  int order() const { return order_; }
  int dims() const { return dims_; }
  std::size_t size() const { return size_; }
  const std::vector<double>& nodes_1d() const { return nodes_; }
  const std::vector<double>& weights_1d() const { return weights_; }

  /// Writes the i-th tensor node into theta (dimension 0 varies fastest); returns its weight.
  double node(std::size_t i, std::span<double> theta) const {
    double w = 1.0;
    for (int d = 0; d < dims_; ++d) {
      const auto j = i % static_cast<std::size_t>(order_);
      i /= static_cast<std::size_t>(order_);
      theta[static_cast<std::size_t>(d)] = nodes_[j];
      w *= weights_[j];
    }
    return w;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    std::vector<double> theta(static_cast<std::size_t>(dims_));
    for (std::size_t i = 0; i < size_; ++i) {
      const double w = node(i, theta);
      fn(std::span<const double>(theta), w);
    }
  }

 private:
  void golub_welsch() {
    const auto n = static_cast<Eigen::Index>(order_);
    Matrix jacobi = Matrix::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
      jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
      jacobi(k - 1, k) = jacobi(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
    if (eig.info() != Eigen::Success) throw NumericalError("Golub-Welsch eigensolve failed");
    nodes_.resize(static_cast<std::size_t>(n));
    weights_.resize(static_cast<std::size_t>(n));
    double total = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      nodes_[static_cast<std::size_t>(k)] = eig.eigenvalues()[k];
      const double v0 = eig.eigenvectors()(0, k);
      weights_[static_cast<std::size_t>(k)] = v0 * v0;
      total += v0 * v0;
    }
    for (auto& w : weights_) w /= total;
    // the rule is symmetric about zero; enforce it exactly
    const auto m = static_cast<std::size_t>(order_);
    for (std::size_t k = 0; k < m / 2; ++k) {
      const double x = 0.5 * (nodes_[m - 1 - k] - nodes_[k]);
      const double w = 0.5 * (weights_[k] + weights_[m - 1 - k]);
      nodes_[k] = -x;
      nodes_[m - 1 - k] = x;
      weights_[k] = weights_[m - 1 - k] = w;
    }
    if (m % 2 == 1) nodes_[m / 2] = 0.0;
  }

  int order_ = 0;
  int dims_ = 0;
  std::size_t size_ = 0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

}  // namespace bayesid::pc
