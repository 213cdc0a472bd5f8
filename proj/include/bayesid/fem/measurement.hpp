#pragma once

#include "bayesid/fem/diffusion.hpp"
#include "bayesid/fem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace bayesid::fem {

/// Linear observation of the nodal state: either point values at instrumented
/// nodes or integrals of u over the patch of elements around each instrumented node.
/// Stored as a dense R x N matrix so that measure(u) = H u.
class MeasurementOperator {
 public:
  enum class Kind { nodal, patch_average };

  MeasurementOperator() = default;

  static MeasurementOperator nodal(const Mesh& mesh, std::vector<int> nodes) {
    MeasurementOperator op(Kind::nodal, mesh, std::move(nodes));
    for (std::size_t r = 0; r < op.nodes_.size(); ++r) op.h_(static_cast<Eigen::Index>(r), op.nodes_[r]) = 1.0;
    return op;
  }

  /// Patch G_j = all elements touching node j; y_j = integral of the P1 interpolant over G_j.
  static MeasurementOperator patches(const Mesh& mesh, std::vector<int> nodes) {
    MeasurementOperator op(Kind::patch_average, mesh, std::move(nodes));
    for (std::size_t r = 0; r < op.nodes_.size(); ++r) {
      std::vector<int> patch;
      for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const auto& t = mesh.elements[e];
        if (std::find(t.begin(), t.end(), op.nodes_[r]) != t.end()) patch.push_back(static_cast<int>(e));
      }
      op.add_patch(mesh, static_cast<Eigen::Index>(r), patch);
      op.patches_.push_back(std::move(patch));
    }
    return op;
  }

  /// Patch operator over explicit element subsets (one measurement per subset).
  static MeasurementOperator custom_patches(const Mesh& mesh, std::vector<int> centre_nodes,
                                            std::vector<std::vector<int>> element_sets) {
    require(centre_nodes.size() == element_sets.size(), "one element set per measurement");
    MeasurementOperator op(Kind::patch_average, mesh, std::move(centre_nodes));
    for (std::size_t r = 0; r < element_sets.size(); ++r) {
      require(!element_sets[r].empty(), "measurement patch must be non-empty");
      for (int e : element_sets[r])
        require(e >= 0 && static_cast<std::size_t>(e) < mesh.element_count(), "patch element out of range");
      op.add_patch(mesh, static_cast<Eigen::Index>(r), element_sets[r]);
    }
    op.patches_ = std::move(element_sets);
    return op;
  }

  Kind kind() const { return kind_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<int>& nodes() const { return nodes_; }
  const std::vector<std::vector<int>>& patch_elements() const { return patches_; }
  const Matrix& matrix() const { return h_; }

  Vector apply(const Vector& u) const {
    require(u.size() == h_.cols(), "measurement operator built for a different mesh");
    return h_ * u;
  }

 private:
  MeasurementOperator(Kind kind, const Mesh& mesh, std::vector<int> nodes)
      : kind_(kind), nodes_(std::move(nodes)) {
    require(!nodes_.empty(), "measurement count must be >= 1");
    auto sorted = nodes_;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            "instrumented nodes must be distinct");
    for (int v : nodes_)
      require(v >= 0 && static_cast<std::size_t>(v) < mesh.node_count(), "instrumented node out of range");
    h_ = Matrix::Zero(static_cast<Eigen::Index>(nodes_.size()), static_cast<Eigen::Index>(mesh.node_count()));
  }

  void add_patch(const Mesh& mesh, Eigen::Index row, const std::vector<int>& elements) {
    // integral of a P1 function over a triangle = area/3 * sum of vertex values
    for (int e : elements) {
      const double a3 = element_area(mesh, static_cast<std::size_t>(e)) / 3.0;
      for (int v : mesh.elements[static_cast<std::size_t>(e)]) h_(row, v) += a3;
    }
  }

  Kind kind_ = Kind::nodal;
  std::vector<int> nodes_;
  std::vector<std::vector<int>> patches_;
  Matrix h_;
};

/// Every k-th node of the mesh ordering with k = round(1 / fraction), so that about
/// `fraction` of the nodes are instrumented.
inline std::vector<int> spread_nodes(const Mesh& mesh, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, "measurement fraction must lie in (0, 1]");
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(1.0 / fraction)));
  std::vector<int> out;
  for (std::size_t i = 0; i < mesh.node_count(); i += stride) out.push_back(static_cast<int>(i));
  return out;
}

inline Vector measure(const MeasurementOperator& op, const FemSolution& sol) { return op.apply(sol.u); }

/// Per-channel noise sd as a fraction of |y|, floored to keep every channel non-degenerate.
inline Vector relative_noise_sd(const Vector& y, double fraction, double floor = 1e-12) {
  Vector sd(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) sd[i] = fraction * std::max(std::abs(y[i]), floor);
  return sd;
}

/// y + eps with eps_i ~ N(0, sd_i^2), drawn from a generator seeded with `seed`.
inline Vector add_noise(const Vector& y, const Vector& sd, std::uint64_t seed) {
  require(y.size() == sd.size(), "noise sd must match measurement length");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Vector out = y;
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] += sd[i] * n01(rng);
  return out;
}

}  // namespace bayesid::fem
