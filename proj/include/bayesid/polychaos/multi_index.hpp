#pragma once

#include "bayesid/common.hpp"

#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <vector>

namespace bayesid::pc {

/// Degrees of the univariate Hermite factors, one entry per germ dimension.
using MultiIndex = std::vector<int>;

inline int total_degree(std::span<const int> alpha) {
  return std::accumulate(alpha.begin(), alpha.end(), 0);
}

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

/// alpha! = prod_k alpha_k!, which is E[H_alpha^2] for probabilists' Hermite polynomials.
inline double basis_norm_sq(std::span<const int> alpha) {
  double v = 1.0;
  for (int a : alpha) {
    require(a >= 0, "multi-index entries must be non-negative");
    v *= factorial(a);
  }
  return v;
}

/// Exact binomial coefficient as double (exact for the sizes we admit).
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline constexpr std::size_t kDefaultMaxIndexSetSize = 10000;

/// Total-degree truncated index set in graded lexicographic order.
///
/// Within one total degree, indices are sorted lexicographically descending,
/// so (M=2, p=2) yields (0,0), (1,0), (0,1), (2,0), (1,1), (0,2).
class MultiIndexSet {
 public:
  MultiIndexSet() = default;

  static MultiIndexSet total_degree(int dims, int max_order,
                                    std::size_t max_size = kDefaultMaxIndexSetSize) {
    require(dims >= 1, "index set needs at least one stochastic dimension");
    require(max_order >= 0, "index set order must be non-negative");
    const double card = binomial(dims + max_order, max_order);
    if (card > static_cast<double>(max_size))
      throw InvalidArgument("index set size " + format_double(card) + " exceeds cap " +
                            std::to_string(max_size));
    MultiIndexSet set;
    set.dims_ = dims;
    set.order_ = max_order;
    set.indices_.reserve(static_cast<std::size_t>(card));
    MultiIndex current(static_cast<std::size_t>(dims), 0);
    for (int d = 0; d <= max_order; ++d) set.append_degree(current, 0, d);
    for (std::size_t i = 0; i < set.indices_.size(); ++i) set.lookup_.emplace(set.indices_[i], i);
    return set;
  }

  int dims() const { return dims_; }
  int order() const { return order_; }
  std::size_t size() const { return indices_.size(); }
  const MultiIndex& operator[](std::size_t i) const { return indices_[i]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  /// Position of alpha in the set, or size() when absent.
  std::size_t find(const MultiIndex& alpha) const {
    auto it = lookup_.find(alpha);
    return it == lookup_.end() ? size() : it->second;
  }

  /// Position of the unit index e_k (first-order in dimension k).
  std::size_t first_order(int k) const {
    MultiIndex e(static_cast<std::size_t>(dims_), 0);
    e[static_cast<std::size_t>(k)] = 1;
    return find(e);
  }

  bool operator==(const MultiIndexSet& o) const {
    return dims_ == o.dims_ && order_ == o.order_ && indices_ == o.indices_;
  }

 private:
  void append_degree(MultiIndex& current, std::size_t pos, int remaining) {
    if (pos + 1 == current.size()) {
      current[pos] = remaining;
      indices_.push_back(current);
      current[pos] = 0;
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      current[pos] = a;
      append_degree(current, pos + 1, remaining - a);
    }
    current[pos] = 0;
  }

  int dims_ = 0;
  int order_ = 0;
  std::vector<MultiIndex> indices_;
  std::map<MultiIndex, std::size_t> lookup_;
};

inline MultiIndexSet build_total_degree_set(int dims, int max_order,
                                            std::size_t max_size = kDefaultMaxIndexSetSize) {
  return MultiIndexSet::total_degree(dims, max_order, max_size);
}

}  // namespace bayesid::pc
