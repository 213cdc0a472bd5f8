#pragma once

#include "bayesid/polychaos/multi_index.hpp"

#include <algorithm>
#include <span>
#include <vector>

namespace bayesid::pc {

/// Probabilists' Hermite polynomial h_n(x), orthogonal w.r.t. the standard normal density.
inline double hermite_eval(int degree, double x) {
  require(degree >= 0, "Hermite degree must be non-negative");
  if (degree == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int n = 1; n < degree; ++n) {
    const double next = x * cur - n * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Fills values[0..max_degree] with h_0(x)..h_max_degree(x).
inline void hermite_table(int max_degree, double x, std::span<double> values) {
  values[0] = 1.0;
  if (max_degree >= 1) values[1] = x;
  for (int n = 1; n < max_degree; ++n) values[n + 1] = x * values[n] - n * values[n - 1];
}

/// H_alpha(theta) = prod_k h_{alpha_k}(theta_k).
inline double basis_eval(std::span<const int> alpha, std::span<const double> theta) {
  require(alpha.size() == theta.size(), "basis_eval: dimension mismatch");
  double v = 1.0;
  for (std::size_t k = 0; k < alpha.size(); ++k)
    if (alpha[k] != 0) v *= hermite_eval(alpha[k], theta[k]);
  return v;
}

/// Evaluates every basis polynomial of the set at theta (one pass of univariate tables).
inline Vector basis_eval_all(const MultiIndexSet& set, std::span<const double> theta) {
  require(static_cast<int>(theta.size()) == set.dims(), "basis_eval_all: dimension mismatch");
  const int p = set.order();
  const std::size_t m = theta.size();
  std::vector<double> table(m * static_cast<std::size_t>(p + 1));
  for (std::size_t k = 0; k < m; ++k)
    hermite_table(p, theta[k], std::span(table).subspan(k * (p + 1), p + 1));
  Vector out(static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    double v = 1.0;
    const auto& alpha = set[i];
    for (std::size_t k = 0; k < m; ++k)
      if (alpha[k] != 0) v *= table[k * (p + 1) + alpha[k]];
    out[static_cast<Eigen::Index>(i)] = v;
  }
  return out;
}

/// Univariate E[h_i h_j h_k] under the standard normal measure.
inline double triple_product_1d(int i, int j, int k) {
  const int sum = i + j + k;
  if (sum % 2 != 0) return 0.0;
  const int s = sum / 2;
  if (s < i || s < j || s < k) return 0.0;
  return factorial(i) * factorial(j) * factorial(k) /
         (factorial(s - i) * factorial(s - j) * factorial(s - k));
}

/// E[H_alpha H_beta H_gamma]; product of the univariate closed forms.
inline double triple_product(std::span<const int> alpha, std::span<const int> beta,
                             std::span<const int> gamma) {
  require(alpha.size() == beta.size() && beta.size() == gamma.size(),
          "triple_product: dimension mismatch");
  double v = 1.0;
  for (std::size_t d = 0; d < alpha.size() && v != 0.0; ++d)
    v *= triple_product_1d(alpha[d], beta[d], gamma[d]);
  return v;
}

}  // namespace bayesid::pc
