#pragma once

#include "bayesid/common.hpp"
#include "bayesid/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace bayesid::mcmc {

/// Density values on a grid, normalized to unit trapezoid integral.
struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> pdf;
  double bandwidth = 0.0;
};

inline double trapezoid(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "trapezoid: length mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  require(n >= 2 && b > a, "linspace needs n >= 2 and b > a");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

/// Silverman's rule of thumb: 0.9 min(sd, IQR / 1.34) n^(-1/5).
inline double silverman_bandwidth(std::span<const double> samples) {
  const auto n = static_cast<double>(samples.size());
  double m = 0.0;
  for (double v : samples) m += v;
  m /= n;
  double s2 = 0.0;
  for (double v : samples) s2 += (v - m) * (v - m);
  const double sd = std::sqrt(s2 / (n - 1.0));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  auto quant = [&](double p) {
    const double pos = p * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quant(0.75) - quant(0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

/// Gaussian kernel density estimate on `grid`, renormalized by the trapezoid rule.
inline DensityEstimate kde(std::span<const double> samples, std::span<const double> grid,
                           std::optional<double> bandwidth = std::nullopt) {
  require(samples.size() >= 100, "kde needs at least 100 samples");
  require(grid.size() >= 2, "kde needs a grid of at least two points");
  require(std::is_sorted(grid.begin(), grid.end()), "kde grid must be increasing");
  double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  if (bandwidth) require(h > 0.0, "kde bandwidth must be positive");
  if (!(h > 0.0)) throw InvalidArgument("kde: degenerate sample set with zero spread");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  DensityEstimate d;
  d.grid.assign(grid.begin(), grid.end());
  d.pdf.assign(grid.size(), 0.0);
  d.bandwidth = h;
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  const double reach = 10.0 * h;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), grid[g] - reach);
    auto hi = std::upper_bound(lo, sorted.end(), grid[g] + reach);
    double s = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double u = (grid[g] - *it) / h;
      s += std::exp(-0.5 * u * u);
    }
    d.pdf[g] = s * norm;
  }
  const double total = trapezoid(d.grid, d.pdf);
  if (!(total > 0.0)) throw InvalidArgument("kde: grid does not cover the samples");
  for (double& v : d.pdf) v /= total;
  return d;
}

/// Density given by values of an unnormalized function on a grid.
inline DensityEstimate density_from_values(std::vector<double> grid, std::vector<double> values) {
  require(grid.size() == values.size() && grid.size() >= 2, "density: grid and values differ");
  const double total = trapezoid(grid, values);
  require(total > 0.0, "density: values integrate to zero");
  for (double& v : values) v /= total;
  return {std::move(grid), std::move(values), 0.0};
}

struct KlResult {
  double value = 0.0;
  bool floored = false;
};

inline constexpr double kDensityFloor = 1e-300;

/// D(p_tilde || p) = integral p_tilde log(p_tilde / p) by the trapezoid rule on the
/// shared grid; p is floored at 1e-300 where p_tilde is positive.
inline KlResult kl_divergence(const DensityEstimate& p_tilde, const DensityEstimate& p) {
  if (p_tilde.grid.size() != p.grid.size()) throw InvalidArgument("kl_divergence: grids differ in length");
  for (std::size_t i = 0; i < p.grid.size(); ++i)
    if (std::abs(p_tilde.grid[i] - p.grid[i]) > 1e-12 * std::max(1.0, std::abs(p.grid[i])))
      throw InvalidArgument("kl_divergence: grids differ at point " + std::to_string(i));
  KlResult r;
  std::vector<double> f(p.grid.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = p_tilde.pdf[i];
    if (a <= 0.0) continue;
    double b = p.pdf[i];
    if (b < kDensityFloor) {
      b = kDensityFloor;
      r.floored = true;
    }
    f[i] = a * std::log(a / b);
  }
  r.value = std::max(trapezoid(p.grid, f), -1e-9);
  return r;
}

inline CsvTable density_to_csv(const DensityEstimate& d) {
  CsvTable t;
  t.header = {"grid", "pdf"};
  for (std::size_t i = 0; i < d.grid.size(); ++i) t.add({format_double(d.grid[i]), format_double(d.pdf[i])});
  return t;
}

}  // namespace bayesid::mcmc
