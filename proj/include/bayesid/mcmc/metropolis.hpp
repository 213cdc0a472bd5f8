#pragma once

#include "bayesid/common.hpp"
#include "bayesid/csv.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace bayesid::mcmc {

inline constexpr double kDefaultStepSd = 0.1;
inline constexpr double kDefaultBurnInFraction = 0.2;

/// Chain over bins 0..X-1 of a quantized parameter.
struct DiscreteChain {
  std::vector<int> states;  // state after each step
  std::vector<char> accepted;
  std::size_t acceptance_count = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  int bins = 0;

  double acceptance_rate() const {
    return states.empty() ? 0.0 : static_cast<double>(acceptance_count) / static_cast<double>(states.size());
  }

  /// Fraction of post-burn-in steps spent in each bin.
  Vector occupancy() const {
    Vector occ = Vector::Zero(bins);
    for (std::size_t k = burn_in; k < states.size(); ++k) occ[states[k]] += 1.0;
    return occ / static_cast<double>(states.size() - burn_in);
  }
};

/// Metropolis chain on X bins with target weights rho (unnormalized). Each step
/// proposes one of the X-1 other bins uniformly and accepts with min(1, rho_new / rho_old).
inline DiscreteChain metropolis_discrete(const Vector& rho, std::size_t steps, std::uint64_t seed,
                                         double burn_in_fraction = kDefaultBurnInFraction) {
  const auto x = static_cast<int>(rho.size());
  require(x >= 2, "discrete Metropolis needs at least two bins");
  require(steps >= 1, "chain needs at least one step");
  require((rho.array() >= 0.0).all() && rho.allFinite(), "bin weights must be finite and non-negative");
  require(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0, "burn-in fraction must lie in [0, 1)");
  int current = -1;
  for (int i = 0; i < x && current < 0; ++i)
    if (rho[i] > 0.0) current = i;
  if (current < 0) throw InvalidArgument("all bin weights are zero");

  DiscreteChain c;
  c.seed = seed;
  c.bins = x;
  c.burn_in = static_cast<std::size_t>(burn_in_fraction * static_cast<double>(steps));
  c.states.reserve(steps);
  c.accepted.reserve(steps);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, x - 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t k = 0; k < steps; ++k) {
    int proposal = pick(rng);
    if (proposal >= current) ++proposal;
    const double u = unif(rng);
    const bool accept = u * rho[current] <= rho[proposal];
    if (accept) {
      current = proposal;
      ++c.acceptance_count;
    }
    c.states.push_back(current);
    c.accepted.push_back(accept ? 1 : 0);
  }
  return c;
}

/// Row-stochastic transition matrix of metropolis_discrete.
inline Matrix discrete_transition_matrix(const Vector& rho) {
  const auto x = rho.size();
  require(x >= 2, "discrete Metropolis needs at least two bins");
  Matrix p = Matrix::Zero(x, x);
  for (Eigen::Index i = 0; i < x; ++i) {
    if (rho[i] == 0.0) {
      // unreachable from positive states; move on uniformly
      for (Eigen::Index j = 0; j < x; ++j)
        if (j != i) p(i, j) = 1.0 / static_cast<double>(x - 1);
      continue;
    }
    double stay = 1.0;
    for (Eigen::Index j = 0; j < x; ++j) {
      if (j == i) continue;
      p(i, j) = std::min(1.0, rho[j] / rho[i]) / static_cast<double>(x - 1);
      stay -= p(i, j);
    }
    p(i, i) = stay;
  }
  return p;
}

/// Stationary distribution pi = pi P from the left eigenvector of eigenvalue 1.
inline Vector stationary_distribution(const Matrix& p) {
  Eigen::EigenSolver<Matrix> eig(p.transpose());
  if (eig.info() != Eigen::Success) throw NumericalError("transition matrix eigensolve failed");
  Eigen::Index best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double d = std::abs(eig.eigenvalues()[i] - std::complex<double>(1.0, 0.0));
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  Vector v = eig.eigenvectors().col(best).real();
  return v / v.sum();
}

/// Random-walk chain over a continuous parameter vector.
struct Chain {
  Matrix states;  // dim x steps, state after each step
  std::vector<char> accepted;
  std::size_t acceptance_count = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  double step_sd = kDefaultStepSd;

  Eigen::Index dim() const { return states.rows(); }
  std::size_t steps() const { return static_cast<std::size_t>(states.cols()); }

  double acceptance_rate() const {
    return steps() == 0 ? 0.0 : static_cast<double>(acceptance_count) / static_cast<double>(steps());
  }

  Matrix kept() const {
    return states.rightCols(static_cast<Eigen::Index>(steps() - burn_in));
  }

  Vector mean() const { return kept().rowwise().mean(); }

  Vector variance() const {
    const Matrix k = kept();
    const Matrix c = k.colwise() - k.rowwise().mean();
    return c.rowwise().squaredNorm() / static_cast<double>(std::max<Eigen::Index>(k.cols() - 1, 1));
  }

  std::vector<double> component(Eigen::Index i) const {
    const Vector row = kept().row(i).transpose();
    return {row.data(), row.data() + row.size()};
  }
};

using LogTarget = std::function<double(std::span<const double>)>;

/// Gaussian random-walk Metropolis: propose x + step_sd * N(0, I), accept with
/// min(1, exp(log_target(new) - log_target(old))). Non-finite proposals are rejected.
inline Chain metropolis_rw(const LogTarget& log_target, double step_sd, std::size_t steps, const Vector& init,
                           std::uint64_t seed, double burn_in_fraction = kDefaultBurnInFraction) {
  require(step_sd > 0.0, "random-walk step sd must be positive");
  require(steps >= 1, "chain needs at least one step");
  require(init.size() >= 1, "chain needs a non-empty initial state");
  require(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0, "burn-in fraction must lie in [0, 1)");
  const auto dim = init.size();
  Vector cur = init;
  double lt_cur = log_target(std::span<const double>(cur.data(), static_cast<std::size_t>(dim)));
  if (!std::isfinite(lt_cur)) throw InvalidArgument("log target is not finite at the initial state");

  Chain c;
  c.seed = seed;
  c.step_sd = step_sd;
  c.burn_in = static_cast<std::size_t>(burn_in_fraction * static_cast<double>(steps));
  c.states.resize(dim, static_cast<Eigen::Index>(steps));
  c.accepted.reserve(steps);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector prop(dim);
  for (std::size_t k = 0; k < steps; ++k) {
    for (Eigen::Index i = 0; i < dim; ++i) prop[i] = cur[i] + step_sd * n01(rng);
    const double u = unif(rng);
    const double lt = log_target(std::span<const double>(prop.data(), static_cast<std::size_t>(dim)));
    const bool accept = std::isfinite(lt) && (lt >= lt_cur || u < std::exp(lt - lt_cur));
    if (accept) {
      cur = prop;
      lt_cur = lt;
      ++c.acceptance_count;
    }
    c.states.col(static_cast<Eigen::Index>(k)) = cur;
    c.accepted.push_back(accept ? 1 : 0);
  }
  return c;
}

/// Batch-means standard error of the mean of a correlated series.
inline double batch_means_se(std::span<const double> x, std::size_t batches = 20) {
  const std::size_t len = x.size() / batches;
  require(len >= 2, "series too short for batch means");
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < len; ++i) means[b] += x[b * len + i];
    means[b] /= static_cast<double>(len);
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= static_cast<double>(batches);
  double s2 = 0.0;
  for (double v : means) s2 += (v - m) * (v - m);
  s2 /= static_cast<double>(batches - 1);
  return std::sqrt(s2 / static_cast<double>(batches));
}

/// First-half vs second-half post-burn-in means agree within 3 combined batch-means
/// standard errors, for every component.
inline bool stationarity_check(const Chain& c) {
  const Matrix k = c.kept();
  const Eigen::Index half = k.cols() / 2;
  if (half < 40) return false;
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    const Vector row = k.row(i).transpose();
    std::span<const double> a(row.data(), static_cast<std::size_t>(half));
    std::span<const double> b(row.data() + half, static_cast<std::size_t>(half));
    double ma = 0, mb = 0;
    for (double v : a) ma += v;
    for (double v : b) mb += v;
    ma /= static_cast<double>(half);
    mb /= static_cast<double>(half);
    const double se = std::hypot(batch_means_se(a), batch_means_se(b));
    if (std::abs(ma - mb) > 3.0 * se + 1e-300) return false;
  }
  return true;
}

inline CsvTable chain_to_csv(const Chain& c, const std::vector<std::string>& names = {}) {
  CsvTable t;
  t.header.push_back("step");
  for (Eigen::Index i = 0; i < c.dim(); ++i)
    t.header.push_back(static_cast<std::size_t>(i) < names.size() ? names[static_cast<std::size_t>(i)]
                                                                   : "x" + std::to_string(i + 1));
  t.header.push_back("accepted");
  for (std::size_t k = 0; k < c.steps(); ++k) {
    std::vector<std::string> row{std::to_string(k + 1)};
    for (Eigen::Index i = 0; i < c.dim(); ++i) row.push_back(format_double(c.states(i, static_cast<Eigen::Index>(k))));
    row.push_back(c.accepted[k] ? "1" : "0");
    t.add(std::move(row));
  }
  return t;
}

}  // namespace bayesid::mcmc
