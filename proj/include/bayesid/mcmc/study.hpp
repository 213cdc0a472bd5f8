#pragma once

#include "bayesid/mcmc/density.hpp"
#include "bayesid/mcmc/likelihood.hpp"
#include "bayesid/mcmc/metropolis.hpp"
#include "bayesid/parallel.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace bayesid::mcmc {

struct ChainSettings {
  std::size_t steps = 100000;
  double step_sd = kDefaultStepSd;
  double burn_in_fraction = kDefaultBurnInFraction;
  std::uint64_t seed = 0;
  Vector init;  // germ coordinates; zero when empty
};

inline Chain run_chain(const LikelihoodModel& m, int dims, const ChainSettings& s) {
  const Vector init = s.init.size() ? s.init : Vector::Zero(dims);
  return metropolis_rw([&](std::span<const double> xi) { return log_posterior(m, xi); }, s.step_sd, s.steps, init,
                       s.seed, s.burn_in_fraction);
}

/// Inputs of the surrogate convergence study. `forward` maps germ coordinates to the
/// predicted measurement; the reference chain uses it directly and each surrogate
/// chain uses its pseudo-spectral PCE of the given order. All chains share one seed.
struct SurrogateStudyInput {
  int dims = 1;
  std::function<Vector(std::span<const double>)> forward;
  Eigen::Index measurement_dim = 0;
  Vector z;
  Vector noise_sd;
  ChainSettings chain;
  Eigen::Index component = 0;  // germ component whose marginal posteriors are compared
  std::size_t grid_points = 401;
  unsigned threads = 1;
};

struct SurrogateStudyRow {
  int order = 0;
  double kld = 0.0;
  bool floored = false;
  double acceptance_rate = 0.0;
};

struct SurrogateStudyResult {
  std::vector<SurrogateStudyRow> rows;
  Chain reference;
  std::vector<Chain> surrogate_chains;
  DensityEstimate reference_density;
  std::vector<DensityEstimate> surrogate_densities;
};

inline SurrogateStudyResult surrogate_convergence_study(const std::vector<int>& orders, const SurrogateStudyInput& in) {
  require(!orders.empty(), "surrogate study needs at least one order");
  require(in.component >= 0 && in.component < in.dims, "surrogate study: component out of range");
  for (int p : orders) require(p >= 0, "surrogate study: orders must be non-negative");
  SurrogateStudyResult res;
  auto direct = LikelihoodModel::from_map(in.forward, in.z, in.noise_sd);
  res.reference = run_chain(direct, in.dims, in.chain);

  for (int p : orders) {
    auto set = std::make_shared<const pc::MultiIndexSet>(pc::build_total_degree_set(in.dims, p));
    auto y = pc::project_vector_function(in.forward, in.measurement_dim, set, pc::default_rule(*set), in.threads);
    res.surrogate_chains.push_back(run_chain(LikelihoodModel::pce(std::move(y), in.z, in.noise_sd), in.dims, in.chain));
  }

  const auto ref = res.reference.component(in.component);
  double lo = *std::min_element(ref.begin(), ref.end()), hi = *std::max_element(ref.begin(), ref.end());
  double h = silverman_bandwidth(ref);
  for (const auto& c : res.surrogate_chains) {
    const auto s = c.component(in.component);
    lo = std::min(lo, *std::min_element(s.begin(), s.end()));
    hi = std::max(hi, *std::max_element(s.begin(), s.end()));
    h = std::max(h, silverman_bandwidth(s));
  }
  const auto grid = linspace(lo - 5 * h, hi + 5 * h, in.grid_points);
  res.reference_density = kde(ref, grid);
  for (std::size_t k = 0; k < orders.size(); ++k) {
    const auto s = res.surrogate_chains[k].component(in.component);
    res.surrogate_densities.push_back(kde(s, grid));
    const auto kl = kl_divergence(res.surrogate_densities.back(), res.reference_density);
    res.rows.push_back({orders[k], kl.value, kl.floored, res.surrogate_chains[k].acceptance_rate()});
  }
  return res;
}

inline CsvTable kld_to_csv(const std::vector<SurrogateStudyRow>& rows) {
  CsvTable t;
  t.header = {"order", "kld"};
  for (const auto& r : rows) t.add({std::to_string(r.order), format_double(r.kld)});
  return t;
}

}  // namespace bayesid::mcmc
