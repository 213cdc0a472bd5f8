#pragma once

#include "bayesid/csv.hpp"
#include "bayesid/experiment/config.hpp"
#include "bayesid/experiment/problems.hpp"
#include "bayesid/forward.hpp"
#include "bayesid/mcmc.hpp"
#include "bayesid/randfield.hpp"
#include "bayesid/update.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bayesid::experiment {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

/// A numerical failure tagged with the pipeline stage it occurred in.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("numerical failure in stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Fixed CSV layouts, versioned through the manifest. Every table carries the config
/// hash as its last column.
inline const std::map<std::string, std::vector<std::string>>& table_schemas() {
  static const std::map<std::string, std::vector<std::string>> s{
      {"posterior-summary.csv",
       {"quantity", "prior_mean", "prior_sd", "posterior_mean", "posterior_sd", "truth", "config_hash"}},
      {"pdfs.csv", {"quantity", "curve", "x", "density", "config_hash"}},
      {"sequential-errors.csv", {"step", "method", "eps_m", "eps_bar", "var_point", "config_hash"}},
      {"kld-study.csv", {"order", "kld", "config_hash"}},
      {"chain.csv", {"step", "<parameters>", "accepted", "config_hash"}},
  };
  return s;
}

inline void stamp(CsvTable& t, const std::string& hash) {
  t.header.push_back("config_hash");
  for (auto& r : t.rows) r.push_back(hash);
}

/// Everything derived from a config before any identification method runs.
struct Setup {
  std::shared_ptr<const fem::DiffusionProblem> base;
  fwd::ForwardModel model;  // first load case
  fwd::Transform transform = fwd::Transform::identity;
  std::optional<field::KleModel> prior_kle;
  pc::PceTensor prior;  // Gaussian quantity q at order p (linear in the germ)
  fwd::GermMap parameter;
  int dims = 1;
  Vector truth;  // nodal conductivity
  std::optional<Vector> truth_germ;  // truth in prior germ coordinates when meaningful
  std::vector<upd::Experiment> experiments;
  Eigen::Index probe = 0;
};

struct RunResult {
  std::filesystem::path out_dir;
  std::string config_hash;
  std::vector<std::string> files;
  std::vector<std::string> warnings;
  std::map<std::string, double> wall_times;
};

namespace detail {

template <class Fn>
auto stage(const std::string& name, std::map<std::string, double>& times, Fn&& fn) -> decltype(fn()) {
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&] {
    times[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  } catch (const NumericalError& e) {
    throw StageError(name, e.what());
  }
}

inline Eigen::Index nearest_node(const fem::Mesh& m, double x, double y) {
  Eigen::Index best = 0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    const double di = std::hypot(m.nodes[i].x - x, m.nodes[i].y - y);
    if (di < d - 1e-14) {
      d = di;
      best = static_cast<Eigen::Index>(i);
    }
  }
  return best;
}

/// Gaussian parameters (mean, sd) of the quantity q behind a field config.
inline std::pair<double, double> gaussian_moments(const FieldConfig& f) {
  if (f.transform == "lognormal") return field::calibrate_lognormal(f.mean, f.sd);
  return {f.mean, f.sd};
}

inline std::optional<field::KleModel> field_kle(const FieldConfig& f, const fem::Mesh& mesh, int terms) {
  if (!f.kernel) return std::nullopt;
  const auto [mu, sigma] = gaussian_moments(f);
  if (!(sigma > 0.0)) return std::nullopt;
  field::CovarianceKernel k;
  k.kind = field::kernel_kind_from_string(f.kernel->kind);
  k.variance = sigma * sigma;
  k.correlation_length = f.kernel->l_c;
  return field::kle_decompose(k, mesh, terms, Vector::Constant(static_cast<Eigen::Index>(mesh.node_count()), mu));
}

inline std::shared_ptr<const fem::DiffusionProblem> step_problem(const ExperimentConfig& c,
                                                                 const fem::DiffusionProblem& base,
                                                                 const LoadStep& s) {
  const auto load = s.f0 != 0.0 ? fem::LoadDescriptor::sinusoid(s.f0 * s.scale, s.wavelength, s.phase, s.angle)
                                 : fem::LoadDescriptor::none();
  if (c.mesh.kind == "lshape") return lshape_problem(c.mesh.n, load);
  fem::BoundaryConditions bc = base.bc();
  for (auto& [tag, v] : bc.neumann) v *= s.scale;
  return std::make_shared<const fem::DiffusionProblem>(base.mesh(), bc, load);
}

}  // namespace detail

inline Setup build_setup(const ExperimentConfig& c, std::map<std::string, double>& times) {
  Setup s;
  detail::stage("problem setup", times, [&] {
    if (c.mesh.kind == "lshape") {
      s.base = lshape_problem(c.mesh.n, fem::LoadDescriptor::none());
    } else {
      RectangleSetup r{c.mesh.nx, c.mesh.ny, c.mesh.width, c.mesh.height, c.mesh.flux, c.mesh.temperature};
      s.base = rectangle_problem(r);
    }
    const auto& mesh = s.base->mesh();
    const auto nodes = fem::spread_nodes(mesh, c.measurement.fraction);
    s.model.measurement = c.measurement.kind == "patch" ? fem::MeasurementOperator::patches(mesh, nodes)
                                                        : fem::MeasurementOperator::nodal(mesh, nodes);
    s.transform = fwd::transform_from_string(c.prior.transform);
    s.model.transform = s.transform;
    s.model.kappa1 = c.kappa1;
    s.model.problem = detail::step_problem(c, *s.base, c.sequential.schedule.front());
    if (c.sequential.probe) {
      s.probe = detail::nearest_node(mesh, c.sequential.probe->first, c.sequential.probe->second);
    } else {
      s.probe = c.mesh.kind == "lshape" ? detail::nearest_node(mesh, 0.25, 0.75)
                                        : detail::nearest_node(mesh, 0.5 * c.mesh.width, 0.5 * c.mesh.height);
    }
  });

  detail::stage("prior construction", times, [&] {
    const auto& mesh = s.base->mesh();
    const auto n = static_cast<Eigen::Index>(mesh.node_count());
    s.dims = c.prior.m_kle;
    auto set = std::make_shared<const pc::MultiIndexSet>(pc::build_total_degree_set(s.dims, c.p));
    s.prior = pc::PceTensor::zeros(set, n);
    const auto [mu, sigma] = detail::gaussian_moments(c.prior);
    s.prior_kle = detail::field_kle(c.prior, mesh, s.dims);
    if (s.prior_kle) {
      s.prior = field::field_pce(*s.prior_kle, set);
    } else {
      s.prior.coeffs().col(0).setConstant(mu);
      if (c.p >= 1 && !c.prior.kernel) s.prior.coeffs().col(1).setConstant(sigma);
    }
    s.parameter = fwd::germ_map(s.prior);
  });

  detail::stage("truth simulation", times, [&] {
    const auto& mesh = s.base->mesh();
    const auto n = static_cast<Eigen::Index>(mesh.node_count());
    if (c.truth.value) {
      s.truth = Vector::Constant(n, *c.truth.value);
    } else {
      const auto& f = c.truth.field;
      const Matrix germ = fwd::draw_germs(f.m_kle, 1, c.seeds.truth);
      Vector q;
      if (!f.kernel) {
        const auto [mu, sigma] = detail::gaussian_moments(f);
        q = Vector::Constant(n, mu + sigma * germ(0, 0));
      } else if (auto kle = detail::field_kle(f, mesh, f.m_kle)) {
        const Vector g = germ.col(0);
        q = field::kle_synthesize(*kle, std::span<const double>(g.data(), static_cast<std::size_t>(g.size())));
      } else {
        q = Vector::Constant(n, detail::gaussian_moments(f).first);
      }
      s.truth = fwd::apply_transform(fwd::transform_from_string(f.transform), q).array() + f.offset;
    }
    if (s.prior_kle) {
      const bool positive = (s.truth.array() > 0.0).all();
      if (s.transform == fwd::Transform::identity || positive) {
        const Vector q = s.transform == fwd::Transform::exp ? Vector(s.truth.array().log()) : s.truth;
        s.truth_germ = field::kle_project(*s.prior_kle, q);
      }
    } else if (!c.prior.kernel) {
      const auto [mu, sigma] = detail::gaussian_moments(c.prior);
      const double k = s.truth[s.probe];
      if (sigma > 0.0 && (s.transform == fwd::Transform::identity || k > 0.0))
        s.truth_germ = Vector::Constant(1, ((s.transform == fwd::Transform::exp ? std::log(k) : k) - mu) / sigma);
    }

    fwd::ForwardModel direct = s.model;
    direct.transform = fwd::Transform::identity;
    for (std::size_t k = 0; k < c.sequential.schedule.size(); ++k) {
      upd::Experiment e;
      e.problem = detail::step_problem(c, *s.base, c.sequential.schedule[k]);
      e.load = e.problem->load();
      const Vector y = direct.with_problem(e.problem).observe(s.truth);
      e.noise_sd = c.measurement.noise_sd ? Vector(Vector::Constant(y.size(), *c.measurement.noise_sd))
                                          : fem::relative_noise_sd(y, *c.measurement.noise_fraction);
      e.z = fem::add_noise(y, e.noise_sd, c.seeds.noise + k);
      s.experiments.push_back(std::move(e));
    }
  });
  return s;
}

namespace detail {

struct Curve {
  std::string quantity;
  std::string name;
  std::vector<double> x;
  std::vector<double> density;
};

inline void add_curve(CsvTable& t, const Curve& c) {
  for (std::size_t i = 0; i < c.x.size(); ++i)
    t.add({c.quantity, c.name, format_double(c.x[i]), format_double(c.density[i])});
}

inline double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(std::max<std::size_t>(v.size() - 1, 1)));
}

/// KDE on a grid spanning the samples plus five bandwidths either side.
inline std::optional<mcmc::DensityEstimate> sample_density(const std::vector<double>& v, std::size_t points,
                                                           std::vector<std::string>& warnings,
                                                           const std::string& what) {
  if (v.size() < 100) {
    warnings.push_back(what + ": fewer than 100 samples, no density written");
    return std::nullopt;
  }
  const double h = mcmc::silverman_bandwidth(v);
  if (!(h > 0.0)) {
    warnings.push_back(what + ": samples have zero spread, no density written");
    return std::nullopt;
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return mcmc::kde(v, mcmc::linspace(*lo - 5 * h, *hi + 5 * h, points));
}

inline std::vector<double> gaussian_pdf(const std::vector<double>& x, double m, double s) {
  std::vector<double> out;
  for (double v : x) out.push_back(std::exp(-0.5 * std::pow((v - m) / s, 2)) / (s * std::sqrt(2 * std::numbers::pi)));
  return out;
}

inline std::vector<double> lognormal_pdf(const std::vector<double>& x, double mu, double s) {
  std::vector<double> out;
  for (double v : x)
    out.push_back(v > 0.0 ? std::exp(-0.5 * std::pow((std::log(v) - mu) / s, 2)) / (v * s * std::sqrt(2 * std::numbers::pi))
                          : 0.0);
  return out;
}

inline std::vector<double> probe_samples(const pc::PceTensor& q, Eigen::Index probe, fwd::Transform t,
                                         const Matrix& thetas) {
  const auto& set = q.index_set();
  const Vector row = q.coeffs().row(probe).transpose();
  std::vector<double> out(static_cast<std::size_t>(thetas.cols()));
  for (Eigen::Index z = 0; z < thetas.cols(); ++z) {
    const Vector th = thetas.col(z);
    const double v = row.dot(pc::basis_eval_all(set, std::span<const double>(th.data(), static_cast<std::size_t>(th.size()))));
    out[static_cast<std::size_t>(z)] = t == fwd::Transform::exp ? std::exp(v) : v;
  }
  return out;
}

inline std::vector<double> probe_samples(const fwd::Ensemble& e, Eigen::Index probe, fwd::Transform t) {
  std::vector<double> out(static_cast<std::size_t>(e.size()));
  for (Eigen::Index z = 0; z < e.size(); ++z) {
    const double v = e.samples(probe, z);
    out[static_cast<std::size_t>(z)] = t == fwd::Transform::exp ? std::exp(v) : v;
  }
  return out;
}

inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed + 0x9E3779B97F4A7C15ULL * stream;
}

}  // namespace detail

/// Tables produced by one run, keyed by file name.
struct RunTables {
  std::map<std::string, CsvTable> csv;
  std::map<std::string, json> json_files;
};

inline RunTables run_sampling_method(const ExperimentConfig& c, const Setup& s, RunResult& rr) {
  RunTables out;
  auto& times = rr.wall_times;
  const auto& e = s.experiments.front();
  const fwd::ForwardModel model = upd::detail::model_for(s.model, e);
  const std::vector<int> orders = c.mcmc.kld_orders;
  const mcmc::ChainSettings cs{c.mcmc.steps, c.mcmc.step_sd, c.mcmc.burn_in, c.seeds.chain, {}};
  const std::size_t points = c.mcmc.grid_points;
  const bool scalar = !c.prior.kernel;
  const std::string theta_name = scalar ? "theta" : "xi" + std::to_string(c.mcmc.component);
  const Eigen::Index comp = c.mcmc.component - 1;

  std::optional<mcmc::SurrogateStudyResult> study;
  if (!orders.empty()) {
    study = detail::stage("surrogate study", times, [&] {
      mcmc::SurrogateStudyInput in;
      in.dims = s.dims;
      in.forward = [&](std::span<const double> t) { return model.observe(s.parameter.eval(t)); };
      in.measurement_dim = model.measurement_dim();
      in.z = e.z;
      in.noise_sd = e.noise_sd;
      in.chain = cs;
      in.component = comp;
      in.grid_points = points;
      in.threads = c.threads;
      return mcmc::surrogate_convergence_study(orders, in);
    });
    CsvTable k = mcmc::kld_to_csv(study->rows);
    stamp(k, rr.config_hash);
    out.csv["kld-study.csv"] = std::move(k);
  }

  std::optional<mcmc::LikelihoodModel> lik;
  mcmc::Chain chain;
  if (c.method == MethodKind::mcmc) {
    lik = mcmc::LikelihoodModel::direct(s.parameter, model, e.z, e.noise_sd);
    chain = detail::stage("mcmc chain", times, [&] { return mcmc::run_chain(*lik, s.dims, cs); });
  } else {
    auto set = s.prior.index_set_ptr();
    const auto rule = c.quadrature_order ? pc::GaussHermiteRule(*c.quadrature_order, s.dims) : pc::default_rule(*set);
    auto forecast = detail::stage("surrogate construction", times,
                                  [&] { return fwd::propagate_pspp(s.prior, model, rule, c.threads); });
    lik = mcmc::LikelihoodModel::pce(forecast.y, e.z, e.noise_sd);
    fwd::ForecastBundle b{rr.config_hash,
                          {{"truth", c.seeds.truth}, {"noise", c.seeds.noise}, {"chain", c.seeds.chain}},
                          forecast,
                          std::nullopt};
    out.json_files["forecast.json"] = fwd::to_json(b);
    const auto it = std::find(orders.begin(), orders.end(), c.p);
    if (study && it != orders.end()) {
      chain = study->surrogate_chains[static_cast<std::size_t>(it - orders.begin())];
    } else {
      chain = detail::stage("mcmc chain", times, [&] { return mcmc::run_chain(*lik, s.dims, cs); });
    }
  }
  rr.wall_times["acceptance_rate"] = chain.acceptance_rate();
  if (!mcmc::stationarity_check(chain))
    rr.warnings.push_back("chain halves differ by more than 3 batch-means standard errors; consider more steps");

  std::vector<std::string> names;
  for (int i = 0; i < s.dims; ++i) names.push_back(scalar ? "theta" : "xi" + std::to_string(i + 1));
  CsvTable ct = mcmc::chain_to_csv(chain, names);
  stamp(ct, rr.config_hash);
  out.csv["chain.csv"] = std::move(ct);

  return detail::stage("summaries", times, [&] {
    const Matrix kept = chain.kept();
    std::vector<double> kappa(static_cast<std::size_t>(kept.cols()));
    for (Eigen::Index z = 0; z < kept.cols(); ++z) {
      const Vector th = kept.col(z);
      const Vector q = s.parameter.eval(std::span<const double>(th.data(), static_cast<std::size_t>(th.size())));
      kappa[static_cast<std::size_t>(z)] = fwd::apply_transform(s.transform, q.segment(s.probe, 1))[0];
    }

    CsvTable sum;
    sum.header = {"quantity", "prior_mean", "prior_sd", "posterior_mean", "posterior_sd", "truth"};
    const auto prior_m = upd::pce_moments(s.prior, s.transform, upd::SequentialConfig{});
    const std::string kname = scalar ? "kappa" : "kappa@probe";
    sum.add({kname, format_double(prior_m.kappa_mean[s.probe]), format_double(std::sqrt(prior_m.kappa_var[s.probe])),
             format_double(detail::mean_of(kappa)), format_double(detail::sd_of(kappa)),
             format_double(s.truth[s.probe])});
    const Vector pm = chain.mean(), pv = chain.variance();
    for (int i = 0; i < s.dims; ++i)
      sum.add({names[static_cast<std::size_t>(i)], "0", "1", format_double(pm[i]), format_double(std::sqrt(pv[i])),
               s.truth_germ ? format_double((*s.truth_germ)[i]) : "nan"});
    stamp(sum, rr.config_hash);
    out.csv["posterior-summary.csv"] = std::move(sum);

    CsvTable pdf;
    pdf.header = {"quantity", "curve", "x", "density"};
    const auto post = detail::sample_density(kappa, points, rr.warnings, "posterior of " + kname);
    if (scalar) {
      const auto [mu, sigma] = detail::gaussian_moments(c.prior);
      double lo = c.prior.transform == "lognormal" ? std::exp(mu - 4 * sigma) : mu - 4 * sigma;
      double hi = c.prior.transform == "lognormal" ? std::exp(mu + 4 * sigma) : mu + 4 * sigma;
      if (post) {
        lo = std::min(lo, post->grid.front());
        hi = std::max(hi, post->grid.back());
      }
      if (c.prior.transform == "lognormal") lo = std::max(lo, 1e-9);
      const auto grid = mcmc::linspace(lo, hi, points);
      std::vector<double> prior_pdf = c.prior.transform == "lognormal" ? detail::lognormal_pdf(grid, mu, sigma)
                                                                        : detail::gaussian_pdf(grid, mu, sigma);
      std::vector<double> ll(grid.size());
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double q = c.prior.transform == "lognormal" ? std::log(grid[i]) : grid[i];
        const double th = (q - mu) / sigma;
        try {
          ll[i] = mcmc::log_likelihood(*lik, std::span<const double>(&th, 1));
        } catch (const NumericalError&) {
          ll[i] = -std::numeric_limits<double>::infinity();
        }
        top = std::max(top, ll[i]);
      }
      std::vector<double> lv(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) lv[i] = std::exp(ll[i] - top);
      detail::add_curve(pdf, {kname, "prior", grid, mcmc::density_from_values(grid, prior_pdf).pdf});
      detail::add_curve(pdf, {kname, "likelihood", grid, mcmc::density_from_values(grid, lv).pdf});
      if (post) detail::add_curve(pdf, {kname, "posterior", post->grid, post->pdf});
    } else {
      const auto xi = chain.component(comp);
      const auto pxi = detail::sample_density(xi, points, rr.warnings, "posterior of " + theta_name);
      if (pxi) {
        const auto grid = mcmc::linspace(std::min(-4.5, pxi->grid.front()), std::max(4.5, pxi->grid.back()), points);
        detail::add_curve(pdf, {theta_name, "prior", grid, detail::gaussian_pdf(grid, 0.0, 1.0)});
        detail::add_curve(pdf, {theta_name, "posterior", pxi->grid, pxi->pdf});
      }
      if (post) detail::add_curve(pdf, {kname, "posterior", post->grid, post->pdf});
    }
    if (study) {
      detail::add_curve(pdf, {theta_name, "direct", study->reference_density.grid, study->reference_density.pdf});
      for (std::size_t k = 0; k < orders.size(); ++k)
        detail::add_curve(pdf, {theta_name, "order_" + std::to_string(orders[k]), study->surrogate_densities[k].grid,
                                study->surrogate_densities[k].pdf});
    }
    stamp(pdf, rr.config_hash);
    out.csv["pdfs.csv"] = std::move(pdf);
    return out;
  });
}

inline RunTables run_update_method(const ExperimentConfig& c, const Setup& s, RunResult& rr) {
  RunTables out;
  auto& times = rr.wall_times;
  upd::SequentialConfig sc;
  sc.method = c.method == MethodKind::enkf ? upd::Method::enkf : upd::Method::pce;
  sc.threads = c.threads;
  if (c.quadrature_order) sc.rule = pc::GaussHermiteRule(*c.quadrature_order, s.dims);
  sc.ensemble_size = c.ensemble_size;
  sc.ensemble_seed = c.seeds.ensemble;
  sc.perturb_obs = c.perturb_obs;
  sc.observation_seed = detail::derived_seed(c.seeds.ensemble, 1);
  sc.moment_seed = detail::derived_seed(c.seeds.ensemble, 2);
  sc.log_space = c.sequential.log_space;
  sc.square_root = c.sequential.square_root;
  sc.probe = s.probe;

  if (c.method == MethodKind::pce_update && pc::pce_variance(s.prior).maxCoeff() == 0.0)
    rr.warnings.push_back("prior has zero variance: the update cannot move it and the posterior equals the prior");

  const auto res = detail::stage("sequential update", times,
                                 [&] { return upd::sequential_update(s.prior, s.model, s.experiments, s.truth, sc); });

  return detail::stage("summaries", times, [&] {
    CsvTable err = upd::reports_to_csv(res.reports);
    stamp(err, rr.config_hash);
    out.csv["sequential-errors.csv"] = std::move(err);

    const auto& m0 = res.moments.front();
    const auto& mk = res.moments.back();
    const std::string kname = c.prior.kernel ? "kappa@probe" : "kappa";
    CsvTable sum;
    sum.header = {"quantity", "prior_mean", "prior_sd", "posterior_mean", "posterior_sd", "truth"};
    sum.add({kname, format_double(m0.kappa_mean[s.probe]), format_double(std::sqrt(m0.kappa_var[s.probe])),
             format_double(mk.kappa_mean[s.probe]), format_double(std::sqrt(mk.kappa_var[s.probe])),
             format_double(s.truth[s.probe])});
    stamp(sum, rr.config_hash);
    out.csv["posterior-summary.csv"] = std::move(sum);

    CsvTable pdf;
    pdf.header = {"quantity", "curve", "x", "density"};
    const Matrix thetas = fwd::draw_germs(s.dims, 20000, detail::derived_seed(c.seeds.ensemble, 3));
    const std::size_t steps = res.pce_steps.empty() ? res.ensemble_steps.size() : res.pce_steps.size();
    for (std::size_t k = 0; k < steps; ++k) {
      const auto v = res.pce_steps.empty() ? detail::probe_samples(res.ensemble_steps[k], s.probe, res.transform)
                                           : detail::probe_samples(res.pce_steps[k], s.probe, res.transform, thetas);
      const std::string name = k == 0 ? "prior" : "update_" + std::to_string(k);
      if (auto d = detail::sample_density(v, c.mcmc.grid_points, rr.warnings, name + " of " + kname))
        detail::add_curve(pdf, {kname, name, d->grid, d->pdf});
    }
    stamp(pdf, rr.config_hash);
    out.csv["pdfs.csv"] = std::move(pdf);

    json post{{"config_hash", rr.config_hash},
              {"seeds", {{"truth", c.seeds.truth}, {"noise", c.seeds.noise}, {"ensemble", c.seeds.ensemble}}},
              {"transform", fwd::to_string(res.transform)}};
    if (res.pce) {
      post["representation"] = "pce";
      post["q"] = pc::to_json(*res.pce);
    } else {
      post["representation"] = "ensemble";
      post["q"] = fwd::to_json(*res.ensemble);
    }
    out.json_files["posterior.json"] = std::move(post);
    return out;
  });
}

/// Output directory: explicit override, else the config's `output` (absolute, or
/// relative to the output root), else <root>/<config stem>. The root comes from
/// BAYESID_OUTPUT_ROOT and defaults to "results".
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& c, const std::string& config_path,
                                                const std::optional<std::string>& override_dir) {
  if (override_dir) return *override_dir;
  const char* env = std::getenv("BAYESID_OUTPUT_ROOT");
  const std::filesystem::path root = env && *env ? env : "results";
  if (c.output) {
    const std::filesystem::path o = *c.output;
    return o.is_absolute() ? o : root / o;
  }
  return root / std::filesystem::path(config_path).stem();
}

/// Runs a validated experiment and writes its tables, manifest and metadata to `dir`.
inline RunResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& dir) {
  RunResult rr;
  rr.out_dir = dir;
  rr.config_hash = config_hash(c.source);
  const auto t0 = std::chrono::steady_clock::now();
  const Setup s = build_setup(c, rr.wall_times);
  const bool sampling = c.method == MethodKind::mcmc || c.method == MethodKind::mcmc_pce;
  RunTables t = sampling ? run_sampling_method(c, s, rr) : run_update_method(c, s, rr);
  const double acceptance = rr.wall_times.count("acceptance_rate") ? rr.wall_times["acceptance_rate"] : -1.0;
  rr.wall_times.erase("acceptance_rate");

  std::filesystem::create_directories(dir);
  json tables = json::object();
  for (const auto& [name, table] : t.csv) {
    write_text((dir / name).string(), table.str());
    rr.files.push_back(name);
    tables[name] = {{"version", kSchemaVersion}, {"columns", table.header}, {"rows", table.rows.size()}};
  }
  for (const auto& [name, doc] : t.json_files) {
    write_text((dir / name).string(), doc.dump(1) + "\n");
    rr.files.push_back(name);
  }
  write_text((dir / "config.json").string(), c.source.dump(2) + "\n");
  json manifest{{"schema_version", kSchemaVersion},
                {"experiment", to_string(c.family)},
                {"method", to_string(c.method)},
                {"config_hash", rr.config_hash},
                {"tables", tables},
                {"files", rr.files}};
  write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");

  rr.wall_times["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json meta{{"config_hash", rr.config_hash},
            {"tool_version", kToolVersion},
            {"schema_version", kSchemaVersion},
            {"threads", c.threads},
            {"wall_times_s", rr.wall_times},
            {"warnings", rr.warnings}};
  if (acceptance >= 0.0) meta["acceptance_rate"] = acceptance;
  write_text((dir / "metadata.json").string(), meta.dump(2) + "\n");
  return rr;
}

}  // namespace bayesid::experiment
