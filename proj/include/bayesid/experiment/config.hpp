#pragma once

#include "bayesid/common.hpp"
#include "bayesid/polychaos/multi_index.hpp"
#include "bayesid/polychaos/quadrature.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bayesid::experiment {

using nlohmann::json;

enum class Family { scalar_conductivity, field_conductivity, nonlinear_diffusion, lshape_sequential };
enum class MethodKind { mcmc, mcmc_pce, enkf, pce_update };

inline const std::map<std::string, Family>& family_names() {
  static const std::map<std::string, Family> m{{"scalar_conductivity", Family::scalar_conductivity},
                                               {"field_conductivity", Family::field_conductivity},
                                               {"nonlinear_diffusion", Family::nonlinear_diffusion},
                                               {"lshape_sequential", Family::lshape_sequential}};
  return m;
}

inline const std::map<std::string, MethodKind>& method_names() {
  static const std::map<std::string, MethodKind> m{{"mcmc", MethodKind::mcmc},
                                                   {"mcmc_pce", MethodKind::mcmc_pce},
                                                   {"enkf", MethodKind::enkf},
                                                   {"pce_update", MethodKind::pce_update}};
  return m;
}

template <class E>
std::string name_of(const std::map<std::string, E>& m, E v) {
  for (const auto& [k, e] : m)
    if (e == v) return k;
  return "?";
}

inline std::string to_string(Family f) { return name_of(family_names(), f); }
inline std::string to_string(MethodKind m) { return name_of(method_names(), m); }

struct MeshConfig {
  std::string kind = "rectangle";
  int nx = 6, ny = 5;
  double width = 1.0, height = 0.5;
  double flux = 100.0, temperature = 20.0;
  int n = 8;

  std::size_t node_count() const {
    if (kind == "rectangle")
      return static_cast<std::size_t>((nx + 1) * (ny + 1) + nx * ny);
    return static_cast<std::size_t>((2 * n + 1) * (2 * n + 1) - n * n + 3 * n * n);
  }
};

struct KernelConfig {
  std::string kind = "exponential";
  double l_c = 1.0;
};

/// Random field (or spatially constant variable when `kernel` is absent). `mean` and
/// `sd` describe the field itself; for the lognormal transform they are the moments
/// of exp(q) and the underlying Gaussian is calibrated from them.
struct FieldConfig {
  double mean = 0.0;
  double sd = 0.0;
  std::string transform = "none";
  std::optional<KernelConfig> kernel;
  int m_kle = 1;
  double offset = 0.0;
};

struct TruthConfig {
  std::optional<double> value;
  bool from_prior = false;
  FieldConfig field;
};

struct MeasurementConfig {
  std::string kind = "nodal";
  double fraction = 1.0;
  std::optional<double> noise_sd;
  std::optional<double> noise_fraction;
};

struct LoadStep {
  double f0 = 0.0;
  double wavelength = 1.0;
  double phase = 0.0;
  double angle = 0.0;
  double scale = 1.0;
};

struct SequentialSettings {
  std::vector<LoadStep> schedule;
  std::optional<std::pair<double, double>> probe;
  bool log_space = true;
  bool square_root = true;
};

struct McmcConfig {
  std::size_t steps = 100000;
  double step_sd = 0.1;
  double burn_in = 0.2;
  int component = 1;
  std::vector<int> kld_orders;
  std::size_t grid_points = 401;
};

struct Seeds {
  std::uint64_t truth = 1, noise = 2, chain = 3, ensemble = 4;
};

struct ExperimentConfig {
  Family family = Family::scalar_conductivity;
  MethodKind method = MethodKind::mcmc;
  MeshConfig mesh;
  FieldConfig prior;
  TruthConfig truth;
  MeasurementConfig measurement;
  int p = 2;
  std::optional<int> quadrature_order;
  McmcConfig mcmc;
  Eigen::Index ensemble_size = 100;
  bool perturb_obs = true;
  double kappa1 = 0.0;
  SequentialSettings sequential;
  Seeds seeds;
  std::optional<std::string> output;
  unsigned threads = 1;
  json source;  // effective document after overrides
};

/// Default excitation schedule for the L-shape: the wave cycles through direction,
/// phase and wavelength so that successive loads stimulate different regions.
inline std::vector<LoadStep> default_lshape_schedule() {
  const double pi = std::numbers::pi;
  return {{100.0, 1.0, 0.0, 0.0, 1.0},
          {100.0, 1.0, 0.5 * pi, 0.5 * pi, 1.0},
          {100.0, 0.5, pi, 0.25 * pi, 1.0},
          {100.0, 0.5, 1.5 * pi, -0.25 * pi, 1.0}};
}

/// Multipliers of the "scaling" schedule: the first load is the base, then the load
/// alternately decreases and increases by `factor` from one update to the next.
inline std::vector<double> alternating_scales(double factor, int updates) {
  std::vector<double> s;
  double m = 1.0;
  for (int k = 1; k <= updates; ++k) {
    if (k > 1) m *= (k % 2 == 0) ? (1.0 - factor) : (1.0 + factor);
    s.push_back(m);
  }
  return s;
}

namespace detail {

/// Typed access to one JSON object with path-qualified diagnostics. Unknown keys are
/// reported once the object has been read.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<std::string>& diag)
      : j_(j), path_(std::move(path)), diag_(diag) {
    if (!j_.is_object()) error("", "must be an object");
  }

  ~ObjectReader() {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) error(k, "unknown key");
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.is_object() && j_.contains(k);
  }

  const json& raw(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }

  std::string path(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  void error(const std::string& k, const std::string& msg) { diag_.push_back(path(k) + ": " + msg); }

  double number(const std::string& k, double def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number()) {
      error(k, "must be a number");
      return def;
    }
    return v.get<double>();
  }

  std::optional<double> opt_number(const std::string& k) {
    if (!has(k)) return std::nullopt;
    const auto& v = j_.at(k);
    if (!v.is_number()) {
      error(k, "must be a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  long long integer(const std::string& k, long long def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) {
      error(k, "must be an integer");
      return def;
    }
    return v.get<long long>();
  }

  bool boolean(const std::string& k, bool def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_boolean()) {
      error(k, "must be true or false");
      return def;
    }
    return v.get<bool>();
  }

  std::string string(const std::string& k, const std::string& def, const std::set<std::string>& allowed = {}) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_string()) {
      error(k, "must be a string");
      return def;
    }
    auto s = v.get<std::string>();
    if (!allowed.empty() && !allowed.count(s)) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
      error(k, "'" + s + "' is not one of {" + opts + "}");
      return def;
    }
    return s;
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& diag_;
  std::set<std::string> seen_;
};

inline FieldConfig read_field(ObjectReader& r, std::vector<std::string>& diag, bool require_moments) {
  FieldConfig f;
  if (require_moments && !r.has("mean")) r.error("mean", "is required");
  if (require_moments && !r.has("sd")) r.error("sd", "is required");
  f.mean = r.number("mean", 0.0);
  f.sd = r.number("sd", 0.0);
  if (f.sd < 0.0) r.error("sd", "must be non-negative");
  f.transform = r.string("transform", "none", {"none", "lognormal"});
  if (f.transform == "lognormal" && !(f.mean > 0.0)) r.error("mean", "must be positive for a lognormal field");
  f.offset = r.number("offset", 0.0);
  if (r.has("kernel")) {
    ObjectReader k(r.raw("kernel"), r.path("kernel"), diag);
    KernelConfig kc;
    kc.kind = k.string("kind", "exponential", {"exponential", "squared_exponential"});
    kc.l_c = k.number("l_c", 1.0);
    if (!(kc.l_c > 0.0)) k.error("l_c", "must be positive");
    f.kernel = kc;
  }
  const auto m = r.integer("M_kle", 1);
  if (m < 1) r.error("M_kle", "must be at least 1");
  f.m_kle = static_cast<int>(std::max<long long>(m, 1));
  return f;
}

inline std::uint64_t read_seed(ObjectReader& r, const std::string& k, std::uint64_t def) {
  const auto v = r.integer(k, static_cast<long long>(def));
  if (v < 0) r.error(k, "must be non-negative");
  return static_cast<std::uint64_t>(std::max<long long>(v, 0));
}

}  // namespace detail

struct ParseResult {
  ExperimentConfig config;
  std::vector<std::string> diagnostics;
};

/// Reads and checks an experiment document. Never throws on content errors; every
/// problem is returned as a diagnostic "path: message".
inline ParseResult parse_config(const json& doc) {
  ParseResult res;
  auto& d = res.diagnostics;
  auto& c = res.config;
  c.source = doc;
  if (!doc.is_object()) {
    d.push_back("config: top level must be an object");
    return res;
  }
  detail::ObjectReader top(doc, "", d);

  if (!top.has("experiment")) top.error("experiment", "is required");
  if (!top.has("method")) top.error("method", "is required");
  std::set<std::string> fams, meths;
  for (const auto& [k, v] : family_names()) fams.insert(k);
  for (const auto& [k, v] : method_names()) meths.insert(k);
  const auto fam = top.string("experiment", "", fams);
  const auto meth = top.string("method", "", meths);
  if (!fam.empty()) c.family = family_names().at(fam);
  if (!meth.empty()) c.method = method_names().at(meth);
  const bool lshape = c.family == Family::lshape_sequential;

  c.mesh.kind = lshape ? "lshape" : "rectangle";
  if (top.has("mesh")) {
    detail::ObjectReader m(top.raw("mesh"), "mesh", d);
    c.mesh.kind = m.string("kind", c.mesh.kind, {"rectangle", "lshape"});
    c.mesh.nx = static_cast<int>(m.integer("nx", c.mesh.nx));
    c.mesh.ny = static_cast<int>(m.integer("ny", c.mesh.ny));
    c.mesh.width = m.number("width", c.mesh.width);
    c.mesh.height = m.number("height", c.mesh.height);
    c.mesh.flux = m.number("flux", c.mesh.flux);
    c.mesh.temperature = m.number("temperature", c.mesh.temperature);
    c.mesh.n = static_cast<int>(m.integer("n", c.mesh.n));
    if (c.mesh.nx < 1 || c.mesh.ny < 1) m.error("nx", "grid counts must be at least 1");
    if (!(c.mesh.width > 0.0) || !(c.mesh.height > 0.0)) m.error("width", "extents must be positive");
    if (c.mesh.n < 1) m.error("n", "must be at least 1");
  }
  if (lshape && c.mesh.kind != "lshape") d.push_back("mesh.kind: lshape_sequential runs on the lshape mesh");
  if (!lshape && c.mesh.kind != "rectangle") d.push_back("mesh.kind: " + fam + " runs on the rectangle mesh");
  const auto nodes = c.mesh.node_count();

  if (!top.has("prior")) {
    top.error("prior", "is required");
  } else {
    detail::ObjectReader p(top.raw("prior"), "prior", d);
    c.prior = detail::read_field(p, d, true);
    if (c.prior.kernel && c.prior.sd > 0.0 && static_cast<std::size_t>(c.prior.m_kle) > nodes)
      p.error("M_kle", std::to_string(c.prior.m_kle) + " exceeds the " + std::to_string(nodes) + " mesh nodes");
  }
  if (c.family == Family::scalar_conductivity && c.prior.kernel)
    d.push_back("prior.kernel: scalar_conductivity uses a spatially constant prior");
  if (c.family != Family::scalar_conductivity && !c.prior.kernel && c.prior.sd > 0.0)
    d.push_back("prior.kernel: " + fam + " needs a covariance kernel");
  if (!c.prior.kernel) c.prior.m_kle = 1;
  if (c.prior.offset != 0.0) d.push_back("prior.offset: an offset is only supported for the truth field");

  if (!top.has("truth")) {
    top.error("truth", "is required");
  } else {
    detail::ObjectReader t(top.raw("truth"), "truth", d);
    c.truth.value = t.opt_number("value");
    c.truth.from_prior = t.boolean("from_prior", false);
    const bool field_keys = t.has("mean") || t.has("sd") || t.has("kernel");
    if (c.truth.value && (c.truth.from_prior || field_keys))
      t.error("value", "a constant truth excludes from_prior and field keys");
    if (c.truth.from_prior && field_keys) t.error("from_prior", "excludes explicit field keys");
    if (c.truth.from_prior) {
      c.truth.field = c.prior;
      const auto m = t.integer("M_kle", c.prior.m_kle);
      c.truth.field.m_kle = static_cast<int>(std::max<long long>(m, 1));
      c.truth.field.offset = t.number("offset", 0.0);
    } else if (!c.truth.value) {
      c.truth.field = detail::read_field(t, d, true);
      if (!c.truth.field.kernel) t.error("kernel", "a random truth field needs a kernel (or give value)");
    }
    if (c.truth.value && c.prior.transform == "lognormal" && !(*c.truth.value > 0.0))
      t.error("value", "must be positive under a lognormal prior");
    if (!c.truth.value && c.truth.field.kernel && static_cast<std::size_t>(c.truth.field.m_kle) > nodes)
      t.error("M_kle", std::to_string(c.truth.field.m_kle) + " exceeds the " + std::to_string(nodes) + " mesh nodes");
  }

  if (top.has("measurement")) {
    detail::ObjectReader m(top.raw("measurement"), "measurement", d);
    c.measurement.kind = m.string("kind", "nodal", {"nodal", "patch"});
    c.measurement.fraction = m.number("fraction", 1.0);
    if (!(c.measurement.fraction > 0.0 && c.measurement.fraction <= 1.0))
      m.error("fraction", "must lie in (0, 1], got " + format_double(c.measurement.fraction));
    c.measurement.noise_sd = m.opt_number("noise_sd");
    c.measurement.noise_fraction = m.opt_number("noise_fraction");
  }
  if (c.measurement.noise_sd.has_value() == c.measurement.noise_fraction.has_value())
    d.push_back("measurement: give exactly one of noise_sd and noise_fraction");
  if (c.measurement.noise_sd && !(*c.measurement.noise_sd > 0.0))
    d.push_back("measurement.noise_sd: must be positive");
  if (c.measurement.noise_fraction && !(*c.measurement.noise_fraction > 0.0))
    d.push_back("measurement.noise_fraction: must be positive");

  if (top.has("pce")) {
    detail::ObjectReader p(top.raw("pce"), "pce", d);
    c.p = static_cast<int>(p.integer("p", c.p));
    if (p.has("quadrature_order")) c.quadrature_order = static_cast<int>(p.integer("quadrature_order", 0));
    if (c.p < 0) p.error("p", "must be non-negative");
    if (c.quadrature_order && *c.quadrature_order < 1) p.error("quadrature_order", "must be at least 1");
  }
  const int dims = c.prior.m_kle;
  const bool uses_pce = c.method == MethodKind::pce_update || c.method == MethodKind::mcmc_pce;
  if (c.p >= 0) {
    const double terms = pc::binomial(dims + c.p, c.p);
    if (terms > static_cast<double>(pc::kDefaultMaxIndexSetSize))
      d.push_back("pce: M=" + std::to_string(dims) + ", p=" + std::to_string(c.p) + " gives J=" + format_double(terms) +
                  " basis terms, above the cap " + std::to_string(pc::kDefaultMaxIndexSetSize));
    const int q = c.quadrature_order.value_or(c.p + 1);
    const double qn = std::pow(static_cast<double>(q), dims);
    if (uses_pce && qn > static_cast<double>(pc::kDefaultMaxQuadratureNodes))
      d.push_back("pce: tensor quadrature of order " + std::to_string(q) + " in " + std::to_string(dims) +
                  " dimensions needs " + format_double(qn) + " nodes, above the cap " +
                  std::to_string(pc::kDefaultMaxQuadratureNodes));
  }

  if (top.has("mcmc")) {
    detail::ObjectReader m(top.raw("mcmc"), "mcmc", d);
    const auto steps = m.integer("steps", static_cast<long long>(c.mcmc.steps));
    if (steps < 100) m.error("steps", "must be at least 100");
    c.mcmc.steps = static_cast<std::size_t>(std::max<long long>(steps, 100));
    c.mcmc.step_sd = m.number("step_sd", c.mcmc.step_sd);
    if (!(c.mcmc.step_sd > 0.0)) m.error("step_sd", "must be positive");
    c.mcmc.burn_in = m.number("burn_in", c.mcmc.burn_in);
    if (!(c.mcmc.burn_in >= 0.0 && c.mcmc.burn_in < 1.0)) m.error("burn_in", "must lie in [0, 1)");
    c.mcmc.component = static_cast<int>(m.integer("component", c.mcmc.component));
    if (c.mcmc.component < 1 || c.mcmc.component > dims)
      m.error("component", "must lie in [1, " + std::to_string(dims) + "]");
    const auto gp = m.integer("grid_points", static_cast<long long>(c.mcmc.grid_points));
    if (gp < 2) m.error("grid_points", "must be at least 2");
    c.mcmc.grid_points = static_cast<std::size_t>(std::max<long long>(gp, 2));
    if (m.has("kld_orders")) {
      const auto& a = m.raw("kld_orders");
      if (!a.is_array()) {
        m.error("kld_orders", "must be a list of integers");
      } else {
        for (const auto& v : a) {
          if (!v.is_number_integer() || v.get<int>() < 0) {
            m.error("kld_orders", "entries must be non-negative integers");
            break;
          }
          c.mcmc.kld_orders.push_back(v.get<int>());
        }
      }
    }
  }
  if (!c.mcmc.kld_orders.empty() && c.method != MethodKind::mcmc_pce)
    d.push_back("mcmc.kld_orders: the surrogate study runs with method mcmc_pce");

  if (top.has("enkf")) {
    detail::ObjectReader e(top.raw("enkf"), "enkf", d);
    c.ensemble_size = static_cast<Eigen::Index>(e.integer("Z", c.ensemble_size));
    if (c.ensemble_size < 2) e.error("Z", "must be at least 2");
    c.perturb_obs = e.boolean("perturb_obs", c.perturb_obs);
  }

  if (top.has("nonlinear")) {
    detail::ObjectReader n(top.raw("nonlinear"), "nonlinear", d);
    c.kappa1 = n.number("kappa1", 0.05);
  } else if (c.family == Family::nonlinear_diffusion) {
    c.kappa1 = 0.05;
  }
  if (c.family != Family::nonlinear_diffusion && c.kappa1 != 0.0)
    d.push_back("nonlinear.kappa1: only nonlinear_diffusion has a temperature-dependent conductivity");

  c.sequential.schedule = lshape ? default_lshape_schedule() : std::vector<LoadStep>{LoadStep{}};
  if (top.has("sequential")) {
    detail::ObjectReader s(top.raw("sequential"), "sequential", d);
    c.sequential.log_space = s.boolean("log_space", true);
    c.sequential.square_root = s.boolean("square_root", true);
    const bool has_sched = s.has("schedule"), has_scaling = s.has("scaling");
    if (has_sched && has_scaling) s.error("scaling", "excludes an explicit schedule");
    if (has_sched) {
      const auto& a = s.raw("schedule");
      if (!a.is_array() || a.empty()) {
        s.error("schedule", "must be a non-empty list");
      } else {
        c.sequential.schedule.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
          detail::ObjectReader e(a[i], "sequential.schedule[" + std::to_string(i) + "]", d);
          LoadStep st;
          st.f0 = e.number("f0", 0.0);
          st.wavelength = e.number("wavelength", 1.0);
          st.phase = e.number("phase", 0.0);
          st.angle = e.number("angle", 0.0);
          st.scale = e.number("scale", 1.0);
          if (!(st.wavelength > 0.0)) e.error("wavelength", "must be positive");
          if (st.phase < 0.0 || st.phase > 2 * std::numbers::pi) e.error("phase", "must lie in [0, 2pi]");
          if (std::abs(st.angle) > std::numbers::pi / 2) e.error("angle", "must lie in [-pi/2, pi/2]");
          c.sequential.schedule.push_back(st);
        }
      }
    }
    if (has_scaling) {
      detail::ObjectReader e(s.raw("scaling"), "sequential.scaling", d);
      const double factor = e.number("factor", 0.2);
      const auto updates = e.integer("updates", 4);
      if (!(factor > 0.0 && factor < 1.0)) e.error("factor", "must lie in (0, 1)");
      if (updates < 1) e.error("updates", "must be at least 1");
      const LoadStep base = c.sequential.schedule.front();
      c.sequential.schedule.clear();
      for (double m : alternating_scales(factor, static_cast<int>(std::max<long long>(updates, 1)))) {
        LoadStep st = base;
        st.scale = m;
        c.sequential.schedule.push_back(st);
      }
    }
    if (s.has("probe")) {
      const auto& p = s.raw("probe");
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        s.error("probe", "must be a coordinate pair [x, y]");
      else
        c.sequential.probe = std::make_pair(p[0].get<double>(), p[1].get<double>());
    }
  }
  const bool sampling = c.method == MethodKind::mcmc || c.method == MethodKind::mcmc_pce;
  if (lshape && sampling) d.push_back("method: lshape_sequential is identified with enkf or pce_update");
  if (sampling && c.sequential.schedule.size() != 1)
    d.push_back("sequential.schedule: mcmc methods use a single load case");
  if (c.prior.transform == "lognormal" && c.family == Family::nonlinear_diffusion)
    d.push_back("prior.transform: nonlinear_diffusion uses a Gaussian kappa_0");

  if (top.has("seeds")) {
    detail::ObjectReader s(top.raw("seeds"), "seeds", d);
    c.seeds.truth = detail::read_seed(s, "truth", c.seeds.truth);
    c.seeds.noise = detail::read_seed(s, "noise", c.seeds.noise);
    c.seeds.chain = detail::read_seed(s, "chain", c.seeds.chain);
    c.seeds.ensemble = detail::read_seed(s, "ensemble", c.seeds.ensemble);
  }
  if (top.has("output")) c.output = top.string("output", "");
  if (top.has("threads")) {
    const auto t = top.integer("threads", 1);
    if (t < 1) top.error("threads", "must be at least 1");
    c.threads = static_cast<unsigned>(std::max<long long>(t, 1));
  }
  return res;
}

/// Parses the text of a config file; a syntax error becomes a single diagnostic.
inline ParseResult parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    ParseResult r;
    r.diagnostics.push_back(std::string("config: not valid JSON (") + e.what() + ")");
    return r;
  }
  return parse_config(doc);
}

/// Sets seeds.<key> = value in the document; `assignment` has the form key=value.
inline void apply_seed_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw InvalidArgument("seed override '" + assignment + "' is not key=value");
  const auto key = assignment.substr(0, eq);
  if (key != "truth" && key != "noise" && key != "chain" && key != "ensemble")
    throw InvalidArgument("seed override: unknown seed '" + key + "'");
  const auto text = assignment.substr(eq + 1);
  std::size_t used = 0;
  unsigned long long v = 0;
  if (!text.empty() && std::isdigit(static_cast<unsigned char>(text.front()))) {
    try {
      v = std::stoull(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
  }
  if (used == 0 || used != text.size())
    throw InvalidArgument("seed override: '" + assignment.substr(eq + 1) + "' is not a non-negative integer");
  if (!doc.is_object()) throw InvalidArgument("seed override: config is not an object");
  doc["seeds"][key] = v;
}

/// Hash of the canonical document; `output` and `threads` are excluded because they
/// do not change any result.
inline std::string config_hash(const json& doc) {
  json d = doc;
  if (d.is_object()) {
    d.erase("output");
    d.erase("threads");
  }
  return hex64(fnv1a64(d.dump()));
}

}  // namespace bayesid::experiment
