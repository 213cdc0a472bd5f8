#pragma once

#include "bayesid/forward/model.hpp"
#include "bayesid/parallel.hpp"

#include <cstdint>
#include <random>
#include <sstream>

namespace bayesid::fwd {

/// Z samples stored column-wise together with the germ draws that produced them.
struct Ensemble {
  Matrix samples;  // dim x Z
  Matrix thetas;   // M x Z
  std::uint64_t seed = 0;

  Eigen::Index size() const { return samples.cols(); }
  Eigen::Index dim() const { return samples.rows(); }
  Vector mean() const { return samples.rowwise().mean(); }

  /// Unbiased sample variance per row.
  Vector variance() const {
    const Matrix c = samples.colwise() - mean();
    return c.rowwise().squaredNorm() / static_cast<double>(size() - 1);
  }
};

struct SampledForecast {
  Ensemble q;
  Ensemble u;
  Ensemble y;
};

struct PceForecast {
  pc::PceTensor q;
  pc::PceTensor u;
  pc::PceTensor y;
};

/// Z iid standard normal germ vectors, drawn column by column from mt19937_64(seed).
inline Matrix draw_germs(int dims, Eigen::Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Matrix t(dims, count);
  for (Eigen::Index z = 0; z < count; ++z)
    for (int m = 0; m < dims; ++m) t(m, z) = n01(rng);
  return t;
}

inline std::string describe_theta(std::span<const double> theta) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < theta.size(); ++i) os << (i ? ", " : "") << format_double(theta[i]);
  os << ']';
  return os.str();
}

/// Ensemble of q, u and y over the given germ draws. Samples are independent and
/// solved in parallel; a failing solve aborts with the offending germ in the message.
inline SampledForecast propagate_thetas(const GermMap& q, const ForwardModel& model, const Matrix& thetas,
                                        unsigned threads = 1) {
  require(thetas.rows() == q.dims, "propagate: germ dimension mismatch");
  const Eigen::Index z = thetas.cols();
  SampledForecast out;
  out.q.samples.resize(model.state_dim(), z);
  out.u.samples.resize(model.state_dim(), z);
  out.y.samples.resize(model.measurement_dim(), z);
  parallel_for(static_cast<std::size_t>(z), threads, [&](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Vector theta = thetas.col(col);
    const std::span<const double> t(theta.data(), static_cast<std::size_t>(theta.size()));
    const Vector qs = q.eval(t);
    Vector u;
    try {
      u = model.solve(qs);
    } catch (const std::exception& e) {
      throw NumericalError("forward solve failed for sample " + std::to_string(i) + " at theta = " +
                           describe_theta(t) + ": " + e.what());
    }
    out.q.samples.col(col) = qs;
    out.u.samples.col(col) = u;
    out.y.samples.col(col) = model.measurement.apply(u);
  });
  for (Ensemble* e : {&out.q, &out.u, &out.y}) e->thetas = thetas;
  return out;
}

inline SampledForecast propagate_sampling(const GermMap& q, const ForwardModel& model, Eigen::Index count,
                                          std::uint64_t seed, unsigned threads = 1) {
  require(count >= 2, "ensemble size must be >= 2");
  auto out = propagate_thetas(q, model, draw_germs(q.dims, count, seed), threads);
  out.q.seed = out.u.seed = out.y.seed = seed;
  return out;
}

inline SampledForecast propagate_sampling(const pc::PceTensor& q, const ForwardModel& model, Eigen::Index count,
                                          std::uint64_t seed, unsigned threads = 1) {
  return propagate_sampling(germ_map(q), model, count, seed, threads);
}

inline SampledForecast propagate_sampling(const field::KleModel& q, const ForwardModel& model,
                                          Eigen::Index count, std::uint64_t seed, unsigned threads = 1) {
  return propagate_sampling(germ_map(q), model, count, seed, threads);
}

/// Forecast for an existing parameter ensemble (for example an analysis ensemble),
/// keeping its germ record.
inline SampledForecast propagate_ensemble(const Ensemble& q, const ForwardModel& model, unsigned threads = 1) {
  require(q.dim() == model.state_dim(), "propagate_ensemble: parameter ensemble must be nodal");
  const Eigen::Index z = q.size();
  SampledForecast out;
  out.q = q;
  out.u = Ensemble{Matrix(model.state_dim(), z), q.thetas, q.seed};
  out.y = Ensemble{Matrix(model.measurement_dim(), z), q.thetas, q.seed};
  parallel_for(static_cast<std::size_t>(z), threads, [&](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i);
    Vector u;
    try {
      u = model.solve(q.samples.col(col));
    } catch (const std::exception& e) {
      throw NumericalError("forward solve failed for ensemble member " + std::to_string(i) + ": " + e.what());
    }
    out.u.samples.col(col) = u;
    out.y.samples.col(col) = model.measurement.apply(u);
  });
  return out;
}

/// Non-intrusive pseudo-spectral projection: one FEM solve per quadrature node,
/// projecting the nodal state and the measurement onto the basis of q.
inline PceForecast propagate_pspp(const pc::PceTensor& q, const ForwardModel& model,
                                  const pc::GaussHermiteRule& rule, unsigned threads = 1) {
  require(rule.dims() == q.index_set().dims(), "pspp: quadrature rule does not match the index set");
  const Eigen::Index n = model.state_dim();
  const Eigen::Index r = model.measurement_dim();
  auto both = pc::project_vector_function(
      [&](std::span<const double> theta) {
        const Vector qs = pc::pce_sample(q, theta);
        Vector out(n + r);
        try {
          out.head(n) = model.solve(qs);
        } catch (const std::exception& e) {
          throw NumericalError("forward solve failed at quadrature node theta = " + describe_theta(theta) +
                               ": " + e.what());
        }
        out.tail(r) = model.measurement.apply(out.head(n));
        return out;
      },
      n + r, q.index_set_ptr(), rule, threads);
  PceForecast f;
  f.q = q;
  f.u = pc::PceTensor(q.index_set_ptr(), both.coeffs().topRows(n));
  f.y = pc::PceTensor(q.index_set_ptr(), both.coeffs().bottomRows(r));
  return f;
}

inline PceForecast propagate_pspp(const pc::PceTensor& q, const ForwardModel& model, unsigned threads = 1) {
  return propagate_pspp(q, model, pc::default_rule(q.index_set()), threads);
}

}  // namespace bayesid::fwd
