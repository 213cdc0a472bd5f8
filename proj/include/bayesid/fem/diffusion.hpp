#pragma once

#include "bayesid/fem/mesh.hpp"
#include "bayesid/fem/problem.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <set>
#include <vector>

namespace bayesid::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct FemSolution {
  Vector u;
  int iterations = 0;
  double residual = 0.0;
};

/// Unconstrained P1 system for -div(kappa grad u) = f with Neumann inflow data.
struct AssembledSystem {
  SparseMatrix stiffness;
  Vector load;
};

/// Steady diffusion on a fixed mesh with fixed boundary data and load.
///
/// Geometry (gradients, areas), the load vector and the Dirichlet partition are
/// computed once; each solve only re-weights the element stiffness by kappa.
/// Conductivity is nodal; each element uses the mean of its three nodal values.
class DiffusionProblem {
 public:
  DiffusionProblem(Mesh mesh, BoundaryConditions bc, LoadDescriptor load)
      : mesh_(std::move(mesh)), bc_(std::move(bc)), load_(std::move(load)) {
    validate_mesh(mesh_);
    precompute_geometry();
    precompute_dirichlet();
    precompute_load();
  }

  const Mesh& mesh() const { return mesh_; }
  const BoundaryConditions& bc() const { return bc_; }
  const LoadDescriptor& load() const { return load_; }
  Eigen::Index node_count() const { return static_cast<Eigen::Index>(mesh_.node_count()); }
  const std::vector<int>& free_nodes() const { return free_; }
  const std::vector<int>& dirichlet_nodes() const { return fixed_; }
  /// Nodal vector holding the prescribed values at Dirichlet nodes and zero elsewhere.
  const Vector& dirichlet_values() const { return g_; }
  const Vector& load_vector() const { return f_; }

  /// Same geometry and boundary data, different volume load.
  DiffusionProblem with_load(LoadDescriptor load) const {
    DiffusionProblem p = *this;
    p.load_ = std::move(load);
    p.precompute_load();
    return p;
  }

  void check_kappa(const Vector& kappa) const {
    require(kappa.size() == node_count(), "conductivity must be nodal");
    for (Eigen::Index i = 0; i < kappa.size(); ++i)
      if (!(kappa[i] > 0.0))
        throw NumericalError("non-positive conductivity " + format_double(kappa[i]) + " at node " +
                             std::to_string(i));
  }

  /// Full stiffness matrix for nodal kappa. Sign is not checked so that PCE
  /// fluctuation coefficients can be assembled with the same routine.
  SparseMatrix stiffness(const Vector& kappa) const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh_.element_count());
    for_each_element_entry(kappa, [&](int i, int j, double v) { trips.emplace_back(i, j, v); });
    SparseMatrix k(node_count(), node_count());
    k.setFromTriplets(trips.begin(), trips.end());
    return k;
  }

  /// K restricted to free rows/columns, plus the coupling K_fd g to the Dirichlet values.
  struct Reduced {
    SparseMatrix k_ff;
    Vector coupling;
  };

  Reduced reduced_stiffness(const Vector& kappa) const {
    const auto nf = static_cast<Eigen::Index>(free_.size());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh_.element_count());
    Vector coupling = Vector::Zero(nf);
    for_each_element_entry(kappa, [&](int i, int j, double v) {
      const int fi = free_index_[static_cast<std::size_t>(i)];
      if (fi < 0) return;
      const int fj = free_index_[static_cast<std::size_t>(j)];
      if (fj >= 0)
        trips.emplace_back(fi, fj, v);
      else
        coupling[fi] += v * g_[j];
    });
    SparseMatrix k(nf, nf);
    k.setFromTriplets(trips.begin(), trips.end());
    return {std::move(k), std::move(coupling)};
  }

  Vector restrict_free(const Vector& full) const {
    Vector out(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t i = 0; i < free_.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[free_[i]];
    return out;
  }

  /// Nodal vector with `free_values` on free nodes and `fixed` on Dirichlet nodes.
  Vector expand(const Vector& free_values, const Vector& fixed) const {
    Vector u = fixed;
    for (std::size_t i = 0; i < free_.size(); ++i) u[free_[i]] = free_values[static_cast<Eigen::Index>(i)];
    return u;
  }

  /// Direct sparse Cholesky solve of the Dirichlet-reduced system.
  FemSolution solve(const Vector& kappa) const {
    check_kappa(kappa);
    auto [k_ff, coupling] = reduced_stiffness(kappa);
    const Vector rhs = restrict_free(f_) - coupling;
    Eigen::SimplicialLLT<SparseMatrix> llt(k_ff);
    if (llt.info() != Eigen::Success) throw NumericalError("stiffness matrix is not positive definite");
    const Vector uf = llt.solve(rhs);
    FemSolution sol;
    sol.u = expand(uf, g_);
    sol.iterations = 1;
    const double scale = std::max(rhs.norm(), 1e-300);
    sol.residual = (k_ff * uf - rhs).norm() / scale;
    if (!(sol.residual <= 1e-10)) throw NumericalError("linear solve residual " + format_double(sol.residual));
    return sol;
  }

  /// ||K(kappa) u - f|| / ||f|| over free nodes.
  double residual(const Vector& kappa, const Vector& u) const {
    auto [k_ff, coupling] = reduced_stiffness(kappa);
    const Vector rhs = restrict_free(f_) - coupling;
    return (k_ff * restrict_free(u) - rhs).norm() / std::max(rhs.norm(), 1e-300);
  }

 private:
  template <class Sink>
  void for_each_element_entry(const Vector& kappa, Sink&& sink) const {
    require(kappa.size() == node_count(), "conductivity must be nodal");
    for (std::size_t e = 0; e < mesh_.element_count(); ++e) {
      const auto& t = mesh_.elements[e];
      const double ke = (kappa[t[0]] + kappa[t[1]] + kappa[t[2]]) / 3.0;
      const auto& loc = local_[e];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) sink(t[static_cast<std::size_t>(a)], t[static_cast<std::size_t>(b)], ke * loc[static_cast<std::size_t>(3 * a + b)]);
    }
  }

  void precompute_geometry() {
    local_.resize(mesh_.element_count());
    for (std::size_t e = 0; e < mesh_.element_count(); ++e) {
      const auto& t = mesh_.elements[e];
      const Point& p0 = mesh_.nodes[static_cast<std::size_t>(t[0])];
      const Point& p1 = mesh_.nodes[static_cast<std::size_t>(t[1])];
      const Point& p2 = mesh_.nodes[static_cast<std::size_t>(t[2])];
      const double area = signed_area(p0, p1, p2);
      // grad phi_a = (y_b - y_c, x_c - x_b) / (2 area)
      const double bx[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
      const double by[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          local_[e][static_cast<std::size_t>(3 * a + b)] = (bx[a] * bx[b] + by[a] * by[b]) / (4.0 * area);
    }
  }

  void precompute_dirichlet() {
    const auto n = mesh_.node_count();
    g_ = Vector::Zero(static_cast<Eigen::Index>(n));
    std::vector<bool> fixed(n, false);
    for (const auto& be : mesh_.boundary) {
      auto prof = bc_.dirichlet_profiles.find(be.tag);
      auto it = bc_.dirichlet.find(be.tag);
      if (prof == bc_.dirichlet_profiles.end() && it == bc_.dirichlet.end()) continue;
      for (int v : {be.a, be.b}) {
        fixed[static_cast<std::size_t>(v)] = true;
        g_[v] = prof != bc_.dirichlet_profiles.end() ? prof->second(mesh_.nodes[static_cast<std::size_t>(v)])
                                                     : it->second;
      }
    }
    auto check_tag = [&](const std::string& tag, const char* what) {
      for (const auto& be : mesh_.boundary)
        if (be.tag == tag) return;
      throw InvalidArgument(std::string(what) + " tag '" + tag + "' not present on mesh");
    };
    for (const auto& kv : bc_.dirichlet) check_tag(kv.first, "Dirichlet");
    for (const auto& kv : bc_.dirichlet_profiles) check_tag(kv.first, "Dirichlet");
    for (const auto& kv : bc_.neumann) check_tag(kv.first, "Neumann");
    free_.clear();
    fixed_.clear();
    free_index_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) {
        fixed_.push_back(static_cast<int>(i));
      } else {
        free_index_[i] = static_cast<int>(free_.size());
        free_.push_back(static_cast<int>(i));
      }
    }
    if (fixed_.empty()) throw InvalidArgument("at least one Dirichlet-constrained node is required");
  }

  void precompute_load() {
    f_ = Vector::Zero(node_count());
    if (load_.has_volume_term()) {
      // edge-midpoint rule, exact for quadratics; phi_a = 1/2 at the two midpoints adjacent to a
      for (std::size_t e = 0; e < mesh_.element_count(); ++e) {
        const auto& t = mesh_.elements[e];
        const double area = element_area(mesh_, e);
        double fm[3];
        for (int k = 0; k < 3; ++k) {
          const Point& a = mesh_.nodes[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])];
          const Point& b = mesh_.nodes[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])];
          fm[k] = load_({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
        }
        // midpoint k sits on edge (k, k+1)
        for (int a = 0; a < 3; ++a) {
          const int prev = (a + 2) % 3;
          f_[t[static_cast<std::size_t>(a)]] += area / 3.0 * 0.5 * (fm[a] + fm[prev]);
        }
      }
    }
    for (const auto& be : mesh_.boundary) {
      auto it = bc_.neumann.find(be.tag);
      if (it == bc_.neumann.end()) continue;
      const Point& a = mesh_.nodes[static_cast<std::size_t>(be.a)];
      const Point& b = mesh_.nodes[static_cast<std::size_t>(be.b)];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      f_[be.a] += 0.5 * len * it->second;
      f_[be.b] += 0.5 * len * it->second;
    }
  }

  Mesh mesh_;
  BoundaryConditions bc_;
  LoadDescriptor load_;
  std::vector<std::array<double, 9>> local_;
  std::vector<int> free_, fixed_, free_index_;
  Vector g_, f_;
};

inline AssembledSystem assemble_diffusion(const Mesh& mesh, const Vector& kappa_nodal,
                                          const BoundaryConditions& bc, const LoadDescriptor& load) {
  DiffusionProblem p(mesh, bc, load);
  p.check_kappa(kappa_nodal);
  return {p.stiffness(kappa_nodal), p.load_vector()};
}

inline FemSolution solve_linear(const DiffusionProblem& problem, const Vector& kappa_nodal) {
  return problem.solve(kappa_nodal);
}

inline FemSolution solve_linear(const Mesh& mesh, const Vector& kappa_nodal,
                                const BoundaryConditions& bc, const LoadDescriptor& load) {
  return DiffusionProblem(mesh, bc, load).solve(kappa_nodal);
}

struct PicardOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
};

/// Picard iteration for kappa(u) = kappa0 + kappa1 u.
inline FemSolution solve_nonlinear(const DiffusionProblem& problem, const Vector& kappa0,
                                   double kappa1, const PicardOptions& opt = {}) {
  problem.check_kappa(kappa0);
  FemSolution sol = problem.solve(kappa0);
  if (kappa1 == 0.0) return sol;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Vector kappa = kappa0 + kappa1 * sol.u;
    for (Eigen::Index i = 0; i < kappa.size(); ++i)
      if (!(kappa[i] > 0.0))
        throw NumericalError("conductivity turned non-positive during Picard iteration " +
                             std::to_string(it) + " at node " + std::to_string(i));
    FemSolution next = problem.solve(kappa);
    const double change = (next.u - sol.u).norm() / std::max(next.u.norm(), 1e-300);
    sol = std::move(next);
    sol.iterations = it;
    if (change <= opt.tolerance) {
      sol.residual = problem.residual(kappa0 + kappa1 * sol.u, sol.u);
      return sol;
    }
  }
  throw NumericalError("Picard iteration did not converge in " + std::to_string(opt.max_iterations) +
                       " iterations");
}

}  // namespace bayesid::fem
