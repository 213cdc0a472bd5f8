#pragma once

#include "bayesid/fem/diffusion.hpp"
#include "bayesid/fem/measurement.hpp"

#include <memory>

namespace bayesid::experiment {

/// Heat conduction through a rectangle: prescribed inflow flux on the left edge,
/// fixed temperature on the right edge, insulated top and bottom.
struct RectangleSetup {
  int nx = 6;
  int ny = 5;
  double width = 1.0;
  double height = 0.5;
  double flux = 100.0;
  double temperature = 20.0;
};

inline std::shared_ptr<const fem::DiffusionProblem> rectangle_problem(const RectangleSetup& s = {}) {
  fem::BoundaryConditions bc;
  bc.neumann["left"] = s.flux;
  bc.dirichlet["right"] = s.temperature;
  return std::make_shared<const fem::DiffusionProblem>(fem::build_rect_mesh(s.nx, s.ny, s.width, s.height), bc,
                                                       fem::LoadDescriptor::none());
}

/// L-shaped domain with zero temperature on the outer bottom and left edges and
/// insulated elsewhere; driven by a volume load.
inline std::shared_ptr<const fem::DiffusionProblem> lshape_problem(int n, const fem::LoadDescriptor& load) {
  fem::BoundaryConditions bc;
  bc.dirichlet["bottom"] = 0.0;
  bc.dirichlet["left"] = 0.0;
  return std::make_shared<const fem::DiffusionProblem>(fem::build_lshape_mesh(n), bc, load);
}

}  // namespace bayesid::experiment
