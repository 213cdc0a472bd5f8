#pragma once

#include "bayesid/fem/mesh.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>

namespace bayesid::fem {

/// Dirichlet values (temperature) and Neumann inflow fluxes, keyed by boundary tag.
/// Untagged boundary is natural (zero flux).
struct BoundaryConditions {
  std::map<std::string, double> dirichlet;
  std::map<std::string, double> neumann;
  /// Spatially varying Dirichlet data; overrides `dirichlet` for the same tag.
  std::map<std::string, std::function<double(const Point&)>> dirichlet_profiles;
};

/// Volume source. `boundary_flux` means no volume term (all loading enters via
/// Neumann data); `sinusoidal_volume` is f0 sin((2 pi / wavelength) x.v + phase)
/// with v = (cos angle, sin angle); `function` evaluates an arbitrary callable.
struct LoadDescriptor {
  enum class Kind { boundary_flux, sinusoidal_volume, function };

  Kind kind = Kind::boundary_flux;
  double amplitude = 0.0;
  double wavelength = 1.0;
  double phase = 0.0;
  double angle = 0.0;
  std::function<double(const Point&)> source;

  static LoadDescriptor none() { return {}; }

  static LoadDescriptor sinusoid(double f0, double wavelength, double phase, double angle) {
    require(wavelength > 0, "sinusoidal load needs a positive wavelength");
    require(phase >= 0 && phase <= 2 * std::numbers::pi, "sinusoidal load phase must lie in [0, 2pi]");
    require(angle >= -std::numbers::pi / 2 && angle <= std::numbers::pi / 2,
            "sinusoidal load angle must lie in [-pi/2, pi/2]");
    LoadDescriptor l;
    l.kind = Kind::sinusoidal_volume;
    l.amplitude = f0;
    l.wavelength = wavelength;
    l.phase = phase;
    l.angle = angle;
    return l;
  }

  static LoadDescriptor from_function(std::function<double(const Point&)> f) {
    LoadDescriptor l;
    l.kind = Kind::function;
    l.source = std::move(f);
    return l;
  }

  bool has_volume_term() const { return kind != Kind::boundary_flux; }

  double operator()(const Point& p) const {
    switch (kind) {
      case Kind::boundary_flux:
        return 0.0;
      case Kind::sinusoidal_volume:
        return amplitude * std::sin(2 * std::numbers::pi / wavelength *
                                        (p.x * std::cos(angle) + p.y * std::sin(angle)) +
                                    phase);
      case Kind::function:
        return source(p);
    }
    return 0.0;
  }
};

}  // namespace bayesid::fem
