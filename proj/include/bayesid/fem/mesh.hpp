#pragma once

#include "bayesid/common.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bayesid::fem {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  std::string tag;
};

using Triangle = std::array<int, 3>;

/// Linear triangle mesh with tagged boundary edges.
struct Mesh {
  std::vector<Point> nodes;
  std::vector<Triangle> elements;
  std::vector<BoundaryEdge> boundary;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t element_count() const { return elements.size(); }
};

inline double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

inline double element_area(const Mesh& m, std::size_t e) {
  const auto& t = m.elements[e];
  return signed_area(m.nodes[static_cast<std::size_t>(t[0])], m.nodes[static_cast<std::size_t>(t[1])],
                     m.nodes[static_cast<std::size_t>(t[2])]);
}

inline double mesh_area(const Mesh& m) {
  double a = 0.0;
  for (std::size_t e = 0; e < m.element_count(); ++e) a += element_area(m, e);
  return a;
}

/// Lumped (row-sum) mass: each node receives a third of every adjacent element's area.
inline Vector lumped_mass(const Mesh& m) {
  Vector w = Vector::Zero(static_cast<Eigen::Index>(m.node_count()));
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const double a3 = element_area(m, e) / 3.0;
    for (int v : m.elements[e]) w[v] += a3;
  }
  return w;
}

inline double mesh_diameter(const Mesh& m) {
  double lo_x = INFINITY, lo_y = INFINITY, hi_x = -INFINITY, hi_y = -INFINITY;
  for (const auto& p : m.nodes) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  return std::hypot(hi_x - lo_x, hi_y - lo_y);
}

/// Checks positive areas, index ranges and that boundary edges chain into closed loops.
inline void validate_mesh(const Mesh& m) {
  const auto n = static_cast<int>(m.node_count());
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    for (int v : m.elements[e])
      if (v < 0 || v >= n) throw InvalidArgument("mesh element " + std::to_string(e) + " has node index out of range");
    if (!(element_area(m, e) > 0.0))
      throw InvalidArgument("mesh element " + std::to_string(e) + " is degenerate or clockwise");
  }
  std::map<int, int> out_degree, in_degree;
  for (const auto& be : m.boundary) {
    if (be.a < 0 || be.a >= n || be.b < 0 || be.b >= n)
      throw InvalidArgument("boundary edge node index out of range");
    ++out_degree[be.a];
    ++in_degree[be.b];
  }
  for (const auto& [v, d] : out_degree)
    if (d != 1 || in_degree[v] != 1) throw InvalidArgument("boundary edges do not form closed loops");
  for (const auto& [v, d] : in_degree)
    if (d != 1 || out_degree[v] != 1) throw InvalidArgument("boundary edges do not form closed loops");
}

namespace detail {

using EdgeTagger = std::function<std::string(const Point&)>;

// Collects edges owned by a single triangle (oriented as in that triangle, which is
// counter-clockwise around the domain) and tags them by their midpoint.
inline std::vector<BoundaryEdge> extract_boundary(const Mesh& m, const EdgeTagger& tagger) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : m.elements)
    for (int k = 0; k < 3; ++k) {
      const int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  std::vector<BoundaryEdge> out;
  for (const auto& t : m.elements)
    for (int k = 0; k < 3; ++k) {
      const int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
      if (count[{std::min(a, b), std::max(a, b)}] != 1) continue;
      const auto& pa = m.nodes[static_cast<std::size_t>(a)];
      const auto& pb = m.nodes[static_cast<std::size_t>(b)];
      out.push_back({a, b, tagger({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)})});
    }
  return out;
}

// Crossed structured grid over the cells accepted by `keep(i, j)`.
inline Mesh crossed_grid(int nx, int ny, double width, double height,
                         const std::function<bool(int, int)>& keep) {
  Mesh m;
  const double hx = width / nx, hy = height / ny;
  std::vector<int> corner(static_cast<std::size_t>((nx + 1) * (ny + 1)), -1);
  auto corner_id = [&](int i, int j) -> int& { return corner[static_cast<std::size_t>(j * (nx + 1) + i)]; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (keep(i, j))
        for (auto [di, dj] : {std::pair{0, 0}, {1, 0}, {0, 1}, {1, 1}}) corner_id(i + di, j + dj) = 0;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (corner_id(i, j) == 0) {
        corner_id(i, j) = static_cast<int>(m.nodes.size());
        m.nodes.push_back({i * hx, j * hy});
      }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!keep(i, j)) continue;
      const int c = static_cast<int>(m.nodes.size());
      m.nodes.push_back({(i + 0.5) * hx, (j + 0.5) * hy});
      const int v00 = corner_id(i, j), v10 = corner_id(i + 1, j);
      const int v11 = corner_id(i + 1, j + 1), v01 = corner_id(i, j + 1);
      m.elements.push_back({v00, v10, c});
      m.elements.push_back({v10, v11, c});
      m.elements.push_back({v11, v01, c});
      m.elements.push_back({v01, v00, c});
    }
  return m;
}

}  // namespace detail

/// Rectangle [0,width] x [0,height] split into nx x ny cells, each cut into four
/// triangles by its diagonals. Boundary tags: left, right, bottom, top.
/// Node count (nx+1)(ny+1) + nx*ny, element count 4*nx*ny.
inline Mesh build_rect_mesh(int nx, int ny, double width, double height) {
  require(nx >= 1 && ny >= 1, "rect mesh needs nx, ny >= 1");
  require(width > 0 && height > 0, "rect mesh needs positive extents");
  Mesh m = detail::crossed_grid(nx, ny, width, height, [](int, int) { return true; });
  const double tol = 1e-9 * std::max(width, height);
  m.boundary = detail::extract_boundary(m, [=](const Point& p) -> std::string {
    if (p.x < tol) return "left";
    if (p.x > width - tol) return "right";
    if (p.y < tol) return "bottom";
    return "top";
  });
  return m;
}

/// Unit square minus its upper-right quadrant, with n crossed cells per half side.
/// Boundary tags: bottom, right, notch_top (y=1/2, x>1/2), notch_left (x=1/2, y>1/2),
/// top, left.
inline Mesh build_lshape_mesh(int n) {
  require(n >= 1, "L-shape mesh needs n >= 1");
  Mesh m = detail::crossed_grid(2 * n, 2 * n, 1.0, 1.0, [n](int i, int j) { return i < n || j < n; });
  constexpr double tol = 1e-9;
  m.boundary = detail::extract_boundary(m, [](const Point& p) -> std::string {
    if (p.y < tol) return "bottom";
    if (p.x < tol) return "left";
    if (p.x > 1.0 - tol) return "right";
    if (p.y > 1.0 - tol) return "top";
    if (std::abs(p.y - 0.5) < tol) return "notch_top";
    return "notch_left";
  });
  return m;
}

inline nlohmann::json to_json(const Mesh& m) {
  nlohmann::json nodes = nlohmann::json::array(), elems = nlohmann::json::array(),
                 bnd = nlohmann::json::array();
  for (const auto& p : m.nodes) nodes.push_back({p.x, p.y});
  for (const auto& t : m.elements) elems.push_back({t[0], t[1], t[2]});
  for (const auto& e : m.boundary) bnd.push_back({{"a", e.a}, {"b", e.b}, {"tag", e.tag}});
  return {{"nodes", nodes}, {"elements", elems}, {"boundary", bnd}};
}

inline Mesh mesh_from_json(const nlohmann::json& j) {
  Mesh m;
  for (const auto& p : j.at("nodes")) m.nodes.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  for (const auto& t : j.at("elements"))
    m.elements.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
  for (const auto& e : j.at("boundary"))
    m.boundary.push_back({e.at("a").get<int>(), e.at("b").get<int>(), e.at("tag").get<std::string>()});
  validate_mesh(m);
  return m;
}

}  // namespace bayesid::fem
