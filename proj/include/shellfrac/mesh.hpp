#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shellfrac/geometry.hpp"

namespace shellfrac {

enum class BoundaryLabel : std::uint8_t {
  DirichletPlus,
  DirichletMinus,
  DirichletZero,
  Free,
  Notch,
  Hole,
};

const char* label_name(BoundaryLabel label) noexcept;
BoundaryLabel parse_label(std::string_view name);
inline bool is_dirichlet(BoundaryLabel l) {
  return l == BoundaryLabel::DirichletPlus || l == BoundaryLabel::DirichletMinus ||
         l == BoundaryLabel::DirichletZero;
}

using Tri = std::array<int, 3>;

// Oriented so that the domain lies to the left of a -> b.
struct BoundaryEdge {
  int a = -1;
  int b = -1;
  BoundaryLabel label = BoundaryLabel::Free;
};

struct Edge {
  int a = -1;  // a < b
  int b = -1;
  int t0 = -1;
  int t1 = -1;  // -1 on the boundary
  int boundary = -1;  // index into boundary(), -1 for interior edges
};

// Conforming planar triangulation in chart coordinates. Immutable once built;
// every constructor validates the mesh and builds the edge skeleton.
// Slits are represented by duplicated vertices, so the two sides of a slit
// are topologically disconnected.
class Triangulation {
public:
  Triangulation(std::vector<Vec2> vertices, std::vector<Tri> triangles,
                std::vector<BoundaryEdge> boundary);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Vec2& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const std::vector<Tri>& triangles() const { return triangles_; }
  const Tri& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }
  const std::vector<BoundaryEdge>& boundary() const { return boundary_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Edge opposite local vertex k of triangle t.
  int triangle_edge(int t, int k) const { return tri_edges_[static_cast<std::size_t>(t)][k]; }
  // Neighbour across the edge opposite local vertex k, -1 on the boundary.
  int neighbor(int t, int k) const;
  std::span<const int> vertex_triangles(int v) const;
  std::span<const int> vertex_neighbors(int v) const;
  bool is_boundary_vertex(int v) const { return boundary_vertex_[static_cast<std::size_t>(v)] != 0; }

  double area(int t) const { return areas_[static_cast<std::size_t>(t)]; }
  double total_area() const;
  Vec2 centroid(int t) const;
  // Gradients of the three P1 basis functions on triangle t.
  const std::array<Vec2, 3>& basis_gradients(int t) const {
    return grads_[static_cast<std::size_t>(t)];
  }

  // Returns the edge index or -1.
  int find_edge(int a, int b) const;

  bool same_as(const Triangulation& other) const;

private:
  void build();

  std::vector<Vec2> vertices_;
  std::vector<Tri> triangles_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<int> vt_offsets_, vt_data_;
  std::vector<int> vv_offsets_, vv_data_;
  std::vector<char> boundary_vertex_;
  std::vector<double> areas_;
  std::vector<std::array<Vec2, 3>> grads_;
};

using MeshPtr = std::shared_ptr<const Triangulation>;

// Affine map from the reference triangle (equilateral, inscribed in the unit
// circle, one vertex at (0,1)) onto an element: x = M xhat + theta.
struct ElementMap {
  Mat2 M;
  Vec2 theta;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  Vec2 r1;
  Vec2 r2;
  double aspect_ratio = 1.0;
  double h_T = 0.0;  // diameter (longest edge)
};

inline constexpr double kReferenceTriangleArea = 1.299038105676658;  // 3 sqrt(3) / 4

ElementMap element_map(const Triangulation& mesh, int t);
ElementMap element_map(const Vec2& p1, const Vec2& p2, const Vec2& p3);

// Elements sharing at least one vertex with t (t included), sorted.
std::vector<int> patch(const Triangulation& mesh, int t);

struct StiffnessSignReport {
  std::vector<std::pair<int, int>> violations;  // vertex pairs with K_lm > tol
  double max_positive_offdiag = 0.0;
  double max_abs_entry = 0.0;
  double tolerance = 0.0;
  bool ok() const { return violations.empty(); }
};

// Checks int grad(xi_l)^T A grad(xi_m) <= 0 for every pair of vertices sharing
// an edge; the tolerance is 1e-10 * max |K|.
StiffnessSignReport check_stiffness_sign(const Triangulation& mesh, const SurfaceChart& chart);

// ASCII mesh format:
//   shellmesh 1
//   V n      followed by n lines "x y"
//   T m      followed by m lines "i j k"
//   B p      followed by p lines "i j label"
void write_mesh(std::ostream& os, const Triangulation& mesh);
void write_mesh(const std::string& path, const Triangulation& mesh);
Triangulation read_mesh(std::istream& is);
Triangulation read_mesh(const std::string& path);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);

// Quadtree over triangle bounding boxes for point location.
class PointLocator {
public:
  explicit PointLocator(MeshPtr mesh);

  struct Hit {
    int triangle = -1;
    std::array<double, 3> bary{};
    double outside = 0.0;  // distance-like measure, 0 when inside
  };

  // Finds the triangle containing p; if p lies outside every element, the
  // closest element is returned provided it is within snap_tol.
  Hit locate(const Vec2& p, double snap_tol = 1e-9) const;
  // Same, but prefers elements containing p + nudge * (hint - p); used to
  // pick the correct side of a slit.
  Hit locate_towards(const Vec2& p, const Vec2& hint, double snap_tol = 1e-9) const;

  const Triangulation& mesh() const { return *mesh_; }

private:
  struct Node {
    double x0, y0, x1, y1;
    int child = -1;  // first of four children, -1 for leaves
    int begin = 0, end = 0;
  };
  // Triangles of all leaves meeting the box of half-width r around p; returns
  // the width of the leaf containing p.
  double candidates(const Vec2& p, double r, std::vector<int>& out) const;
  Hit best_in(const Vec2& p, const std::vector<int>& cand) const;

  MeshPtr mesh_;
  std::vector<Node> nodes_;
  std::vector<int> cells_;
};

std::array<double, 3> barycentric(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c);

}  // namespace shellfrac
