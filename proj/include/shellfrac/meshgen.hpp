#pragma once

#include <optional>
#include <vector>

#include "shellfrac/mesh.hpp"

namespace shellfrac {

struct HoleSpec {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

// Planar description of the computational domain: the physical rectangle,
// an optional strip glued below it, a notch and circular holes.
struct DomainSpec {
  Rect domain;
  std::optional<Rect> notch;
  std::vector<HoleSpec> holes;
  double extension_depth = 0.0;  // strip (x_min, x_max) x (y_min - depth, y_min]
  // Dirichlet labels on the bottom edge of the extended domain:
  // DirichletPlus for x > gap, DirichletMinus for x < -gap, DirichletZero between.
  bool dirichlet_bottom = true;
  double dirichlet_gap = 1e-3;
  // Notches are meshed as slits when target_h exceeds this value and as
  // removed rectangles otherwise.
  double slit_threshold = 4e-3;
  // Seeds the jitter of the interior lattice.
  unsigned seed = 12345u;

  Rect extended() const {
    Rect r = domain;
    r.y_min -= extension_depth;
    return r;
  }
};

// Constrained Delaunay mesh of the domain with boundary spacing target_h,
// followed by isotropic improvement passes.
Triangulation build_domain_mesh(const DomainSpec& spec, double target_h);

// Number of boundary components that are not the outer rectangle.
int count_inner_boundaries(const DomainSpec& spec);

}  // namespace shellfrac
