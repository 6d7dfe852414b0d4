#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "doctest.h"
#include "shellfrac/driver.hpp"
#include "shellfrac/error.hpp"
#include "shellfrac/meshgen.hpp"

using namespace shellfrac;

namespace {

int euler(const Triangulation& m) {
  return static_cast<int>(m.num_vertices()) - static_cast<int>(m.edges().size()) +
         static_cast<int>(m.num_triangles());
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Config;
}

}  // namespace

TEST_SUITE("meshgen") {

TEST_CASE("plain square") {
  DomainSpec d;
  d.dirichlet_bottom = false;
  const Triangulation m = build_domain_mesh(d, 0.1);
  CHECK(euler(m) == 1);
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-12));
  for (const BoundaryEdge& e : m.boundary()) CHECK(e.label == BoundaryLabel::Free);
}

TEST_CASE("notched cylinder mesh") {
  const ScenarioSpec s = cylinder_scenario();
  const Triangulation m = build_scenario_mesh(s, 0.05);
  CHECK(euler(m) == 1 - count_inner_boundaries(domain_spec(s)));
  CHECK(euler(m) == 0);
  CHECK(m.total_area() == doctest::Approx(std::numbers::pi * 1.1).epsilon(1e-10));
  std::set<int> notch_vertices;
  for (const BoundaryEdge& e : m.boundary()) {
    const Vec2 a = m.vertex(e.a), b = m.vertex(e.b);
    const Vec2 mid = 0.5 * (a + b);
    switch (e.label) {
      case BoundaryLabel::DirichletPlus:
        CHECK(mid.x() > 1e-3 - 1e-12);
        CHECK(mid.y() == doctest::Approx(-0.1));
        break;
      case BoundaryLabel::DirichletMinus:
        CHECK(mid.x() < -1e-3 + 1e-12);
        CHECK(mid.y() == doctest::Approx(-0.1));
        break;
      case BoundaryLabel::DirichletZero:
        CHECK(std::abs(mid.x()) < 1e-3 + 1e-12);
        break;
      case BoundaryLabel::Notch:
        CHECK(std::abs(mid.x()) < 1e-3 + 1e-12);
        CHECK(mid.y() >= 0.0);
        CHECK(mid.y() <= 0.3);
        notch_vertices.insert(e.a);
        notch_vertices.insert(e.b);
        break;
      case BoundaryLabel::Free: break;
      default: FAIL("unexpected label");
    }
  }
  // The slit has two sides of length 0.3 sharing only the tip and the root.
  double notch_len = 0.0;
  int tips = 0;
  for (const BoundaryEdge& e : m.boundary())
    if (e.label == BoundaryLabel::Notch) notch_len += (m.vertex(e.a) - m.vertex(e.b)).norm();
  for (int v : notch_vertices) tips += m.vertex(v) == Vec2(0.0, 0.3);
  CHECK(notch_len == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(tips == 1);
  CHECK(notch_vertices.size() >= 2 * (0.3 / 0.05));
}

TEST_CASE("thin notch is cut out as a rectangle") {
  DomainSpec d;
  d.domain = Rect{-0.05, 0.05, 0.0, 0.1};
  d.notch = Rect{-1e-3, 1e-3, 0.0, 0.03};
  d.extension_depth = 0.02;
  d.dirichlet_bottom = false;
  const Triangulation m = build_domain_mesh(d, 3e-3);
  CHECK(euler(m) == 0);
  CHECK(m.total_area() == doctest::Approx(0.1 * 0.12 - 2e-3 * 0.03).epsilon(1e-10));
}

TEST_CASE("holes") {
  ScenarioSpec s = cylinder_scenario();
  s.holes = {{Vec2(-0.2, 0.88), 0.08}, {Vec2(-0.2, 0.68), 0.08}, {Vec2(-0.2, 0.48), 0.08}};
  const Triangulation m = build_scenario_mesh(s, 0.05);
  CHECK(count_inner_boundaries(domain_spec(s)) == 4);
  CHECK(euler(m) == -3);
  int hole_edges = 0;
  for (const BoundaryEdge& e : m.boundary()) hole_edges += e.label == BoundaryLabel::Hole;
  CHECK(hole_edges >= 3 * 8);
}

TEST_CASE("invalid features") {
  ScenarioSpec s = cylinder_scenario();
  s.holes = {{Vec2(0.3, 0.5), 0.1}, {Vec2(0.35, 0.5), 0.1}};
  CHECK(code_of([&] { build_scenario_mesh(s, 0.05); }) == ErrorCode::Geometry);
  s.holes = {{Vec2(0.05, 0.2), 0.1}};
  CHECK(code_of([&] { build_scenario_mesh(s, 0.05); }) == ErrorCode::Geometry);
  s.holes = {{Vec2(1.5, 0.5), 0.2}};
  CHECK(code_of([&] { build_scenario_mesh(s, 0.05); }) == ErrorCode::Geometry);
  ScenarioSpec sp = sphere_scenario(1.5);
  sp.extension_depth = 0.2;
  CHECK(code_of([&] { build_scenario_mesh(sp, 0.05); }) == ErrorCode::Geometry);
}

TEST_CASE("generation is deterministic for a seed") {
  const ScenarioSpec s = cylinder_scenario();
  std::ostringstream a, b, c;
  write_mesh(a, build_scenario_mesh(s, 0.08));
  write_mesh(b, build_scenario_mesh(s, 0.08));
  CHECK(a.str() == b.str());
  ScenarioSpec t = s;
  t.seed = 99;
  write_mesh(c, build_scenario_mesh(t, 0.08));
  CHECK(a.str() != c.str());
}

}
