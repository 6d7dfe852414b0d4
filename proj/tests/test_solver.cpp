#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "qp_oracle.hpp"
#include "shellfrac/error.hpp"
#include "shellfrac/solver.hpp"
#include "support.hpp"

using namespace shellfrac;
using testsupport::share;
using testsupport::structured;

namespace {

VecX random_vec(std::mt19937& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  VecX x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

ModelParams params() {
  ModelParams p;
  p.epsilon = 0.05;
  p.alpha = 0.2;
  p.tau = 0.05;
  return p;
}

// Unit square with u = 0 on the bottom, u = 1 on the top, free sides.
Triangulation ramp_mesh() {
  Triangulation base = structured(Rect{}, 6, 6);
  std::vector<BoundaryEdge> b = base.boundary();
  for (BoundaryEdge& e : b) {
    const double ya = base.vertex(e.a).y(), yb = base.vertex(e.b).y();
    if (ya == 0.0 && yb == 0.0) e.label = BoundaryLabel::DirichletZero;
    else if (ya == 1.0 && yb == 1.0) e.label = BoundaryLabel::DirichletPlus;
  }
  return Triangulation(base.vertices(), base.triangles(), b);
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("linear solves") {
  std::mt19937 rng(3);
  const int n = 40;
  Eigen::MatrixXd B = Eigen::MatrixXd::Random(n, n);
  const Eigen::MatrixXd A = B * B.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  const SpMat S = A.sparseView();
  const VecX b = random_vec(rng, n, -1, 1);
  SolverOptions o;
  LinearSolveInfo info;
  const VecX x = solve_spd(S, b, nullptr, o, &info);
  CHECK((A * x - b).norm() <= 1e-9 * b.norm());
  o.linear = LinearMethod::Direct;
  const VecX y = solve_spd(S, b, nullptr, o, &info);
  CHECK(info.used_direct);
  CHECK((x - y).norm() < 1e-8);
}

TEST_CASE("box QP against exhaustive enumeration") {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const int n = dim(rng);
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = u(rng);
    const Eigen::MatrixXd H = B * B.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    VecX c(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      c(i) = 2 * u(rng);
      lo(i) = (k % 3 == 0) ? -std::numeric_limits<double>::infinity() : u(rng) - 0.5;
      hi(i) = (std::isfinite(lo(i)) ? lo(i) : -0.5) + std::abs(u(rng));
    }
    const VecX oracle = testsupport::enumerate_box_qp(H, c, lo, hi);
    const SpMat Hs = H.sparseView();
    const BoxQpResult r = solve_box_qp(Hs, c, lo, hi, nullptr, SolverOptions{});
    REQUIRE((r.x - oracle).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE(box_kkt_residual(Hs, c, lo, hi, r.x).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("solve_phase against exhaustive enumeration on small meshes") {
  std::mt19937 rng(29);
  const ModelParams p = params();
  for (int k = 0; k < 50; ++k) {
    const MeshPtr m = share(testsupport::random_mesh(rng, Rect{}, 4, 2));
    const FeSpace fs(m, k % 2 ? make_cylinder(1.0, 1.0) : make_flat());
    const int n = fs.num_dofs();
    const FeField u(m, random_vec(rng, n, -20, 20));
    const FeField pv(m, random_vec(rng, n, 0, 1));
    const PhaseSystem sys = assemble_phase_system(fs, u, pv, p);
    const VecX oracle = testsupport::enumerate_box_qp(Eigen::MatrixXd(sys.H), sys.c, VecX::Zero(n), pv.values);
    const FeField v = solve_phase(fs, u, pv, pv, p);
    REQUIRE((v.values - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("phase solve trivial cases") {
  ModelParams p;
  p.alpha = 0.0;
  const MeshPtr m = share(structured(Rect{}, 4, 4));
  const FeSpace fs(m, make_flat());
  const FeField u0 = FeField::constant(m, 0.0);
  const FeField one = FeField::constant(m, 1.0), zero = FeField::constant(m, 0.0);
  CHECK((solve_phase(fs, u0, one, one, p).values.array() - 1.0).abs().maxCoeff() < 1e-10);
  const FeField big = interpolate(m, [](const Vec2& x) { return 50 * x.x(); });
  CHECK(solve_phase(fs, big, zero, zero, p).values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("displacement solve") {
  const ModelParams p;
  const MeshPtr m = share(ramp_mesh());
  const FeSpace fs(m, make_flat());
  auto g = [](double t) { return [t](BoundaryLabel l) { return l == BoundaryLabel::DirichletPlus ? t : 0.0; }; };
  const DirichletData bc = dirichlet_from_labels(*m, g(1.0));
  const FeField u = solve_displacement(fs, FeField::constant(m, 1.0), bc, p);
  for (int i = 0; i < fs.num_dofs(); ++i) REQUIRE(std::abs(u.values(i) - m->vertex(i).y()) < 1e-9);

  const DirichletData bc0 = dirichlet_from_labels(*m, g(0.0));
  std::mt19937 rng(5);
  const FeField v(m, random_vec(rng, fs.num_dofs(), 0, 1));
  CHECK(solve_displacement(fs, v, bc0, p).values.cwiseAbs().maxCoeff() < 1e-14);

  // Optimality against random perturbations vanishing on the Dirichlet set.
  const FeField us = solve_displacement(fs, v, bc, p);
  const double e0 = energy(fs, us, v, nullptr, p).elastic;
  for (int k = 0; k < 20; ++k) {
    VecX w = random_vec(rng, fs.num_dofs(), -0.1, 0.1);
    for (int i = 0; i < fs.num_dofs(); ++i)
      if (bc.fixed[static_cast<std::size_t>(i)]) w(i) = 0.0;
    REQUIRE(energy(fs, FeField(m, us.values + w), v, nullptr, p).elastic >= e0 - 1e-12 * e0);
  }

  // Without Dirichlet data and without curvature the problem is singular.
  CHECK_THROWS_AS(solve_displacement(fs, v, no_dirichlet(*m), p), Error);
}

TEST_CASE("curvature pulls the displacement below the boundary value") {
  const ModelParams p;
  const MeshPtr m = share(structured(Rect{-1, 1, 0, 1}, 8, 4, BoundaryLabel::DirichletPlus));
  const FeSpace fs(m, make_cylinder(1.0, 1.0));
  const DirichletData bc = dirichlet_from_labels(*m, [](BoundaryLabel) { return 0.7; });
  const FeField u = solve_displacement(fs, FeField::constant(m, 1.0), bc, p);
  for (int i = 0; i < fs.num_dofs(); ++i) {
    if (m->is_boundary_vertex(i)) continue;
    REQUIRE(u.values(i) < 0.7);
  }
}

TEST_CASE("alternating minimization") {
  const ModelParams p = params();
  const MeshPtr m = share(ramp_mesh());
  const FeSpace fs(m, make_flat());
  const FeField one = FeField::constant(m, 1.0), zero = FeField::constant(m, 0.0);
  const DirichletData bc0 = dirichlet_from_labels(*m, [](BoundaryLabel) { return 0.0; });
  const AltMinResult trivial = alternate_minimize(fs, zero, one, one, bc0, p);
  CHECK(trivial.iterations == 1);
  CHECK(trivial.converged);
  CHECK(trivial.u.values.cwiseAbs().maxCoeff() < 1e-14);
  CHECK((trivial.v.values.array() - 1.0).abs().maxCoeff() < 1e-12);
  const CriticalPointResidual r0 = residual(fs, trivial.u, trivial.v, one, bc0, p);
  CHECK(r0.stationarity_u < 1e-12);
  CHECK(r0.complementarity_v < 1e-12);

  const DirichletData bc = dirichlet_from_labels(
      *m, [](BoundaryLabel l) { return l == BoundaryLabel::DirichletPlus ? 5.0 : 0.0; });
  const AltMinResult broken = alternate_minimize(fs, zero, zero, zero, bc, p);
  CHECK(broken.v.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK((broken.u.values - solve_displacement(fs, zero, bc, p).values).cwiseAbs().maxCoeff() < 1e-10);

  SolverOptions o;
  o.max_sweeps = 400;
  o.tol_v = 1e-12;
  const AltMinResult res = alternate_minimize(fs, zero, one, one, bc, p, o);
  REQUIRE(res.converged);
  for (std::size_t j = 1; j < res.energy_trace.size(); ++j)
    REQUIRE(res.energy_trace[j] <= res.energy_trace[j - 1] + 1e-10 * std::abs(res.energy_trace[j - 1]));
  CHECK(res.v.values.maxCoeff() <= 1.0);
  CHECK(res.v.values.minCoeff() >= 0.0);
  CHECK(res.v.values.minCoeff() < 0.9);
  const CriticalPointResidual r = residual(fs, res.u, res.v, one, bc, p);
  CHECK(r.stationarity_u <= 1e-6 * r.scale);
  CHECK(r.complementarity_v <= 1e-6 * r.scale);

  // Moving an inactive node upward makes the complementarity residual grow
  // like delta * H_ll.
  const PhaseSystem sys = assemble_phase_system(fs, res.u, one, p);
  int node = -1;
  for (int i = 0; i < fs.num_dofs(); ++i)
    if (res.v.values(i) < 0.9 && res.v.values(i) > 0.1) node = i;
  REQUIRE(node >= 0);
  const double delta = 1e-4;
  FeField vp = res.v;
  vp.values(node) += delta;
  const CriticalPointResidual rp = residual(fs, res.u, vp, one, bc, p);
  CHECK(rp.complementarity_v == doctest::Approx(delta * sys.H.coeff(node, node)).epsilon(0.01));
}

TEST_CASE("maximum principle on an acute mesh") {
  std::mt19937 rng(41);
  const ModelParams p = params();
  const MeshPtr m = share(ramp_mesh());
  const FeSpace fs(m, make_flat());
  REQUIRE(check_stiffness_sign(*m, make_flat()).ok());
  SolverOptions o;
  o.lower_bound_zero = false;
  for (int k = 0; k < 20; ++k) {
    const FeField u(m, random_vec(rng, fs.num_dofs(), -3, 3));
    const FeField bound(m, random_vec(rng, fs.num_dofs(), 0, 1));
    const FeField v = solve_phase(fs, u, bound, bound, p, o);
    REQUIRE(v.values.minCoeff() >= -1e-12);
    REQUIRE(v.values.maxCoeff() <= 1 + 1e-12);
    REQUIRE((v.values - bound.values).maxCoeff() <= 1e-12);
  }
}

TEST_CASE("Dirichlet labels") {
  const Triangulation m = ramp_mesh();
  const DirichletData d = dirichlet_from_labels(m, [](BoundaryLabel l) { return l == BoundaryLabel::DirichletPlus ? 2.0 : 0.0; });
  CHECK(d.count() == 14);
  for (int i = 0; i < static_cast<int>(m.num_vertices()); ++i) {
    if (!d.fixed[static_cast<std::size_t>(i)]) continue;
    const double y = m.vertex(i).y();
    CHECK(d.values(i) == (y == 1.0 ? 2.0 : 0.0));
  }
}

}
