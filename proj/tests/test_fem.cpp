#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "shellfrac/error.hpp"
#include "shellfrac/fem.hpp"
#include "support.hpp"

using namespace shellfrac;
using testsupport::rel_err;
using testsupport::share;
using testsupport::structured;

namespace {

VecX random_vec(std::mt19937& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  VecX x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

// Per-element flat-chart Ambrosio-Tortorelli energy with vertex-lumped
// zero-order terms.
DiscreteEnergyParts textbook_energy(const Triangulation& m, const VecX& u, const VecX& v,
                                    const ModelParams& p, double mu) {
  DiscreteEnergyParts e;
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const Tri& tri = m.triangle(t);
    const Vec2 a = m.vertex(tri[0]), b = m.vertex(tri[1]), c = m.vertex(tri[2]);
    Mat2 J;
    J.col(0) = b - a;
    J.col(1) = c - a;
    const double area = 0.5 * J.determinant();
    const Mat2 Jit = J.inverse().transpose();
    const Vec2 gu = Jit * Vec2(u(tri[1]) - u(tri[0]), u(tri[2]) - u(tri[0]));
    const Vec2 gv = Jit * Vec2(v(tri[1]) - v(tri[0]), v(tri[2]) - v(tri[0]));
    double v2 = 0.0, om2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      v2 += v(tri[k]) * v(tri[k]) / 3.0;
      om2 += (1 - v(tri[k])) * (1 - v(tri[k])) / 3.0;
    }
    e.elastic += 0.5 * mu * area * (v2 + p.eta) * gu.squaredNorm();
    e.dissipation += p.kappa * area * (om2 / (4 * p.epsilon) + p.epsilon * gv.squaredNorm());
  }
  e.total = e.elastic + e.dissipation;
  return e;
}

ModelParams test_params() {
  ModelParams p;
  p.alpha = 0.3;
  p.tau = 0.05;
  p.epsilon = 0.05;
  return p;
}

}  // namespace

TEST_SUITE("fem") {

TEST_CASE("interpolation") {
  const MeshPtr m = share(structured(Rect{}, 4, 4));
  const FeField one = interpolate(m, [](const Vec2&) { return 1.0; });
  CHECK(one.values.isOnes());
  const FeField aff = interpolate(m, [](const Vec2& x) { return 2 * x.x() - 3 * x.y() + 0.5; });
  const FeField sq = interpolate(m, [](const Vec2& x) { return x.x() * x.x(); });
  double max_err = 0.0;
  for (int t = 0; t < static_cast<int>(m->num_triangles()); ++t) {
    const Vec2 c = m->centroid(t);
    const Tri& tri = m->triangle(t);
    const double fa = (aff.values(tri[0]) + aff.values(tri[1]) + aff.values(tri[2])) / 3.0;
    CHECK(fa == doctest::Approx(2 * c.x() - 3 * c.y() + 0.5).epsilon(1e-14));
    const double fs = (sq.values(tri[0]) + sq.values(tri[1]) + sq.values(tri[2])) / 3.0;
    max_err = std::max(max_err, std::abs(fs - c.x() * c.x()));
  }
  CHECK(max_err <= 0.25 * 0.25 / 4.0);
  CHECK_THROWS_AS(interpolate(m, [](const Vec2&) { return std::numeric_limits<double>::quiet_NaN(); }),
                  Error);
}

TEST_CASE("constant-field energies") {
  ModelParams p;
  const MeshPtr sq = share(structured(Rect{}, 5, 5));
  const SurfaceChart flat = make_flat();
  const FeSpace fs(sq, flat);
  const FeField u0 = FeField::constant(sq, 0.0);
  const DiscreteEnergyParts sound = energy(fs, u0, FeField::constant(sq, 1.0), nullptr, p);
  CHECK(sound.elastic == 0.0);
  CHECK(sound.dissipation == 0.0);
  const DiscreteEnergyParts broken = energy(fs, u0, FeField::constant(sq, 0.0), nullptr, p);
  CHECK(rel_err(broken.dissipation, 1.0 / (4 * p.epsilon)) < 1e-12);
  CHECK(rel_err(broken.dissipation, 50.0) < 1e-12);

  const MeshPtr cm = share(structured(Rect{-std::numbers::pi / 2, std::numbers::pi / 2, 0, 1}, 8, 4));
  const FeSpace cs(cm, make_cylinder(1.0, 1.0));
  const DiscreteEnergyParts e =
      energy(cs, FeField::constant(cm, 1.0), FeField::constant(cm, 1.0), nullptr, p);
  CHECK(rel_err(e.elastic, std::numbers::pi) < 1e-12);
  CHECK(rel_err(e.total, e.elastic + e.dissipation) < 1e-14);
}

TEST_CASE("energy parts add up and penalty matches the Xh norm") {
  std::mt19937 rng(1);
  const ModelParams p = test_params();
  const MeshPtr m = share(testsupport::random_mesh(rng, Rect{}, 6, 6));
  const FeSpace fs(m, make_cylinder(1.0, 1.0));
  const int n = fs.num_dofs();
  const FeField u(m, random_vec(rng, n, -1, 1)), v(m, random_vec(rng, n, 0, 1)),
      pv(m, random_vec(rng, n, 0, 1));
  const DiscreteEnergyParts e = energy(fs, u, v, &pv, p);
  CHECK(rel_err(e.total, e.elastic + e.dissipation + e.penalty) < 1e-14);
  const FeField d(m, v.values - pv.values);
  CHECK(rel_err(e.penalty, p.alpha / (2 * p.tau) * std::pow(xh_norm(d), 2)) < 1e-12);
}

TEST_CASE("flat chart agrees with a textbook assembly") {
  std::mt19937 rng(4);
  const ModelParams p = test_params();
  const SurfaceChart flat = make_flat(Rect{0, 1, 0, 1}, 0.0, 1.7);
  const MeshPtr two = share(structured(Rect{}, 1, 1));
  for (const MeshPtr& m : {two, share(testsupport::random_mesh(rng, Rect{}, 5, 4))}) {
    const FeSpace fs(m, flat);
    const int n = fs.num_dofs();
    const VecX u = random_vec(rng, n, -1, 1), v = random_vec(rng, n, 0, 1);
    const DiscreteEnergyParts e = energy(fs, FeField(m, u), FeField(m, v), nullptr, p);
    const DiscreteEnergyParts o = textbook_energy(*m, u, v, p, 1.7);
    CHECK(rel_err(e.elastic, o.elastic) < 1e-12);
    CHECK(rel_err(e.dissipation, o.dissipation) < 1e-12);
  }
}

TEST_CASE("derivatives match central differences") {
  std::mt19937 rng(21);
  const ModelParams p = test_params();
  std::normal_distribution<double> g(0.0, 1.0);
  const SurfaceChart charts[] = {make_flat(), make_cylinder(1.0, 1.0),
                                 make_sphere(1.0, 1.5, 1.0, 0.5, 1.0)};
  const Rect rects[] = {Rect{}, Rect{-1.2, 1.2, 0, 1}, Rect{-1.0, 1.0, -0.8, 0.8}};
  for (int c = 0; c < 3; ++c) {
    const MeshPtr m = share(testsupport::random_mesh(rng, rects[c], 7, 7));
    const FeSpace fs(m, charts[c]);
    const int n = fs.num_dofs();
    const FeField u(m, random_vec(rng, n, -1, 1)), v(m, random_vec(rng, n, 0.1, 0.9)),
        pv(m, random_vec(rng, n, 0.5, 1));
    const VecX gu = energy_gradient_u(fs, u, v, p);
    const VecX gv = energy_gradient_v(fs, u, v, &pv, p);
    const double h = 1e-6;
    for (int k = 0; k < 20; ++k) {
      VecX d(n);
      for (int i = 0; i < n; ++i) d(i) = g(rng);
      const double fdu = (energy(fs, FeField(m, u.values + h * d), v, &pv, p).total -
                          energy(fs, FeField(m, u.values - h * d), v, &pv, p).total) /
                         (2 * h);
      const double fdv = (energy(fs, u, FeField(m, v.values + h * d), &pv, p).total -
                          energy(fs, u, FeField(m, v.values - h * d), &pv, p).total) /
                         (2 * h);
      REQUIRE(rel_err(fdu, gu.dot(d)) < 1e-5);
      REQUIRE(rel_err(fdv, gv.dot(d)) < 1e-5);
    }
  }
}

TEST_CASE("displacement matrix") {
  std::mt19937 rng(8);
  ModelParams p;
  const MeshPtr m = share(structured(Rect{}, 4, 4));
  const FeSpace flat(m, make_flat(Rect{}, 0.0, 2.0));
  const SpMat K1 = assemble_displacement_matrix(flat, FeField::constant(m, 1.0), p);
  CHECK((Eigen::MatrixXd(K1) - 2.0 * (1 + p.eta) * Eigen::MatrixXd(flat.stiffness())).cwiseAbs().maxCoeff() <
        1e-12);
  const MeshPtr cm = share(structured(Rect{-1, 1, 0, 1}, 6, 3));
  const FeSpace cyl(cm, make_cylinder(1.0, 1.0));
  const SpMat K0 = assemble_displacement_matrix(cyl, FeField::constant(cm, 0.0), p);
  const Eigen::MatrixXd expect =
      p.eta * Eigen::MatrixXd(cyl.stiffness()) + Eigen::MatrixXd(cyl.b_mass());
  CHECK((Eigen::MatrixXd(K0) - expect).cwiseAbs().maxCoeff() < 1e-12);
  const SpMat Kr = assemble_displacement_matrix(cyl, FeField(cm, random_vec(rng, cyl.num_dofs(), 0, 1)), p);
  const Eigen::MatrixXd D(Kr);
  CHECK((D - D.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * D.cwiseAbs().maxCoeff());
  CHECK(Eigen::LLT<Eigen::MatrixXd>(D).info() == Eigen::Success);
  // Flat chart with interior dofs only: SPD after removing the boundary.
  std::vector<int> interior;
  for (int i = 0; i < flat.num_dofs(); ++i)
    if (!m->is_boundary_vertex(i)) interior.push_back(i);
  Eigen::MatrixXd Kf = Eigen::MatrixXd(K1)(interior, interior);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Kf).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("phase system") {
  std::mt19937 rng(12);
  ModelParams p;
  p.alpha = 0.0;
  const MeshPtr m = share(structured(Rect{}, 5, 5));
  const FeSpace fs(m, make_flat());
  const int n = fs.num_dofs();
  const PhaseSystem s0 = assemble_phase_system(fs, FeField::constant(m, 0.0), FeField::constant(m, 1.0), p);
  const VecX vstar = Eigen::MatrixXd(s0.H).ldlt().solve(s0.c);
  CHECK((vstar - VecX::Ones(n)).cwiseAbs().maxCoeff() < 1e-10);

  // Quadratic model equals the energy, H symmetric, zero-order part diagonal.
  const ModelParams q = test_params();
  const FeField u(m, random_vec(rng, n, -1, 1)), pv(m, random_vec(rng, n, 0, 1));
  const PhaseSystem s = assemble_phase_system(fs, u, pv, q);
  const Eigen::MatrixXd H(s.H);
  CHECK((H - H.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd zero = H - 2 * q.kappa * q.epsilon * Eigen::MatrixXd(fs.stiffness());
  CHECK((zero - Eigen::MatrixXd(zero.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(Eigen::LLT<Eigen::MatrixXd>(H).info() == Eigen::Success);
  for (int k = 0; k < 5; ++k) {
    const VecX v = random_vec(rng, n, 0, 1);
    const double model = 0.5 * v.dot(s.H * v) - s.c.dot(v) + s.constant;
    CHECK(rel_err(model, energy(fs, u, FeField(m, v), &pv, q).total) < 1e-12);
  }

  // One-vertex closed form: diagonal stationary value under a strong strain.
  const VecX w = strain_weights(fs, u);
  for (int l = 0; l < n; ++l) {
    const double c0 = q.kappa / (2 * q.epsilon) * fs.lumped_sqrt_a()(l);
    const double pen = q.alpha / q.tau * fs.lumped_area()(l);
    const double expect = (c0 + pen * pv.values(l)) / (fs.mu() * w(l) + c0 + pen);
    CHECK(s.c(l) / (H(l, l) - 2 * q.kappa * q.epsilon * fs.stiffness().coeff(l, l)) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("mesh mismatch is detected") {
  const MeshPtr a = share(structured(Rect{}, 2, 2));
  const MeshPtr b = share(structured(Rect{}, 3, 2));
  const FeSpace fs(a, make_flat());
  CHECK_THROWS_AS(energy(fs, FeField::constant(b, 0.0), FeField::constant(a, 1.0), nullptr, ModelParams{}),
                  Error);
  CHECK_THROWS_AS(FeField(a, VecX::Zero(3)), Error);
}

}
