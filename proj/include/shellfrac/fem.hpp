#pragma once

#include <array>
#include <functional>
#include <optional>

#include <Eigen/Sparse>

#include "shellfrac/geometry.hpp"
#include "shellfrac/mesh.hpp"

namespace shellfrac {

using VecX = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Model parameters that are not chart properties (mu is taken from the chart).
struct ModelParams {
  double kappa = 1.0;
  double epsilon = 5e-3;
  double eta = 1e-5;
  double alpha = 1e-3;
  double tau = 1e-2;
};

void validate(const ModelParams& p);

// Nodal values of a P1 function on a given mesh.
struct FeField {
  MeshPtr mesh;
  VecX values;

  FeField() = default;
  FeField(MeshPtr m, VecX v);
  static FeField constant(MeshPtr m, double value);
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

bool same_mesh(const FeField& a, const FeField& b);
void require_same_mesh(const FeField& a, const FeField& b);

FeField interpolate(MeshPtr mesh, const std::function<double(const Vec2&)>& f);

// Quadrature: the three edge midpoints of a triangle, equal weights |T|/3.
// Midpoint k lies on the edge opposite local vertex k.
inline Vec2 edge_midpoint(const Triangulation& mesh, int t, int k) {
  const Tri& tri = mesh.triangle(t);
  return 0.5 * (mesh.vertex(tri[(k + 1) % 3]) + mesh.vertex(tri[(k + 2) % 3]));
}

// Two-point Gauss rule on [0, 1].
inline constexpr std::array<double, 2> kGauss2Points = {0.21132486540518711775,
                                                        0.78867513459481288225};

// Mesh + chart with chart coefficients sampled at quadrature points and the
// sparsity pattern of P1 matrices. Built once per mesh, read-only afterwards.
class FeSpace {
public:
  struct ElementData {
    std::array<Mat2, 3> A;  // at edge midpoints
    std::array<double, 3> sqrt_a;
    std::array<double, 3> b;
    std::array<Vec2, 3> divA;
  };

  FeSpace(MeshPtr mesh, const SurfaceChart& chart);

  const Triangulation& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const SurfaceChart& chart() const { return chart_; }
  double mu() const { return chart_.lame_mu(); }
  int num_dofs() const { return static_cast<int>(mesh_->num_vertices()); }

  const ElementData& element(int t) const { return elems_[static_cast<std::size_t>(t)]; }

  // K_lm = int grad xi_l^T A grad xi_m.
  const SpMat& stiffness() const { return stiffness_; }
  // M_lm = int b xi_l xi_m.
  const SpMat& b_mass() const { return b_mass_; }
  // int xi_l sqrt(a) and int xi_l.
  const VecX& lumped_sqrt_a() const { return lumped_sqrt_a_; }
  const VecX& lumped_area() const { return lumped_area_; }

  // Zero matrix with the P1 sparsity pattern; slots(t)[3*i+j] indexes into
  // its value array for the local pair (i, j) of element t.
  SpMat zero_matrix() const { return pattern_; }
  const std::array<int, 9>& slots(int t) const { return slots_[static_cast<std::size_t>(t)]; }

  bool owns(const FeField& f) const;
  void require_owns(const FeField& f) const;

private:
  MeshPtr mesh_;
  SurfaceChart chart_;
  std::vector<ElementData> elems_;
  SpMat pattern_;
  std::vector<std::array<int, 9>> slots_;
  SpMat stiffness_;
  SpMat b_mass_;
  VecX lumped_sqrt_a_;
  VecX lumped_area_;
};

struct DiscreteEnergyParts {
  double elastic = 0.0;
  double dissipation = 0.0;
  double penalty = 0.0;
  double total = 0.0;  // elastic + dissipation + penalty
};

// Elastic energy, dissipated energy and (when prev_v is given) the
// irreversibility penalty (alpha / 2 tau) ||v - prev_v||^2.
DiscreteEnergyParts energy(const FeSpace& space, const FeField& u, const FeField& v,
                           const FeField* prev_v, const ModelParams& params);
DiscreteEnergyParts energy(const FeField& u, const FeField& v, const FeField* prev_v,
                           const SurfaceChart& chart, const ModelParams& params);

// Squared nodal norm int Pi_h(v^2), returned as its square root.
double xh_norm(const FeField& v);

// Gradient-squared weights w_l = int xi_l grad u^T A grad u.
VecX strain_weights(const FeSpace& space, const FeField& u);

// Full (unconstrained) matrix of the displacement problem for fixed v:
//   K_lm = int b xi_l xi_m + mu int (Pi_h(v^2) + eta) grad xi_l^T A grad xi_m.
SpMat assemble_displacement_matrix(const FeSpace& space, const FeField& v,
                                   const ModelParams& params);

// Quadratic model of the phase problem for fixed u: 1/2 v^T H v - c^T v + const
// equals F_h(u, v) + penalty(v).
struct PhaseSystem {
  SpMat H;
  VecX c;
  double constant = 0.0;
};
PhaseSystem assemble_phase_system(const FeSpace& space, const FeField& u, const FeField& prev_v,
                                  const ModelParams& params);

// Derivatives of the discrete energy, as nodal vectors.
VecX energy_gradient_u(const FeSpace& space, const FeField& u, const FeField& v,
                       const ModelParams& params);
VecX energy_gradient_v(const FeSpace& space, const FeField& u, const FeField& v,
                       const FeField* prev_v, const ModelParams& params);

}  // namespace shellfrac
