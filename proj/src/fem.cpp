#include "shellfrac/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shellfrac/error.hpp"

namespace shellfrac {

void validate(const ModelParams& p) {
  auto bad = [](const char* name, double v) {
    std::ostringstream os;
    os << "parameter " << name << " is out of range (" << v << ")";
    fail(ErrorCode::InvalidParameter, os.str());
  };
  if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) bad("kappa", p.kappa);
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) bad("epsilon", p.epsilon);
  if (!(p.eta > 0.0) || !std::isfinite(p.eta)) bad("eta", p.eta);
  if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha)) bad("alpha", p.alpha);
  if (!(p.tau > 0.0) || !std::isfinite(p.tau)) bad("tau", p.tau);
}

FeField::FeField(MeshPtr m, VecX v) : mesh(std::move(m)), values(std::move(v)) {
  if (!mesh) fail(ErrorCode::InvalidParameter, "field without a mesh");
  if (static_cast<std::size_t>(values.size()) != mesh->num_vertices())
    fail(ErrorCode::MeshMismatch, "field length does not match the number of mesh vertices");
}

FeField FeField::constant(MeshPtr m, double value) {
  const auto n = static_cast<Eigen::Index>(m->num_vertices());
  return FeField(std::move(m), VecX::Constant(n, value));
}

bool same_mesh(const FeField& a, const FeField& b) {
  if (!a.mesh || !b.mesh) return false;
  return a.mesh == b.mesh || a.mesh->same_as(*b.mesh);
}

void require_same_mesh(const FeField& a, const FeField& b) {
  if (!same_mesh(a, b)) fail(ErrorCode::MeshMismatch, "fields live on different meshes");
}

FeField interpolate(MeshPtr mesh, const std::function<double(const Vec2&)>& f) {
  VecX vals(static_cast<Eigen::Index>(mesh->num_vertices()));
  for (int i = 0; i < vals.size(); ++i) {
    const double y = f(mesh->vertex(i));
    if (!std::isfinite(y)) fail(ErrorCode::Input, "interpolated function is not finite at a vertex");
    vals(i) = y;
  }
  return FeField(std::move(mesh), std::move(vals));
}

FeSpace::FeSpace(MeshPtr mesh, const SurfaceChart& chart) : mesh_(std::move(mesh)), chart_(chart) {
  const Triangulation& m = *mesh_;
  const int nt = static_cast<int>(m.num_triangles());
  const int nv = static_cast<int>(m.num_vertices());
  elems_.resize(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    ElementData& d = elems_[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      const ChartEval ce = chart_.eval(edge_midpoint(m, t, k));
      d.A[k] = ce.A;
      d.sqrt_a[k] = ce.sqrt_a;
      d.b[k] = ce.b_coeff;
      d.divA[k] = ce.divA;
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(9 * nt));
  for (const Tri& tri : m.triangles())
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], 0.0);
  pattern_.resize(nv, nv);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();

  slots_.resize(static_cast<std::size_t>(nt));
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  for (int t = 0; t < nt; ++t) {
    const Tri& tri = m.triangle(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const int col = tri[j];
        const int* b = inner + outer[col];
        const int* e = inner + outer[col + 1];
        const int* it = std::lower_bound(b, e, tri[i]);
        slots_[static_cast<std::size_t>(t)][3 * i + j] = static_cast<int>(it - inner);
      }
    }
  }

  stiffness_ = pattern_;
  b_mass_ = pattern_;
  lumped_sqrt_a_ = VecX::Zero(nv);
  lumped_area_ = VecX::Zero(nv);
  double* K = stiffness_.valuePtr();
  double* Mb = b_mass_.valuePtr();
  for (int t = 0; t < nt; ++t) {
    const Tri& tri = m.triangle(t);
    const auto& g = m.basis_gradients(t);
    const ElementData& d = elems_[static_cast<std::size_t>(t)];
    const double w = m.area(t) / 3.0;
    const Mat2 Abar = w * (d.A[0] + d.A[1] + d.A[2]);
    const auto& s = slots_[static_cast<std::size_t>(t)];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        K[s[3 * i + j]] += g[i].dot(Abar * g[j]);
        // xi_i xi_j at midpoint k: 1/4 if neither is k, else 0.
        double mb = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double xi = (i == k) ? 0.0 : 0.5;
          const double xj = (j == k) ? 0.0 : 0.5;
          mb += d.b[k] * xi * xj;
        }
        Mb[s[3 * i + j]] += w * mb;
      }
      double ls = 0.0;
      for (int k = 0; k < 3; ++k)
        if (k != i) ls += 0.5 * d.sqrt_a[k];
      lumped_sqrt_a_(tri[i]) += w * ls;
      lumped_area_(tri[i]) += m.area(t) / 3.0;
    }
  }
}

bool FeSpace::owns(const FeField& f) const {
  return f.mesh && (f.mesh == mesh_ || f.mesh->same_as(*mesh_)) &&
         f.values.size() == num_dofs();
}

void FeSpace::require_owns(const FeField& f) const {
  if (!owns(f)) fail(ErrorCode::MeshMismatch, "field does not live on this mesh");
}

namespace {

// Pi_h(v^2) + eta at each edge midpoint of element t.
std::array<double, 3> midpoint_degradation(const Tri& tri, const VecX& v, double eta) {
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) {
    const double a = v(tri[(k + 1) % 3]);
    const double b = v(tri[(k + 2) % 3]);
    out[static_cast<std::size_t>(k)] = 0.5 * (a * a + b * b) + eta;
  }
  return out;
}

Vec2 element_gradient(const Triangulation& m, int t, const VecX& w) {
  const Tri& tri = m.triangle(t);
  const auto& g = m.basis_gradients(t);
  return w(tri[0]) * g[0] + w(tri[1]) * g[1] + w(tri[2]) * g[2];
}

}  // namespace

DiscreteEnergyParts energy(const FeSpace& space, const FeField& u, const FeField& v,
                           const FeField* prev_v, const ModelParams& params) {
  space.require_owns(u);
  space.require_owns(v);
  if (prev_v) space.require_owns(*prev_v);
  const Triangulation& m = space.mesh();
  const double mu = space.mu();

  double grad_term = 0.0;
  double grad_v = 0.0;
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const auto& d = space.element(t);
    const Vec2 gu = element_gradient(m, t, u.values);
    const Vec2 gv = element_gradient(m, t, v.values);
    const auto deg = midpoint_degradation(m.triangle(t), v.values, params.eta);
    const double w = m.area(t) / 3.0;
    for (int k = 0; k < 3; ++k) {
      grad_term += w * deg[static_cast<std::size_t>(k)] * gu.dot(d.A[k] * gu);
      grad_v += w * gv.dot(d.A[k] * gv);
    }
  }
  DiscreteEnergyParts e;
  e.elastic = 0.5 * u.values.dot(space.b_mass() * u.values) + 0.5 * mu * grad_term;
  const VecX one_minus = VecX::Ones(v.values.size()) - v.values;
  e.dissipation = params.kappa * (one_minus.cwiseProduct(one_minus).dot(space.lumped_sqrt_a()) /
                                      (4.0 * params.epsilon) +
                                  params.epsilon * grad_v);
  if (prev_v) {
    const VecX diff = v.values - prev_v->values;
    e.penalty = params.alpha / (2.0 * params.tau) * diff.cwiseProduct(diff).dot(space.lumped_area());
  }
  e.total = e.elastic + e.dissipation + e.penalty;
  return e;
}

DiscreteEnergyParts energy(const FeField& u, const FeField& v, const FeField* prev_v,
                           const SurfaceChart& chart, const ModelParams& params) {
  require_same_mesh(u, v);
  if (prev_v) require_same_mesh(u, *prev_v);
  const FeSpace space(u.mesh, chart);
  return energy(space, u, v, prev_v, params);
}

double xh_norm(const FeField& v) {
  const Triangulation& m = *v.mesh;
  double s = 0.0;
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const Tri& tri = m.triangle(t);
    double q = 0.0;
    for (int k = 0; k < 3; ++k) q += v.values(tri[k]) * v.values(tri[k]);
    s += m.area(t) / 3.0 * q;
  }
  return std::sqrt(s);
}

VecX strain_weights(const FeSpace& space, const FeField& u) {
  space.require_owns(u);
  const Triangulation& m = space.mesh();
  VecX w = VecX::Zero(space.num_dofs());
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const auto& d = space.element(t);
    const Tri& tri = m.triangle(t);
    const Vec2 gu = element_gradient(m, t, u.values);
    const double q = m.area(t) / 3.0;
    for (int k = 0; k < 3; ++k) {
      const double val = q * gu.dot(d.A[k] * gu);
      // xi = 1/2 at the midpoint for the two vertices of the edge
      w(tri[(k + 1) % 3]) += 0.5 * val;
      w(tri[(k + 2) % 3]) += 0.5 * val;
    }
  }
  return w;
}

SpMat assemble_displacement_matrix(const FeSpace& space, const FeField& v,
                                   const ModelParams& params) {
  space.require_owns(v);
  const Triangulation& m = space.mesh();
  SpMat K = space.zero_matrix();
  double* val = K.valuePtr();
  const double mu = space.mu();
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const auto& d = space.element(t);
    const auto& g = m.basis_gradients(t);
    const auto deg = midpoint_degradation(m.triangle(t), v.values, params.eta);
    const double w = m.area(t) / 3.0;
    Mat2 Aeff = Mat2::Zero();
    for (int k = 0; k < 3; ++k) Aeff += (w * deg[static_cast<std::size_t>(k)]) * d.A[k];
    Aeff *= mu;
    const auto& s = space.slots(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) val[s[3 * i + j]] += g[i].dot(Aeff * g[j]);
  }
  K += space.b_mass();
  return K;
}

PhaseSystem assemble_phase_system(const FeSpace& space, const FeField& u, const FeField& prev_v,
                                  const ModelParams& params) {
  space.require_owns(u);
  space.require_owns(prev_v);
  const VecX w = strain_weights(space, u);
  const double c0 = params.kappa / (2.0 * params.epsilon);
  const double pen = params.alpha / params.tau;
  VecX diag = space.mu() * w + c0 * space.lumped_sqrt_a() + pen * space.lumped_area();

  PhaseSystem sys;
  sys.H = (2.0 * params.kappa * params.epsilon) * space.stiffness();
  for (int l = 0; l < diag.size(); ++l) sys.H.coeffRef(l, l) += diag(l);
  sys.c = c0 * space.lumped_sqrt_a() +
          pen * space.lumped_area().cwiseProduct(prev_v.values);

  // Terms independent of v.
  const DiscreteEnergyParts e0 = energy(space, u, FeField::constant(space.mesh_ptr(), 0.0),
                                        &prev_v, params);
  sys.constant = e0.total;
  return sys;
}

VecX energy_gradient_u(const FeSpace& space, const FeField& u, const FeField& v,
                       const ModelParams& params) {
  return assemble_displacement_matrix(space, v, params) * u.values;
}

VecX energy_gradient_v(const FeSpace& space, const FeField& u, const FeField& v,
                       const FeField* prev_v, const ModelParams& params) {
  const FeField pv = prev_v ? *prev_v : v;
  ModelParams p = params;
  if (!prev_v) p.alpha = 0.0;
  const PhaseSystem sys = assemble_phase_system(space, u, pv, p);
  return sys.H * v.values - sys.c;
}

}  // namespace shellfrac
