#include "shellfrac/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "shellfrac/error.hpp"

namespace shellfrac {

int DirichletData::count() const {
  return static_cast<int>(std::count(fixed.begin(), fixed.end(), static_cast<char>(1)));
}

DirichletData no_dirichlet(const Triangulation& mesh) {
  DirichletData d;
  d.fixed.assign(mesh.num_vertices(), 0);
  d.values = VecX::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  return d;
}

DirichletData dirichlet_from_labels(const Triangulation& mesh,
                                    const std::function<double(BoundaryLabel)>& value_of) {
  DirichletData d = no_dirichlet(mesh);
  std::vector<int> rank(mesh.num_vertices(), 0);  // 0 none, 1 zero, 2 signed
  for (const BoundaryEdge& e : mesh.boundary()) {
    if (!is_dirichlet(e.label)) continue;
    const int r = e.label == BoundaryLabel::DirichletZero ? 1 : 2;
    const double val = value_of(e.label);
    for (int vtx : {e.a, e.b}) {
      auto& rk = rank[static_cast<std::size_t>(vtx)];
      if (r > rk) {
        rk = r;
        d.fixed[static_cast<std::size_t>(vtx)] = 1;
        d.values(vtx) = val;
      }
    }
  }
  return d;
}

namespace {

// Submatrix of A restricted to rows/cols with map[i] >= 0.
SpMat restrict_matrix(const SpMat& A, const std::vector<int>& map, int n_sub) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(A.nonZeros()));
  for (int col = 0; col < A.outerSize(); ++col) {
    const int jc = map[static_cast<std::size_t>(col)];
    if (jc < 0) continue;
    for (SpMat::InnerIterator it(A, col); it; ++it) {
      const int ir = map[static_cast<std::size_t>(it.row())];
      if (ir >= 0) trip.emplace_back(ir, jc, it.value());
    }
  }
  SpMat S(n_sub, n_sub);
  S.setFromTriplets(trip.begin(), trip.end());
  S.makeCompressed();
  return S;
}

VecX direct_solve(const SpMat& A, const VecX& b) {
  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(A);
  if (ldlt.info() != Eigen::Success) fail(ErrorCode::SolverFailure, "sparse factorization failed");
  VecX x = ldlt.solve(b);
  if (ldlt.info() != Eigen::Success || !x.allFinite())
    fail(ErrorCode::SolverFailure, "sparse triangular solve failed");
  const VecX d = ldlt.vectorD();
  if ((d.array() <= 0.0).any()) fail(ErrorCode::Solvability, "system matrix is not positive definite");
  return x;
}

bool pcg(const SpMat& A, const VecX& b, VecX& x, double rel_tol, int max_iter, LinearSolveInfo& info) {
  const VecX diag = A.diagonal();
  if ((diag.array() <= 0.0).any()) return false;
  const VecX inv = diag.cwiseInverse();
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    info.relative_residual = 0.0;
    return true;
  }
  VecX r = b - A * x;
  VecX z = inv.cwiseProduct(r);
  VecX p = z;
  double rz = r.dot(z);
  VecX Ap(b.size());
  for (int it = 0; it < max_iter; ++it) {
    const double rn = r.norm() / bnorm;
    info.iterations = it;
    info.relative_residual = rn;
    if (rn <= rel_tol) return true;
    Ap.noalias() = A * p;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) return false;
    const double a = rz / pAp;
    x += a * p;
    r -= a * Ap;
    z = inv.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  info.relative_residual = (b - A * x).norm() / bnorm;
  return info.relative_residual <= rel_tol;
}

}  // namespace

VecX solve_spd(const SpMat& A, const VecX& b, const VecX* x0, const SolverOptions& opts,
               LinearSolveInfo* info_out) {
  LinearSolveInfo info;
  const auto n = b.size();
  VecX x = (x0 && x0->size() == n) ? *x0 : VecX::Zero(n);
  if (n == 0) {
    if (info_out) *info_out = info;
    return x;
  }
  bool ok = false;
  if (opts.linear != LinearMethod::Direct) {
    const int max_iter = opts.cg_max_iter > 0 ? opts.cg_max_iter : static_cast<int>(10 * n);
    ok = pcg(A, b, x, opts.cg_rel_tol, max_iter, info);
  }
  if (!ok) {
    if (opts.linear == LinearMethod::ConjugateGradient)
      fail(ErrorCode::SolverFailure, "conjugate gradient did not converge");
    x = direct_solve(A, b);
    info.used_direct = true;
    const double bn = b.norm();
    info.relative_residual = bn > 0.0 ? (b - A * x).norm() / bn : 0.0;
  }
  if (info_out) *info_out = info;
  return x;
}

VecX box_kkt_residual(const SpMat& H, const VecX& c, const VecX& lo, const VecX& hi,
                      const VecX& x) {
  const VecX g = H * x - c;
  VecX r(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    // x - P(x - g) = median(x - hi, g, x - lo)
    const double a = x(i) - hi(i);
    const double b = g(i);
    const double d = std::isfinite(lo(i)) ? x(i) - lo(i) : std::numeric_limits<double>::infinity();
    r(i) = std::max(a, std::min(b, d));
  }
  return r;
}

namespace {

// Solves the problem restricted to free variables (state == 0) with the
// others fixed at their bounds.
VecX solve_free(const SpMat& H, const VecX& c, const std::vector<int>& state, const VecX& x,
                const SolverOptions& opts) {
  const auto n = x.size();
  std::vector<int> map(static_cast<std::size_t>(n), -1);
  int nf = 0;
  VecX xfix = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (state[static_cast<std::size_t>(i)] == 0) {
      map[static_cast<std::size_t>(i)] = nf++;
      xfix(i) = 0.0;
    }
  }
  VecX y = x;
  if (nf == 0) return y;
  const VecX rhs_full = c - H * xfix;
  VecX rhs(nf), guess(nf);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = map[static_cast<std::size_t>(i)];
    if (k >= 0) {
      rhs(k) = rhs_full(i);
      guess(k) = x(i);
    }
  }
  const SpMat Hff = restrict_matrix(H, map, nf);
  const VecX sol = solve_spd(Hff, rhs, &guess, opts);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = map[static_cast<std::size_t>(i)];
    if (k >= 0) y(i) = sol(k);
  }
  return y;
}

double qp_scale(const SpMat& H, const VecX& c, const VecX& x) {
  return std::max({1.0, c.lpNorm<Eigen::Infinity>(), (H * x).lpNorm<Eigen::Infinity>()});
}

// Primal active-set method from a feasible point; finite for strictly convex
// problems.
VecX primal_active_set(const SpMat& H, const VecX& c, const VecX& lo, const VecX& hi, VecX x,
                       const SolverOptions& opts, int& iterations) {
  const auto n = x.size();
  std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 free, 1 upper, -1 lower
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = std::clamp(x(i), std::isfinite(lo(i)) ? lo(i) : x(i), hi(i));
    if (x(i) >= hi(i)) {
      x(i) = hi(i);
      state[static_cast<std::size_t>(i)] = 1;
    } else if (std::isfinite(lo(i)) && x(i) <= lo(i)) {
      x(i) = lo(i);
      state[static_cast<std::size_t>(i)] = -1;
    }
  }
  const int max_iter = static_cast<int>(20 * n + 100);
  for (int it = 0; it < max_iter; ++it) {
    iterations = it + 1;
    const VecX y = solve_free(H, c, state, x, opts);
    const VecX p = y - x;
    const double step_size = p.lpNorm<Eigen::Infinity>();
    if (step_size <= 1e-14 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      x = y;
      const VecX g = H * x - c;
      const double tol = opts.qp_tol * qp_scale(H, c, x);
      Eigen::Index worst = -1;
      double worst_val = tol;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int s = state[static_cast<std::size_t>(i)];
        const double viol = s == 1 ? g(i) : (s == -1 ? -g(i) : 0.0);
        if (viol > worst_val) {
          worst_val = viol;
          worst = i;
        }
      }
      if (worst < 0) return x;
      state[static_cast<std::size_t>(worst)] = 0;
      continue;
    }
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] != 0) continue;
      if (p(i) > 0.0) alpha = std::min(alpha, (hi(i) - x(i)) / p(i));
      else if (p(i) < 0.0 && std::isfinite(lo(i))) alpha = std::min(alpha, (lo(i) - x(i)) / p(i));
    }
    alpha = std::max(alpha, 0.0);
    x += alpha * p;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] != 0) continue;
      const double span = 1e-12 * (1.0 + std::abs(x(i)));
      if (p(i) > 0.0 && x(i) >= hi(i) - span) {
        x(i) = hi(i);
        state[static_cast<std::size_t>(i)] = 1;
      } else if (p(i) < 0.0 && std::isfinite(lo(i)) && x(i) <= lo(i) + span) {
        x(i) = lo(i);
        state[static_cast<std::size_t>(i)] = -1;
      }
    }
  }
  fail(ErrorCode::SolverFailure, "active-set QP solver did not converge");
}

}  // namespace

BoxQpResult solve_box_qp(const SpMat& H, const VecX& c, const VecX& lo, const VecX& hi,
                         const VecX* x0, const SolverOptions& opts) {
  const auto n = c.size();
  if (H.rows() != n || H.cols() != n || lo.size() != n || hi.size() != n)
    fail(ErrorCode::InvalidParameter, "QP dimensions do not match");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(lo(i)) && lo(i) > hi(i))
      fail(ErrorCode::InvalidParameter, "QP bounds are inconsistent (lo > hi)");
  }
  BoxQpResult res;
  VecX x = (x0 && x0->size() == n) ? *x0 : VecX(hi.cwiseMin(VecX::Constant(n, 1.0)));
  for (Eigen::Index i = 0; i < n; ++i)
    x(i) = std::min(std::isfinite(lo(i)) ? std::max(x(i), lo(i)) : x(i), hi(i));
  const VecX diag = H.diagonal();

  // Primal-dual active set; a node is active when the Jacobi update of x
  // leaves the box.
  std::vector<int> state(static_cast<std::size_t>(n), 0), prev_state;
  VecX g = H * x - c;
  for (int it = 0; it < opts.qp_max_iter; ++it) {
    res.iterations = it + 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double trial = x(i) - g(i) / diag(i);
      int s = 0;
      if (trial > hi(i)) s = 1;
      else if (std::isfinite(lo(i)) && trial < lo(i)) s = -1;
      state[static_cast<std::size_t>(i)] = s;
    }
    if (it > 0 && state == prev_state) break;
    prev_state = state;
    VecX xs = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 1) xs(i) = hi(i);
      else if (s == -1) xs(i) = lo(i);
    }
    x = solve_free(H, c, state, xs, opts);
    g = H * x - c;
  }
  const double scale = qp_scale(H, c, x);
  const VecX r = box_kkt_residual(H, c, lo, hi, x);
  if (state == prev_state && r.lpNorm<Eigen::Infinity>() <= opts.qp_tol * scale) {
    res.x = x;
    return res;
  }
  int pas_iter = 0;
  res.x = primal_active_set(H, c, lo, hi, x, opts, pas_iter);
  res.iterations += pas_iter;
  res.used_fallback = true;
  return res;
}

FeField solve_displacement(const FeSpace& space, const FeField& v, const DirichletData& bc,
                           const ModelParams& params, const SolverOptions& opts,
                           const FeField* u_guess) {
  space.require_owns(v);
  const int n = space.num_dofs();
  if (static_cast<int>(bc.fixed.size()) != n || bc.values.size() != n)
    fail(ErrorCode::MeshMismatch, "Dirichlet data does not match the mesh");
  if (bc.empty() && space.b_mass().norm() == 0.0)
    fail(ErrorCode::Solvability,
         "displacement problem is singular: no Dirichlet vertices and zero curvature coefficient");
  const SpMat K = assemble_displacement_matrix(space, v, params);
  std::vector<int> map(static_cast<std::size_t>(n), -1);
  int nf = 0;
  VecX ud = VecX::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (bc.fixed[static_cast<std::size_t>(i)]) ud(i) = bc.values(i);
    else map[static_cast<std::size_t>(i)] = nf++;
  }
  const VecX load_full = -(K * ud);
  VecX rhs(nf), guess = VecX::Zero(nf);
  for (int i = 0; i < n; ++i) {
    const int k = map[static_cast<std::size_t>(i)];
    if (k < 0) continue;
    rhs(k) = load_full(i);
    if (u_guess && space.owns(*u_guess)) guess(k) = u_guess->values(i);
  }
  const SpMat Kff = restrict_matrix(K, map, nf);
  const VecX sol = solve_spd(Kff, rhs, &guess, opts);
  VecX u = ud;
  for (int i = 0; i < n; ++i) {
    const int k = map[static_cast<std::size_t>(i)];
    if (k >= 0) u(i) = sol(k);
  }
  return FeField(space.mesh_ptr(), std::move(u));
}

FeField solve_phase(const FeSpace& space, const FeField& u, const FeField& prev_v,
                    const FeField& v_bound, const ModelParams& params, const SolverOptions& opts,
                    const FeField* v_guess) {
  space.require_owns(v_bound);
  const PhaseSystem sys = assemble_phase_system(space, u, prev_v, params);
  const auto n = sys.c.size();
  const VecX lo = opts.lower_bound_zero
                      ? VecX::Zero(n)
                      : VecX::Constant(n, -std::numeric_limits<double>::infinity());
  VecX hi = v_bound.values;
  if (opts.lower_bound_zero) hi = hi.cwiseMax(0.0);
  const VecX* x0 = (v_guess && space.owns(*v_guess)) ? &v_guess->values : nullptr;
  BoxQpResult qp = solve_box_qp(sys.H, sys.c, lo, hi, x0, opts);
  return FeField(space.mesh_ptr(), std::move(qp.x));
}

AltMinResult alternate_minimize(const FeSpace& space, const FeField& u0, const FeField& v0,
                                const FeField& prev_v, const DirichletData& bc,
                                const ModelParams& params, const SolverOptions& opts) {
  space.require_owns(u0);
  space.require_owns(v0);
  space.require_owns(prev_v);
  if (opts.max_sweeps < 1) fail(ErrorCode::InvalidParameter, "max_sweeps must be at least 1");
  AltMinResult res;
  res.u = u0;
  res.v = v0;
  for (int j = 1; j <= opts.max_sweeps; ++j) {
    res.u = solve_displacement(space, res.v, bc, params, opts, &res.u);
    FeField vn = solve_phase(space, res.u, prev_v, prev_v, params, opts, &res.v);
    res.final_increment = (vn.values - res.v.values).lpNorm<Eigen::Infinity>();
    res.v = std::move(vn);
    res.iterations = j;
    res.energy_trace.push_back(energy(space, res.u, res.v, &prev_v, params).total);
    if (res.final_increment < opts.tol_v) {
      res.converged = true;
      break;
    }
  }
  return res;
}

CriticalPointResidual residual(const FeSpace& space, const FeField& u, const FeField& v,
                               const FeField& v_bound, const DirichletData& bc,
                               const ModelParams& params, bool lower_bound_zero) {
  space.require_owns(u);
  space.require_owns(v);
  space.require_owns(v_bound);
  const int n = space.num_dofs();
  CriticalPointResidual out;
  const SpMat K = assemble_displacement_matrix(space, v, params);
  const VecX gu = K * u.values;
  VecX ud = VecX::Zero(n);
  for (int i = 0; i < n; ++i)
    if (bc.fixed[static_cast<std::size_t>(i)]) ud(i) = bc.values(i);
  const VecX load = K * ud;
  double load_inf = 0.0;
  for (int i = 0; i < n; ++i) {
    if (bc.fixed[static_cast<std::size_t>(i)]) continue;
    out.stationarity_u = std::max(out.stationarity_u, std::abs(gu(i)));
    load_inf = std::max(load_inf, std::abs(load(i)));
  }
  const PhaseSystem sys = assemble_phase_system(space, u, v_bound, params);
  const VecX lo = lower_bound_zero ? VecX::Zero(n)
                                   : VecX::Constant(n, -std::numeric_limits<double>::infinity());
  VecX hi = v_bound.values;
  if (lower_bound_zero) hi = hi.cwiseMax(0.0);
  out.complementarity_v = box_kkt_residual(sys.H, sys.c, lo, hi, v.values).lpNorm<Eigen::Infinity>();
  out.scale = std::max({1.0, load_inf, (sys.H * v.values).lpNorm<Eigen::Infinity>()});
  return out;
}

}  // namespace shellfrac
