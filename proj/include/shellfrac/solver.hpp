#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "shellfrac/fem.hpp"

namespace shellfrac {

// Prescribed nodal values; fixed[l] != 0 marks a Dirichlet vertex.
struct DirichletData {
  std::vector<char> fixed;
  VecX values;

  int count() const;
  bool empty() const { return count() == 0; }
};

DirichletData no_dirichlet(const Triangulation& mesh);
// Collects the vertices of labeled Dirichlet edges. A vertex shared by
// DirichletPlus/Minus and DirichletZero edges takes the nonzero label's value.
DirichletData dirichlet_from_labels(const Triangulation& mesh,
                                    const std::function<double(BoundaryLabel)>& value_of);

enum class LinearMethod { Auto, ConjugateGradient, Direct };

struct SolverOptions {
  LinearMethod linear = LinearMethod::Auto;
  double cg_rel_tol = 1e-10;
  int cg_max_iter = 0;  // 0: 10 n
  int qp_max_iter = 100;
  double qp_tol = 1e-10;  // relative to the QP scale
  int max_sweeps = 8;
  double tol_v = 2e-3;
  bool lower_bound_zero = true;
};

struct LinearSolveInfo {
  int iterations = 0;
  double relative_residual = 0.0;
  bool used_direct = false;
};

// SPD solve: Jacobi-preconditioned CG, falling back to a sparse Cholesky
// factorization when CG does not reach the tolerance.
VecX solve_spd(const SpMat& A, const VecX& b, const VecX* x0, const SolverOptions& opts,
               LinearSolveInfo* info = nullptr);

// min 1/2 x^T H x - c^T x  subject to lo <= x <= hi (entries of lo may be -inf).
struct BoxQpResult {
  VecX x;
  int iterations = 0;
  bool used_fallback = false;
};
BoxQpResult solve_box_qp(const SpMat& H, const VecX& c, const VecX& lo, const VecX& hi,
                         const VecX* x0, const SolverOptions& opts);

// Natural residual of the box KKT system: median(x - hi, Hx - c, x - lo).
VecX box_kkt_residual(const SpMat& H, const VecX& c, const VecX& lo, const VecX& hi,
                      const VecX& x);

FeField solve_displacement(const FeSpace& space, const FeField& v, const DirichletData& bc,
                           const ModelParams& params, const SolverOptions& opts = {},
                           const FeField* u_guess = nullptr);

FeField solve_phase(const FeSpace& space, const FeField& u, const FeField& prev_v,
                    const FeField& v_bound, const ModelParams& params,
                    const SolverOptions& opts = {}, const FeField* v_guess = nullptr);

struct AltMinResult {
  FeField u;
  FeField v;
  int iterations = 0;
  double final_increment = 0.0;
  std::vector<double> energy_trace;  // F_h + penalty after each sweep
  bool converged = false;
};

// Alternates displacement and phase solves from (u0, v0); prev_v is both the
// penalty center and the irreversibility bound.
AltMinResult alternate_minimize(const FeSpace& space, const FeField& u0, const FeField& v0,
                                const FeField& prev_v, const DirichletData& bc,
                                const ModelParams& params, const SolverOptions& opts = {});

struct CriticalPointResidual {
  double stationarity_u = 0.0;
  double complementarity_v = 0.0;
  double scale = 1.0;  // max(1, |load|_inf, |H v|_inf)
};

CriticalPointResidual residual(const FeSpace& space, const FeField& u, const FeField& v,
                               const FeField& v_bound, const DirichletData& bc,
                               const ModelParams& params, bool lower_bound_zero = true);

}  // namespace shellfrac
