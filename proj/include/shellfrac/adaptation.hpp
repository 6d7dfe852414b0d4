#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "shellfrac/estimator.hpp"

namespace shellfrac {

// Gamma_T = gamma_bar^2 Gbar(u) + rho_bar^2 Gbar(v) with its eigen-decomposition
// (theta1 >= theta2, v1, v2).
struct GammaMatrix {
  Mat2 Gamma = Mat2::Zero();
  double theta1 = 0.0;
  double theta2 = 0.0;
  Vec2 v1 = Vec2::UnitX();
  Vec2 v2 = Vec2::UnitY();
  double gamma_bar = 0.0;
  double rho_bar = 0.0;
};

GammaMatrix make_gamma(const Mat2& Gamma);
GammaMatrix gamma_matrix(const EstimatorReport& report, int t);

// Upsilon(s, r1) = (s r1^T Gamma r1 + r2^T Gamma r2 / s)^(1/2), r2 = rot90(r1).
double upsilon(const Mat2& Gamma, double s, const Vec2& r1);

struct OptimalShape {
  double s_star = 1.0;
  Vec2 r1 = Vec2::UnitX();
  Vec2 r2 = Vec2::UnitY();
};
OptimalShape optimal_shape(const GammaMatrix& G);

struct OptimalLengths {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};
OptimalLengths optimal_lengths(const GammaMatrix& G, double tol, int n_elements);

// Admissible eigenvalue range of metric tensors, i.e. sizes in [h_min, h_max].
struct MetricClamp {
  double lambda_min = 1.0;
  double lambda_max = 1e6;
  static MetricClamp from_sizes(double h_min, double h_max);
};

struct MetricField {
  MeshPtr mesh;
  std::vector<Mat2> tensors;  // per element
};

MetricField build_metric(const EstimatorReport& report, MeshPtr mesh, double tol,
                         const MetricClamp& clamp, bool smooth = true);

// Lines "element_id m11 m12 m22".
void write_metric(std::ostream& os, const MetricField& metric);
void write_metric(const std::string& path, const MetricField& metric);

// Per-vertex log-Euclidean, area-weighted average of the element tensors.
std::vector<Mat2> vertex_metric(const MetricField& metric);

// Metric evaluated anywhere in the chart by P1 interpolation of the vertex
// log-metric on the mesh of the field.
std::function<Mat2(const Vec2&)> metric_sampler(const MetricField& metric);

// Length of segment ab under the metric interpolated log-Euclidean between
// the endpoint tensors (two-point Gauss).
double metric_length(const Vec2& a, const Vec2& b, const Mat2& log_ma, const Mat2& log_mb);

struct RemeshOptions {
  int max_passes = 10;
  int smoothing_sweeps = 3;
  double collapse_max_length = 1.5;  // no collapse that creates longer edges
};

struct RemeshReport {
  int passes = 0;
  bool converged = false;
  int splits = 0;
  int collapses = 0;
  int flips = 0;
  double fraction_in_range = 0.0;  // edges with metric length in [1/sqrt2, sqrt2]
  double mean_length = 0.0;
  std::size_t sign_violations = 0;
};

// Local-operation remesher (split, collapse, flip, smooth) driven by metric
// lengths. Boundary polylines are preserved: boundary vertices are only
// inserted on, removed from, or slid along straight same-label chains.
Triangulation remesh(const Triangulation& start, const std::function<Mat2(const Vec2&)>& metric,
                     const RemeshOptions& opts = {}, RemeshReport* report = nullptr);
MeshPtr remesh(const MetricField& metric, const RemeshOptions& opts = {},
               RemeshReport* report = nullptr);

// Edge metric-length statistics of a mesh.
struct MetricConformity {
  double fraction_in_range = 0.0;
  double mean_length = 0.0;
  std::vector<double> lengths;
};
MetricConformity metric_conformity(const Triangulation& mesh,
                                   const std::function<Mat2(const Vec2&)>& metric);

// Interpolation weights of new vertices in the old mesh.
class TransferOperator {
public:
  TransferOperator(MeshPtr old_mesh, MeshPtr new_mesh, double snap_tol = 1e-9);
  FeField apply(const FeField& f, bool clamp_unit = false) const;
  const MeshPtr& target() const { return new_mesh_; }

private:
  MeshPtr old_mesh_;
  MeshPtr new_mesh_;
  std::vector<std::array<int, 3>> nodes_;
  std::vector<std::array<double, 3>> weights_;
};

FeField transfer(const FeField& field, MeshPtr new_mesh, bool clamp_unit = false);

}  // namespace shellfrac
