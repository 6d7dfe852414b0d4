#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "shellfrac/fem.hpp"

namespace shellfrac {

// Per-vertex Zienkiewicz-Zhu recovered gradient.
struct RecoveredGradient {
  std::vector<Vec2> values;
};

// Area-weighted average of the element gradients around each vertex.
RecoveredGradient zz_recover(const FeField& w);

// int over the patch of t of (grad w - R)(grad w - R)^T, R interpolated as P1.
Mat2 recovery_matrix(const FeField& w, const RecoveredGradient& R, int t);
Mat2 recovery_matrix(const FeField& w, int t);

struct EstimatorOptions {
  // Use degree-4 element and 3-point edge rules instead of the assembly rules.
  bool high_order_quadrature = false;
};

struct ElementWeights {
  double gamma = 0.0;
  double rho = 0.0;
};

// Residual weights of element t for a state (u, v) with bound v_bound.
ElementWeights element_weights(const FeSpace& space, const FeField& u, const FeField& v,
                               const FeField& v_bound, const ModelParams& params, int t,
                               const EstimatorOptions& opts = {});

struct EstimatorReport {
  std::vector<double> gamma;
  std::vector<double> rho;
  std::vector<Mat2> G_u;
  std::vector<Mat2> G_v;
  std::vector<double> xi;
  std::vector<ElementMap> maps;
  double global_xi = 0.0;
};

EstimatorReport localized_estimator(const FeSpace& space, const FeField& u, const FeField& v,
                                    const FeField& v_bound, const ModelParams& params,
                                    const EstimatorOptions& opts = {});

// CSV with header "element_id,gamma,rho,xi".
void write_estimator_csv(std::ostream& os, const EstimatorReport& report);
void write_estimator_csv(const std::string& path, const EstimatorReport& report);

}  // namespace shellfrac
