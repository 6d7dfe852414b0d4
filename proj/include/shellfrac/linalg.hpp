#pragma once

#include <Eigen/Dense>

namespace shellfrac {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct SymEig2 {
  double lambda1;  // larger
  double lambda2;  // smaller
  Vec2 v1;
  Vec2 v2;
};

// Closed-form eigen-decomposition of a symmetric 2x2 matrix (upper triangle
// is read). v1, v2 form a right-handed orthonormal pair.
SymEig2 sym_eig(const Mat2& m);

struct Svd2 {
  Mat2 U;  // columns are left singular vectors
  Vec2 sigma;  // sigma(0) >= sigma(1) >= 0
  Mat2 V;
};

// Closed-form SVD of a general 2x2 matrix: m = U diag(sigma) V^T with U, V
// orthogonal.
Svd2 svd2(const Mat2& m);

Mat2 spd_log(const Mat2& m);
Mat2 spd_exp(const Mat2& m);
Mat2 spd_sqrt(const Mat2& m);

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Mat2 outer(const Vec2& a, const Vec2& b) { return a * b.transpose(); }

}  // namespace shellfrac
