#include "shellfrac/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace shellfrac {

SymEig2 sym_eig(const Mat2& m) {
  const double a = m(0, 0);
  const double b = m(0, 1);
  const double c = m(1, 1);
  const double mean = 0.5 * (a + c);
  const double half_diff = 0.5 * (a - c);
  const double radius = std::hypot(half_diff, b);
  SymEig2 out;
  out.lambda1 = mean + radius;
  out.lambda2 = mean - radius;
  // Recover the small eigenvalue from the determinant when it would suffer
  // from cancellation.
  if (out.lambda1 > 0.0 && out.lambda2 > 0.0 && out.lambda2 < 1e-3 * out.lambda1) {
    out.lambda2 = (a * c - b * b) / out.lambda1;
  }
  const double phi = 0.5 * std::atan2(2.0 * b, a - c);
  out.v1 = Vec2(std::cos(phi), std::sin(phi));
  out.v2 = Vec2(-std::sin(phi), std::cos(phi));
  return out;
}

Svd2 svd2(const Mat2& m) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const double e = 0.5 * (a + d);
  const double f = 0.5 * (a - d);
  const double g = 0.5 * (c + b);
  const double h = 0.5 * (c - b);
  const double q = std::hypot(e, h);
  const double r = std::hypot(f, g);
  const double a1 = std::atan2(g, f);
  const double a2 = std::atan2(h, e);
  const double theta = 0.5 * (a2 - a1);
  const double phi = 0.5 * (a2 + a1);

  Svd2 out;
  out.U << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  // m = U diag(q + r, q - r) R(theta), so V = R(theta)^T.
  out.V << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  double s1 = q + r;
  double s2 = q - r;
  if (s2 < 0.0) {
    out.U.col(1) = -out.U.col(1);
    s2 = -s2;
  }
  if (s1 > 0.0) s2 = std::abs(a * d - b * c) / s1;
  out.sigma = Vec2(s1, s2);
  return out;
}

namespace {

template <class F>
Mat2 spd_apply(const Mat2& m, F&& fn) {
  const SymEig2 eig = sym_eig(m);
  return fn(eig.lambda1) * outer(eig.v1, eig.v1) + fn(eig.lambda2) * outer(eig.v2, eig.v2);
}

}  // namespace

Mat2 spd_log(const Mat2& m) {
  return spd_apply(m, [](double x) { return std::log(x); });
}

Mat2 spd_exp(const Mat2& m) {
  return spd_apply(m, [](double x) { return std::exp(x); });
}

Mat2 spd_sqrt(const Mat2& m) {
  return spd_apply(m, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

}  // namespace shellfrac
