#pragma once

#include <functional>

#include "shellfrac/linalg.hpp"

namespace shellfrac {

using Vec3 = Eigen::Vector3d;

enum class ChartKind { Flat, Cylinder, Sphere, Custom };

const char* chart_kind_name(ChartKind kind) noexcept;

// Axis-aligned rectangle in chart coordinates.
struct Rect {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= x_min - tol && p.x() <= x_max + tol && p.y() >= y_min - tol &&
           p.y() <= y_max + tol;
  }
};

// Everything the reduced shell model needs from the chart at one point.
//   A       = a_contra * sqrt_a        (anisotropy of the gradient terms)
//   b_coeff = c^{abst} b_ab b_st sqrt_a (zero-order curvature coefficient)
//   divA    = (d_1 A_11 + d_2 A_21, d_1 A_12 + d_2 A_22)
struct ChartEval {
  Mat2 a_cov;
  Mat2 a_contra;
  double sqrt_a = 1.0;
  Mat2 b_cov;
  Mat2 A;
  double b_coeff = 0.0;
  Vec2 divA = Vec2::Zero();
  Vec2 gradSqrtA = Vec2::Zero();
};

// User-supplied chart. a_cov and b_cov are required; embed is only needed for
// 3D export, valid restricts where eval() may be called.
struct CustomChartCallbacks {
  std::function<Mat2(const Vec2&)> a_cov;
  std::function<Mat2(const Vec2&)> b_cov;
  std::function<Vec3(const Vec2&)> embed;
  std::function<bool(const Vec2&)> valid;
};

// Immutable after construction; eval() is pure and thread-safe.
class SurfaceChart {
public:
  ChartKind kind() const { return kind_; }
  double lame_lambda() const { return lambda_; }
  double lame_mu() const { return mu_; }
  const Rect& domain() const { return domain_; }
  double radius() const { return radius_; }
  double length() const { return length_; }
  double xbar() const { return xbar_; }
  double ybar() const { return ybar_; }

  bool is_valid_point(const Vec2& x) const;
  ChartEval eval(const Vec2& x) const;

  // Point on the mid-surface and its unit normal a_3.
  Vec3 embed(const Vec2& x) const;
  Vec3 normal(const Vec2& x) const;

  // Reduced elasticity contraction c^{abst} b_ab b_st for given metric data
  // (without the sqrt_a factor).
  double curvature_contraction(const Mat2& a_contra, const Mat2& b_cov) const;

  friend SurfaceChart make_flat(const Rect&, double, double);
  friend SurfaceChart make_cylinder(double, double, double, double);
  friend SurfaceChart make_sphere(double, double, double, double, double);
  friend SurfaceChart make_custom(const Rect&, CustomChartCallbacks, double, double);

private:
  SurfaceChart() = default;
  void fill_derived(const Vec2& x, ChartEval& out) const;

  ChartKind kind_ = ChartKind::Flat;
  double lambda_ = 0.0;
  double mu_ = 1.0;
  Rect domain_;
  double radius_ = 1.0;
  double length_ = 1.0;
  double xbar_ = 0.0;
  double ybar_ = 0.0;
  CustomChartCallbacks custom_;
};

SurfaceChart make_flat(const Rect& domain = Rect{}, double lambda = 0.0, double mu = 1.0);

// Cylinder of radius R and length L over (-pi/2, pi/2) x (0, L).
SurfaceChart make_cylinder(double R, double L, double lambda = 0.0, double mu = 1.0);

// Sphere patch of radius R over (-xbar, xbar) x (-ybar, ybar).
SurfaceChart make_sphere(double R, double xbar, double ybar, double lambda = 0.0,
                         double mu = 1.0);

// divA and gradSqrtA are obtained by central differences with step 1e-6.
SurfaceChart make_custom(const Rect& domain, CustomChartCallbacks callbacks,
                         double lambda = 0.0, double mu = 1.0);

inline ChartEval eval(const SurfaceChart& chart, const Vec2& x) { return chart.eval(x); }

}  // namespace shellfrac
