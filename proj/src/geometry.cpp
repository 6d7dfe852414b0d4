#include "shellfrac/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "shellfrac/error.hpp"

namespace shellfrac {

namespace {

constexpr double kFdStep = 1e-6;

Mat2 diag2(double a, double b) {
  Mat2 m;
  m << a, 0.0, 0.0, b;
  return m;
}

void check_lame(double lambda, double mu) {
  if (!(mu > 0.0) || !(lambda >= 0.0) || !std::isfinite(lambda) || !std::isfinite(mu)) {
    std::ostringstream os;
    os << "Lame parameters must satisfy lambda >= 0, mu > 0 (got " << lambda << ", " << mu << ")";
    fail(ErrorCode::InvalidParameter, os.str());
  }
}

}  // namespace

const char* chart_kind_name(ChartKind kind) noexcept {
  switch (kind) {
    case ChartKind::Flat: return "flat";
    case ChartKind::Cylinder: return "cylinder";
    case ChartKind::Sphere: return "sphere";
    case ChartKind::Custom: return "custom";
  }
  return "unknown";
}

SurfaceChart make_flat(const Rect& domain, double lambda, double mu) {
  check_lame(lambda, mu);
  SurfaceChart c;
  c.kind_ = ChartKind::Flat;
  c.lambda_ = lambda;
  c.mu_ = mu;
  c.domain_ = domain;
  return c;
}

SurfaceChart make_cylinder(double R, double L, double lambda, double mu) {
  if (!(R > 0.0) || !(L > 0.0)) {
    std::ostringstream os;
    os << "cylinder needs R > 0 and L > 0 (got R=" << R << ", L=" << L << ")";
    fail(ErrorCode::InvalidParameter, os.str());
  }
  check_lame(lambda, mu);
  SurfaceChart c;
  c.kind_ = ChartKind::Cylinder;
  c.lambda_ = lambda;
  c.mu_ = mu;
  c.radius_ = R;
  c.length_ = L;
  c.domain_ = Rect{-std::numbers::pi / 2, std::numbers::pi / 2, 0.0, L};
  return c;
}

SurfaceChart make_sphere(double R, double xbar, double ybar, double lambda, double mu) {
  if (!(R > 0.0) || !(xbar > 0.0) || !(xbar < std::numbers::pi) || !(ybar > 0.0)) {
    std::ostringstream os;
    os << "sphere needs R > 0, 0 < xbar < pi, ybar > 0 (got R=" << R << ", xbar=" << xbar
       << ", ybar=" << ybar << ")";
    fail(ErrorCode::InvalidParameter, os.str());
  }
  if (!(ybar < std::numbers::pi / 2)) {
    fail(ErrorCode::ChartDegeneracy, "sphere chart degenerates at the poles: need ybar < pi/2");
  }
  check_lame(lambda, mu);
  SurfaceChart c;
  c.kind_ = ChartKind::Sphere;
  c.lambda_ = lambda;
  c.mu_ = mu;
  c.radius_ = R;
  c.xbar_ = xbar;
  c.ybar_ = ybar;
  c.domain_ = Rect{-xbar, xbar, -ybar, ybar};
  return c;
}

SurfaceChart make_custom(const Rect& domain, CustomChartCallbacks callbacks, double lambda,
                         double mu) {
  if (!callbacks.a_cov || !callbacks.b_cov) {
    fail(ErrorCode::InvalidParameter, "custom chart requires a_cov and b_cov callbacks");
  }
  check_lame(lambda, mu);
  SurfaceChart c;
  c.kind_ = ChartKind::Custom;
  c.lambda_ = lambda;
  c.mu_ = mu;
  c.domain_ = domain;
  c.custom_ = std::move(callbacks);
  return c;
}

bool SurfaceChart::is_valid_point(const Vec2& x) const {
  if (!std::isfinite(x.x()) || !std::isfinite(x.y())) return false;
  switch (kind_) {
    case ChartKind::Flat:
    case ChartKind::Cylinder: return true;
    case ChartKind::Sphere: return std::abs(x.y()) < std::numbers::pi / 2;
    case ChartKind::Custom: return !custom_.valid || custom_.valid(x);
  }
  return false;
}

double SurfaceChart::curvature_contraction(const Mat2& a_contra, const Mat2& b_cov) const {
  // c^{abst} = 2 lambda mu/(lambda + 2 mu) a^{ab} a^{st} + mu (a^{as} a^{bt} + a^{at} a^{bs})
  const Mat2 ab = a_contra * b_cov;
  const double tr = ab.trace();
  const double lam_red = 2.0 * lambda_ * mu_ / (lambda_ + 2.0 * mu_);
  return lam_red * tr * tr + 2.0 * mu_ * (ab * ab).trace();
}

void SurfaceChart::fill_derived(const Vec2& x, ChartEval& out) const {
  switch (kind_) {
    case ChartKind::Flat:
      out.a_cov = Mat2::Identity();
      out.a_contra = Mat2::Identity();
      out.sqrt_a = 1.0;
      out.b_cov = Mat2::Zero();
      out.divA = Vec2::Zero();
      out.gradSqrtA = Vec2::Zero();
      break;
    case ChartKind::Cylinder: {
      const double R = radius_;
      out.a_cov = diag2(R * R, 1.0);
      out.a_contra = diag2(1.0 / (R * R), 1.0);
      out.sqrt_a = R;
      out.b_cov = diag2(-R, 0.0);
      out.divA = Vec2::Zero();
      out.gradSqrtA = Vec2::Zero();
      break;
    }
    case ChartKind::Sphere: {
      const double R = radius_;
      const double cy = std::cos(x.y());
      const double sy = std::sin(x.y());
      out.a_cov = diag2(R * R * cy * cy, R * R);
      out.a_contra = diag2(1.0 / (R * R * cy * cy), 1.0 / (R * R));
      out.sqrt_a = R * R * cy;
      out.b_cov = diag2(-R * cy * cy, -R);
      // A = diag(1/cos y, cos y)
      out.divA = Vec2(0.0, -sy);
      out.gradSqrtA = Vec2(0.0, -R * R * sy);
      break;
    }
    case ChartKind::Custom: {
      out.a_cov = custom_.a_cov(x);
      out.a_contra = out.a_cov.inverse();
      out.sqrt_a = std::sqrt(out.a_cov.determinant());
      out.b_cov = custom_.b_cov(x);
      auto A_at = [this](const Vec2& p) {
        const Mat2 g = custom_.a_cov(p);
        return Mat2(g.inverse() * std::sqrt(g.determinant()));
      };
      auto s_at = [this](const Vec2& p) { return std::sqrt(custom_.a_cov(p).determinant()); };
      const Vec2 e1(kFdStep, 0.0), e2(0.0, kFdStep);
      const Mat2 dA1 = (A_at(x + e1) - A_at(x - e1)) / (2.0 * kFdStep);
      const Mat2 dA2 = (A_at(x + e2) - A_at(x - e2)) / (2.0 * kFdStep);
      out.divA = Vec2(dA1(0, 0) + dA2(1, 0), dA1(0, 1) + dA2(1, 1));
      out.gradSqrtA = Vec2((s_at(x + e1) - s_at(x - e1)) / (2.0 * kFdStep),
                           (s_at(x + e2) - s_at(x - e2)) / (2.0 * kFdStep));
      break;
    }
  }
  out.A = out.a_contra * out.sqrt_a;
  out.b_coeff = curvature_contraction(out.a_contra, out.b_cov) * out.sqrt_a;
}

ChartEval SurfaceChart::eval(const Vec2& x) const {
  if (!is_valid_point(x)) {
    std::ostringstream os;
    os << "point (" << x.x() << ", " << x.y() << ") is outside the " << chart_kind_name(kind_)
       << " chart's validity region";
    fail(ErrorCode::Domain, os.str());
  }
  ChartEval out;
  fill_derived(x, out);
  return out;
}

Vec3 SurfaceChart::embed(const Vec2& x) const {
  switch (kind_) {
    case ChartKind::Flat: return Vec3(x.x(), x.y(), 0.0);
    case ChartKind::Cylinder:
      return Vec3(radius_ * std::cos(x.x()), radius_ * std::sin(x.x()), x.y());
    case ChartKind::Sphere:
      return radius_ * Vec3(std::cos(x.x()) * std::cos(x.y()), std::sin(x.x()) * std::cos(x.y()),
                            std::sin(x.y()));
    case ChartKind::Custom:
      if (!custom_.embed) fail(ErrorCode::InvalidParameter, "custom chart has no embedding");
      return custom_.embed(x);
  }
  return Vec3::Zero();
}

Vec3 SurfaceChart::normal(const Vec2& x) const {
  switch (kind_) {
    case ChartKind::Flat: return Vec3(0.0, 0.0, 1.0);
    case ChartKind::Cylinder: return Vec3(std::cos(x.x()), std::sin(x.x()), 0.0);
    case ChartKind::Sphere:
      return Vec3(std::cos(x.x()) * std::cos(x.y()), std::sin(x.x()) * std::cos(x.y()),
                  std::sin(x.y()));
    case ChartKind::Custom: {
      const Vec2 e1(kFdStep, 0.0), e2(0.0, kFdStep);
      const Vec3 t1 = (embed(x + e1) - embed(x - e1)) / (2.0 * kFdStep);
      const Vec3 t2 = (embed(x + e2) - embed(x - e2)) / (2.0 * kFdStep);
      return t1.cross(t2).normalized();
    }
  }
  return Vec3::UnitZ();
}

}  // namespace shellfrac
