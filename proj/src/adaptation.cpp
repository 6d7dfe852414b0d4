#include "shellfrac/adaptation.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <tuple>
#include <cmath>
#include <fstream>
#include <ostream>

#include "shellfrac/error.hpp"

namespace shellfrac {

GammaMatrix make_gamma(const Mat2& Gamma) {
  GammaMatrix G;
  G.Gamma = 0.5 * (Gamma + Gamma.transpose());
  const SymEig2 e = sym_eig(G.Gamma);
  G.theta1 = e.lambda1;
  G.theta2 = e.lambda2;
  G.v1 = e.v1;
  G.v2 = e.v2;
  return G;
}

GammaMatrix gamma_matrix(const EstimatorReport& report, int t) {
  const auto ti = static_cast<std::size_t>(t);
  const ElementMap& em = report.maps[ti];
  const double area = kReferenceTriangleArea * em.sigma1 * em.sigma2;
  const double gb = report.gamma[ti] / std::sqrt(area);
  const double rb = report.rho[ti] / std::sqrt(area);
  GammaMatrix G = make_gamma(gb * gb * report.G_u[ti] / area + rb * rb * report.G_v[ti] / area);
  G.gamma_bar = gb;
  G.rho_bar = rb;
  return G;
}

double upsilon(const Mat2& Gamma, double s, const Vec2& r1) {
  const Vec2 r2(-r1.y(), r1.x());
  return std::sqrt(std::max(0.0, s * r1.dot(Gamma * r1) + r2.dot(Gamma * r2) / s));
}

namespace {

constexpr double kIsotropyTol = 1e-12;

// Regularized eigenvalues: theta2 is lifted when it degenerates relative to theta1.
void regularize(double& th1, double& th2, double theta_floor) {
  if (th2 <= 1e-14 * th1) th2 = std::max(th2, 1e-6 * th1);
  th1 = std::max(th1, theta_floor);
  th2 = std::min(std::max(th2, 0.0), th1);
  if (th2 <= 0.0) th2 = 1e-6 * th1;
}

}  // namespace

OptimalShape optimal_shape(const GammaMatrix& G) {
  OptimalShape out;
  double th1 = G.theta1, th2 = G.theta2;
  if (!(th1 > 0.0) || !std::isfinite(th1)) return out;
  regularize(th1, th2, 0.0);
  if (th1 - th2 <= kIsotropyTol * th1) return out;
  out.s_star = std::sqrt(th1 / th2);
  out.r1 = G.v2;
  out.r2 = Vec2(-out.r1.y(), out.r1.x());
  return out;
}

OptimalLengths optimal_lengths(const GammaMatrix& G, double tol, int n_elements) {
  if (!(tol > 0.0) || n_elements < 1)
    fail(ErrorCode::InvalidParameter, "optimal_lengths needs tol > 0 and at least one element");
  double th1 = G.theta1, th2 = G.theta2;
  if (!(th1 > 0.0)) fail(ErrorCode::InvalidParameter, "optimal_lengths needs a nonzero Gamma");
  regularize(th1, th2, 0.0);
  const double C = tol / (std::sqrt(2.0) * kReferenceTriangleArea * n_elements);
  OptimalLengths L;
  L.sigma1 = std::cbrt(C * std::sqrt(th1) / (th2));
  L.sigma2 = std::cbrt(C * std::sqrt(th2) / (th1));
  return L;
}

MetricClamp MetricClamp::from_sizes(double h_min, double h_max) {
  if (!(h_min > 0.0) || !(h_max >= h_min))
    fail(ErrorCode::InvalidParameter, "metric clamp needs 0 < h_min <= h_max");
  return MetricClamp{1.0 / (h_max * h_max), 1.0 / (h_min * h_min)};
}

namespace {

Mat2 clamp_tensor(const Mat2& M, const MetricClamp& c) {
  const SymEig2 e = sym_eig(M);
  const double l1 = std::clamp(e.lambda1, c.lambda_min, c.lambda_max);
  const double l2 = std::clamp(e.lambda2, c.lambda_min, c.lambda_max);
  return l1 * outer(e.v1, e.v1) + l2 * outer(e.v2, e.v2);
}

}  // namespace

MetricField build_metric(const EstimatorReport& report, MeshPtr mesh, double tol,
                         const MetricClamp& clamp, bool smooth) {
  const int nt = static_cast<int>(mesh->num_triangles());
  if (static_cast<int>(report.xi.size()) != nt)
    fail(ErrorCode::MeshMismatch, "estimator report does not match the mesh");
  if (!(tol > 0.0)) fail(ErrorCode::InvalidParameter, "TOL must be positive");
  MetricField F;
  F.mesh = mesh;
  F.tensors.resize(static_cast<std::size_t>(nt));
  const double C = tol / (std::sqrt(2.0) * kReferenceTriangleArea * nt);
  const double h_max = 1.0 / std::sqrt(clamp.lambda_min);
  const double theta_floor = std::pow(C / (h_max * h_max * h_max), 2.0);
  for (int t = 0; t < nt; ++t) {
    GammaMatrix G = gamma_matrix(report, t);
    Mat2 M;
    if (!(G.theta1 > 0.0) || !std::isfinite(G.theta1)) {
      M = clamp.lambda_min * Mat2::Identity();
    } else {
      regularize(G.theta1, G.theta2, theta_floor);
      const OptimalShape sh = optimal_shape(G);
      const OptimalLengths L = optimal_lengths(G, tol, nt);
      M = outer(sh.r1, sh.r1) / (L.sigma1 * L.sigma1) + outer(sh.r2, sh.r2) / (L.sigma2 * L.sigma2);
    }
    F.tensors[static_cast<std::size_t>(t)] = clamp_tensor(M, clamp);
  }
  if (smooth) {
    std::vector<Mat2> logs(F.tensors.size());
    for (std::size_t t = 0; t < logs.size(); ++t) logs[t] = spd_log(F.tensors[t]);
    for (int t = 0; t < nt; ++t) {
      Mat2 acc = Mat2::Zero();
      int cnt = 0;
      for (int k : patch(*mesh, t)) {
        if (k == t) continue;
        acc += logs[static_cast<std::size_t>(k)];
        ++cnt;
      }
      Mat2 L = logs[static_cast<std::size_t>(t)];
      if (cnt > 0) L = 0.5 * L + 0.5 * acc / cnt;
      F.tensors[static_cast<std::size_t>(t)] = clamp_tensor(spd_exp(L), clamp);
    }
  }
  return F;
}

void write_metric(std::ostream& os, const MetricField& metric) {
  for (std::size_t t = 0; t < metric.tensors.size(); ++t) {
    const Mat2& M = metric.tensors[t];
    os << t << ' ' << format_double(M(0, 0)) << ' ' << format_double(M(0, 1)) << ' '
       << format_double(M(1, 1)) << '\n';
  }
}

void write_metric(const std::string& path, const MetricField& metric) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_metric(os, metric);
}

std::vector<Mat2> vertex_metric(const MetricField& metric) {
  const Triangulation& m = *metric.mesh;
  std::vector<Mat2> acc(m.num_vertices(), Mat2::Zero());
  std::vector<double> w(m.num_vertices(), 0.0);
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const Mat2 L = spd_log(metric.tensors[static_cast<std::size_t>(t)]);
    for (int v : m.triangle(t)) {
      acc[static_cast<std::size_t>(v)] += m.area(t) * L;
      w[static_cast<std::size_t>(v)] += m.area(t);
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = spd_exp(acc[i] / w[i]);
  return acc;
}

std::function<Mat2(const Vec2&)> metric_sampler(const MetricField& metric) {
  auto logs = std::make_shared<std::vector<Mat2>>(vertex_metric(metric));
  for (auto& M : *logs) M = spd_log(M);
  auto loc = std::make_shared<PointLocator>(metric.mesh);
  return [logs, loc](const Vec2& p) {
    const PointLocator::Hit h = loc->locate(p, std::numeric_limits<double>::infinity());
    const Tri& tri = loc->mesh().triangle(h.triangle);
    std::array<double, 3> b = h.bary;
    double s = 0.0;
    for (double& x : b) {
      x = std::max(x, 0.0);
      s += x;
    }
    Mat2 L = Mat2::Zero();
    for (int k = 0; k < 3; ++k) L += (b[static_cast<std::size_t>(k)] / s) * (*logs)[static_cast<std::size_t>(tri[k])];
    return spd_exp(L);
  };
}

double metric_length(const Vec2& a, const Vec2& b, const Mat2& log_ma, const Mat2& log_mb) {
  const Vec2 e = b - a;
  double len = 0.0;
  for (double s : kGauss2Points) {
    const Mat2 M = spd_exp((1.0 - s) * log_ma + s * log_mb);
    len += 0.5 * std::sqrt(std::max(0.0, e.dot(M * e)));
  }
  return len;
}

MetricConformity metric_conformity(const Triangulation& mesh,
                                   const std::function<Mat2(const Vec2&)>& metric) {
  std::vector<Mat2> logs(mesh.num_vertices());
  for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = spd_log(metric(mesh.vertex(static_cast<int>(i))));
  MetricConformity out;
  int in = 0;
  double sum = 0.0;
  for (const Edge& e : mesh.edges()) {
    const double l = metric_length(mesh.vertex(e.a), mesh.vertex(e.b),
                                   logs[static_cast<std::size_t>(e.a)], logs[static_cast<std::size_t>(e.b)]);
    out.lengths.push_back(l);
    sum += l;
    if (l >= 1.0 / std::sqrt(2.0) && l <= std::sqrt(2.0)) ++in;
  }
  if (!out.lengths.empty()) {
    out.fraction_in_range = static_cast<double>(in) / static_cast<double>(out.lengths.size());
    out.mean_length = sum / static_cast<double>(out.lengths.size());
  }
  return out;
}

TransferOperator::TransferOperator(MeshPtr old_mesh, MeshPtr new_mesh, double snap_tol)
    : old_mesh_(std::move(old_mesh)), new_mesh_(std::move(new_mesh)) {
  const PointLocator loc(old_mesh_);
  const Triangulation& nm = *new_mesh_;
  nodes_.resize(nm.num_vertices());
  weights_.resize(nm.num_vertices());
  for (int i = 0; i < static_cast<int>(nm.num_vertices()); ++i) {
    const Vec2& p = nm.vertex(i);
    const auto inc = nm.vertex_triangles(i);
    PointLocator::Hit h;
    if (!inc.empty()) h = loc.locate_towards(p, nm.centroid(inc[0]), snap_tol);
    else h = loc.locate(p, snap_tol);
    const Tri& tri = old_mesh_->triangle(h.triangle);
    std::array<double, 3> b = h.bary;
    double s = 0.0;
    for (double& x : b) {
      x = std::max(x, 0.0);
      s += x;
    }
    for (double& x : b) x /= s;
    nodes_[static_cast<std::size_t>(i)] = tri;
    weights_[static_cast<std::size_t>(i)] = b;
  }
}

FeField TransferOperator::apply(const FeField& f, bool clamp_unit) const {
  if (!f.mesh || !(f.mesh == old_mesh_ || f.mesh->same_as(*old_mesh_)))
    fail(ErrorCode::MeshMismatch, "transfer source field is not on the old mesh");
  VecX out(static_cast<Eigen::Index>(nodes_.size()));
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v += weights_[i][static_cast<std::size_t>(k)] * f.values(nodes_[i][static_cast<std::size_t>(k)]);
    if (clamp_unit) v = std::clamp(v, 0.0, 1.0);
    out(static_cast<Eigen::Index>(i)) = v;
  }
  return FeField(new_mesh_, std::move(out));
}

FeField transfer(const FeField& field, MeshPtr new_mesh, bool clamp_unit) {
  if (field.mesh == new_mesh) return field;
  return TransferOperator(field.mesh, std::move(new_mesh)).apply(field, clamp_unit);
}

}  // namespace shellfrac
