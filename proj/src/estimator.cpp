#include "shellfrac/estimator.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "shellfrac/error.hpp"

namespace shellfrac {

namespace {

struct TriRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weight;  // fractions of the area
};

const TriRule& midpoint_rule() {
  static const TriRule r{{{0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}},
                         {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
  return r;
}

const TriRule& degree4_rule() {
  static const TriRule r = [] {
    TriRule q;
    const double a1 = 0.445948490915965, b1 = 1.0 - 2.0 * a1, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, b2 = 1.0 - 2.0 * a2, w2 = 0.109951743655322;
    for (auto [a, b, w] : {std::tuple{a1, b1, w1}, std::tuple{a2, b2, w2}}) {
      q.bary.push_back({b, a, a});
      q.bary.push_back({a, b, a});
      q.bary.push_back({a, a, b});
      for (int i = 0; i < 3; ++i) q.weight.push_back(w);
    }
    return q;
  }();
  return r;
}

struct LineRule {
  std::vector<double> s;
  std::vector<double> weight;
};

const LineRule& gauss2() {
  static const LineRule r{{kGauss2Points[0], kGauss2Points[1]}, {0.5, 0.5}};
  return r;
}

const LineRule& gauss3() {
  static const LineRule r{{0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)},
                          {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
  return r;
}

Vec2 grad_on(const Triangulation& m, int t, const VecX& w) {
  const Tri& tri = m.triangle(t);
  const auto& g = m.basis_gradients(t);
  return w(tri[0]) * g[0] + w(tri[1]) * g[1] + w(tri[2]) * g[2];
}

// Element contribution to the recovery matrix.
Mat2 element_recovery(const Triangulation& m, const VecX& w, const RecoveredGradient& R, int k) {
  const Tri& tri = m.triangle(k);
  const Vec2 g = grad_on(m, k, w);
  Mat2 G = Mat2::Zero();
  for (int q = 0; q < 3; ++q) {
    const Vec2 r = 0.5 * (R.values[static_cast<std::size_t>(tri[(q + 1) % 3])] +
                          R.values[static_cast<std::size_t>(tri[(q + 2) % 3])]);
    const Vec2 e = g - r;
    G += outer(e, e);
  }
  return (m.area(k) / 3.0) * G;
}

}  // namespace

RecoveredGradient zz_recover(const FeField& w) {
  const Triangulation& m = *w.mesh;
  RecoveredGradient R;
  R.values.assign(m.num_vertices(), Vec2::Zero());
  std::vector<double> wsum(m.num_vertices(), 0.0);
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const Vec2 g = grad_on(m, t, w.values);
    for (int v : m.triangle(t)) {
      R.values[static_cast<std::size_t>(v)] += m.area(t) * g;
      wsum[static_cast<std::size_t>(v)] += m.area(t);
    }
  }
  for (std::size_t i = 0; i < R.values.size(); ++i)
    if (wsum[i] > 0.0) R.values[i] /= wsum[i];
  return R;
}

Mat2 recovery_matrix(const FeField& w, const RecoveredGradient& R, int t) {
  const Triangulation& m = *w.mesh;
  Mat2 G = Mat2::Zero();
  for (int k : patch(m, t)) G += element_recovery(m, w.values, R, k);
  return G;
}

Mat2 recovery_matrix(const FeField& w, int t) { return recovery_matrix(w, zz_recover(w), t); }

ElementWeights element_weights(const FeSpace& space, const FeField& u, const FeField& v,
                               const FeField& v_bound, const ModelParams& params, int t,
                               const EstimatorOptions& opts) {
  const Triangulation& m = space.mesh();
  const SurfaceChart& chart = space.chart();
  const double mu = space.mu();
  const double kappa = params.kappa, eps = params.epsilon, eta = params.eta;
  const double a_tau = params.alpha / params.tau;
  const Tri& tri = m.triangle(t);
  const std::array<Vec2, 3> P = {m.vertex(tri[0]), m.vertex(tri[1]), m.vertex(tri[2])};
  std::array<double, 3> U{}, V{}, VB{};
  for (int i = 0; i < 3; ++i) {
    U[static_cast<std::size_t>(i)] = u.values(tri[i]);
    V[static_cast<std::size_t>(i)] = v.values(tri[i]);
    VB[static_cast<std::size_t>(i)] = v_bound.values(tri[i]);
  }
  const Vec2 gu = grad_on(m, t, u.values);
  const Vec2 gv = grad_on(m, t, v.values);
  const Vec2 gvb = grad_on(m, t, v_bound.values);
  const ElementMap em = element_map(m, t);
  const double area = m.area(t);

  const TriRule& rule = opts.high_order_quadrature ? degree4_rule() : midpoint_rule();
  double P2 = 0.0, T2 = 0.0, Q2 = 0.0, S2 = 0.0;
  for (std::size_t q = 0; q < rule.bary.size(); ++q) {
    const auto& l = rule.bary[q];
    const Vec2 x = l[0] * P[0] + l[1] * P[1] + l[2] * P[2];
    const double uq = l[0] * U[0] + l[1] * U[1] + l[2] * U[2];
    const double vq = l[0] * V[0] + l[1] * V[1] + l[2] * V[2];
    const double vbq = l[0] * VB[0] + l[1] * VB[1] + l[2] * VB[2];
    const double pi_v2 = l[0] * V[0] * V[0] + l[1] * V[1] * V[1] + l[2] * V[2] * V[2];
    const ChartEval ce = chart.eval(x);
    const Vec2 Agu = ce.A * gu;
    const double w = rule.weight[q] * area;
    const double p = ce.b_coeff * uq - 2.0 * mu * vq * gv.dot(Agu) -
                     mu * (vq * vq + eta) * gu.dot(ce.divA);
    const double t2 = (vq * vq - pi_v2) * Agu.norm();
    const double qq = mu * vq * gu.dot(Agu) + kappa / (2.0 * eps) * (vq - 1.0) * ce.sqrt_a -
                      2.0 * kappa * eps * gv.dot(ce.divA) + a_tau * (vq - vbq);
    const double s = mu * gu.dot(Agu) + kappa / (2.0 * eps) * ce.sqrt_a;
    P2 += w * p * p;
    T2 += w * t2 * t2;
    Q2 += w * qq * qq;
    S2 += w * s * s;
  }

  const LineRule& lrule = opts.high_order_quadrature ? gauss3() : gauss2();
  double Eu = 0.0, Ev = 0.0;
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    const Vec2 d = P[static_cast<std::size_t>(b)] - P[static_cast<std::size_t>(a)];
    const double len = d.norm();
    const Vec2 nu = Vec2(d.y(), -d.x()) / len;
    const int nb = m.neighbor(t, k);
    Vec2 ju, jv;
    double factor = 1.0;
    if (nb >= 0) {
      ju = gu - grad_on(m, nb, u.values);
      jv = gv - grad_on(m, nb, v.values);
    } else {
      ju = gu;
      jv = gv;
      factor = 2.0;
    }
    for (std::size_t g = 0; g < lrule.s.size(); ++g) {
      const double s = lrule.s[g];
      const Vec2 x = P[static_cast<std::size_t>(a)] + s * d;
      const double vq = (1.0 - s) * V[static_cast<std::size_t>(a)] + s * V[static_cast<std::size_t>(b)];
      const ChartEval ce = chart.eval(x);
      const double Ju = factor * std::abs(ju.dot(ce.A * nu));
      const double Jv = factor * std::abs(jv.dot(ce.A * nu));
      const double w = lrule.weight[g] * len * len;  // h_e * ds
      const double deg = vq * vq + eta;
      Eu += w * deg * deg * Ju * Ju;
      Ev += w * Jv * Jv;
    }
  }

  const double s1 = em.sigma1, s2 = em.sigma2;
  const double hT2 = em.h_T * em.h_T;
  ElementWeights out;
  out.gamma = std::sqrt(P2) + mu / s2 * std::sqrt(T2) +
              mu / (2.0 * std::sqrt(s1 * s2)) * std::sqrt(Eu);
  out.rho = std::sqrt(Q2) + kappa * eps / std::sqrt(s1 * s2) * std::sqrt(Ev) +
            hT2 / s2 * std::sqrt(S2) * gv.norm() +
            params.alpha * hT2 / (params.tau * s2) * (gv - gvb).norm() * std::sqrt(area);
  return out;
}

EstimatorReport localized_estimator(const FeSpace& space, const FeField& u, const FeField& v,
                                    const FeField& v_bound, const ModelParams& params,
                                    const EstimatorOptions& opts) {
  space.require_owns(u);
  space.require_owns(v);
  space.require_owns(v_bound);
  const Triangulation& m = space.mesh();
  const int nt = static_cast<int>(m.num_triangles());
  const RecoveredGradient Ru = zz_recover(u);
  const RecoveredGradient Rv = zz_recover(v);
  std::vector<Mat2> Gu_el(static_cast<std::size_t>(nt)), Gv_el(static_cast<std::size_t>(nt));
  for (int k = 0; k < nt; ++k) {
    Gu_el[static_cast<std::size_t>(k)] = element_recovery(m, u.values, Ru, k);
    Gv_el[static_cast<std::size_t>(k)] = element_recovery(m, v.values, Rv, k);
  }
  EstimatorReport rep;
  rep.gamma.resize(static_cast<std::size_t>(nt));
  rep.rho.resize(static_cast<std::size_t>(nt));
  rep.G_u.resize(static_cast<std::size_t>(nt));
  rep.G_v.resize(static_cast<std::size_t>(nt));
  rep.xi.resize(static_cast<std::size_t>(nt));
  rep.maps.resize(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const ElementWeights w = element_weights(space, u, v, v_bound, params, t, opts);
    rep.gamma[ti] = w.gamma;
    rep.rho[ti] = w.rho;
    Mat2 Gu = Mat2::Zero(), Gv = Mat2::Zero();
    for (int k : patch(m, t)) {
      Gu += Gu_el[static_cast<std::size_t>(k)];
      Gv += Gv_el[static_cast<std::size_t>(k)];
    }
    rep.G_u[ti] = Gu;
    rep.G_v[ti] = Gv;
    const ElementMap em = element_map(m, t);
    rep.maps[ti] = em;
    double qu = 0.0, qv = 0.0;
    const std::array<Vec2, 2> r = {em.r1, em.r2};
    const std::array<double, 2> s = {em.sigma1, em.sigma2};
    for (int i = 0; i < 2; ++i) {
      qu += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)] *
            r[static_cast<std::size_t>(i)].dot(Gu * r[static_cast<std::size_t>(i)]);
      qv += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)] *
            r[static_cast<std::size_t>(i)].dot(Gv * r[static_cast<std::size_t>(i)]);
    }
    rep.xi[ti] = w.gamma * std::sqrt(std::max(qu, 0.0)) + w.rho * std::sqrt(std::max(qv, 0.0));
  }
  rep.global_xi = 0.0;
  for (double x : rep.xi) rep.global_xi += x;
  return rep;
}

void write_estimator_csv(std::ostream& os, const EstimatorReport& report) {
  os << "element_id,gamma,rho,xi\n";
  for (std::size_t t = 0; t < report.xi.size(); ++t) {
    os << t << ',' << format_double(report.gamma[t]) << ',' << format_double(report.rho[t]) << ','
       << format_double(report.xi[t]) << '\n';
  }
}

void write_estimator_csv(const std::string& path, const EstimatorReport& report) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_estimator_csv(os, report);
  if (!os) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

}  // namespace shellfrac
