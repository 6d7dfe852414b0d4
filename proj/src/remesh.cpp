#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "shellfrac/adaptation.hpp"
#include "shellfrac/error.hpp"

namespace shellfrac {

namespace {

const double kSqrt2 = std::sqrt(2.0);

std::uint64_t ekey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double tri_area(const Vec2& a, const Vec2& b, const Vec2& c) { return 0.5 * cross2(b - a, c - a); }

class WorkMesh {
public:
  WorkMesh(const Triangulation& m, const std::function<Mat2(const Vec2&)>& metric)
      : metric_(metric) {
    for (int i = 0; i < static_cast<int>(m.num_vertices()); ++i) add_vertex(m.vertex(i));
    for (const Tri& t : m.triangles()) add_triangle(t[0], t[1], t[2]);
    for (const BoundaryEdge& e : m.boundary()) add_boundary(e.a, e.b, e.label);
  }

  // Vertices and metric.
  int add_vertex(const Vec2& p) {
    P.push_back(p);
    const Mat2 M = metric_(p);
    Mv.push_back(M);
    Lv.push_back(spd_log(M));
    valive.push_back(1);
    dirty.push_back(1);
    changed.push_back(++clock);
    tried.push_back(0);
    vt.emplace_back();
    bnb.emplace_back();
    return static_cast<int>(P.size()) - 1;
  }
  void move_vertex(int v, const Vec2& p) {
    P[static_cast<std::size_t>(v)] = p;
    dirty[static_cast<std::size_t>(v)] = 1;
    changed[static_cast<std::size_t>(v)] = ++clock;
    const Mat2 M = metric_(p);
    Mv[static_cast<std::size_t>(v)] = M;
    Lv[static_cast<std::size_t>(v)] = spd_log(M);
  }

  int add_triangle(int a, int b, int c) {
    T.push_back({a, b, c});
    talive.push_back(1);
    const int t = static_cast<int>(T.size()) - 1;
    for (int v : {a, b, c}) {
      vt[static_cast<std::size_t>(v)].push_back(t);
      dirty[static_cast<std::size_t>(v)] = 1;
      changed[static_cast<std::size_t>(v)] = ++clock;
    }
    return t;
  }
  void kill_triangle(int t) {
    talive[static_cast<std::size_t>(t)] = 0;
    for (int v : T[static_cast<std::size_t>(t)]) {
      auto& l = vt[static_cast<std::size_t>(v)];
      l.erase(std::find(l.begin(), l.end(), t));
      changed[static_cast<std::size_t>(v)] = ++clock;
    }
  }

  void add_boundary(int a, int b, BoundaryLabel l) {
    bnd[ekey(a, b)] = l;
    bnb[static_cast<std::size_t>(a)].push_back(b);
    bnb[static_cast<std::size_t>(b)].push_back(a);
  }
  void remove_boundary(int a, int b) {
    bnd.erase(ekey(a, b));
    auto drop = [&](int x, int y) {
      auto& l = bnb[static_cast<std::size_t>(x)];
      l.erase(std::find(l.begin(), l.end(), y));
    };
    drop(a, b);
    drop(b, a);
  }
  bool is_boundary_edge(int a, int b) const { return bnd.count(ekey(a, b)) != 0; }
  bool is_boundary_vertex(int v) const { return !bnb[static_cast<std::size_t>(v)].empty(); }

  // Boundary vertex lying inside a straight chain of one label.
  bool removable(int v) const {
    const auto& nb = bnb[static_cast<std::size_t>(v)];
    if (nb.size() != 2) return false;
    if (bnd.at(ekey(v, nb[0])) != bnd.at(ekey(v, nb[1]))) return false;
    const Vec2 d1 = P[static_cast<std::size_t>(v)] - P[static_cast<std::size_t>(nb[0])];
    const Vec2 d2 = P[static_cast<std::size_t>(nb[1])] - P[static_cast<std::size_t>(v)];
    const double n = d1.norm() * d2.norm();
    return d1.dot(d2) > 0.0 && std::abs(cross2(d1, d2)) <= 1e-10 * n;
  }

  std::vector<int> common_triangles(int a, int b) const {
    std::vector<int> out;
    for (int t : vt[static_cast<std::size_t>(a)]) {
      const Tri& tr = T[static_cast<std::size_t>(t)];
      if (tr[0] == b || tr[1] == b || tr[2] == b) out.push_back(t);
    }
    return out;
  }

  std::vector<int> neighbors(int v) const {
    std::vector<int> out;
    for (int t : vt[static_cast<std::size_t>(v)])
      for (int w : T[static_cast<std::size_t>(t)])
        if (w != v) out.push_back(w);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  double length(int a, int b) const {
    return metric_length(P[static_cast<std::size_t>(a)], P[static_cast<std::size_t>(b)],
                         Lv[static_cast<std::size_t>(a)], Lv[static_cast<std::size_t>(b)]);
  }

  // Mean-ratio quality in the averaged vertex metric (1 for a unit equilateral
  // triangle, <= 0 for inverted ones).
  double quality(int a, int b, int c, const Vec2& pa, const Vec2& pb, const Vec2& pc) const {
    const Mat2 M = (Mv[static_cast<std::size_t>(a)] + Mv[static_cast<std::size_t>(b)] +
                    Mv[static_cast<std::size_t>(c)]) / 3.0;
    const double area = tri_area(pa, pb, pc) * std::sqrt(std::max(M.determinant(), 0.0));
    const Vec2 e1 = pb - pa, e2 = pc - pb, e3 = pa - pc;
    const double s = e1.dot(M * e1) + e2.dot(M * e2) + e3.dot(M * e3);
    return s > 0.0 ? 4.0 * std::sqrt(3.0) * area / s : 0.0;
  }
  double quality(int t) const {
    const Tri& tr = T[static_cast<std::size_t>(t)];
    return quality(tr[0], tr[1], tr[2], P[static_cast<std::size_t>(tr[0])],
                   P[static_cast<std::size_t>(tr[1])], P[static_cast<std::size_t>(tr[2])]);
  }

  std::vector<std::uint64_t> edge_keys() const {
    std::vector<std::uint64_t> keys;
    for (std::size_t t = 0; t < T.size(); ++t) {
      if (!talive[t]) continue;
      for (int k = 0; k < 3; ++k) keys.push_back(ekey(T[t][k], T[t][(k + 1) % 3]));
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    return keys;
  }

  Triangulation compact() const {
    std::vector<int> map(P.size(), -1);
    std::vector<Vec2> verts;
    for (std::size_t t = 0; t < T.size(); ++t) {
      if (!talive[t]) continue;
      for (int v : T[t]) {
        if (map[static_cast<std::size_t>(v)] < 0) {
          map[static_cast<std::size_t>(v)] = static_cast<int>(verts.size());
          verts.push_back(P[static_cast<std::size_t>(v)]);
        }
      }
    }
    // Keep vertex order stable: renumber by original index.
    std::vector<int> order;
    for (std::size_t v = 0; v < P.size(); ++v)
      if (map[v] >= 0) order.push_back(static_cast<int>(v));
    verts.clear();
    for (std::size_t i = 0; i < order.size(); ++i) {
      map[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
      verts.push_back(P[static_cast<std::size_t>(order[i])]);
    }
    std::vector<Tri> tris;
    for (std::size_t t = 0; t < T.size(); ++t) {
      if (!talive[t]) continue;
      tris.push_back({map[static_cast<std::size_t>(T[t][0])], map[static_cast<std::size_t>(T[t][1])],
                      map[static_cast<std::size_t>(T[t][2])]});
    }
    std::vector<std::pair<std::uint64_t, BoundaryLabel>> be(bnd.begin(), bnd.end());
    std::sort(be.begin(), be.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<BoundaryEdge> bedges;
    for (const auto& [k, l] : be) {
      const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
      bedges.push_back({map[static_cast<std::size_t>(a)], map[static_cast<std::size_t>(b)], l});
    }
    std::sort(bedges.begin(), bedges.end(), [](const BoundaryEdge& x, const BoundaryEdge& y) {
      return std::minmax(x.a, x.b) < std::minmax(y.a, y.b);
    });
    return Triangulation(std::move(verts), std::move(tris), std::move(bedges));
  }

  std::vector<Vec2> P;
  std::vector<Mat2> Mv, Lv;
  std::vector<char> valive;
  // Vertices whose surroundings changed since the last flip sweep.
  std::vector<char> dirty;
  // Change stamps, and the stamp of the last smoothing attempt that left the
  // vertex in place.
  std::vector<long> changed, tried;
  long clock = 0;
  std::vector<Tri> T;
  std::vector<char> talive;
  std::vector<std::vector<int>> vt;
  std::vector<std::vector<int>> bnb;
  std::unordered_map<std::uint64_t, BoundaryLabel> bnd;

private:
  const std::function<Mat2(const Vec2&)>& metric_;
};

// Rotates tri so that (a, b) are its first two entries in CCW order.
bool orient_edge(const Tri& t, int a, int b, Tri& out) {
  for (int k = 0; k < 3; ++k) {
    if (t[k] == a && t[(k + 1) % 3] == b) {
      out = {a, b, t[(k + 2) % 3]};
      return true;
    }
  }
  return false;
}

int split_pass(WorkMesh& w) {
  struct Cand {
    double len;
    std::uint64_t key;
  };
  std::vector<Cand> cands;
  for (std::uint64_t k : w.edge_keys()) {
    const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
    const double l = w.length(a, b);
    if (l > kSqrt2) cands.push_back({l, k});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    return x.len != y.len ? x.len > y.len : x.key < y.key;
  });
  std::vector<char> touched(w.T.size(), 0);
  int n = 0;
  for (const Cand& c : cands) {
    const int a = static_cast<int>(c.key >> 32), b = static_cast<int>(c.key & 0xffffffffu);
    const std::vector<int> tris = w.common_triangles(a, b);
    if (tris.empty()) continue;
    bool skip = false;
    for (int t : tris)
      if (static_cast<std::size_t>(t) < touched.size() ? touched[static_cast<std::size_t>(t)] : true) skip = true;
    if (skip) continue;
    const int m = w.add_vertex(0.5 * (w.P[static_cast<std::size_t>(a)] + w.P[static_cast<std::size_t>(b)]));
    for (int t : tris) {
      Tri o{};
      const Tri tr = w.T[static_cast<std::size_t>(t)];
      if (!orient_edge(tr, a, b, o)) orient_edge(tr, b, a, o);
      w.kill_triangle(t);
      w.add_triangle(o[0], m, o[2]);
      w.add_triangle(m, o[1], o[2]);
    }
    touched.resize(w.T.size(), 1);
    if (w.is_boundary_edge(a, b)) {
      const BoundaryLabel l = w.bnd.at(ekey(a, b));
      w.remove_boundary(a, b);
      w.add_boundary(a, m, l);
      w.add_boundary(m, b, l);
    }
    ++n;
  }
  return n;
}

bool try_collapse(WorkMesh& w, int p, int q, double max_len) {
  if (w.is_boundary_vertex(p)) {
    if (!w.removable(p) || !w.is_boundary_edge(p, q)) return false;
  }
  const std::vector<int> shared = w.common_triangles(p, q);
  if (shared.empty()) return false;
  // Link condition.
  std::vector<int> opp;
  for (int t : shared)
    for (int v : w.T[static_cast<std::size_t>(t)])
      if (v != p && v != q) opp.push_back(v);
  std::sort(opp.begin(), opp.end());
  const std::vector<int> np = w.neighbors(p), nq = w.neighbors(q);
  std::vector<int> common;
  std::set_intersection(np.begin(), np.end(), nq.begin(), nq.end(), std::back_inserter(common));
  if (common != opp) return false;
  // Geometry of the modified ball.
  const Vec2& pq = w.P[static_cast<std::size_t>(q)];
  double old_min_q = 1.0;
  for (int t : w.vt[static_cast<std::size_t>(p)]) old_min_q = std::min(old_min_q, w.quality(t));
  for (int t : w.vt[static_cast<std::size_t>(p)]) {
    if (std::find(shared.begin(), shared.end(), t) != shared.end()) continue;
    Tri tr = w.T[static_cast<std::size_t>(t)];
    std::array<Vec2, 3> pts;
    for (int k = 0; k < 3; ++k) {
      if (tr[k] == p) tr[k] = q;
      pts[static_cast<std::size_t>(k)] = w.P[static_cast<std::size_t>(tr[k])];
    }
    const double ar = tri_area(pts[0], pts[1], pts[2]);
    const double scale = std::max({(pts[1] - pts[0]).squaredNorm(), (pts[2] - pts[1]).squaredNorm(),
                                   (pts[0] - pts[2]).squaredNorm()});
    if (!(ar > 1e-12 * scale)) return false;
    const double qn = w.quality(tr[0], tr[1], tr[2], pts[0], pts[1], pts[2]);
    if (qn < std::min(0.1, 0.5 * old_min_q)) return false;
    for (int v : tr)
      if (v != q && w.length(q, v) > max_len) return false;
  }
  (void)pq;
  // Apply.
  const bool bedge = w.is_boundary_edge(p, q);
  std::vector<std::pair<int, BoundaryLabel>> moved;
  if (bedge) {
    for (int r : std::vector<int>(w.bnb[static_cast<std::size_t>(p)])) {
      if (r == q) continue;
      moved.emplace_back(r, w.bnd.at(ekey(p, r)));
    }
    for (int r : std::vector<int>(w.bnb[static_cast<std::size_t>(p)])) w.remove_boundary(p, r);
  }
  for (int t : shared) w.kill_triangle(t);
  for (int t : std::vector<int>(w.vt[static_cast<std::size_t>(p)])) {
    Tri tr = w.T[static_cast<std::size_t>(t)];
    for (int& v : tr)
      if (v == p) v = q;
    w.kill_triangle(t);
    w.add_triangle(tr[0], tr[1], tr[2]);
  }
  for (const auto& [r, l] : moved) w.add_boundary(q, r, l);
  w.valive[static_cast<std::size_t>(p)] = 0;
  return true;
}

int collapse_pass(WorkMesh& w, double max_len) {
  struct Cand {
    double len;
    std::uint64_t key;
  };
  std::vector<Cand> cands;
  const double lo = 1.0 / kSqrt2;
  for (std::uint64_t k : w.edge_keys()) {
    const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
    const double l = w.length(a, b);
    if (l < lo) cands.push_back({l, k});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    return x.len != y.len ? x.len < y.len : x.key < y.key;
  });
  int n = 0;
  for (const Cand& c : cands) {
    const int a = static_cast<int>(c.key >> 32), b = static_cast<int>(c.key & 0xffffffffu);
    if (!w.valive[static_cast<std::size_t>(a)] || !w.valive[static_cast<std::size_t>(b)]) continue;
    if (w.common_triangles(a, b).empty()) continue;
    if (w.length(a, b) >= lo) continue;
    if (try_collapse(w, a, b, max_len) || try_collapse(w, b, a, max_len)) ++n;
  }
  return n;
}

// Flips edges of quads with a vertex that moved or gained elements since the
// previous sweep; other edges cannot have become flippable.
int flip_pass(WorkMesh& w) {
  int n = 0;
  std::vector<char> dirty;
  dirty.swap(w.dirty);
  w.dirty.assign(dirty.size(), 0);
  for (std::uint64_t k : w.edge_keys()) {
    const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
    if (w.is_boundary_edge(a, b)) continue;
    const std::vector<int> tris = w.common_triangles(a, b);
    if (tris.size() != 2) continue;
    Tri t0{}, t1{};
    int i0 = tris[0], i1 = tris[1];
    if (!orient_edge(w.T[static_cast<std::size_t>(i0)], a, b, t0)) std::swap(i0, i1);
    if (!orient_edge(w.T[static_cast<std::size_t>(i0)], a, b, t0)) continue;
    if (!orient_edge(w.T[static_cast<std::size_t>(i1)], b, a, t1)) continue;
    const int c = t0[2], d = t1[2];
    if (!dirty[static_cast<std::size_t>(a)] && !dirty[static_cast<std::size_t>(b)] &&
        !dirty[static_cast<std::size_t>(c)] && !dirty[static_cast<std::size_t>(d)])
      continue;
    if (c == d || !w.common_triangles(c, d).empty()) continue;
    const Vec2 &pa = w.P[static_cast<std::size_t>(a)], &pb = w.P[static_cast<std::size_t>(b)],
               &pc = w.P[static_cast<std::size_t>(c)], &pd = w.P[static_cast<std::size_t>(d)];
    const double s = std::max((pa - pb).squaredNorm(), (pc - pd).squaredNorm());
    if (!(tri_area(pa, pd, pc) > 1e-12 * s) || !(tri_area(pd, pb, pc) > 1e-12 * s)) continue;
    const double before = std::min(w.quality(a, b, c, pa, pb, pc), w.quality(b, a, d, pb, pa, pd));
    const double after = std::min(w.quality(a, d, c, pa, pd, pc), w.quality(d, b, c, pd, pb, pc));
    if (after > before * (1.0 + 1e-6) + 1e-12) {
      w.kill_triangle(i0);
      w.kill_triangle(i1);
      w.add_triangle(a, d, c);
      w.add_triangle(d, b, c);
      ++n;
    }
  }
  return n;
}

void smooth_pass(WorkMesh& w) {
  for (int v = 0; v < static_cast<int>(w.P.size()); ++v) {
    if (!w.valive[static_cast<std::size_t>(v)] || w.vt[static_cast<std::size_t>(v)].empty()) continue;
    const bool bnd = w.is_boundary_vertex(v);
    if (bnd && !w.removable(v)) continue;
    const std::vector<int> nb = w.neighbors(v);
    // Nothing around v changed since it last refused to move.
    long latest = w.changed[static_cast<std::size_t>(v)];
    for (int j : nb) latest = std::max(latest, w.changed[static_cast<std::size_t>(j)]);
    if (w.tried[static_cast<std::size_t>(v)] > latest) continue;
    const Vec2 p0 = w.P[static_cast<std::size_t>(v)];
    Vec2 spring = Vec2::Zero(), lap = Vec2::Zero();
    for (int j : nb) {
      const Vec2 d = w.P[static_cast<std::size_t>(j)] - p0;
      const double l = w.length(v, j);
      if (l > 0.0) spring += (1.0 - 1.0 / l) * d;
      lap += d;
    }
    spring /= static_cast<double>(nb.size());
    lap /= static_cast<double>(nb.size());
    double q_old = 1.0;
    for (int t : w.vt[static_cast<std::size_t>(v)]) q_old = std::min(q_old, w.quality(t));
    bool moved = false;
    for (const Vec2& step : {spring, lap}) {
      Vec2 cand = p0 + step;
      if (bnd) {
        const auto& bn = w.bnb[static_cast<std::size_t>(v)];
        const Vec2 a = w.P[static_cast<std::size_t>(bn[0])], b = w.P[static_cast<std::size_t>(bn[1])];
        const double s = std::clamp((cand - a).dot(b - a) / (b - a).squaredNorm(), 0.1, 0.9);
        cand = a + s * (b - a);
      }
      bool ok = true;
      double q_new = 1.0;
      for (int t : w.vt[static_cast<std::size_t>(v)]) {
        const Tri& tr = w.T[static_cast<std::size_t>(t)];
        std::array<Vec2, 3> pts;
        for (int k = 0; k < 3; ++k)
          pts[static_cast<std::size_t>(k)] = tr[k] == v ? cand : w.P[static_cast<std::size_t>(tr[k])];
        const double ar = tri_area(pts[0], pts[1], pts[2]);
        const double sc = std::max({(pts[1] - pts[0]).squaredNorm(), (pts[2] - pts[1]).squaredNorm(),
                                    (pts[0] - pts[2]).squaredNorm()});
        if (!(ar > 1e-12 * sc)) {
          ok = false;
          break;
        }
        q_new = std::min(q_new, w.quality(tr[0], tr[1], tr[2], pts[0], pts[1], pts[2]));
      }
      if (ok && q_new > q_old) {
        w.move_vertex(v, cand);
        moved = true;
        break;
      }
    }
    if (!moved) w.tried[static_cast<std::size_t>(v)] = ++w.clock;
  }
}

}  // namespace

Triangulation remesh(const Triangulation& start, const std::function<Mat2(const Vec2&)>& metric,
                     const RemeshOptions& opts, RemeshReport* report) {
  WorkMesh w(start, metric);
  RemeshReport rep;
  for (int pass = 0; pass < opts.max_passes; ++pass) {
    rep.passes = pass + 1;
    const int ns = split_pass(w);
    const int nc = collapse_pass(w, opts.collapse_max_length);
    int nf = 0;
    for (int k = 0; k < 8; ++k) {
      const int f = flip_pass(w);
      nf += f;
      if (f == 0) break;
    }
    for (int k = 0; k < opts.smoothing_sweeps; ++k) {
      smooth_pass(w);
      nf += flip_pass(w);
    }
    rep.splits += ns;
    rep.collapses += nc;
    rep.flips += nf;
    if (ns == 0 && nc == 0) {
      rep.converged = true;
      break;
    }
  }
  Triangulation out = w.compact();
  const MetricConformity mc = metric_conformity(out, metric);
  rep.fraction_in_range = mc.fraction_in_range;
  rep.mean_length = mc.mean_length;
  if (report) *report = rep;
  return out;
}

MeshPtr remesh(const MetricField& metric, const RemeshOptions& opts, RemeshReport* report) {
  const auto sampler = metric_sampler(metric);
  return std::make_shared<const Triangulation>(remesh(*metric.mesh, sampler, opts, report));
}

}  // namespace shellfrac
