#include "shellfrac/meshgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "shellfrac/adaptation.hpp"
#include "shellfrac/error.hpp"

namespace shellfrac {

namespace {

std::uint64_t ekey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Incremental Delaunay triangulation (Bowyer-Watson) inside a super triangle.
class Delaunay {
public:
  struct Face {
    std::array<int, 3> v;
    std::array<int, 3> n;  // neighbour opposite v[k]
    bool alive = true;
  };

  Delaunay(const Vec2& lo, const Vec2& hi) {
    const Vec2 c = 0.5 * (lo + hi);
    const double d = std::max((hi - lo).maxCoeff(), 1e-12) * 20.0;
    P.push_back(c + Vec2(-2.0 * d, -d));
    P.push_back(c + Vec2(2.0 * d, -d));
    P.push_back(c + Vec2(0.0, 2.0 * d));
    F.push_back({{0, 1, 2}, {-1, -1, -1}, true});
  }

  int insert(const Vec2& p) {
    const int t0 = locate(p);
    const int id = static_cast<int>(P.size());
    P.push_back(p);
    // Cavity: faces whose circumcircle strictly contains p.
    ++stamp_;
    mark_.resize(F.size(), 0);
    std::vector<int> bad{t0}, stack{t0};
    mark_[static_cast<std::size_t>(t0)] = stamp_;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      for (int nb : F[static_cast<std::size_t>(t)].n) {
        if (nb < 0 || mark_[static_cast<std::size_t>(nb)] == stamp_) continue;
        if (in_circle(nb, p)) {
          mark_[static_cast<std::size_t>(nb)] = stamp_;
          bad.push_back(nb);
          stack.push_back(nb);
        }
      }
    }
    struct NewFace {
      int t, a, b;
    };
    std::vector<NewFace> created;
    for (int t : bad) {
      const Face f = F[static_cast<std::size_t>(t)];
      for (int k = 0; k < 3; ++k) {
        const int nb = f.n[static_cast<std::size_t>(k)];
        if (nb >= 0 && mark_[static_cast<std::size_t>(nb)] == stamp_) continue;
        const int a = f.v[static_cast<std::size_t>((k + 1) % 3)];
        const int b = f.v[static_cast<std::size_t>((k + 2) % 3)];
        const int nt = static_cast<int>(F.size());
        F.push_back({{a, b, id}, {-1, -1, nb}, true});
        mark_.push_back(0);
        if (nb >= 0) {
          for (int& x : F[static_cast<std::size_t>(nb)].n)
            if (x == t) x = nt;
        }
        created.push_back({nt, a, b});
      }
    }
    for (int t : bad) F[static_cast<std::size_t>(t)].alive = false;
    // Face (a, b, p): neighbour opposite a shares edge (b, p), i.e. the new
    // face starting at b; neighbour opposite b is the one ending at a.
    for (const NewFace& x : created) {
      for (const NewFace& y : created) {
        if (y.a == x.b) F[static_cast<std::size_t>(x.t)].n[0] = y.t;
        if (y.b == x.a) F[static_cast<std::size_t>(x.t)].n[1] = y.t;
      }
    }
    last_ = created.empty() ? last_ : created.front().t;
    return id;
  }

  std::vector<Vec2> P;
  std::vector<Face> F;

private:
  double orient(const Vec2& a, const Vec2& b, const Vec2& c) const { return cross2(b - a, c - a); }

  bool in_circle(int t, const Vec2& p) const {
    const Face& f = F[static_cast<std::size_t>(t)];
    const Vec2 a = P[static_cast<std::size_t>(f.v[0])] - p;
    const Vec2 b = P[static_cast<std::size_t>(f.v[1])] - p;
    const Vec2 c = P[static_cast<std::size_t>(f.v[2])] - p;
    const double det = a.squaredNorm() * cross2(b, c) - b.squaredNorm() * cross2(a, c) +
                       c.squaredNorm() * cross2(a, b);
    return det > 0.0;
  }

  int locate(const Vec2& p) {
    int t = last_;
    if (t < 0 || !F[static_cast<std::size_t>(t)].alive) t = any_alive();
    const std::size_t max_steps = 4 * F.size() + 16;
    unsigned rot = 0;
    for (std::size_t step = 0; step < max_steps; ++step) {
      const Face& f = F[static_cast<std::size_t>(t)];
      bool moved = false;
      for (int j = 0; j < 3; ++j) {
        const int k = static_cast<int>((static_cast<unsigned>(j) + rot) % 3u);
        const Vec2& a = P[static_cast<std::size_t>(f.v[static_cast<std::size_t>((k + 1) % 3)])];
        const Vec2& b = P[static_cast<std::size_t>(f.v[static_cast<std::size_t>((k + 2) % 3)])];
        if (orient(a, b, p) < 0.0 && f.n[static_cast<std::size_t>(k)] >= 0) {
          t = f.n[static_cast<std::size_t>(k)];
          moved = true;
          break;
        }
      }
      ++rot;
      if (!moved) return t;
    }
    // Walk failed to terminate; fall back to a scan.
    for (std::size_t i = 0; i < F.size(); ++i) {
      const Face& f = F[i];
      if (!f.alive) continue;
      const Vec2 &a = P[static_cast<std::size_t>(f.v[0])], &b = P[static_cast<std::size_t>(f.v[1])],
                 &c = P[static_cast<std::size_t>(f.v[2])];
      if (orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0)
        return static_cast<int>(i);
    }
    fail(ErrorCode::Geometry, "mesh generator failed to locate an insertion point");
  }

  int any_alive() const {
    for (std::size_t i = F.size(); i-- > 0;)
      if (F[i].alive) return static_cast<int>(i);
    return 0;
  }

  int last_ = 0;
  int stamp_ = 0;
  std::vector<int> mark_;
};

enum class SegKind { Outer, Hole, NotchRect, Slit };

struct Segment {
  int a, b;
  BoundaryLabel label;
  SegKind kind;
};

double dist_to_rect_boundary(const Vec2& p, const Rect& r) {
  return std::min({p.x() - r.x_min, r.x_max - p.x(), p.y() - r.y_min, r.y_max - p.y()});
}

// Signed distance from p to the rectangle (negative inside).
double dist_to_rect(const Vec2& p, const Rect& r) {
  const double dx = std::max(r.x_min - p.x(), p.x() - r.x_max);
  const double dy = std::max(r.y_min - p.y(), p.y() - r.y_max);
  if (dx <= 0.0 && dy <= 0.0) return std::max(dx, dy);
  return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
}

double dist_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double s = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - (a + s * d)).norm();
}

bool in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 &a = poly[i], &b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

void validate(const DomainSpec& s, double h) {
  auto bad = [](ErrorCode c, const std::string& m) { fail(c, m); };
  if (!(h > 0.0) || !std::isfinite(h)) bad(ErrorCode::InvalidParameter, "target_h must be positive");
  if (!(s.domain.width() > 0.0) || !(s.domain.height() > 0.0))
    bad(ErrorCode::Geometry, "domain rectangle is empty");
  if (!(s.extension_depth >= 0.0)) bad(ErrorCode::InvalidParameter, "extension depth must be >= 0");
  const Rect ext = s.extended();
  if (s.dirichlet_bottom &&
      (!(s.dirichlet_gap > 0.0) || !(-s.dirichlet_gap > ext.x_min) || !(s.dirichlet_gap < ext.x_max)))
    bad(ErrorCode::Geometry, "Dirichlet gap must lie strictly inside the bottom edge");
  if (s.notch) {
    const Rect& n = *s.notch;
    if (!(n.width() > 0.0) || !(n.height() > 0.0)) bad(ErrorCode::Geometry, "notch rectangle is empty");
    if (!(n.x_min > ext.x_min && n.x_max < ext.x_max && n.y_min > ext.y_min && n.y_max < ext.y_max))
      bad(ErrorCode::Geometry, "notch must lie strictly inside the domain");
  }
  for (std::size_t i = 0; i < s.holes.size(); ++i) {
    const HoleSpec& hs = s.holes[i];
    std::ostringstream os;
    if (!(hs.radius > 0.0)) {
      os << "hole " << i << " has non-positive radius";
      bad(ErrorCode::Geometry, os.str());
    }
    if (!(dist_to_rect_boundary(hs.center, ext) > hs.radius)) {
      os << "hole " << i << " is not strictly inside the domain";
      bad(ErrorCode::Geometry, os.str());
    }
    if (s.notch && !(dist_to_rect(hs.center, *s.notch) > hs.radius)) {
      os << "hole " << i << " touches the notch";
      bad(ErrorCode::Geometry, os.str());
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (!((hs.center - s.holes[j].center).norm() > hs.radius + s.holes[j].radius)) {
        os << "holes " << j << " and " << i << " overlap";
        bad(ErrorCode::Geometry, os.str());
      }
    }
  }
}

}  // namespace

int count_inner_boundaries(const DomainSpec& spec) {
  return static_cast<int>(spec.holes.size()) + (spec.notch ? 1 : 0);
}

Triangulation build_domain_mesh(const DomainSpec& spec, double h) {
  validate(spec, h);
  const Rect ext = spec.extended();
  const bool slit = spec.notch && h > spec.slit_threshold;

  std::vector<Vec2> pts;
  std::vector<Segment> segs;
  // Polyline through the given points, subdivided to spacing <= h.
  auto add_polyline = [&](const std::vector<Vec2>& corners, bool closed, BoundaryLabel label,
                          SegKind kind, std::vector<BoundaryLabel> labels = {}) {
    const std::size_t first = pts.size();
    const std::size_t nc = corners.size();
    const std::size_t npieces = closed ? nc : nc - 1;
    for (std::size_t i = 0; i < npieces; ++i) {
      const Vec2& a = corners[i];
      const Vec2& b = corners[(i + 1) % nc];
      const int n = std::max(kind == SegKind::Slit ? 2 : 1, static_cast<int>(std::ceil((b - a).norm() / h - 1e-9)));
      const BoundaryLabel l = labels.empty() ? label : labels[i];
      for (int k = 0; k < n; ++k) {
        const double s = static_cast<double>(k) / n;
        const Vec2 p = k == 0 ? a : Vec2(a + s * (b - a));
        const int ia = static_cast<int>(pts.size());
        pts.push_back(p);
        const bool last_piece = (i + 1 == npieces) && (k + 1 == n);
        const int ib = last_piece ? (closed ? static_cast<int>(first) : ia + 1) : ia + 1;
        segs.push_back({ia, ib, l, kind});
      }
    }
    if (!closed) pts.push_back(corners.back());
  };

  // Outer boundary, counterclockwise from the bottom-left corner.
  {
    std::vector<Vec2> c{Vec2(ext.x_min, ext.y_min)};
    std::vector<BoundaryLabel> l;
    if (spec.dirichlet_bottom) {
      const double g = spec.dirichlet_gap;
      c.push_back(Vec2(-g, ext.y_min));
      c.push_back(Vec2(g, ext.y_min));
      l = {BoundaryLabel::DirichletMinus, BoundaryLabel::DirichletZero, BoundaryLabel::DirichletPlus};
    } else {
      l = {BoundaryLabel::Free};
    }
    c.push_back(Vec2(ext.x_max, ext.y_min));
    c.push_back(Vec2(ext.x_max, ext.y_max));
    c.push_back(Vec2(ext.x_min, ext.y_max));
    l.push_back(BoundaryLabel::Free);
    l.push_back(BoundaryLabel::Free);
    l.push_back(BoundaryLabel::Free);
    add_polyline(c, true, BoundaryLabel::Free, SegKind::Outer, l);
  }
  Vec2 slit_a = Vec2::Zero(), slit_b = Vec2::Zero();
  std::vector<Vec2> notch_poly;
  if (spec.notch) {
    const Rect& n = *spec.notch;
    if (slit) {
      const Vec2 c(0.5 * (n.x_min + n.x_max), 0.5 * (n.y_min + n.y_max));
      if (n.height() >= n.width()) {
        slit_a = Vec2(c.x(), n.y_min);
        slit_b = Vec2(c.x(), n.y_max);
      } else {
        slit_a = Vec2(n.x_min, c.y());
        slit_b = Vec2(n.x_max, c.y());
      }
      add_polyline({slit_a, slit_b}, false, BoundaryLabel::Notch, SegKind::Slit);
    } else {
      notch_poly = {Vec2(n.x_min, n.y_min), Vec2(n.x_min, n.y_max), Vec2(n.x_max, n.y_max),
                    Vec2(n.x_max, n.y_min)};
      add_polyline(notch_poly, true, BoundaryLabel::Notch, SegKind::NotchRect);
    }
  }
  std::vector<std::vector<Vec2>> hole_polys;
  for (const HoleSpec& hs : spec.holes) {
    const int n = std::max(8, static_cast<int>(std::ceil(2.0 * std::numbers::pi * hs.radius / h)));
    std::vector<Vec2> poly;
    // Clockwise, so that the domain lies to the left.
    for (int k = 0; k < n; ++k) {
      const double a = -2.0 * std::numbers::pi * k / n;
      poly.push_back(hs.center + hs.radius * Vec2(std::cos(a), std::sin(a)));
    }
    hole_polys.push_back(poly);
    add_polyline(poly, true, BoundaryLabel::Hole, SegKind::Hole);
  }
  const std::size_t n_feature_pts = pts.size();

  // Interior lattice with a small deterministic jitter.
  std::mt19937 rng(spec.seed);
  auto jitter = [&]() { return (static_cast<double>(rng()) / 4294967296.0 - 0.5) * 0.04 * h; };
  const double dy = h * std::sqrt(3.0) / 2.0;
  const int ny = static_cast<int>(std::floor(ext.height() / dy));
  const int nx = static_cast<int>(std::floor(ext.width() / h)) + 1;
  for (int j = 1; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      Vec2 p(ext.x_min + (i + (j % 2 ? 0.5 : 0.0)) * h, ext.y_min + j * dy);
      p += Vec2(jitter(), jitter());
      const double keep = 0.5 * h;
      if (dist_to_rect_boundary(p, ext) < keep) continue;
      if (spec.notch) {
        if (slit ? dist_to_segment(p, slit_a, slit_b) < keep : dist_to_rect(p, *spec.notch) < keep) continue;
      }
      if (spec.dirichlet_bottom && (std::abs(p.x() - spec.dirichlet_gap) < keep ||
                                    std::abs(p.x() + spec.dirichlet_gap) < keep) &&
          p.y() - ext.y_min < keep)
        continue;
      bool near_hole = false;
      for (const HoleSpec& hs : spec.holes)
        if ((p - hs.center).norm() < hs.radius + keep) near_hole = true;
      if (near_hole) continue;
      pts.push_back(p);
    }
  }

  Delaunay dt(Vec2(ext.x_min, ext.y_min), Vec2(ext.x_max, ext.y_max));
  std::vector<int> id_of(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) id_of[i] = dt.insert(pts[i]);
  for (Segment& s : segs) {
    s.a = id_of[static_cast<std::size_t>(s.a)];
    s.b = id_of[static_cast<std::size_t>(s.b)];
  }
  (void)n_feature_pts;

  // Recover constraint segments by midpoint insertion.
  for (int round = 0;; ++round) {
    std::unordered_set<std::uint64_t> edges;
    for (const auto& f : dt.F) {
      if (!f.alive) continue;
      for (int k = 0; k < 3; ++k) edges.insert(ekey(f.v[static_cast<std::size_t>(k)], f.v[static_cast<std::size_t>((k + 1) % 3)]));
    }
    std::vector<Segment> next;
    bool missing = false;
    for (const Segment& s : segs) {
      if (edges.count(ekey(s.a, s.b))) {
        next.push_back(s);
        continue;
      }
      missing = true;
      const int m = dt.insert(0.5 * (dt.P[static_cast<std::size_t>(s.a)] + dt.P[static_cast<std::size_t>(s.b)]));
      next.push_back({s.a, m, s.label, s.kind});
      next.push_back({m, s.b, s.label, s.kind});
    }
    segs = std::move(next);
    if (!missing) break;
    if (round > 60) fail(ErrorCode::Geometry, "mesh generator could not recover the boundary segments");
  }

  // Keep faces inside the domain.
  std::vector<Tri> tris;
  for (const auto& f : dt.F) {
    if (!f.alive) continue;
    if (f.v[0] < 3 || f.v[1] < 3 || f.v[2] < 3) continue;
    const Vec2 c = (dt.P[static_cast<std::size_t>(f.v[0])] + dt.P[static_cast<std::size_t>(f.v[1])] +
                    dt.P[static_cast<std::size_t>(f.v[2])]) / 3.0;
    if (!ext.contains(c)) continue;
    if (!notch_poly.empty() && in_polygon(c, notch_poly)) continue;
    bool in_hole = false;
    for (const auto& poly : hole_polys)
      if (in_polygon(c, poly)) in_hole = true;
    if (in_hole) continue;
    tris.push_back({f.v[0], f.v[1], f.v[2]});
  }

  // Split the slit: faces on its right side get duplicated vertices.
  std::vector<Vec2> verts = dt.P;
  std::vector<BoundaryEdge> bedges;
  if (slit) {
    const Vec2 d = slit_b - slit_a;
    std::unordered_map<int, int> dup;
    std::vector<std::pair<double, int>> chain;
    std::unordered_set<int> on_slit;
    for (const Segment& s : segs) {
      if (s.kind != SegKind::Slit) continue;
      for (int v : {s.a, s.b}) on_slit.insert(v);
    }
    for (int v : on_slit) chain.emplace_back((verts[static_cast<std::size_t>(v)] - slit_a).dot(d), v);
    std::sort(chain.begin(), chain.end());
    for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
      const int v = chain[i].second;
      dup[v] = static_cast<int>(verts.size());
      verts.push_back(verts[static_cast<std::size_t>(v)]);
    }
    for (Tri& t : tris) {
      const Vec2 c = (verts[static_cast<std::size_t>(t[0])] + verts[static_cast<std::size_t>(t[1])] +
                      verts[static_cast<std::size_t>(t[2])]) / 3.0;
      if (cross2(d, c - slit_a) >= 0.0) continue;
      for (int& v : t) {
        auto it = dup.find(v);
        if (it != dup.end()) v = it->second;
      }
    }
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      const int a = chain[i].second, b = chain[i + 1].second;
      bedges.push_back({a, b, BoundaryLabel::Notch});
      auto m = [&](int v) {
        auto it = dup.find(v);
        return it == dup.end() ? v : it->second;
      };
      bedges.push_back({m(a), m(b), BoundaryLabel::Notch});
    }
  }
  for (const Segment& s : segs)
    if (s.kind != SegKind::Slit) bedges.push_back({s.a, s.b, s.label});

  // Compact away super vertices and unused points.
  std::vector<int> map(verts.size(), -1);
  std::vector<int> used(verts.size(), 0);
  for (const Tri& t : tris)
    for (int v : t) used[static_cast<std::size_t>(v)] = 1;
  std::vector<Vec2> out_v;
  for (std::size_t v = 0; v < verts.size(); ++v) {
    if (!used[v]) continue;
    map[v] = static_cast<int>(out_v.size());
    out_v.push_back(verts[v]);
  }
  for (Tri& t : tris)
    for (int& v : t) v = map[static_cast<std::size_t>(v)];
  for (BoundaryEdge& e : bedges) {
    e.a = map[static_cast<std::size_t>(e.a)];
    e.b = map[static_cast<std::size_t>(e.b)];
    if (e.a < 0 || e.b < 0) fail(ErrorCode::Geometry, "boundary segment lost during mesh generation");
  }
  Triangulation raw(std::move(out_v), std::move(tris), std::move(bedges));

  // Isotropic improvement.
  Mat2 M = Mat2::Identity() / (h * h);
  RemeshOptions opts;
  opts.max_passes = 4;
  return remesh(raw, [M](const Vec2&) { return M; }, opts, nullptr);
}

}  // namespace shellfrac
