#include "shellfrac/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "shellfrac/error.hpp"

namespace shellfrac {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross2(b - a, c - a);
}

}  // namespace

const char* label_name(BoundaryLabel label) noexcept {
  switch (label) {
    case BoundaryLabel::DirichletPlus: return "dirichlet_plus";
    case BoundaryLabel::DirichletMinus: return "dirichlet_minus";
    case BoundaryLabel::DirichletZero: return "dirichlet_zero";
    case BoundaryLabel::Free: return "free";
    case BoundaryLabel::Notch: return "notch";
    case BoundaryLabel::Hole: return "hole";
  }
  return "free";
}

BoundaryLabel parse_label(std::string_view name) {
  for (auto l : {BoundaryLabel::DirichletPlus, BoundaryLabel::DirichletMinus,
                 BoundaryLabel::DirichletZero, BoundaryLabel::Free, BoundaryLabel::Notch,
                 BoundaryLabel::Hole}) {
    if (name == label_name(l)) return l;
  }
  fail(ErrorCode::Input, "unknown boundary label '" + std::string(name) + "'");
}

Triangulation::Triangulation(std::vector<Vec2> vertices, std::vector<Tri> triangles,
                             std::vector<BoundaryEdge> boundary)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary)) {
  build();
}

void Triangulation::build() {
  const int nv = static_cast<int>(vertices_.size());
  const int nt = static_cast<int>(triangles_.size());
  if (nt == 0) fail(ErrorCode::InvalidMesh, "triangulation has no triangles");
  for (const Vec2& p : vertices_) {
    if (!std::isfinite(p.x()) || !std::isfinite(p.y()))
      fail(ErrorCode::InvalidMesh, "non-finite vertex coordinate");
  }

  areas_.resize(static_cast<std::size_t>(nt));
  grads_.resize(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    const Tri& tri = triangles_[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= nv) {
        fail(ErrorCode::InvalidMesh, "triangle " + std::to_string(t) + " has an out-of-range vertex");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      fail(ErrorCode::InvalidMesh, "triangle " + std::to_string(t) + " repeats a vertex");
    }
    const Vec2& a = vertices_[static_cast<std::size_t>(tri[0])];
    const Vec2& b = vertices_[static_cast<std::size_t>(tri[1])];
    const Vec2& c = vertices_[static_cast<std::size_t>(tri[2])];
    const double A = signed_area(a, b, c);
    if (!(A > 0.0)) {
      fail(ErrorCode::InvalidMesh,
           "triangle " + std::to_string(t) + " is not counterclockwise or has zero area");
    }
    areas_[static_cast<std::size_t>(t)] = A;
    // grad xi_k = rot(opposite edge) / (2A)
    auto& g = grads_[static_cast<std::size_t>(t)];
    const Vec2* p[3] = {&a, &b, &c};
    for (int k = 0; k < 3; ++k) {
      const Vec2& q1 = *p[(k + 1) % 3];
      const Vec2& q2 = *p[(k + 2) % 3];
      g[static_cast<std::size_t>(k)] = Vec2(q1.y() - q2.y(), q2.x() - q1.x()) / (2.0 * A);
    }
  }

  // Edge skeleton.
  struct HalfEdge {
    std::uint64_t key;
    int t;
    int k;
  };
  std::vector<HalfEdge> half;
  half.reserve(static_cast<std::size_t>(3 * nt));
  for (int t = 0; t < nt; ++t) {
    const Tri& tri = triangles_[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) half.push_back({edge_key(tri[(k + 1) % 3], tri[(k + 2) % 3]), t, k});
  }
  std::sort(half.begin(), half.end(), [](const HalfEdge& x, const HalfEdge& y) {
    return x.key != y.key ? x.key < y.key : x.t < y.t;
  });
  edges_.clear();
  tri_edges_.assign(static_cast<std::size_t>(nt), {-1, -1, -1});
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && half[j].key == half[i].key) ++j;
    if (j - i > 2) fail(ErrorCode::InvalidMesh, "non-manifold edge shared by more than two triangles");
    Edge e;
    e.a = static_cast<int>(half[i].key >> 32);
    e.b = static_cast<int>(half[i].key & 0xffffffffu);
    e.t0 = half[i].t;
    if (j - i == 2) {
      e.t1 = half[i + 1].t;
      if (e.t0 == e.t1) fail(ErrorCode::InvalidMesh, "degenerate triangle edge");
      // Consistent orientation: the two triangles traverse the edge in opposite directions.
      auto dir = [&](int t, int k) {
        const Tri& tri = triangles_[static_cast<std::size_t>(t)];
        return tri[(k + 1) % 3] < tri[(k + 2) % 3];
      };
      if (dir(half[i].t, half[i].k) == dir(half[i + 1].t, half[i + 1].k)) {
        fail(ErrorCode::InvalidMesh, "duplicate or inconsistently oriented triangles");
      }
    }
    const int id = static_cast<int>(edges_.size());
    for (std::size_t q = i; q < j; ++q) tri_edges_[static_cast<std::size_t>(half[q].t)][half[q].k] = id;
    edges_.push_back(e);
    i = j;
  }

  // Boundary labels: exactly one per boundary edge, oriented with the domain on the left.
  std::size_t n_boundary_edges = 0;
  for (const Edge& e : edges_)
    if (e.t1 < 0) ++n_boundary_edges;
  if (boundary_.size() != n_boundary_edges) {
    fail(ErrorCode::InvalidMesh, "boundary label count (" + std::to_string(boundary_.size()) +
                                     ") does not match boundary edge count (" +
                                     std::to_string(n_boundary_edges) + ")");
  }
  {
    std::vector<std::pair<std::uint64_t, int>> lookup;
    lookup.reserve(edges_.size());
    for (int i = 0; i < static_cast<int>(edges_.size()); ++i)
      lookup.emplace_back(edge_key(edges_[static_cast<std::size_t>(i)].a, edges_[static_cast<std::size_t>(i)].b), i);
    std::sort(lookup.begin(), lookup.end());
    for (int bi = 0; bi < static_cast<int>(boundary_.size()); ++bi) {
      BoundaryEdge& be = boundary_[static_cast<std::size_t>(bi)];
      if (be.a < 0 || be.a >= nv || be.b < 0 || be.b >= nv)
        fail(ErrorCode::InvalidMesh, "boundary edge has an out-of-range vertex");
      const auto key = edge_key(be.a, be.b);
      auto it = std::lower_bound(lookup.begin(), lookup.end(), std::make_pair(key, -1));
      if (it == lookup.end() || it->first != key)
        fail(ErrorCode::InvalidMesh, "boundary label on a non-existent edge");
      Edge& e = edges_[static_cast<std::size_t>(it->second)];
      if (e.t1 >= 0) fail(ErrorCode::InvalidMesh, "boundary label on an interior edge");
      if (e.boundary >= 0) fail(ErrorCode::InvalidMesh, "duplicate boundary label");
      e.boundary = bi;
      // Orient as the triangle traverses it.
      const Tri& tri = triangles_[static_cast<std::size_t>(e.t0)];
      for (int k = 0; k < 3; ++k) {
        if (tri[(k + 1) % 3] == be.b && tri[(k + 2) % 3] == be.a) std::swap(be.a, be.b);
      }
    }
  }

  // Vertex -> triangles and vertex -> vertices (CSR).
  vt_offsets_.assign(static_cast<std::size_t>(nv + 1), 0);
  for (const Tri& tri : triangles_)
    for (int v : tri) ++vt_offsets_[static_cast<std::size_t>(v + 1)];
  std::partial_sum(vt_offsets_.begin(), vt_offsets_.end(), vt_offsets_.begin());
  vt_data_.assign(static_cast<std::size_t>(vt_offsets_.back()), -1);
  {
    std::vector<int> fill(vt_offsets_.begin(), vt_offsets_.end() - 1);
    for (int t = 0; t < nt; ++t)
      for (int v : triangles_[static_cast<std::size_t>(t)])
        vt_data_[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = t;
  }
  vv_offsets_.assign(static_cast<std::size_t>(nv + 1), 0);
  for (const Edge& e : edges_) {
    ++vv_offsets_[static_cast<std::size_t>(e.a + 1)];
    ++vv_offsets_[static_cast<std::size_t>(e.b + 1)];
  }
  std::partial_sum(vv_offsets_.begin(), vv_offsets_.end(), vv_offsets_.begin());
  vv_data_.assign(static_cast<std::size_t>(vv_offsets_.back()), -1);
  {
    std::vector<int> fill(vv_offsets_.begin(), vv_offsets_.end() - 1);
    for (const Edge& e : edges_) {
      vv_data_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.a)]++)] = e.b;
      vv_data_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.b)]++)] = e.a;
    }
  }
  boundary_vertex_.assign(static_cast<std::size_t>(nv), 0);
  for (const BoundaryEdge& be : boundary_) {
    boundary_vertex_[static_cast<std::size_t>(be.a)] = 1;
    boundary_vertex_[static_cast<std::size_t>(be.b)] = 1;
  }
}

int Triangulation::neighbor(int t, int k) const {
  const Edge& e = edges_[static_cast<std::size_t>(triangle_edge(t, k))];
  return e.t0 == t ? e.t1 : e.t0;
}

std::span<const int> Triangulation::vertex_triangles(int v) const {
  const auto b = static_cast<std::size_t>(vt_offsets_[static_cast<std::size_t>(v)]);
  const auto e = static_cast<std::size_t>(vt_offsets_[static_cast<std::size_t>(v) + 1]);
  return {vt_data_.data() + b, e - b};
}

std::span<const int> Triangulation::vertex_neighbors(int v) const {
  const auto b = static_cast<std::size_t>(vv_offsets_[static_cast<std::size_t>(v)]);
  const auto e = static_cast<std::size_t>(vv_offsets_[static_cast<std::size_t>(v) + 1]);
  return {vv_data_.data() + b, e - b};
}

double Triangulation::total_area() const {
  return std::accumulate(areas_.begin(), areas_.end(), 0.0);
}

Vec2 Triangulation::centroid(int t) const {
  const Tri& tri = triangle(t);
  return (vertex(tri[0]) + vertex(tri[1]) + vertex(tri[2])) / 3.0;
}

int Triangulation::find_edge(int a, int b) const {
  for (int t : vertex_triangles(a)) {
    for (int k = 0; k < 3; ++k) {
      const Edge& e = edges_[static_cast<std::size_t>(triangle_edge(t, k))];
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return triangle_edge(t, k);
    }
  }
  return -1;
}

bool Triangulation::same_as(const Triangulation& o) const {
  if (vertices_.size() != o.vertices_.size() || triangles_ != o.triangles_ ||
      boundary_.size() != o.boundary_.size())
    return false;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    if (vertices_[i] != o.vertices_[i]) return false;
  for (std::size_t i = 0; i < boundary_.size(); ++i) {
    if (boundary_[i].a != o.boundary_[i].a || boundary_[i].b != o.boundary_[i].b ||
        boundary_[i].label != o.boundary_[i].label)
      return false;
  }
  return true;
}

ElementMap element_map(const Vec2& p1, const Vec2& p2, const Vec2& p3) {
  ElementMap em;
  const double s3 = std::sqrt(3.0);
  em.M << s3 * (p2.x() - p1.x()), 2.0 * p3.x() - p1.x() - p2.x(),
      s3 * (p2.y() - p1.y()), 2.0 * p3.y() - p1.y() - p2.y();
  em.M /= 3.0;
  em.theta = (p1 + p2 + p3) / 3.0;
  const double det = em.M.determinant();
  const double scale = std::max({(p2 - p1).squaredNorm(), (p3 - p1).squaredNorm(), 1e-300});
  if (!(std::abs(det) > 1e-14 * scale)) fail(ErrorCode::DegenerateElement, "zero-area element");
  const Svd2 svd = svd2(em.M);
  em.sigma1 = svd.sigma(0);
  em.sigma2 = svd.sigma(1);
  em.r1 = svd.U.col(0);
  em.r2 = svd.U.col(1);
  em.aspect_ratio = em.sigma1 / em.sigma2;
  em.h_T = std::sqrt(std::max({(p2 - p1).squaredNorm(), (p3 - p2).squaredNorm(),
                               (p1 - p3).squaredNorm()}));
  return em;
}

ElementMap element_map(const Triangulation& mesh, int t) {
  if (t < 0 || t >= static_cast<int>(mesh.num_triangles()))
    fail(ErrorCode::InvalidParameter, "element id out of range");
  const Tri& tri = mesh.triangle(t);
  return element_map(mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2]));
}

std::vector<int> patch(const Triangulation& mesh, int t) {
  std::vector<int> out;
  for (int v : mesh.triangle(t))
    for (int s : mesh.vertex_triangles(v)) out.push_back(s);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

StiffnessSignReport check_stiffness_sign(const Triangulation& mesh, const SurfaceChart& chart) {
  // K_lm accumulated per edge; diagonal entries only feed the tolerance.
  std::vector<double> offdiag(mesh.edges().size(), 0.0);
  std::vector<double> diag(mesh.num_vertices(), 0.0);
  for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
    const Tri& tri = mesh.triangle(t);
    const auto& g = mesh.basis_gradients(t);
    Mat2 Aavg = Mat2::Zero();
    for (int k = 0; k < 3; ++k) {
      const Vec2 mid = 0.5 * (mesh.vertex(tri[(k + 1) % 3]) + mesh.vertex(tri[(k + 2) % 3]));
      Aavg += chart.eval(mid).A;
    }
    Aavg *= mesh.area(t) / 3.0;
    for (int k = 0; k < 3; ++k) {
      diag[static_cast<std::size_t>(tri[k])] += g[k].dot(Aavg * g[k]);
      // edge opposite k connects the other two vertices
      const int i = (k + 1) % 3, j = (k + 2) % 3;
      offdiag[static_cast<std::size_t>(mesh.triangle_edge(t, k))] += g[i].dot(Aavg * g[j]);
    }
  }
  StiffnessSignReport rep;
  for (double d : diag) rep.max_abs_entry = std::max(rep.max_abs_entry, std::abs(d));
  for (double o : offdiag) rep.max_abs_entry = std::max(rep.max_abs_entry, std::abs(o));
  rep.tolerance = 1e-10 * rep.max_abs_entry;
  for (std::size_t e = 0; e < offdiag.size(); ++e) {
    if (offdiag[e] > 0.0) rep.max_positive_offdiag = std::max(rep.max_positive_offdiag, offdiag[e]);
    if (offdiag[e] > rep.tolerance)
      rep.violations.emplace_back(mesh.edges()[e].a, mesh.edges()[e].b);
  }
  return rep;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    fail(ErrorCode::Input, "malformed number '" + tok + "' in mesh file");
  return v;
}

int parse_int(const std::string& tok) {
  int v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    fail(ErrorCode::Input, "malformed integer '" + tok + "' in mesh file");
  return v;
}

void expect_section(std::istream& is, const char* tag, std::size_t& count) {
  std::string t, n;
  if (!(is >> t >> n) || t != tag) fail(ErrorCode::Input, std::string("mesh file: expected section ") + tag);
  const int c = parse_int(n);
  if (c < 0) fail(ErrorCode::Input, "mesh file: negative count");
  count = static_cast<std::size_t>(c);
}

}  // namespace

void write_mesh(std::ostream& os, const Triangulation& mesh) {
  os << "shellmesh 1\n";
  os << "V " << mesh.num_vertices() << '\n';
  for (const Vec2& p : mesh.vertices()) os << format_double(p.x()) << ' ' << format_double(p.y()) << '\n';
  os << "T " << mesh.num_triangles() << '\n';
  for (const Tri& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "B " << mesh.boundary().size() << '\n';
  for (const BoundaryEdge& b : mesh.boundary()) os << b.a << ' ' << b.b << ' ' << label_name(b.label) << '\n';
}

void write_mesh(const std::string& path, const Triangulation& mesh) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_mesh(os, mesh);
  if (!os) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

Triangulation read_mesh(std::istream& is) {
  std::string magic, version;
  if (!(is >> magic >> version) || magic != "shellmesh" || version != "1")
    fail(ErrorCode::Input, "not a 'shellmesh 1' file");
  std::size_t n = 0;
  expect_section(is, "V", n);
  std::vector<Vec2> verts(n);
  for (auto& p : verts) {
    std::string x, y;
    if (!(is >> x >> y)) fail(ErrorCode::Input, "mesh file: truncated vertex section");
    p = Vec2(parse_double(x), parse_double(y));
  }
  expect_section(is, "T", n);
  std::vector<Tri> tris(n);
  for (auto& t : tris) {
    std::string a, b, c;
    if (!(is >> a >> b >> c)) fail(ErrorCode::Input, "mesh file: truncated triangle section");
    t = {parse_int(a), parse_int(b), parse_int(c)};
  }
  expect_section(is, "B", n);
  std::vector<BoundaryEdge> bnd(n);
  for (auto& e : bnd) {
    std::string a, b, l;
    if (!(is >> a >> b >> l)) fail(ErrorCode::Input, "mesh file: truncated boundary section");
    e = {parse_int(a), parse_int(b), parse_label(l)};
  }
  return Triangulation(std::move(verts), std::move(tris), std::move(bnd));
}

Triangulation read_mesh(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::Io, "cannot open '" + path + "'");
  return read_mesh(is);
}

std::array<double, 3> barycentric(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double det = cross2(b - a, c - a);
  const double l1 = cross2(b - p, c - p) / det;
  const double l2 = cross2(c - p, a - p) / det;
  return {l1, l2, 1.0 - l1 - l2};
}

PointLocator::PointLocator(MeshPtr mesh) : mesh_(std::move(mesh)) {
  const auto& V = mesh_->vertices();
  const int nt = static_cast<int>(mesh_->num_triangles());
  std::vector<std::array<double, 4>> box(static_cast<std::size_t>(nt));
  Node root{1e300, 1e300, -1e300, -1e300};
  for (int t = 0; t < nt; ++t) {
    auto& bx = box[static_cast<std::size_t>(t)];
    bx = {1e300, 1e300, -1e300, -1e300};
    for (int v : mesh_->triangle(t)) {
      const Vec2& q = V[static_cast<std::size_t>(v)];
      bx = {std::min(bx[0], q.x()), std::min(bx[1], q.y()), std::max(bx[2], q.x()), std::max(bx[3], q.y())};
    }
    root = {std::min(root.x0, bx[0]), std::min(root.y0, bx[1]), std::max(root.x1, bx[2]),
            std::max(root.y1, bx[3])};
  }
  if (nt == 0) root = {0.0, 0.0, 1.0, 1.0};
  constexpr std::size_t kLeafSize = 12;
  constexpr int kMaxDepth = 16;
  struct Work {
    int node, depth;
    std::vector<int> tris;
  };
  std::vector<int> all(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) all[static_cast<std::size_t>(t)] = t;
  nodes_.push_back(root);
  std::vector<Work> stack;
  stack.push_back({0, 0, std::move(all)});
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    const Node n = nodes_[static_cast<std::size_t>(w.node)];
    if (w.tris.size() <= kLeafSize || w.depth >= kMaxDepth) {
      nodes_[static_cast<std::size_t>(w.node)].begin = static_cast<int>(cells_.size());
      cells_.insert(cells_.end(), w.tris.begin(), w.tris.end());
      nodes_[static_cast<std::size_t>(w.node)].end = static_cast<int>(cells_.size());
      continue;
    }
    const double xm = 0.5 * (n.x0 + n.x1), ym = 0.5 * (n.y0 + n.y1);
    const int first = static_cast<int>(nodes_.size());
    nodes_[static_cast<std::size_t>(w.node)].child = first;
    const std::array<Node, 4> kids{Node{n.x0, n.y0, xm, ym}, Node{xm, n.y0, n.x1, ym},
                                   Node{n.x0, ym, xm, n.y1}, Node{xm, ym, n.x1, n.y1}};
    for (int c = 0; c < 4; ++c) {
      const Node& k = kids[static_cast<std::size_t>(c)];
      nodes_.push_back(k);
      std::vector<int> sub;
      for (int t : w.tris) {
        const auto& bx = box[static_cast<std::size_t>(t)];
        if (bx[0] <= k.x1 && bx[2] >= k.x0 && bx[1] <= k.y1 && bx[3] >= k.y0) sub.push_back(t);
      }
      stack.push_back({first + c, w.depth + 1, std::move(sub)});
    }
  }
}

double PointLocator::candidates(const Vec2& p, double r, std::vector<int>& out) const {
  out.clear();
  const Node& root = nodes_.front();
  // Clamp into the root box so that outside points still reach a leaf.
  const Vec2 q(std::clamp(p.x(), root.x0, root.x1), std::clamp(p.y(), root.y0, root.y1));
  double width = root.x1 - root.x0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (n.x0 > q.x() + r || n.x1 < q.x() - r || n.y0 > q.y() + r || n.y1 < q.y() - r) continue;
    if (n.child < 0) {
      if (n.x0 <= q.x() && q.x() <= n.x1 && n.y0 <= q.y() && q.y() <= n.y1)
        width = std::min(width, std::max(n.x1 - n.x0, n.y1 - n.y0));
      for (int i = n.begin; i < n.end; ++i) out.push_back(cells_[static_cast<std::size_t>(i)]);
      continue;
    }
    for (int c = 3; c >= 0; --c) stack.push_back(n.child + c);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return width;
}

PointLocator::Hit PointLocator::best_in(const Vec2& p, const std::vector<int>& cand) const {
  Hit best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int t : cand) {
    const Tri& tri = mesh_->triangle(t);
    const auto bc = barycentric(p, mesh_->vertex(tri[0]), mesh_->vertex(tri[1]), mesh_->vertex(tri[2]));
    const double m = std::min({bc[0], bc[1], bc[2]});
    if (m > best_min) {
      best_min = m;
      best.triangle = t;
      best.bary = bc;
    }
  }
  if (best.triangle >= 0 && best_min < 0.0) {
    // Convert the barycentric deficit into a length: lambda_k * height_k.
    const Tri& tri = mesh_->triangle(best.triangle);
    double out = 0.0;
    for (int k = 0; k < 3; ++k) {
      if (best.bary[k] < 0.0) {
        const Vec2 e = mesh_->vertex(tri[(k + 2) % 3]) - mesh_->vertex(tri[(k + 1) % 3]);
        const double height = 2.0 * mesh_->area(best.triangle) / e.norm();
        out = std::max(out, -best.bary[k] * height);
      }
    }
    best.outside = out;
  }
  return best;
}

PointLocator::Hit PointLocator::locate(const Vec2& p, double snap_tol) const {
  std::vector<int> cand;
  Hit best;
  double r = 0.0;
  for (int ring = 0; ring <= 3; ++ring) {
    const double width = candidates(p, r, cand);
    Hit h = best_in(p, cand);
    if (h.triangle >= 0 && (best.triangle < 0 || h.outside < best.outside)) best = h;
    if (best.triangle >= 0 && best.outside == 0.0) return best;
    r = r == 0.0 ? width : 2.0 * r;
  }
  if (best.triangle < 0 || best.outside > snap_tol) {
    std::ostringstream os;
    os << "cannot locate point (" << p.x() << ", " << p.y() << ") in mesh";
    fail(ErrorCode::PointLocation, os.str());
  }
  return best;
}

PointLocator::Hit PointLocator::locate_towards(const Vec2& p, const Vec2& hint, double snap_tol) const {
  // Locate a point pushed slightly towards the hint; then evaluate the
  // barycentric coordinates of p itself in that element.
  const Vec2 q = p + 1e-7 * (hint - p);
  Hit h = locate(q, snap_tol + (hint - p).norm() * 1e-7);
  const Tri& tri = mesh_->triangle(h.triangle);
  h.bary = barycentric(p, mesh_->vertex(tri[0]), mesh_->vertex(tri[1]), mesh_->vertex(tri[2]));
  return h;
}

}  // namespace shellfrac
