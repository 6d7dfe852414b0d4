#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "shellfrac/mesh.hpp"

namespace testsupport {

using shellfrac::BoundaryEdge;
using shellfrac::BoundaryLabel;
using shellfrac::MeshPtr;
using shellfrac::Rect;
using shellfrac::Tri;
using shellfrac::Triangulation;
using shellfrac::Vec2;

// Tensor-product grid over the given node coordinates. Each cell is split by
// the diagonal chosen by flip(i, j); every boundary edge gets one label.
template <class Flip>
Triangulation grid_mesh(const std::vector<double>& xs, const std::vector<double>& ys, Flip flip,
                        BoundaryLabel label = BoundaryLabel::Free) {
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());
  std::vector<Vec2> pts;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) pts.emplace_back(xs[i], ys[j]);
  auto id = [&](int i, int j) { return j * nx + i; };
  std::vector<Tri> tris;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (flip(i, j)) {
        tris.push_back({a, b, d});
        tris.push_back({b, c, d});
      } else {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
      }
    }
  }
  std::vector<BoundaryEdge> bnd;
  for (int i = 0; i + 1 < nx; ++i) bnd.push_back({id(i, 0), id(i + 1, 0), label});
  for (int j = 0; j + 1 < ny; ++j) bnd.push_back({id(nx - 1, j), id(nx - 1, j + 1), label});
  for (int i = nx - 1; i > 0; --i) bnd.push_back({id(i, ny - 1), id(i - 1, ny - 1), label});
  for (int j = ny - 1; j > 0; --j) bnd.push_back({id(0, j), id(0, j - 1), label});
  return Triangulation(std::move(pts), std::move(tris), std::move(bnd));
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return out;
}

// Right-isoceles structured mesh of a rectangle with n x m cells.
inline Triangulation structured(const Rect& r, int n, int m,
                                BoundaryLabel label = BoundaryLabel::Free) {
  return grid_mesh(linspace(r.x_min, r.x_max, n + 1), linspace(r.y_min, r.y_max, m + 1),
                   [](int, int) { return false; }, label);
}

inline MeshPtr share(Triangulation t) { return std::make_shared<const Triangulation>(std::move(t)); }

// Small random mesh: jittered grid with random diagonals.
inline Triangulation random_mesh(std::mt19937& rng, const Rect& r, int nx, int ny,
                                 BoundaryLabel label = BoundaryLabel::Free) {
  std::uniform_real_distribution<double> jit(-0.25, 0.25);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> xs = linspace(r.x_min, r.x_max, nx);
  std::vector<double> ys = linspace(r.y_min, r.y_max, ny);
  std::vector<std::vector<char>> flips(static_cast<std::size_t>(nx));
  for (auto& col : flips) {
    col.resize(static_cast<std::size_t>(ny));
    for (auto& f : col) f = coin(rng) ? 1 : 0;
  }
  Triangulation base = grid_mesh(xs, ys, [&](int i, int j) { return flips[i][j] != 0; }, label);
  // Move interior vertices inside their cell neighbourhood.
  std::vector<Vec2> pts = base.vertices();
  const double dx = r.width() / (nx - 1), dy = r.height() / (ny - 1);
  for (int j = 1; j + 1 < ny; ++j)
    for (int i = 1; i + 1 < nx; ++i) {
      Vec2& p = pts[static_cast<std::size_t>(j * nx + i)];
      p += Vec2(jit(rng) * dx, jit(rng) * dy);
    }
  return Triangulation(std::move(pts), base.triangles(), base.boundary());
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)});
}

}  // namespace testsupport
