#include "vocalfit/triangulation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "vocalfit/error.hpp"

namespace vocalfit {
namespace {

using i64 = std::int64_t;

i64 orient(const LatticePoint& a, const LatticePoint& b, const LatticePoint& c) {
  return static_cast<i64>(b.x - a.x) * (c.y - a.y) - static_cast<i64>(b.y - a.y) * (c.x - a.x);
}

// Positive when d lies strictly inside the circumcircle of CCW (a, b, c).
i64 incircle(const LatticePoint& a, const LatticePoint& b, const LatticePoint& c,
             const LatticePoint& d) {
  const i64 adx = a.x - d.x, ady = a.y - d.y;
  const i64 bdx = b.x - d.x, bdy = b.y - d.y;
  const i64 cdx = c.x - d.x, cdy = c.y - d.y;
  const i64 ad = adx * adx + ady * ady;
  const i64 bd = bdx * bdx + bdy * bdy;
  const i64 cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

}  // namespace

bool all_collinear(std::span<const LatticePoint> points) noexcept {
  if (points.size() < 3) return true;
  const auto& a = points[0];
  std::size_t k = 1;
  while (k < points.size() && points[k] == a) ++k;
  if (k == points.size()) return true;
  for (std::size_t i = k + 1; i < points.size(); ++i) {
    if (orient(a, points[k], points[i]) != 0) return false;
  }
  return true;
}

DelaunayTriangulation::DelaunayTriangulation(std::vector<LatticePoint> points)
    : points_(std::move(points)) {
  const std::size_t n = points_.size();
  if (n < 3) throw Error(Errc::InvalidArgument, "triangulation needs at least three points");
  if (all_collinear(points_)) throw Error(Errc::InvalidArgument, "all points are collinear");

  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  auto lex = [this](int a, int b) {
    const auto& p = points_[a];
    const auto& q = points_[b];
    return p.x != q.x ? p.x < q.x : p.y < q.y;
  };
  std::sort(order.begin(), order.end(), lex);
  for (std::size_t i = 1; i < n; ++i) {
    if (points_[order[i]] == points_[order[i - 1]]) {
      throw Error(Errc::InvalidArgument, "duplicate triangulation point");
    }
  }
  auto P = [this](int i) -> const LatticePoint& { return points_[i]; };

  // Seed: the leading collinear run plus the first point off its line.
  std::size_t m = 2;
  while (orient(P(order[0]), P(order[1]), P(order[m])) == 0) ++m;
  const int apex = order[m];
  const bool apex_left = orient(P(order[0]), P(order[m - 1]), P(apex)) > 0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (apex_left) {
      triangles_.push_back({order[i], order[i + 1], apex});
    } else {
      triangles_.push_back({order[i + 1], order[i], apex});
    }
  }
  // Hull, counter-clockwise.
  std::vector<int> hull;
  if (apex_left) {
    for (std::size_t i = 0; i < m; ++i) hull.push_back(order[i]);
    hull.push_back(apex);
  } else {
    hull.push_back(apex);
    for (std::size_t i = m; i-- > 0;) hull.push_back(order[i]);
  }
  for (std::size_t k = m + 1; k < n; ++k) {
    const int p = order[k];
    const std::size_t h = hull.size();
    std::vector<bool> visible(h);
    for (std::size_t e = 0; e < h; ++e) {
      visible[e] = orient(P(hull[e]), P(hull[(e + 1) % h]), P(p)) < 0;
    }
    // First visible edge whose predecessor is not visible.
    std::size_t start = h;
    for (std::size_t e = 0; e < h; ++e) {
      if (visible[e] && !visible[(e + h - 1) % h]) {
        start = e;
        break;
      }
    }
    std::size_t count = 0;
    for (std::size_t e = start; visible[e % h] && count < h; ++e) {
      const int a = hull[e % h];
      const int b = hull[(e + 1) % h];
      triangles_.push_back({a, p, b});
      ++count;
    }
    // Replace the interior vertices of the visible chain by p.
    std::vector<int> next;
    next.reserve(h + 1);
    const std::size_t last = (start + count) % h;  // end vertex of the chain
    for (std::size_t s = 0; s < h; ++s) {
      const std::size_t idx = (last + s) % h;
      next.push_back(hull[idx]);
      if (idx == start) break;
    }
    next.push_back(p);
    hull = std::move(next);
  }

  // Lawson flips until every interior edge is locally Delaunay.
  const std::size_t t_count = triangles_.size();
  std::vector<std::array<int, 3>> adj(t_count, {-1, -1, -1});
  std::map<std::pair<int, int>, std::pair<int, int>> edges;
  for (std::size_t t = 0; t < t_count; ++t) {
    for (int i = 0; i < 3; ++i) {
      const int a = triangles_[t][(i + 1) % 3];
      const int b = triangles_[t][(i + 2) % 3];
      auto it = edges.find({b, a});
      if (it != edges.end()) {
        adj[t][i] = it->second.first;
        adj[it->second.first][it->second.second] = static_cast<int>(t);
      } else {
        edges[{a, b}] = {static_cast<int>(t), i};
      }
    }
  }

  auto relink = [&](int x, int from, int to) {
    if (x < 0) return;
    for (int k = 0; k < 3; ++k) {
      if (adj[x][k] == from) {
        adj[x][k] = to;
        return;
      }
    }
  };

  std::vector<std::pair<int, int>> stack;
  for (std::size_t t = 0; t < t_count; ++t) {
    for (int i = 0; i < 3; ++i) stack.emplace_back(static_cast<int>(t), i);
  }
  while (!stack.empty()) {
    auto [t, i] = stack.back();
    stack.pop_back();
    const int u = adj[t][i];
    if (u < 0) continue;
    int j = 0;
    while (adj[u][j] != t) ++j;
    const int a = triangles_[t][i];
    const int b = triangles_[t][(i + 1) % 3];
    const int c = triangles_[t][(i + 2) % 3];
    const int d = triangles_[u][j];
    if (incircle(P(a), P(b), P(c), P(d)) <= 0) continue;

    const int n_ab = adj[t][(i + 2) % 3];
    const int n_ca = adj[t][(i + 1) % 3];
    const int n_dc = adj[u][(j + 2) % 3];
    const int n_bd = adj[u][(j + 1) % 3];
    triangles_[t] = {a, b, d};
    triangles_[u] = {a, d, c};
    adj[t] = {n_bd, u, n_ab};
    adj[u] = {n_dc, n_ca, t};
    relink(n_bd, u, t);
    relink(n_ca, t, u);
    stack.emplace_back(t, 0);
    stack.emplace_back(t, 2);
    stack.emplace_back(u, 0);
    stack.emplace_back(u, 1);
  }
}

std::optional<std::size_t> DelaunayTriangulation::locate(double x, double y,
                                                          std::array<double, 3>& bary) const {
  constexpr double kTol = 1e-12;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& p0 = points_[triangles_[t][0]];
    const auto& p1 = points_[triangles_[t][1]];
    const auto& p2 = points_[triangles_[t][2]];
    const double det = static_cast<double>(orient(p0, p1, p2));
    const double l1 = ((x - p0.x) * (p2.y - p0.y) - (y - p0.y) * (p2.x - p0.x)) / det;
    const double l2 = ((p1.x - p0.x) * (y - p0.y) - (p1.y - p0.y) * (x - p0.x)) / det;
    const double l0 = 1.0 - l1 - l2;
    if (l0 >= -kTol && l1 >= -kTol && l2 >= -kTol) {
      bary = {l0, l1, l2};
      return t;
    }
  }
  return std::nullopt;
}

std::vector<std::vector<int>> DelaunayTriangulation::vertex_neighbors() const {
  std::vector<std::vector<int>> nb(points_.size());
  for (const auto& t : triangles_) {
    for (int i = 0; i < 3; ++i) {
      nb[t[i]].push_back(t[(i + 1) % 3]);
      nb[t[i]].push_back(t[(i + 2) % 3]);
    }
  }
  for (auto& v : nb) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return nb;
}

bool DelaunayTriangulation::is_delaunay() const {
  for (const auto& t : triangles_) {
    for (std::size_t p = 0; p < points_.size(); ++p) {
      const int ip = static_cast<int>(p);
      if (ip == t[0] || ip == t[1] || ip == t[2]) continue;
      if (incircle(points_[t[0]], points_[t[1]], points_[t[2]], points_[p]) > 0) return false;
    }
  }
  return true;
}

std::vector<Gradient> estimate_gradients(const DelaunayTriangulation& tri,
                                         std::span<const double> values) {
  const auto& pts = tri.points();
  if (values.size() != pts.size()) {
    throw Error(Errc::DimsMismatch, "one value per triangulation vertex required");
  }
  constexpr int kRadius = 2;
  std::map<std::pair<int, int>, std::size_t> index;
  for (std::size_t i = 0; i < pts.size(); ++i) index[{pts[i].x, pts[i].y}] = i;

  std::vector<Gradient> out(pts.size(), Gradient{0.0, 0.0});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<std::array<double, 3>> rows;  // dx, dy, df
    for (int dx = -kRadius; dx <= kRadius; ++dx) {
      for (int dy = -kRadius; dy <= kRadius; ++dy) {
        if (dx == 0 && dy == 0) continue;
        auto it = index.find({pts[i].x + dx, pts[i].y + dy});
        if (it == index.end()) continue;
        rows.push_back({double(dx), double(dy), values[it->second] - values[i]});
      }
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) rhs(r) = rows[r][2];

    if (m >= 5) {
      Eigen::MatrixXd a(m, 5);
      for (Eigen::Index r = 0; r < m; ++r) {
        const double x = rows[r][0], y = rows[r][1];
        a.row(r) << x, y, 0.5 * x * x, x * y, 0.5 * y * y;
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
      if (qr.rank() == 5) {
        const Eigen::VectorXd s = qr.solve(rhs);
        out[i] = {s(0), s(1)};
        continue;
      }
    }
    if (m >= 2) {
      Eigen::MatrixXd a(m, 2);
      for (Eigen::Index r = 0; r < m; ++r) a.row(r) << rows[r][0], rows[r][1];
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
      if (qr.rank() == 2) {
        const Eigen::VectorXd s = qr.solve(rhs);
        out[i] = {s(0), s(1)};
      }
    }
  }
  return out;
}

CloughTocherInterpolator::CloughTocherInterpolator(const DelaunayTriangulation& tri,
                                                   std::vector<double> values,
                                                   std::vector<Gradient> gradients)
    : tri_(&tri), values_(std::move(values)), gradients_(std::move(gradients)) {
  if (values_.size() != tri.points().size() || gradients_.size() != tri.points().size()) {
    throw Error(Errc::DimsMismatch, "one value and gradient per vertex required");
  }
}

std::optional<double> CloughTocherInterpolator::operator()(double x, double y) const {
  std::array<double, 3> b;
  const auto t = tri_->locate(x, y, b);
  if (!t) return std::nullopt;
  const auto& tv = tri_->triangles()[*t];

  std::array<std::array<double, 2>, 3> v;
  std::array<double, 3> f;
  std::array<Gradient, 3> g;
  for (int i = 0; i < 3; ++i) {
    const auto& p = tri_->points()[tv[i]];
    v[i] = {double(p.x), double(p.y)};
    f[i] = values_[tv[i]];
    g[i] = gradients_[tv[i]];
  }
  const std::array<double, 2> c{(v[0][0] + v[1][0] + v[2][0]) / 3.0,
                                (v[0][1] + v[1][1] + v[2][1]) / 3.0};
  auto dot = [](const Gradient& gr, double dx, double dy) { return gr[0] * dx + gr[1] * dy; };

  // Tangent-plane control points: edge[i][j] sits a third of the way from
  // vertex i to vertex j, inner[i] a third of the way from vertex i to c.
  double edge[3][3] = {};
  std::array<double, 3> inner;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) edge[i][j] = f[i] + dot(g[i], (v[j][0] - v[i][0]) / 3.0, (v[j][1] - v[i][1]) / 3.0);
    }
    inner[i] = f[i] + dot(g[i], (c[0] - v[i][0]) / 3.0, (c[1] - v[i][1]) / 3.0);
  }

  // Face point of the micro triangle (i, j, c), chosen so the derivative
  // normal to edge ij is linear along it.
  auto face = [&](int i, int j) {
    const double ex = v[j][0] - v[i][0], ey = v[j][1] - v[i][1];
    double nx = -ey, ny = ex;
    if (nx * (c[0] - v[i][0]) + ny * (c[1] - v[i][1]) < 0.0) {
      nx = -nx;
      ny = -ny;
    }
    // Barycentric direction (ai, aj, ac) of n in the micro triangle.
    const double m00 = v[i][0] - c[0], m01 = v[j][0] - c[0];
    const double m10 = v[i][1] - c[1], m11 = v[j][1] - c[1];
    const double det = m00 * m11 - m01 * m10;
    const double ai = (nx * m11 - m01 * ny) / det;
    const double aj = (m00 * ny - nx * m10) / det;
    const double ac = -ai - aj;
    const double d0 = ai * f[i] + aj * edge[i][j] + ac * inner[i];
    const double d2 = ai * edge[j][i] + aj * f[j] + ac * inner[j];
    return (0.5 * (d0 + d2) - ai * edge[i][j] - aj * edge[j][i]) / ac;
  };
  double e[3][3] = {};
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    e[i][j] = e[j][i] = face(i, j);
  }
  std::array<double, 3> q;
  for (int i = 0; i < 3; ++i) {
    q[i] = (inner[i] + e[i][(i + 1) % 3] + e[i][(i + 2) % 3]) / 3.0;
  }
  const double centre = (q[0] + q[1] + q[2]) / 3.0;

  // Micro triangle opposite the vertex with the smallest weight.
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (b[i] < b[k]) k = i;
  }
  const int i = (k + 1) % 3;
  const int j = (k + 2) % 3;
  const double li = b[i] - b[k];
  const double lj = b[j] - b[k];
  const double lc = 3.0 * b[k];

  return f[i] * li * li * li + f[j] * lj * lj * lj + centre * lc * lc * lc +
         3.0 * edge[i][j] * li * li * lj + 3.0 * edge[j][i] * li * lj * lj +
         3.0 * inner[i] * li * li * lc + 3.0 * inner[j] * lj * lj * lc +
         3.0 * q[i] * li * lc * lc + 3.0 * q[j] * lj * lc * lc + 6.0 * e[i][j] * li * lj * lc;
}

}  // namespace vocalfit
