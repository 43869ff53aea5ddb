#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace vocalfit {

// Integer coordinates keep the orientation and in-circle predicates exact,
// which matters because grid bin centres are maximally degenerate
// (four co-circular points in every square).
struct LatticePoint {
  int x;
  int y;

  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

// Triangle vertex indices, counter-clockwise.
using Triangle = std::array<int, 3>;

bool all_collinear(std::span<const LatticePoint> points) noexcept;

// Delaunay triangulation of distinct lattice points: a sweep triangulation of
// the convex hull followed by Lawson edge flips. InvalidArgument for fewer
// than three points or an all-collinear set.
class DelaunayTriangulation {
 public:
  explicit DelaunayTriangulation(std::vector<LatticePoint> points);

  const std::vector<LatticePoint>& points() const noexcept { return points_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }

  // Triangle containing (x, y), boundary included, with barycentric weights.
  std::optional<std::size_t> locate(double x, double y, std::array<double, 3>& bary) const;

  // Neighbouring vertex indices of each vertex.
  std::vector<std::vector<int>> vertex_neighbors() const;

  // Empty-circumcircle check over all triangle/vertex pairs (tests only).
  bool is_delaunay() const;

 private:
  std::vector<LatticePoint> points_;
  std::vector<Triangle> triangles_;
};

using Gradient = std::array<double, 2>;

// Per-vertex gradients from a weighted least-squares quadratic over nearby
// vertices (exact for quadratic data when enough neighbours exist), falling
// back to a plane and then to zero when the neighbourhood is degenerate.
std::vector<Gradient> estimate_gradients(const DelaunayTriangulation& tri,
                                         std::span<const double> values);

// C1 piecewise-cubic interpolant: each triangle is split at its centroid into
// three cubic Bezier patches, with the cross-boundary derivative along every
// edge constrained to be linear. Reproduces quadratics when given their
// exact gradients.
class CloughTocherInterpolator {
 public:
  CloughTocherInterpolator(const DelaunayTriangulation& tri, std::vector<double> values,
                           std::vector<Gradient> gradients);

  // nullopt outside the convex hull.
  std::optional<double> operator()(double x, double y) const;

 private:
  const DelaunayTriangulation* tri_;
  std::vector<double> values_;
  std::vector<Gradient> gradients_;
};

}  // namespace vocalfit
