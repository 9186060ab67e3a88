#pragma once

#include "mesh.hpp"

#include <span>
#include <vector>

namespace anisonet {

/// Delaunay tetrahedralization built by incremental Bowyer-Watson insertion
/// inside an enclosing super-tet. The super-tet vertices are appended after
/// the input points and the tets touching them are kept, so every point of
/// space inside the super-tet can be located.
struct DelaunayGraph {
  std::vector<Vec3> points; // input points, then 4 super-tet vertices
  std::size_t num_input = 0;
  std::vector<Tet> tets;       // all tets, positively oriented
  std::vector<int> real_tets;  // tets using input points only

  bool is_super_vertex(int v) const { return static_cast<std::size_t>(v) >= num_input; }

  /// All tets as a mesh (no validation; super-tet scale would trip the
  /// degenerate-volume check of finalize_mesh).
  TetMesh as_mesh() const;
  std::vector<Tet> exposed_tets() const;
};

/// Relative slack of the in-sphere test: a point is strictly inside when
/// |p - c|^2 < r^2 (1 - kInsphereTolerance).
inline constexpr double kInsphereTolerance = 1e-10;

/// Throws InvalidArgument for fewer than 4 points or a coplanar set.
DelaunayGraph build_delaunay(std::span<const Vec3> points);

/// Circumcenter and squared circumradius of a tet.
std::pair<Vec3, double> circumsphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

} // namespace anisonet
