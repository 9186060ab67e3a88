#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace anisonet {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Tet = std::array<int, 4>;
using Bary = std::array<double, 4>;

/// Slack accepted on barycentric coordinates before a point counts as outside.
inline constexpr double kBaryTolerance = 1e-10;

/// Unstructured tetrahedral mesh. After `finalize_mesh` every tet has four
/// distinct in-range vertices and strictly positive signed volume.
struct TetMesh {
  std::vector<Vec3> nodes;
  std::vector<Tet> tets;
  std::vector<std::uint8_t> boundary; // one flag per node

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_tets() const { return tets.size(); }
};

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double tet_volume(const TetMesh& mesh, std::size_t tet);

/// Length of the bounding-box diagonal.
double mesh_diameter(const TetMesh& mesh);

/// Checks indices and finiteness, flips negatively oriented tets, rejects
/// degenerate ones and computes boundary flags from single-referenced faces
/// when `boundary` is empty. Throws TopologyError.
void finalize_mesh(TetMesh& mesh);

std::vector<std::uint8_t> boundary_flags_from_faces(const TetMesh& mesh);

/// Face adjacency: entry [t][k] is the tet across the face opposite local
/// vertex k of tet t, or -1 on the boundary.
std::vector<std::array<int, 4>> tet_neighbors(const TetMesh& mesh);

TetMesh parse_mesh(std::istream& in);
TetMesh read_mesh(const std::filesystem::path& path);
void write_mesh(std::ostream& out, const TetMesh& mesh);
void write_mesh(const std::filesystem::path& path, const TetMesh& mesh);

struct NodePatch {
  int node = -1;
  std::vector<int> elems; // ascending
};

std::vector<NodePatch> build_node_patches(const TetMesh& mesh);

struct PointLocation {
  int elem = -1;
  Bary bary{};
  /// Set when no tet contains the point; `elem` is then the tet whose most
  /// negative barycentric coordinate is largest and `bary` is left unclamped.
  bool exterior = false;
};

/// Walking point location with brute-force fallback. Holds a pointer to the
/// mesh, which must outlive the locator. Immutable after construction, so one
/// instance can serve concurrent queries.
class PointLocator {
public:
  explicit PointLocator(const TetMesh& mesh);

  const TetMesh& mesh() const { return *mesh_; }

  Bary barycentric(int tet, const Vec3& x) const;

  /// `seed` is the tet the walk starts from, typically the previous answer.
  PointLocation locate(const Vec3& x, int seed = 0) const;
  PointLocation locate_brute_force(const Vec3& x) const;

private:
  const TetMesh* mesh_;
  std::vector<std::array<int, 4>> neighbors_;
  std::vector<Mat3> inverse_jacobians_;
};

PointLocation locate_point(const TetMesh& mesh, const Vec3& x);

Vec3 reconstruct_point(const TetMesh& mesh, const PointLocation& loc);

/// Structured box split into 6 tets per cell (Kuhn split along the main
/// diagonal). `jitter` perturbs interior nodes by up to jitter*h per axis.
struct BoxMeshSpec {
  int nx = 1, ny = 1, nz = 1;
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

TetMesh make_box_mesh(const BoxMeshSpec& spec);

} // namespace anisonet
