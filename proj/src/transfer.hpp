#pragma once

#include "mesh.hpp"
#include "metric.hpp"

#include <span>
#include <string>
#include <vector>

namespace anisonet {

/// Which background patches each computational node falls in.
struct TransferAssignment {
  /// Per computational node: background tet containing it (or the closest
  /// one for orphan nodes) and whether it lies outside the background mesh.
  std::vector<PointLocation> location;
  /// CSR lists, per background node, of the computational nodes inside its
  /// patch, ascending.
  std::vector<std::size_t> patch_offsets;
  std::vector<int> patch_members;
  std::size_t orphan_count = 0;

  std::span<const int> members(std::size_t bg_node) const {
    return {patch_members.data() + patch_offsets[bg_node], patch_offsets[bg_node + 1] - patch_offsets[bg_node]};
  }
};

/// A node lying on a shared face, edge or vertex of the background mesh
/// belongs to the patches of every vertex of every tet touching that
/// sub-simplex.
TransferAssignment assign_nodes(const TetMesh& comp_mesh, const TetMesh& bg_mesh);

struct TransferReport {
  std::size_t background_nodes = 0;
  std::size_t computational_nodes = 0;
  std::size_t empty_patches = 0;
  std::size_t orphan_nodes = 0;            // computational nodes outside the background mesh
  std::size_t exterior_background_nodes = 0; // empty patch and outside the computational mesh
  std::vector<int> exterior_background_ids;

  std::string to_text() const;
};

/// Left fold of intersect_pair over each patch in ascending node order. An
/// empty patch takes the intersection of the vertex metrics of the
/// computational tet containing (or closest to) the background node.
MetricField transfer_metric(const MetricField& comp_field, const TransferAssignment& assignment,
                            const TetMesh& bg_mesh, const TetMesh& comp_mesh, TransferReport* report = nullptr);

/// Same rules with a minimum over scalar spacings.
std::vector<double> transfer_isotropic(std::span<const double> comp_spacing, const TransferAssignment& assignment,
                                       const TetMesh& bg_mesh, const TetMesh& comp_mesh,
                                       TransferReport* report = nullptr);

} // namespace anisonet
