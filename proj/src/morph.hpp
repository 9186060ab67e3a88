#pragma once

#include "delaunay.hpp"
#include "mesh.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace anisonet {

/// Delaunay graph over the boundary nodes of a reference mesh. Graph vertex g
/// (< graph.num_input) is mesh node mesh_node[g]; boundary nodes are taken in
/// ascending id order.
struct BoundaryGraph {
  DelaunayGraph graph;
  std::vector<int> mesh_node;
};

BoundaryGraph build_boundary_graph(const TetMesh& reference);

/// Per mesh node: graph tet and its barycentric ("area") coordinates.
struct MorphBinding {
  std::vector<int> tet;
  std::vector<Bary> bary;

  std::size_t size() const { return tet.size(); }
};

/// Locates every node of `mesh` in the graph. Nodes that are graph vertices
/// get an exact unit weight on their own vertex.
MorphBinding bind_mesh(const BoundaryGraph& graph, const TetMesh& mesh);

/// New positions from displaced graph-vertex coordinates (one per input
/// vertex, in graph order). Super-tet vertices stay fixed.
std::vector<Vec3> morph(const MorphBinding& binding, const DelaunayGraph& graph,
                        std::span<const Vec3> displaced_graph_points);

struct MorphReport {
  std::size_t inverted_tets = 0;
  double min_volume = 0.0;
};

/// Reference mesh with nodes moved: `displaced` holds a position for every
/// mesh node, of which only boundary-node rows are read.
TetMesh morph_mesh(const TetMesh& reference, const BoundaryGraph& graph, const MorphBinding& binding,
                   std::span<const Vec3> displaced, MorphReport* report = nullptr);

MorphBinding read_binding(const std::filesystem::path& path, std::size_t expected_nodes,
                          std::size_t expected_graph_tets);
void write_binding(const std::filesystem::path& path, const MorphBinding& binding, std::size_t graph_tets);

} // namespace anisonet
