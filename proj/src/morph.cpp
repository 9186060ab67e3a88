#include "morph.hpp"

#include "error.hpp"
#include "text_io.hpp"

#include <fstream>
#include <sstream>

namespace anisonet {

BoundaryGraph build_boundary_graph(const TetMesh& reference) {
  BoundaryGraph out;
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < reference.num_nodes(); ++i)
    if (reference.boundary[i]) {
      out.mesh_node.push_back(static_cast<int>(i));
      pts.push_back(reference.nodes[i]);
    }
  out.graph = build_delaunay(pts);
  return out;
}

MorphBinding bind_mesh(const BoundaryGraph& bg, const TetMesh& mesh) {
  const DelaunayGraph& g = bg.graph;
  const TetMesh graph_mesh = g.as_mesh();
  const PointLocator locator(graph_mesh);

  std::vector<int> vertex_of_node(mesh.num_nodes(), -1);
  for (std::size_t v = 0; v < bg.mesh_node.size(); ++v) {
    const int node = bg.mesh_node[v];
    if (node < 0 || static_cast<std::size_t>(node) >= mesh.num_nodes())
      throw InvalidArgument("boundary graph does not belong to this mesh");
    vertex_of_node[node] = static_cast<int>(v);
  }
  // One incident tet per graph vertex, for exact vertex bindings.
  std::vector<std::pair<int, int>> incident(g.points.size(), {-1, -1});
  for (std::size_t t = 0; t < g.tets.size(); ++t)
    for (int k = 0; k < 4; ++k)
      if (incident[g.tets[t][k]].first < 0) incident[g.tets[t][k]] = {static_cast<int>(t), k};

  MorphBinding b;
  b.tet.reserve(mesh.num_nodes());
  b.bary.reserve(mesh.num_nodes());
  int seed = 0;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const int v = vertex_of_node[i];
    if (v >= 0 && incident[v].first >= 0) {
      Bary w{0.0, 0.0, 0.0, 0.0};
      w[incident[v].second] = 1.0;
      b.tet.push_back(incident[v].first);
      b.bary.push_back(w);
      continue;
    }
    const PointLocation loc = locator.locate(mesh.nodes[i], seed);
    seed = loc.elem;
    b.tet.push_back(loc.elem);
    b.bary.push_back(loc.bary);
  }
  return b;
}

std::vector<Vec3> morph(const MorphBinding& binding, const DelaunayGraph& graph,
                        std::span<const Vec3> displaced_graph_points) {
  if (displaced_graph_points.size() != graph.num_input)
    throw InvalidArgument("displaced coordinates missing for some graph vertices");
  auto position = [&](int v) -> const Vec3& {
    return graph.is_super_vertex(v) ? graph.points[v] : displaced_graph_points[v];
  };
  std::vector<Vec3> out(binding.size());
  for (std::size_t i = 0; i < binding.size(); ++i) {
    const Tet& t = graph.tets[binding.tet[i]];
    Vec3 p = Vec3::Zero();
    for (int k = 0; k < 4; ++k) p += binding.bary[i][k] * position(t[k]);
    out[i] = p;
  }
  return out;
}

TetMesh morph_mesh(const TetMesh& reference, const BoundaryGraph& graph, const MorphBinding& binding,
                   std::span<const Vec3> displaced, MorphReport* report) {
  if (displaced.size() != reference.num_nodes())
    throw InvalidArgument("displacement file must list every mesh node");
  if (binding.size() != reference.num_nodes()) throw InvalidArgument("binding does not match the mesh");
  std::vector<Vec3> moved_vertices;
  moved_vertices.reserve(graph.mesh_node.size());
  for (int node : graph.mesh_node) moved_vertices.push_back(displaced[node]);

  TetMesh out = reference;
  out.nodes = morph(binding, graph.graph, moved_vertices);
  MorphReport rep;
  rep.min_volume = INFINITY;
  for (std::size_t t = 0; t < out.num_tets(); ++t) {
    const double v = tet_volume(out, t);
    rep.min_volume = std::min(rep.min_volume, v);
    if (!(v > 0.0)) ++rep.inverted_tets;
  }
  if (report) *report = rep;
  return out;
}

MorphBinding read_binding(const std::filesystem::path& path, std::size_t expected_nodes,
                          std::size_t expected_graph_tets) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open binding file " + path.string());
  LineReader reader(in, path.string());
  auto header = reader.tokens();
  if (header.size() != 4 || header[0] != "morphbind" || header[1] != "1")
    reader.fail("expected header 'morphbind 1 <n_nodes> <n_graph_tets>'");
  const std::size_t n = reader.to_count(header[2]);
  const std::size_t n_tets = reader.to_count(header[3]);
  if (n != expected_nodes || n_tets != expected_graph_tets) reader.fail("binding does not match mesh or graph");
  MorphBinding b;
  b.tet.reserve(n);
  b.bary.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto tok = reader.tokens();
    if (tok.size() != 5) reader.fail("expected 'tet_id b0 b1 b2 b3'");
    const int t = reader.to_int(tok[0]);
    if (t < 0 || static_cast<std::size_t>(t) >= n_tets) reader.fail("graph tet id out of range");
    b.tet.push_back(t);
    b.bary.push_back({reader.to_double(tok[1]), reader.to_double(tok[2]), reader.to_double(tok[3]),
                      reader.to_double(tok[4])});
  }
  reader.expect_end();
  return b;
}

void write_binding(const std::filesystem::path& path, const MorphBinding& binding, std::size_t graph_tets) {
  std::ostringstream out;
  out << "morphbind 1 " << binding.size() << ' ' << graph_tets << '\n';
  for (std::size_t i = 0; i < binding.size(); ++i) {
    out << binding.tet[i];
    for (double w : binding.bary[i]) out << ' ' << fmt_real(w);
    out << '\n';
  }
  write_text_file(path, out.str());
}

} // namespace anisonet
