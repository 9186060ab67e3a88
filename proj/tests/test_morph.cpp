#include "delaunay.hpp"
#include "error.hpp"
#include "morph.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace anisonet;
using testing::box;

namespace {

std::vector<Vec3> random_points(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> p(n);
  for (Vec3& x : p) x = Vec3(u(rng), u(rng), u(rng));
  return p;
}

// O(tets * points) empty-circumsphere check with the library's tolerance.
int sphere_violations(const DelaunayGraph& g) {
  int bad = 0;
  for (int t : g.real_tets) {
    const Tet& tet = g.tets[t];
    const auto [c, r2] = circumsphere(g.points[tet[0]], g.points[tet[1]], g.points[tet[2]], g.points[tet[3]]);
    for (std::size_t i = 0; i < g.num_input; ++i) {
      if (std::find(tet.begin(), tet.end(), int(i)) != tet.end()) continue;
      if ((g.points[i] - c).squaredNorm() < r2 * (1.0 - kInsphereTolerance)) ++bad;
    }
  }
  return bad;
}

double real_volume(const DelaunayGraph& g) {
  double v = 0.0;
  for (int t : g.real_tets) {
    const Tet& k = g.tets[t];
    v += signed_volume(g.points[k[0]], g.points[k[1]], g.points[k[2]], g.points[k[3]]);
  }
  return v;
}

} // namespace

TEST_SUITE("morph") {

TEST_CASE("four points give one tet") {
  const std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  const DelaunayGraph g = build_delaunay(p);
  CHECK(g.num_input == 4);
  REQUIRE(g.real_tets.size() == 1);
  Tet t = g.tets[g.real_tets[0]];
  std::sort(t.begin(), t.end());
  CHECK(t == Tet{0, 1, 2, 3});
  CHECK(g.exposed_tets().size() == 1);
}

TEST_CASE("unit tet plus centroid gives four tets around the centroid") {
  const std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(0.25, 0.25, 0.25)};
  const DelaunayGraph g = build_delaunay(p);
  REQUIRE(g.real_tets.size() == 4);
  for (int t : g.real_tets) CHECK(std::count(g.tets[t].begin(), g.tets[t].end(), 4) == 1);
  CHECK(sphere_violations(g) == 0);
  CHECK(real_volume(g) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("200 random points pass the brute-force empty-sphere check") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const DelaunayGraph g = build_delaunay(random_points(200, seed));
    CHECK(sphere_violations(g) == 0);
    for (const Tet& t : g.tets) CHECK(signed_volume(g.points[t[0]], g.points[t[1]], g.points[t[2]], g.points[t[3]]) > 0);
  }
}

TEST_CASE("cospherical grid points") {
  // Cube lattice: every cell is cospherical, the degenerate case for the predicate.
  std::vector<Vec3> p;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) p.emplace_back(i, j, k);
  const DelaunayGraph g = build_delaunay(p);
  CHECK(sphere_violations(g) == 0);
  CHECK(real_volume(g) == doctest::Approx(27.0).epsilon(1e-10));
}

TEST_CASE("invalid point sets") {
  CHECK_THROWS_AS(build_delaunay(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}), InvalidArgument);
  std::vector<Vec3> flat;
  for (int i = 0; i < 10; ++i) flat.emplace_back(i % 3, i / 3, 0.0);
  CHECK_THROWS_AS(build_delaunay(flat), InvalidArgument);
  CHECK_THROWS_AS(build_delaunay(std::vector<Vec3>(5, Vec3(1, 1, 1))), InvalidArgument);
}

TEST_CASE("binding examples") {
  const TetMesh mesh = box(3, 0.2, 4);
  const BoundaryGraph bg = build_boundary_graph(mesh);
  CHECK(bg.mesh_node.size() == std::size_t(std::count(mesh.boundary.begin(), mesh.boundary.end(), 1)));
  const MorphBinding b = bind_mesh(bg, mesh);
  REQUIRE(b.size() == mesh.num_nodes());
  const double diam = mesh_diameter(mesh);
  for (std::size_t v = 0; v < bg.mesh_node.size(); ++v) {
    const int node = bg.mesh_node[v];
    const Tet& t = bg.graph.tets[b.tet[node]];
    const auto slot = std::find(t.begin(), t.end(), int(v)) - t.begin();
    REQUIRE(slot < 4);
    CHECK(b.bary[node][slot] == 1.0);
  }
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const Tet& t = bg.graph.tets[b.tet[i]];
    Vec3 x = Vec3::Zero();
    for (int k = 0; k < 4; ++k) x += b.bary[i][k] * bg.graph.points[t[k]];
    CHECK((x - mesh.nodes[i]).norm() < 1e-10 * diam);
  }
}

TEST_CASE("node at a graph tet centroid binds to quarter weights") {
  TetMesh mesh = testing::unit_tet();
  mesh.nodes.push_back(Vec3(0.25, 0.25, 0.25));
  mesh.boundary.push_back(0);
  const BoundaryGraph bg = build_boundary_graph(mesh);
  const MorphBinding b = bind_mesh(bg, mesh);
  for (double w : b.bary[4]) CHECK(w == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("morph identity, translation and single-vertex displacement") {
  const TetMesh mesh = box(3, 0.2, 5);
  const BoundaryGraph bg = build_boundary_graph(mesh);
  const MorphBinding b = bind_mesh(bg, mesh);
  const auto& g = bg.graph;
  std::vector<Vec3> ref(g.points.begin(), g.points.begin() + g.num_input);

  const auto same = morph(b, g, ref);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) CHECK((same[i] - mesh.nodes[i]).norm() <= 1e-12);

  const Vec3 d(0.1, -0.2, 0.05);
  std::vector<Vec3> moved = ref;
  for (Vec3& x : moved) x += d;
  const auto shifted = morph(b, g, moved);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) CHECK((shifted[i] - mesh.nodes[i] - d).norm() < 1e-12);

  const int v = 7;
  std::vector<Vec3> one = ref;
  one[v] += d;
  const auto nudged = morph(b, g, one);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const Tet& t = g.tets[b.tet[i]];
    const auto slot = std::find(t.begin(), t.end(), v) - t.begin();
    const Vec3 want = mesh.nodes[i] + (slot < 4 ? b.bary[i][slot] : 0.0) * d;
    CHECK((nudged[i] - want).norm() < 1e-12);
  }
  CHECK_THROWS_AS(morph(b, g, std::vector<Vec3>(3)), InvalidArgument);
}

TEST_CASE("morph is affine equivariant and interpolates graph vertices") {
  const TetMesh mesh = box(4, 0.2, 6);
  const BoundaryGraph bg = build_boundary_graph(mesh);
  const MorphBinding b = bind_mesh(bg, mesh);
  std::mt19937_64 rng(7);
  Mat3 a = testing::random_rotation(rng) * Vec3(1.2, 0.9, 1.05).asDiagonal();
  const Vec3 c(0.3, -0.1, 0.2);
  std::vector<Vec3> displaced(mesh.num_nodes());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) displaced[i] = a * mesh.nodes[i] + c;
  MorphReport rep;
  const TetMesh out = morph_mesh(mesh, bg, b, displaced, &rep);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    CHECK((out.nodes[i] - displaced[i]).norm() < 1e-10);
    if (mesh.boundary[i]) CHECK(out.nodes[i] == displaced[i]);
  }
  CHECK(rep.inverted_tets == 0);
  CHECK(rep.min_volume > 0.0);
}

TEST_CASE("large displacement inverts elements and is reported") {
  const TetMesh mesh = box(2);
  const BoundaryGraph bg = build_boundary_graph(mesh);
  const MorphBinding b = bind_mesh(bg, mesh);
  std::vector<Vec3> displaced = mesh.nodes;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
    if (mesh.boundary[i] && mesh.nodes[i].x() == 0.0) displaced[i].x() = 2.0; // fold the box through itself
  MorphReport rep;
  morph_mesh(mesh, bg, b, displaced, &rep);
  CHECK(rep.inverted_tets > 0);
}

TEST_CASE("binding sidecar roundtrip") {
  const TetMesh mesh = box(2, 0.1, 1);
  const BoundaryGraph bg = build_boundary_graph(mesh);
  const MorphBinding b = bind_mesh(bg, mesh);
  const auto dir = testing::scratch_dir("bind");
  write_binding(dir / "b.morphbind", b, bg.graph.tets.size());
  const MorphBinding r = read_binding(dir / "b.morphbind", mesh.num_nodes(), bg.graph.tets.size());
  CHECK(r.tet == b.tet);
  CHECK(r.bary == b.bary);
  CHECK_THROWS_AS(read_binding(dir / "b.morphbind", mesh.num_nodes() + 1, bg.graph.tets.size()), ParseError);
  CHECK_THROWS_AS(read_binding(dir / "missing", 1, 1), IoError);
}

} // TEST_SUITE
