#include "mesh.hpp"

#include "error.hpp"
#include "text_io.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace anisonet {

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

double tet_volume(const TetMesh& mesh, std::size_t tet) {
  const Tet& t = mesh.tets[tet];
  return signed_volume(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]], mesh.nodes[t[3]]);
}

double mesh_diameter(const TetMesh& mesh) {
  if (mesh.nodes.empty()) return 0.0;
  Vec3 lo = mesh.nodes.front();
  Vec3 hi = lo;
  for (const Vec3& p : mesh.nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

namespace {

struct FaceRef {
  std::array<int, 3> key; // sorted vertex ids
  int tet;
  int local; // local index of the opposite vertex
};

std::vector<FaceRef> sorted_faces(const TetMesh& mesh) {
  std::vector<FaceRef> faces;
  faces.reserve(mesh.tets.size() * 4);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const Tet& tet = mesh.tets[t];
    for (int k = 0; k < 4; ++k) {
      std::array<int, 3> key{};
      int j = 0;
      for (int m = 0; m < 4; ++m)
        if (m != k) key[j++] = tet[m];
      std::sort(key.begin(), key.end());
      faces.push_back({key, static_cast<int>(t), k});
    }
  }
  std::sort(faces.begin(), faces.end(), [](const FaceRef& a, const FaceRef& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.tet < b.tet;
  });
  return faces;
}

} // namespace

std::vector<std::array<int, 4>> tet_neighbors(const TetMesh& mesh) {
  std::vector<std::array<int, 4>> nbr(mesh.tets.size(), {-1, -1, -1, -1});
  const auto faces = sorted_faces(mesh);
  for (std::size_t i = 0; i + 1 < faces.size(); ++i) {
    if (faces[i].key != faces[i + 1].key) continue;
    nbr[faces[i].tet][faces[i].local] = faces[i + 1].tet;
    nbr[faces[i + 1].tet][faces[i + 1].local] = faces[i].tet;
    ++i;
  }
  return nbr;
}

std::vector<std::uint8_t> boundary_flags_from_faces(const TetMesh& mesh) {
  std::vector<std::uint8_t> flags(mesh.nodes.size(), 0);
  const auto faces = sorted_faces(mesh);
  std::size_t i = 0;
  while (i < faces.size()) {
    std::size_t j = i + 1;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    if (j - i == 1)
      for (int v : faces[i].key) flags[v] = 1;
    i = j;
  }
  return flags;
}

void finalize_mesh(TetMesh& mesh) {
  const auto n = static_cast<long long>(mesh.nodes.size());
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
    if (!mesh.nodes[i].allFinite())
      throw TopologyError("node " + std::to_string(i) + " has non-finite coordinates");
  const double diam = mesh_diameter(mesh);
  const double min_volume = 1e-14 * diam * diam * diam;
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    Tet& tet = mesh.tets[t];
    for (int v : tet)
      if (v < 0 || v >= n)
        throw TopologyError("tet " + std::to_string(t) + " references node " + std::to_string(v) +
                            " out of range");
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        if (tet[a] == tet[b])
          throw TopologyError("tet " + std::to_string(t) + " repeats node " + std::to_string(tet[a]));
    double vol = tet_volume(mesh, t);
    if (vol < 0.0) {
      std::swap(tet[2], tet[3]);
      vol = -vol;
    }
    if (!(vol > min_volume))
      throw TopologyError("tet " + std::to_string(t) + " is degenerate (volume " + std::to_string(vol) + ")");
  }
  if (mesh.boundary.empty())
    mesh.boundary = boundary_flags_from_faces(mesh);
  else if (mesh.boundary.size() != mesh.nodes.size())
    throw TopologyError("boundary flag count does not match node count");
}

TetMesh parse_mesh(std::istream& in) {
  LineReader reader(in, "mesh");
  {
    auto header = reader.tokens();
    if (header.size() != 2 || header[0] != "tmesh" || header[1] != "1")
      reader.fail("expected header 'tmesh 1'");
  }
  auto counts = reader.tokens();
  if (counts.size() != 2) reader.fail("expected '<n_nodes> <n_tets>'");
  const std::size_t n_nodes = reader.to_count(counts[0]);
  const std::size_t n_tets = reader.to_count(counts[1]);

  TetMesh mesh;
  mesh.nodes.reserve(n_nodes);
  std::vector<std::uint8_t> flags;
  int flags_seen = -1; // -1 unknown, 0 absent, 1 present
  for (std::size_t i = 0; i < n_nodes; ++i) {
    auto tok = reader.tokens();
    if (tok.size() != 3 && tok.size() != 4) reader.fail("expected 'x y z [b]'");
    const int has_flag = tok.size() == 4 ? 1 : 0;
    if (flags_seen == -1) flags_seen = has_flag;
    if (flags_seen != has_flag) reader.fail("boundary flag present on some nodes only");
    mesh.nodes.emplace_back(reader.to_double(tok[0]), reader.to_double(tok[1]), reader.to_double(tok[2]));
    if (has_flag) {
      if (tok[3] != "0" && tok[3] != "1") reader.fail("boundary flag must be 0 or 1");
      flags.push_back(tok[3] == "1" ? 1 : 0);
    }
  }
  mesh.tets.reserve(n_tets);
  for (std::size_t t = 0; t < n_tets; ++t) {
    auto tok = reader.tokens();
    if (tok.size() != 4) reader.fail("expected 'i0 i1 i2 i3'");
    Tet tet{};
    for (int k = 0; k < 4; ++k) tet[k] = reader.to_int(tok[k]);
    mesh.tets.push_back(tet);
  }
  reader.expect_end();
  mesh.boundary = std::move(flags);
  finalize_mesh(mesh);
  return mesh;
}

TetMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  try {
    return parse_mesh(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_mesh(std::ostream& out, const TetMesh& mesh) {
  out << "tmesh 1\n" << mesh.nodes.size() << ' ' << mesh.tets.size() << '\n';
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const Vec3& p = mesh.nodes[i];
    out << fmt_real(p.x()) << ' ' << fmt_real(p.y()) << ' ' << fmt_real(p.z());
    if (!mesh.boundary.empty()) out << ' ' << int(mesh.boundary[i]);
    out << '\n';
  }
  for (const Tet& t : mesh.tets) out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
}

void write_mesh(const std::filesystem::path& path, const TetMesh& mesh) {
  std::ostringstream buf;
  write_mesh(buf, mesh);
  write_text_file(path, buf.str());
}

std::vector<NodePatch> build_node_patches(const TetMesh& mesh) {
  std::vector<NodePatch> patches(mesh.nodes.size());
  for (std::size_t i = 0; i < patches.size(); ++i) patches[i].node = static_cast<int>(i);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t)
    for (int v : mesh.tets[t]) patches[v].elems.push_back(static_cast<int>(t));
  return patches;
}

PointLocator::PointLocator(const TetMesh& mesh) : mesh_(&mesh), neighbors_(tet_neighbors(mesh)) {
  inverse_jacobians_.reserve(mesh.tets.size());
  for (const Tet& t : mesh.tets) {
    const Vec3& x0 = mesh.nodes[t[0]];
    Mat3 j;
    j.col(0) = mesh.nodes[t[1]] - x0;
    j.col(1) = mesh.nodes[t[2]] - x0;
    j.col(2) = mesh.nodes[t[3]] - x0;
    inverse_jacobians_.push_back(j.inverse());
  }
}

Bary PointLocator::barycentric(int tet, const Vec3& x) const {
  const Vec3 l = inverse_jacobians_[tet] * (x - mesh_->nodes[mesh_->tets[tet][0]]);
  return {1.0 - l.x() - l.y() - l.z(), l.x(), l.y(), l.z()};
}

PointLocation PointLocator::locate_brute_force(const Vec3& x) const {
  PointLocation best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh_->tets.size(); ++t) {
    const Bary b = barycentric(static_cast<int>(t), x);
    const double m = *std::min_element(b.begin(), b.end());
    if (m > best_min) {
      best_min = m;
      best.elem = static_cast<int>(t);
      best.bary = b;
    }
  }
  best.exterior = best_min < -kBaryTolerance;
  return best;
}

PointLocation PointLocator::locate(const Vec3& x, int seed) const {
  const auto n_tets = mesh_->tets.size();
  if (n_tets == 0) throw InvalidArgument("point location in an empty mesh");
  int current = (seed >= 0 && static_cast<std::size_t>(seed) < n_tets) ? seed : 0;
  for (std::size_t visited = 0; visited <= n_tets; ++visited) {
    const Bary b = barycentric(current, x);
    const auto k = static_cast<int>(std::min_element(b.begin(), b.end()) - b.begin());
    if (b[k] >= -kBaryTolerance) return {current, b, false};
    const int next = neighbors_[current][k];
    if (next < 0) break;
    current = next;
  }
  return locate_brute_force(x);
}

PointLocation locate_point(const TetMesh& mesh, const Vec3& x) { return PointLocator(mesh).locate(x); }

Vec3 reconstruct_point(const TetMesh& mesh, const PointLocation& loc) {
  const Tet& t = mesh.tets[loc.elem];
  Vec3 p = Vec3::Zero();
  for (int k = 0; k < 4; ++k) p += loc.bary[k] * mesh.nodes[t[k]];
  return p;
}

TetMesh make_box_mesh(const BoxMeshSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1 || spec.nz < 1) throw InvalidArgument("box mesh needs at least one cell per axis");
  if (!((spec.hi - spec.lo).minCoeff() > 0.0)) throw InvalidArgument("box mesh extent must be positive");
  if (spec.jitter < 0.0 || spec.jitter >= 0.25) throw InvalidArgument("box mesh jitter must lie in [0, 0.25)");
  const int nx = spec.nx, ny = spec.ny, nz = spec.nz;
  const Vec3 h = (spec.hi - spec.lo).cwiseQuotient(Vec3(nx, ny, nz));
  auto id = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };

  TetMesh mesh;
  mesh.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1));
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        Vec3 p = spec.lo + Vec3(i * h.x(), j * h.y(), k * h.z());
        if (i == nx) p.x() = spec.hi.x();
        if (j == ny) p.y() = spec.hi.y();
        if (k == nz) p.z() = spec.hi.z();
        const bool interior = i > 0 && i < nx && j > 0 && j < ny && k > 0 && k < nz;
        if (interior && spec.jitter > 0.0)
          for (int a = 0; a < 3; ++a) p[a] += spec.jitter * h[a] * unit(rng);
        mesh.nodes.push_back(p);
      }

  static constexpr std::array<std::array<int, 3>, 6> kPerms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  mesh.tets.reserve(static_cast<std::size_t>(6) * nx * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        for (const auto& perm : kPerms) {
          std::array<int, 3> c{i, j, k};
          Tet tet{};
          tet[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[perm[s]];
            tet[s + 1] = id(c[0], c[1], c[2]);
          }
          mesh.tets.push_back(tet);
        }
  finalize_mesh(mesh);
  return mesh;
}

} // namespace anisonet
