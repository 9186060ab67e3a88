#include "delaunay.hpp"

#include "error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace anisonet {

std::pair<Vec3, double> circumsphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Mat3 m;
  m.row(0) = (b - a).transpose();
  m.row(1) = (c - a).transpose();
  m.row(2) = (d - a).transpose();
  const Vec3 rhs(0.5 * (b - a).squaredNorm(), 0.5 * (c - a).squaredNorm(), 0.5 * (d - a).squaredNorm());
  const Vec3 offset = m.partialPivLu().solve(rhs);
  return {a + offset, offset.squaredNorm()};
}

TetMesh DelaunayGraph::as_mesh() const {
  TetMesh mesh;
  mesh.nodes = points;
  mesh.tets = tets;
  mesh.boundary.assign(points.size(), 0);
  return mesh;
}

std::vector<Tet> DelaunayGraph::exposed_tets() const {
  std::vector<Tet> out;
  out.reserve(real_tets.size());
  for (int t : real_tets) out.push_back(tets[t]);
  return out;
}

namespace {

double orient(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a));
}

class BowyerWatson {
public:
  BowyerWatson(std::span<const Vec3> input, double length_scale) : scale_(length_scale) {
    pts_.assign(input.begin(), input.end());
    orient_eps_ = 1e-13 * scale_ * scale_ * scale_;
  }

  DelaunayGraph run() {
    make_super_tet();
    const std::size_t n = pts_.size() - 4;
    for (std::size_t i = 0; i < n; ++i) insert(static_cast<int>(i));
    return finish(n);
  }

private:
  struct Cell {
    Tet v;
    std::array<int, 4> nbr{-1, -1, -1, -1};
    Vec3 center;
    double r2 = 0.0;
    bool alive = true;
  };

  std::vector<Vec3> pts_;
  std::vector<Cell> cells_;
  std::vector<int> free_;
  double scale_;
  double orient_eps_;
  int last_ = 0;
  std::vector<int> mark_; // per cell: stamp of the insertion that visited it
  int stamp_ = 0;

  int new_cell(const Tet& v) {
    Cell c;
    c.v = v;
    std::tie(c.center, c.r2) = circumsphere(pts_[v[0]], pts_[v[1]], pts_[v[2]], pts_[v[3]]);
    if (!free_.empty()) {
      const int id = free_.back();
      free_.pop_back();
      cells_[id] = c;
      mark_[id] = 0;
      return id;
    }
    cells_.push_back(c);
    mark_.push_back(0);
    return static_cast<int>(cells_.size()) - 1;
  }

  void make_super_tet() {
    Vec3 lo = pts_.front(), hi = pts_.front();
    for (const Vec3& p : pts_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec3 center = 0.5 * (lo + hi);
    const double extent = std::max((hi - lo).norm(), 1e-300);
    // Inradius of this tet is s/sqrt(3); make it 100x the box diagonal.
    const double s = 100.0 * std::sqrt(3.0) * extent;
    const std::size_t base = pts_.size();
    pts_.push_back(center + s * Vec3(1, 1, 1));
    pts_.push_back(center + s * Vec3(1, -1, -1));
    pts_.push_back(center + s * Vec3(-1, 1, -1));
    pts_.push_back(center + s * Vec3(-1, -1, 1));
    Tet t{int(base), int(base + 1), int(base + 2), int(base + 3)};
    if (orient(pts_[t[0]], pts_[t[1]], pts_[t[2]], pts_[t[3]]) < 0) std::swap(t[2], t[3]);
    last_ = new_cell(t);
  }

  bool inside_sphere(int cell, const Vec3& p) const {
    const Cell& c = cells_[cell];
    return (p - c.center).squaredNorm() < c.r2 * (1.0 - kInsphereTolerance);
  }

  // Orientation of the tet obtained by replacing local vertex k with p.
  double face_orient(int cell, int k, const Vec3& p) const {
    std::array<Vec3, 4> x;
    for (int m = 0; m < 4; ++m) x[m] = pts_[cells_[cell].v[m]];
    x[k] = p;
    return orient(x[0], x[1], x[2], x[3]);
  }

  int locate(const Vec3& p) {
    int cur = last_;
    if (!cells_[cur].alive) cur = first_alive();
    const std::size_t limit = cells_.size() + 8;
    for (std::size_t step = 0; step < limit; ++step) {
      int next = -1;
      double worst = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double o = face_orient(cur, k, p);
        if (o < worst) {
          worst = o;
          next = cells_[cur].nbr[k];
        }
      }
      if (worst >= 0.0) return cur;
      if (next < 0) break;
      cur = next;
    }
    // Fallback: the cell whose smallest face orientation is largest.
    int best = -1;
    double best_val = -INFINITY;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      if (!cells_[c].alive) continue;
      double m = INFINITY;
      for (int k = 0; k < 4; ++k) m = std::min(m, face_orient(static_cast<int>(c), k, p));
      if (m > best_val) {
        best_val = m;
        best = static_cast<int>(c);
      }
    }
    return best;
  }

  int first_alive() const {
    for (std::size_t c = 0; c < cells_.size(); ++c)
      if (cells_[c].alive) return static_cast<int>(c);
    return -1;
  }

  void insert(int pi) {
    const Vec3& p = pts_[pi];
    const int start = locate(p);
    ++stamp_;

    // Cavity: cells connected to the start cell whose circumsphere holds p.
    std::vector<int> cavity{start};
    mark_[start] = stamp_;
    for (std::size_t i = 0; i < cavity.size(); ++i) {
      for (int nb : cells_[cavity[i]].nbr) {
        if (nb < 0 || mark_[nb] == stamp_) continue;
        if (inside_sphere(nb, p)) {
          mark_[nb] = stamp_;
          cavity.push_back(nb);
        }
      }
    }

    // Keep the cavity star-shaped from p: drop cells owning a boundary face
    // that p does not see strictly positively, then keep what is still
    // connected to the start cell.
    std::vector<char> in(cells_.size(), 0);
    for (int c : cavity) in[c] = 1;
    for (bool changed = true; changed;) {
      changed = false;
      for (int c : cavity) {
        if (!in[c] || c == start) continue;
        for (int k = 0; k < 4; ++k) {
          const int nb = cells_[c].nbr[k];
          if (nb >= 0 && in[nb]) continue;
          if (face_orient(c, k, p) <= orient_eps_) {
            in[c] = 0;
            changed = true;
            break;
          }
        }
      }
      std::vector<int> reach{start};
      std::vector<char> seen(cells_.size(), 0);
      seen[start] = 1;
      for (std::size_t i = 0; i < reach.size(); ++i)
        for (int nb : cells_[reach[i]].nbr)
          if (nb >= 0 && in[nb] && !seen[nb]) {
            seen[nb] = 1;
            reach.push_back(nb);
          }
      for (int c : cavity)
        if (in[c] && !seen[c]) {
          in[c] = 0;
          changed = true;
        }
    }
    std::vector<int> kept;
    for (int c : cavity)
      if (in[c]) kept.push_back(c);

    struct Boundary {
      int cell, k, outside;
    };
    std::vector<Boundary> faces;
    for (int c : kept)
      for (int k = 0; k < 4; ++k) {
        const int nb = cells_[c].nbr[k];
        if (nb < 0 || !in[nb]) faces.push_back({c, k, nb});
      }

    std::vector<int> created;
    created.reserve(faces.size());
    std::unordered_map<std::uint64_t, std::pair<int, int>> edge_owner;
    edge_owner.reserve(faces.size() * 3);
    for (const Boundary& f : faces) {
      Tet v = cells_[f.cell].v;
      v[f.k] = pi;
      const int id = new_cell(v);
      created.push_back(id);
      cells_[id].nbr[f.k] = f.outside;
      if (f.outside >= 0)
        for (int& back : cells_[f.outside].nbr)
          if (back == f.cell) back = id;
      for (int m = 0; m < 4; ++m) {
        if (m == f.k) continue;
        int a = -1, b = -1;
        for (int q = 0; q < 4; ++q) {
          if (q == m || q == f.k) continue;
          (a < 0 ? a : b) = v[q];
        }
        const auto key = (std::uint64_t(std::min(a, b)) << 32) | std::uint32_t(std::max(a, b));
        auto it = edge_owner.find(key);
        if (it == edge_owner.end()) {
          edge_owner.emplace(key, std::make_pair(id, m));
        } else {
          cells_[id].nbr[m] = it->second.first;
          cells_[it->second.first].nbr[it->second.second] = id;
          edge_owner.erase(it);
        }
      }
    }
    for (int c : kept) {
      cells_[c].alive = false;
      free_.push_back(c);
    }
    if (!created.empty()) last_ = created.back();
  }

  DelaunayGraph finish(std::size_t n_input) {
    DelaunayGraph g;
    g.points = pts_;
    g.num_input = n_input;
    for (const Cell& c : cells_) {
      if (!c.alive) continue;
      const bool real = std::all_of(c.v.begin(), c.v.end(), [&](int v) { return std::size_t(v) < n_input; });
      if (real) g.real_tets.push_back(static_cast<int>(g.tets.size()));
      g.tets.push_back(c.v);
    }
    return g;
  }
};

} // namespace

DelaunayGraph build_delaunay(std::span<const Vec3> points) {
  if (points.size() < 4) throw InvalidArgument("Delaunay graph needs at least 4 points");
  for (const Vec3& p : points)
    if (!p.allFinite()) throw InvalidArgument("Delaunay input has non-finite coordinates");

  // Rank check: farthest point, farthest from the line, farthest from the plane.
  const Vec3& p0 = points[0];
  std::size_t i1 = 0;
  for (std::size_t i = 1; i < points.size(); ++i)
    if ((points[i] - p0).squaredNorm() > (points[i1] - p0).squaredNorm()) i1 = i;
  const double length = (points[i1] - p0).norm();
  if (!(length > 0.0)) throw InvalidArgument("Delaunay input points are all coincident");
  const Vec3 dir = (points[i1] - p0) / length;
  std::size_t i2 = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = (points[i] - p0).cross(dir).norm();
    if (d > best) {
      best = d;
      i2 = i;
    }
  }
  const Vec3 normal = (points[i1] - p0).cross(points[i2] - p0);
  double height = 0.0;
  if (normal.norm() > 0.0)
    for (const Vec3& p : points) height = std::max(height, std::abs((p - p0).dot(normal.normalized())));
  if (!(best > 1e-12 * length) || !(height > 1e-12 * length))
    throw InvalidArgument("Delaunay input points are coplanar");

  return BowyerWatson(points, length).run();
}

} // namespace anisonet
