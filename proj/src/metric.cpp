#include "metric.hpp"

#include "error.hpp"
#include "text_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace anisonet {

Mat3 Metric::matrix() const {
  Mat3 m;
  m << c[0], c[1], c[2], c[1], c[3], c[4], c[2], c[4], c[5];
  return m;
}

Metric Metric::from_matrix(const Mat3& m) {
  return {{m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), 0.5 * (m(0, 2) + m(2, 0)), m(1, 1), 0.5 * (m(1, 2) + m(2, 1)),
           m(2, 2)}};
}

Metric Metric::isotropic(double spacing) {
  const double v = 1.0 / (spacing * spacing);
  return {{v, 0.0, 0.0, v, 0.0, v}};
}

SymEigen eigen_sym(const Mat3& input) {
  Mat3 a = 0.5 * (input + input.transpose());
  Mat3 v = Mat3::Identity();
  const double scale = a.norm();
  if (scale > 0.0) {
    static constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int sweep = 0; sweep < 64; ++sweep) {
      const double off = std::sqrt(2.0 * (a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2)));
      if (off <= 1e-13 * scale) break;
      for (const auto& pq : kPairs) {
        const int p = pq[0], q = pq[1];
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        Mat3 rot = Mat3::Identity();
        rot(p, p) = cs;
        rot(q, q) = cs;
        rot(p, q) = sn;
        rot(q, p) = -sn;
        a = rot.transpose() * a * rot;
        a(p, q) = a(q, p) = 0.0;
        v = v * rot;
      }
    }
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
  SymEigen out;
  for (int k = 0; k < 3; ++k) {
    out.values[k] = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

Mat3 spd_power(const Mat3& a, double p) {
  const SymEigen e = eigen_sym(a);
  if (!(e.values[2] > 0.0) || !std::isfinite(e.values[0]))
    throw NumericError("matrix is not positive definite (smallest eigenvalue " + std::to_string(e.values[2]) + ")");
  Vec3 d;
  for (int k = 0; k < 3; ++k) d[k] = std::pow(e.values[k], p);
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

double smallest_eigenvalue(const Mat3& a) { return eigen_sym(a).values[2]; }

Metric metric_from_frame(const MetricFrame& frame) {
  for (int i = 0; i < 3; ++i) {
    const double d = frame.spacing[i];
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidArgument("frame spacing must be positive and finite");
    for (int j = i; j < 3; ++j) {
      const double dot = frame.axes[i].dot(frame.axes[j]);
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-8) throw InvalidArgument("frame axes are not orthonormal");
    }
  }
  Mat3 m = Mat3::Zero();
  for (int k = 0; k < 3; ++k)
    m += frame.axes[k] * frame.axes[k].transpose() / (frame.spacing[k] * frame.spacing[k]);
  return Metric::from_matrix(m);
}

namespace {

// Orthonormal basis of span(cols) that follows the global axes as closely as
// possible: repeatedly take the axis with the largest remaining projection.
void align_cluster_to_axes(Mat3& vectors, int first, int count) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> basis = vectors.middleCols(first, count);
  std::vector<Vec3> chosen;
  for (int s = 0; s < count; ++s) {
    double best_norm = -1.0;
    Vec3 best = Vec3::Zero();
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 p = basis * (basis.transpose() * Vec3::Unit(axis));
      for (const Vec3& c : chosen) p -= c * c.dot(p);
      const double n = p.norm();
      if (n > best_norm + 1e-12) {
        best_norm = n;
        best = p;
      }
    }
    chosen.push_back(best / best_norm);
  }
  for (int s = 0; s < count; ++s) vectors.col(first + s) = chosen[s];
}

void fix_sign(Vec3& v) {
  int idx = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(v[k]) > std::abs(v[idx])) idx = k;
  if (v[idx] < 0.0) v = -v;
}

} // namespace

MetricFrame decompose_metric(const Metric& m) {
  SymEigen e = eigen_sym(m.matrix());
  if (!(e.values[2] > 0.0) || !std::isfinite(e.values[0]))
    throw NumericError("metric is not positive definite (smallest eigenvalue " + std::to_string(e.values[2]) + ")");

  auto tied = [&](int i, int j) {
    return std::abs(e.values[i] - e.values[j]) < 1e-8 * std::max(e.values[i], e.values[j]);
  };
  int k = 0;
  while (k < 3) {
    int end = k + 1;
    while (end < 3 && tied(end - 1, end)) ++end;
    if (end - k > 1) align_cluster_to_axes(e.vectors, k, end - k);
    k = end;
  }

  MetricFrame f;
  for (int i = 0; i < 3; ++i) {
    f.axes[i] = e.vectors.col(i).normalized();
    f.spacing[i] = 1.0 / std::sqrt(e.values[i]);
  }
  fix_sign(f.axes[0]);
  fix_sign(f.axes[1]);
  f.axes[2] = f.axes[0].cross(f.axes[1]).normalized();
  return f;
}

Metric interpolate_pair(const Metric& m1, const Metric& m2, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("interpolation parameter outside [0, 1]");
  if (t == 0.0 || m1 == m2) return m1;
  if (t == 1.0) return m2;
  const Mat3 n = (1.0 - t) * spd_power(m1.matrix(), -0.5) + t * spd_power(m2.matrix(), -0.5);
  return Metric::from_matrix(spd_power(n, -2.0));
}

Metric interpolate_in_tet(const std::array<Metric, 4>& m, const Bary& bary) {
  Bary b{};
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (!(bary[k] >= -kBaryTolerance) || !std::isfinite(bary[k]))
      throw InvalidArgument("barycentric coordinate below tolerance");
    b[k] = std::max(bary[k], 0.0);
    sum += b[k];
  }
  if (!(std::abs(sum - 1.0) < 1e-8)) throw InvalidArgument("barycentric coordinates do not sum to one");
  for (double& v : b) v /= sum;

  constexpr double kTiny = 1e-14;
  if (b[3] >= 1.0 - kTiny) return m[3];
  const double face = 1.0 - b[3];

  // x123 = x2 when b1 + b3 vanishes; the edge stage is then indeterminate.
  Metric at_face;
  const double edge = b[0] + b[2];
  if (edge < kTiny) {
    at_face = m[1];
  } else {
    const Metric at_edge = interpolate_pair(m[2], m[0], std::clamp(b[0] / edge, 0.0, 1.0));
    at_face = interpolate_pair(at_edge, m[1], std::clamp(b[1] / face, 0.0, 1.0));
  }
  return interpolate_pair(at_face, m[3], std::clamp(b[3], 0.0, 1.0));
}

Metric intersect_pair(const Metric& m1, const Metric& m2) {
  // Commuting diagonal inputs: the generalized eigenvectors are the axes.
  const bool diagonal = m1.c[1] == 0.0 && m1.c[2] == 0.0 && m1.c[4] == 0.0 && m2.c[1] == 0.0 &&
                        m2.c[2] == 0.0 && m2.c[4] == 0.0;
  if (diagonal) {
    return {{std::max(m1.c[0], m2.c[0]), 0.0, 0.0, std::max(m1.c[3], m2.c[3]), 0.0, std::max(m1.c[5], m2.c[5])}};
  }

  const Metric diff{{m1.c[0] - m2.c[0], m1.c[1] - m2.c[1], m1.c[2] - m2.c[2], m1.c[3] - m2.c[3],
                     m1.c[4] - m2.c[4], m1.c[5] - m2.c[5]}};
  if (frobenius_norm(diff) < 1e-10 * std::max(frobenius_norm(m1), frobenius_norm(m2))) return m1;

  // M1^{-1} M2 is similar to S = M1^{-1/2} M2 M1^{-1/2}; with S = Q D Q^T the
  // eigenvectors of M1^{-1} M2 are the columns of P = M1^{-1/2} Q.
  const Mat3 a = m1.matrix();
  const Mat3 b = m2.matrix();
  const SymEigen e1 = eigen_sym(a);
  if (!(e1.values[2] > 0.0)) throw NumericError("intersection of a non-positive-definite metric");
  Vec3 sq, isq;
  for (int k = 0; k < 3; ++k) {
    sq[k] = std::sqrt(e1.values[k]);
    isq[k] = 1.0 / sq[k];
  }
  const Mat3 root = e1.vectors * sq.asDiagonal() * e1.vectors.transpose();
  const Mat3 inv_root = e1.vectors * isq.asDiagonal() * e1.vectors.transpose();
  const Mat3 s = inv_root * b * inv_root;
  const SymEigen es = eigen_sym(s);
  const Mat3 p = inv_root * es.vectors;
  const Mat3 p_inv = es.vectors.transpose() * root;

  Vec3 lam_max;
  for (int i = 0; i < 3; ++i) {
    const Vec3 ei = p.col(i);
    const double lambda = ei.dot(a * ei);
    const double mu = ei.dot(b * ei);
    lam_max[i] = std::max(lambda, mu);
  }
  return Metric::from_matrix(p_inv.transpose() * lam_max.asDiagonal() * p_inv);
}

double spacing_along(const Metric& m, const Vec3& u) {
  const double q = u.dot(m.matrix() * u);
  if (!(q > 0.0)) throw NumericError("metric is not positive along the requested direction");
  return 1.0 / std::sqrt(q);
}

double frobenius_norm(const Metric& m) { return m.matrix().norm(); }

double relative_difference(const Metric& a, const Metric& b) {
  const double scale = std::max(frobenius_norm(a), frobenius_norm(b));
  if (scale == 0.0) return 0.0;
  return (a.matrix() - b.matrix()).norm() / scale;
}

MetricField read_mfield(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metric field " + path.string());
  LineReader reader(in, path.string());
  auto header = reader.tokens();
  if (header.size() != 3 || header[0] != "mfield" || header[1] != "1")
    reader.fail("expected header 'mfield 1 <n_nodes>'");
  const std::size_t n = reader.to_count(header[2]);
  MetricField field(n);
  for (auto& m : field) {
    auto tok = reader.tokens();
    if (tok.size() != 6) reader.fail("expected 'm11 m12 m13 m22 m23 m33'");
    for (int k = 0; k < 6; ++k) m.c[k] = reader.to_double(tok[k]);
  }
  reader.expect_end();
  return field;
}

void write_mfield(const std::filesystem::path& path, const MetricField& field) {
  std::ostringstream out;
  out << "mfield 1 " << field.size() << '\n';
  for (const Metric& m : field)
    out << fmt_real(m.c[0]) << ' ' << fmt_real(m.c[1]) << ' ' << fmt_real(m.c[2]) << ' ' << fmt_real(m.c[3]) << ' '
        << fmt_real(m.c[4]) << ' ' << fmt_real(m.c[5]) << '\n';
  write_text_file(path, out.str());
}

} // namespace anisonet
