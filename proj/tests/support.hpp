#pragma once

#include "mesh.hpp"
#include "metric.hpp"

#include <Eigen/QR>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

using namespace anisonet;

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat3 a;
  for (int i = 0; i < 9; ++i) a(i) = n(rng);
  Eigen::HouseholderQR<Mat3> qr(a);
  Mat3 q = qr.householderQ();
  if (q.determinant() < 0) q.col(2) = -q.col(2);
  return q;
}

/// SPD tensor with spacings drawn log-uniformly so the condition number stays
/// at most max_ratio^2.
inline Metric random_metric(std::mt19937_64& rng, double max_ratio = 25.0, double base = 1.0) {
  std::uniform_real_distribution<double> u(0.0, std::log(max_ratio));
  const Mat3 r = random_rotation(rng);
  MetricFrame f;
  const double d0 = base * std::exp(std::uniform_real_distribution<double>(-1.0, 1.0)(rng));
  for (int k = 0; k < 3; ++k) {
    f.axes[k] = r.col(k);
    f.spacing[k] = d0 * std::exp(u(rng) * (k == 0 ? 0.0 : 1.0));
  }
  return metric_from_frame(f);
}

inline double loewner_margin(const Metric& big, const Metric& small) {
  return smallest_eigenvalue(big.matrix() - small.matrix());
}

inline TetMesh unit_tet() {
  TetMesh m;
  m.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  m.tets = {{0, 1, 2, 3}};
  finalize_mesh(m);
  return m;
}

inline TetMesh box(int n, double jitter = 0.0, std::uint64_t seed = 0) {
  BoxMeshSpec s;
  s.nx = s.ny = s.nz = n;
  s.jitter = jitter;
  s.seed = seed;
  return make_box_mesh(s);
}

/// Fresh scratch directory under the build tree, removed first if present.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("anisonet_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

} // namespace testing
