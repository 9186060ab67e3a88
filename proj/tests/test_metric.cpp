#include "error.hpp"
#include "metric.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

using namespace anisonet;
using testing::random_metric;
using testing::random_rotation;

namespace {

Metric diag(double a, double b, double c) { return {{a, 0, 0, b, 0, c}}; }

MetricFrame axes_frame(double d1, double d2, double d3) {
  MetricFrame f;
  f.axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  f.spacing = {d1, d2, d3};
  return f;
}

// Eigen's self-adjoint solver as an independent route to A^p.
Mat3 oracle_power(const Mat3& a, double p) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(a);
  return es.eigenvectors() * es.eigenvalues().array().pow(p).matrix().asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

TEST_SUITE("metric") {

TEST_CASE("metric_from_frame examples") {
  CHECK(metric_from_frame(axes_frame(1, 1, 1)) == diag(1, 1, 1));
  const Metric m = metric_from_frame(axes_frame(0.5, 1, 2));
  CHECK(m == diag(4, 1, 0.25));
}

TEST_CASE("metric_from_frame rejects bad frames") {
  CHECK_THROWS_AS(metric_from_frame(axes_frame(0.0, 1, 1)), InvalidArgument);
  CHECK_THROWS_AS(metric_from_frame(axes_frame(-1, 1, 1)), InvalidArgument);
  MetricFrame f = axes_frame(1, 1, 1);
  f.axes[1] = Vec3(1, 1, 0).normalized();
  CHECK_THROWS_AS(metric_from_frame(f), InvalidArgument);
}

TEST_CASE("decompose_metric examples") {
  const MetricFrame id = decompose_metric(diag(1, 1, 1));
  for (int k = 0; k < 3; ++k) {
    CHECK(id.spacing[k] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(id.axes[k] == Mat3::Identity().col(k));
  }
  const MetricFrame f = decompose_metric(diag(4, 1, 0.25));
  CHECK(f.spacing[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f.spacing[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f.spacing[2] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(std::abs(f.axes[0].x()) == doctest::Approx(1.0));
  CHECK(std::abs(f.axes[1].y()) == doctest::Approx(1.0));
  CHECK(std::abs(f.axes[2].z()) == doctest::Approx(1.0));
  CHECK_THROWS_AS(decompose_metric(diag(1, -1, 1)), NumericError);
}

TEST_CASE("frame roundtrip on a random frame recovers axes up to sign") {
  std::mt19937_64 rng(1);
  const Mat3 r = random_rotation(rng);
  MetricFrame f;
  f.spacing = {0.2, 0.5, 1.0};
  for (int k = 0; k < 3; ++k) f.axes[k] = r.col(k);
  const MetricFrame g = decompose_metric(metric_from_frame(f));
  for (int k = 0; k < 3; ++k) {
    CHECK(g.spacing[k] == doctest::Approx(f.spacing[k]).epsilon(1e-10));
    CHECK(std::abs(g.axes[k].dot(f.axes[k])) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("decompose/compose roundtrip on 10^4 random tensors") {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Metric m = random_metric(rng);
    const MetricFrame f = decompose_metric(m);
    worst = std::max(worst, relative_difference(metric_from_frame(f), m));
    CHECK(f.spacing[0] <= f.spacing[1]);
    CHECK(f.spacing[1] <= f.spacing[2]);
    CHECK((f.axes[0].cross(f.axes[1]) - f.axes[2]).norm() < 1e-12);
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("canonical frame signs") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const MetricFrame f = decompose_metric(random_metric(rng));
    for (int k = 0; k < 2; ++k) {
      int arg = 0;
      f.axes[k].cwiseAbs().maxCoeff(&arg);
      CHECK(f.axes[k][arg] > 0.0);
    }
  }
}

TEST_CASE("eigen_sym against Eigen's solver") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Mat3 a;
    for (int j = 0; j < 9; ++j) a(j) = n(rng);
    a = 0.5 * (a + a.transpose()).eval();
    const SymEigen e = eigen_sym(a);
    Eigen::SelfAdjointEigenSolver<Mat3> es(a);
    for (int k = 0; k < 3; ++k) CHECK(e.values[k] == doctest::Approx(es.eigenvalues()[2 - k]).epsilon(1e-12));
    CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a).norm() < 1e-12 * (1 + a.norm()));
  }
}

TEST_CASE("spd_power against Eigen's solver") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Mat3 a = random_metric(rng).matrix();
    CHECK((spd_power(a, -0.5) - oracle_power(a, -0.5)).norm() < 1e-10 * oracle_power(a, -0.5).norm());
  }
  CHECK_THROWS_AS(spd_power(diag(1, 0, 1).matrix(), 0.5), NumericError);
}

TEST_CASE("interpolate_pair examples") {
  std::mt19937_64 rng(6);
  const Metric m1 = random_metric(rng), m2 = random_metric(rng);
  CHECK(relative_difference(interpolate_pair(m1, m2, 0.0), m1) < 1e-12);
  CHECK(relative_difference(interpolate_pair(m1, m2, 1.0), m2) < 1e-12);
  const Metric half = interpolate_pair(diag(1, 1, 1), Metric::isotropic(3.0), 0.5);
  CHECK(relative_difference(half, diag(0.25, 0.25, 0.25)) < 1e-14);
  for (double t : {0.1, 0.5, 0.9}) CHECK(relative_difference(interpolate_pair(m1, m1, t), m1) < 1e-12);
  CHECK_THROWS_AS(interpolate_pair(m1, m2, 1.5), InvalidArgument);
  CHECK_THROWS_AS(interpolate_pair(m1, m2, -0.1), InvalidArgument);
}

TEST_CASE("interpolate_pair matches a direct evaluation") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Metric m1 = random_metric(rng), m2 = random_metric(rng);
    const double t = std::uniform_real_distribution<double>(0, 1)(rng);
    const Mat3 s = (1 - t) * oracle_power(m1.matrix(), -0.5) + t * oracle_power(m2.matrix(), -0.5);
    const Mat3 want = oracle_power(s, -2.0);
    CHECK(relative_difference(interpolate_pair(m1, m2, t), Metric::from_matrix(want)) < 1e-10);
    CHECK(relative_difference(interpolate_pair(m1, m2, t), interpolate_pair(m2, m1, 1 - t)) < 1e-10);
  }
}

TEST_CASE("interpolate_in_tet examples") {
  std::mt19937_64 rng(8);
  const std::array<Metric, 4> m{random_metric(rng), random_metric(rng), random_metric(rng), random_metric(rng)};
  for (int k = 0; k < 4; ++k) {
    Bary b{};
    b[k] = 1.0;
    CHECK(relative_difference(interpolate_in_tet(m, b), m[k]) < 1e-12);
  }
  const Metric one = random_metric(rng);
  CHECK(relative_difference(interpolate_in_tet({one, one, one, one}, {0.25, 0.25, 0.25, 0.25}), one) < 1e-12);

  const std::array<Metric, 4> d{diag(4, 1, 0.25), diag(9, 9, 9), diag(1, 2, 3), diag(5, 5, 5)};
  const Metric edge = interpolate_in_tet(d, {0.5, 0.0, 0.5, 0.0});
  CHECK(relative_difference(edge, interpolate_pair(d[2], d[0], 0.5)) < 1e-14);
  const Metric edge2 = interpolate_in_tet(d, {0.2, 0.0, 0.8, 0.0});
  CHECK(relative_difference(edge2, interpolate_pair(d[2], d[0], 0.2)) < 1e-14);

  CHECK_THROWS_AS(interpolate_in_tet(d, {0.5, 0.5, 0.5, -0.5}), InvalidArgument);
  CHECK_THROWS_AS(interpolate_in_tet(d, {0.5, 0.5, 0.5, 0.5}), InvalidArgument);
}

TEST_CASE("interpolate_in_tet stays SPD and continuous") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    const std::array<Metric, 4> m{random_metric(rng), random_metric(rng), random_metric(rng), random_metric(rng)};
    Bary b{u(rng), u(rng), u(rng), u(rng)};
    const double s = b[0] + b[1] + b[2] + b[3];
    for (double& x : b) x /= s;
    CHECK(smallest_eigenvalue(interpolate_in_tet(m, b).matrix()) > 0.0);
    // Approaching a vertex the result approaches that vertex metric.
    Bary near{1e-9, 1e-9, 1e-9, 1.0 - 3e-9};
    CHECK(relative_difference(interpolate_in_tet(m, near), m[3]) < 1e-6);
  }
}

TEST_CASE("intersect_pair examples") {
  std::mt19937_64 rng(10);
  const Metric m = random_metric(rng);
  CHECK(relative_difference(intersect_pair(m, m), m) < 1e-12);
  CHECK(intersect_pair(diag(1, 0.25, 1.0 / 9), diag(1.0 / 9, 0.25, 1)) == diag(1, 0.25, 1));
  // Rotated copy of the diagonal example: same answer in the rotated frame.
  const Mat3 r = random_rotation(rng);
  const Metric a = Metric::from_matrix(r * diag(1, 0.25, 1.0 / 9).matrix() * r.transpose());
  const Metric b = Metric::from_matrix(r * diag(1.0 / 9, 0.25, 1).matrix() * r.transpose());
  const Metric want = Metric::from_matrix(r * diag(1, 0.25, 1).matrix() * r.transpose());
  CHECK(relative_difference(intersect_pair(a, b), want) < 1e-10);
}

TEST_CASE("intersect_pair dominance and commutativity") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Metric a = random_metric(rng), b = random_metric(rng);
    const Metric ab = intersect_pair(a, b), ba = intersect_pair(b, a);
    CHECK(testing::loewner_margin(ab, a) >= -1e-8 * frobenius_norm(ab));
    CHECK(testing::loewner_margin(ab, b) >= -1e-8 * frobenius_norm(ab));
    CHECK(relative_difference(ab, ba) < 1e-8);
  }
}

TEST_CASE("spacing_along") {
  const Metric m = diag(4, 1, 0.25);
  CHECK(spacing_along(m, Vec3::UnitX()) == doctest::Approx(0.5));
  CHECK(spacing_along(m, Vec3::UnitZ()) == doctest::Approx(2.0));
  CHECK(spacing_along(Metric::isotropic(0.3), Vec3(1, 2, 3).normalized()) == doctest::Approx(0.3));
}

TEST_CASE("mfield roundtrip is lossless") {
  std::mt19937_64 rng(12);
  MetricField f;
  for (int i = 0; i < 20; ++i) f.push_back(random_metric(rng));
  const auto dir = testing::scratch_dir("mfield");
  write_mfield(dir / "a.mfield", f);
  const MetricField g = read_mfield(dir / "a.mfield");
  REQUIRE(g.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(g[i] == f[i]);
}

} // TEST_SUITE
