#include "error.hpp"
#include "hessian.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace anisonet;
using testing::box;

namespace {

std::vector<double> sample(const TetMesh& m, double (*f)(const Vec3&)) {
  std::vector<double> p(m.num_nodes());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = f(m.nodes[i]);
  return p;
}

bool in_core(const Vec3& x) { return x.minCoeff() >= 0.25 - 1e-12 && x.maxCoeff() <= 0.75 + 1e-12; }

double mean_interior_error(const TetMesh& m, const HessianField& h, const Mat3& exact) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    if (m.boundary[i]) continue;
    sum += (h[i] - exact).norm();
    ++n;
  }
  return sum / n;
}

} // namespace

TEST_SUITE("hessian") {

TEST_CASE("gradient of a linear field is exact on any mesh") {
  const TetMesh m = box(4, 0.2, 8);
  const auto g = recover_gradient(m, sample(m, [](const Vec3& x) { return 2 * x.x() + 3 * x.y() - x.z(); }));
  for (const Vec3& v : g) CHECK((v - Vec3(2, 3, -1)).norm() < 1e-12);
  const auto z = recover_gradient(m, std::vector<double>(m.num_nodes(), 4.2));
  for (const Vec3& v : z) CHECK(v.norm() < 1e-12);
}

TEST_CASE("gradient of x^2 converges at interior nodes") {
  double prev = 0.0;
  for (int n : {6, 12}) {
    const TetMesh m = box(n);
    const auto g = recover_gradient(m, sample(m, [](const Vec3& x) { return x.x() * x.x(); }));
    double err = 0.0;
    for (std::size_t i = 0; i < m.num_nodes(); ++i)
      if (in_core(m.nodes[i])) err = std::max(err, (g[i] - Vec3(2 * m.nodes[i].x(), 0, 0)).norm());
    CHECK(err <= 1.0 / n);
    prev = err;
  }
  CHECK(prev < 1e-12); // symmetric patches make the structured-mesh recovery exact here
}

TEST_CASE("linear field has an exactly zero Hessian") {
  for (double jitter : {0.0, 0.2}) {
    const TetMesh m = box(5, jitter, 4);
    const auto h = recover_hessian(m, sample(m, [](const Vec3& x) { return 0.3 - 7 * x.x() + 2.5 * x.y() + x.z(); }));
    for (const Mat3& hi : h) CHECK(hi == Mat3::Zero());
  }
}

TEST_CASE("quadratic Hessians on a structured mesh") {
  struct Q {
    double (*f)(const Vec3&);
    Mat3 h;
  };
  Mat3 hxx = Mat3::Zero(), hxy = Mat3::Zero(), hmix = Mat3::Zero();
  hxx(0, 0) = 2;
  hxy(0, 1) = hxy(1, 0) = 1;
  hmix << 2, 0, 0, 0, 0, 2, 0, 2, -2;
  const Q qs[] = {{[](const Vec3& x) { return x.x() * x.x(); }, hxx},
                  {[](const Vec3& x) { return x.x() * x.y(); }, hxy},
                  {[](const Vec3& x) { return x.x() * x.x() + 2 * x.y() * x.z() - x.z() * x.z(); }, hmix}};
  for (const Q& q : qs) {
    double coarse = 0.0, fine = 0.0;
    for (int n : {6, 12}) {
      const TetMesh m = box(n);
      const auto h = recover_hessian(m, sample(m, q.f));
      for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        CHECK((h[i] - h[i].transpose()).norm() == 0.0);
        if (in_core(m.nodes[i])) CHECK((h[i] - q.h).norm() < 1e-12);
      }
      (n == 6 ? coarse : fine) = mean_interior_error(m, h, q.h);
    }
    // The first interior layer carries an O(1) error whose share halves per refinement.
    CHECK(coarse / fine >= 1.5);
  }
}

TEST_CASE("smooth field Hessian converges at second order in the core") {
  auto f = [](const Vec3& x) { return std::exp(x.x() + 0.5 * x.y()) * std::sin(2 * x.z()); };
  auto exact = [](const Vec3& x) {
    const double e = std::exp(x.x() + 0.5 * x.y()) * std::sin(2 * x.z());
    const double c = std::exp(x.x() + 0.5 * x.y()) * std::cos(2 * x.z());
    Mat3 h;
    h << e, 0.5 * e, 2 * c, 0.5 * e, 0.25 * e, c, 2 * c, c, -4 * e;
    return h;
  };
  double err[2] = {0, 0};
  int level = 0;
  for (int n : {8, 16}) {
    const TetMesh m = box(n);
    const auto h = recover_hessian(m, sample(m, f));
    for (std::size_t i = 0; i < m.num_nodes(); ++i)
      if (in_core(m.nodes[i])) err[level] = std::max(err[level], (h[i] - exact(m.nodes[i])).norm());
    ++level;
  }
  CHECK(err[0] / err[1] > 3.0);
}

TEST_CASE("recovery is linear in the field") {
  const TetMesh m = box(4, 0.2, 12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> f(m.num_nodes()), g(m.num_nodes()), c(m.num_nodes());
  const double a = 1.7, b = -0.4;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = u(rng);
    g[i] = u(rng);
    c[i] = a * f[i] + b * g[i];
  }
  const GradientRecovery r(m);
  const auto gf = r.gradient(f), gg = r.gradient(g), gc = r.gradient(c);
  const auto hf = r.hessian(f), hg = r.hessian(g), hc = r.hessian(c);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK((gc[i] - (a * gf[i] + b * gg[i])).norm() <= 1e-10 * (1 + gc[i].norm()));
    CHECK((hc[i] - (a * hf[i] + b * hg[i])).norm() <= 1e-10 * (1 + hc[i].norm()));
  }
  CHECK_THROWS_AS(r.gradient(std::vector<double>(3)), InvalidArgument);
}

TEST_CASE("spacing from eigenvalue") {
  SpacingConfig cfg{0.1, 2.0, 1.0, 5.0};
  CHECK(spacing_from_eigenvalue(4.0, 1.0, cfg) == doctest::Approx(0.5));
  CHECK(spacing_from_eigenvalue(1000.0, 1.0, cfg) == 0.1);
  CHECK(spacing_from_eigenvalue(0.01, 1.0, cfg) == 2.0);
  CHECK(spacing_from_eigenvalue(0.0, 1.0, cfg) == 2.0);
}

TEST_CASE("stretch cap shrinks the larger spacings") {
  SpacingConfig cfg{0.01, 10.0, 0.2, 5.0};
  MetricFrame f;
  f.axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  f.spacing = {0.1, 0.3, 1.0};
  const MetricFrame c = clamp_frame(f, cfg);
  CHECK(c.spacing[0] == 0.1);
  CHECK(c.spacing[1] == 0.3);
  CHECK(c.spacing[2] == doctest::Approx(0.5).epsilon(1e-15));
  f.spacing = {1.0, 0.1, 0.3};
  const MetricFrame d = clamp_frame(f, cfg);
  CHECK(d.axes[0] == Vec3::UnitY());
  CHECK(d.spacing[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d.axes[2] == Vec3::UnitX());
}

TEST_CASE("spacing config validation") {
  CHECK_NOTHROW(SpacingConfig{}.validate());
  CHECK_THROWS_AS((SpacingConfig{0.1, 0.1, 0.2, 5}.validate()), InvalidArgument);
  CHECK_THROWS_AS((SpacingConfig{0, 0.1, 0.2, 5}.validate()), InvalidArgument);
  CHECK_THROWS_AS((SpacingConfig{0.01, 0.1, 0, 5}.validate()), InvalidArgument);
  CHECK_THROWS_AS((SpacingConfig{0.01, 0.1, 1.5, 5}.validate()), InvalidArgument);
  CHECK_THROWS_AS((SpacingConfig{0.01, 0.1, 0.2, 0.5}.validate()), InvalidArgument);
}

TEST_CASE("target metric of a linear field is isotropic delta_max") {
  const TetMesh m = box(4, 0.2, 1);
  const SpacingConfig cfg;
  TargetSummary s;
  const auto h = recover_hessian(m, sample(m, [](const Vec3& x) { return x.x() - 2 * x.z(); }));
  const MetricField t = target_metric_field(m, h, cfg, &s);
  CHECK(s.lambda_max == 0.0);
  for (const Metric& mi : t) CHECK(mi == Metric::isotropic(cfg.delta_max));
}

TEST_CASE("target metric uses K = S^2 delta_min^2 lambda_max") {
  // One node with eigenvalues (100, 25, 1): lambda_max = 100, K = S^2 dmin^2 100.
  TetMesh m = testing::unit_tet();
  SpacingConfig cfg{0.01, 1.0, 1.0, 100.0};
  HessianField h(4, Mat3::Zero());
  h[0].diagonal() << 100, -25, 1;
  TargetSummary s;
  const MetricField t = target_metric_field(m, h, cfg, &s);
  CHECK(s.lambda_max == 100.0);
  CHECK(s.k == doctest::Approx(0.01));
  const MetricFrame f = decompose_metric(t[0]);
  CHECK(f.spacing[0] == doctest::Approx(0.01));
  CHECK(f.spacing[1] == doctest::Approx(0.02));
  CHECK(f.spacing[2] == doctest::Approx(0.1));
  CHECK(std::abs(f.axes[1].y()) == doctest::Approx(1.0)); // |lambda| ordering, negative eigenvalue kept
  for (int i = 1; i < 4; ++i) CHECK(t[i] == Metric::isotropic(1.0));
}

TEST_CASE("target metric invariants and scale invariance") {
  const TetMesh m = box(6, 0.15, 5);
  const SpacingConfig cfg;
  std::vector<double> p(m.num_nodes());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec3& x = m.nodes[i];
    p[i] = std::tanh(8 * (x.x() - 0.4 - 0.3 * x.y())) + 0.2 * x.z() * x.z();
  }
  const MetricField t = target_metric_field(m, recover_hessian(m, p), cfg);
  for (const Metric& mi : t) {
    const MetricFrame f = decompose_metric(mi);
    CHECK(f.spacing[0] >= cfg.delta_min * (1 - 1e-12));
    CHECK(f.spacing[2] <= cfg.delta_max * (1 + 1e-12));
    CHECK(f.spacing[2] / f.spacing[0] <= cfg.stretch_cap * (1 + 1e-12));
  }
  std::vector<double> q = p;
  for (double& v : q) v *= 37.5;
  const MetricField u = target_metric_field(m, recover_hessian(m, q), cfg);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(relative_difference(t[i], u[i]) < 1e-10);
}

} // TEST_SUITE
