#pragma once

#include "mesh.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace anisonet {

/// Symmetric 3x3 metric tensor stored by its six independent components
/// (m11, m12, m13, m22, m23, m33), units 1/length^2.
struct Metric {
  std::array<double, 6> c{};

  Mat3 matrix() const;
  /// Symmetric part of `m`.
  static Metric from_matrix(const Mat3& m);
  static Metric isotropic(double spacing);

  bool operator==(const Metric&) const = default;
};

using MetricField = std::vector<Metric>;

/// Orthonormal directions with the spacing requested along each one.
/// Frames returned by `decompose_metric` are canonical: spacings ascending,
/// each axis has its largest-magnitude component positive (ties in magnitude
/// go to the lower coordinate index), and axes[2] = axes[0] x axes[1].
struct MetricFrame {
  std::array<Vec3, 3> axes;
  std::array<double, 3> spacing{};
};

/// Eigen-decomposition of a symmetric matrix; eigenvalues sorted descending,
/// eigenvectors in the matching columns.
struct SymEigen {
  Vec3 values;
  Mat3 vectors;
};

/// Cyclic Jacobi iteration, converged to off-diagonal norm below 1e-13 times
/// the Frobenius norm of `a`.
SymEigen eigen_sym(const Mat3& a);

/// A^p for symmetric positive-definite A via its spectral decomposition.
/// Throws NumericError when A is not positive definite.
Mat3 spd_power(const Mat3& a, double p);

double smallest_eigenvalue(const Mat3& a);

/// M = R diag(1/d^2) R^T. Throws InvalidArgument for a non-orthonormal frame
/// or a non-positive spacing. Spacings need not be ordered.
Metric metric_from_frame(const MetricFrame& frame);

/// Inverse of `metric_from_frame`, canonicalized (see MetricFrame). Within a
/// cluster of eigenvalues whose relative gap is below 1e-8 the basis is the
/// one closest to the global axes, picked by sequential projection.
MetricFrame decompose_metric(const Metric& m);

/// ((1-t) M1^{-1/2} + t M2^{-1/2})^{-2}, t in [0, 1]. Exact at the endpoints.
Metric interpolate_pair(const Metric& m1, const Metric& m2, double t);

/// Metric at a point inside a tet from its four vertex metrics, by the
/// three-stage cascade: edge x3-x1, then face point x123 from x2, then x
/// from x4. Barycentric coordinates follow the tet's vertex order.
Metric interpolate_in_tet(const std::array<Metric, 4>& m, const Bary& bary);

/// Simultaneous-reduction intersection. The result requests a spacing no
/// larger than either input along every direction.
Metric intersect_pair(const Metric& m1, const Metric& m2);

/// Spacing requested by `m` along the unit vector u: (u^T M u)^{-1/2}.
double spacing_along(const Metric& m, const Vec3& u);

double frobenius_norm(const Metric& m);
double relative_difference(const Metric& a, const Metric& b);

MetricField read_mfield(const std::filesystem::path& path);
void write_mfield(const std::filesystem::path& path, const MetricField& field);

} // namespace anisonet
