#pragma once

#include "mesh.hpp"
#include "metric.hpp"

#include <span>
#include <vector>

namespace anisonet {

/// Spacing bounds and refinement scaling for Hessian-based targets.
struct SpacingConfig {
  double delta_min = 0.01;
  double delta_max = 0.1;
  double scale = 0.2;       // S in (0, 1]
  double stretch_cap = 5.0; // largest allowed d3/d1

  /// Throws InvalidArgument when the invariants do not hold.
  void validate() const;
};

using GradientField = std::vector<Vec3>;
using HessianField = std::vector<Mat3>; // symmetric

/// Vertex-centred recovery: the nodal gradient is the volume-weighted mean of
/// the constant gradients of the piecewise-linear interpolant over the
/// node's patch. Per-tet operators are computed once and reused.
class GradientRecovery {
public:
  explicit GradientRecovery(const TetMesh& mesh);

  GradientField gradient(std::span<const double> field) const;
  /// Gradient of the gradient, symmetrized. Entries below the round-off
  /// floor 1e3*eps*max|grad p|/h_min are set to zero, so linear fields give
  /// an exactly zero Hessian.
  HessianField hessian(std::span<const double> field) const;

  std::size_t num_nodes() const { return weight_.size(); }

private:
  const TetMesh* mesh_;
  std::vector<std::array<Vec3, 4>> shape_grads_;
  std::vector<double> volume_;
  std::vector<double> weight_; // patch volume per node
  double h_min_ = 0.0;
};

GradientField recover_gradient(const TetMesh& mesh, std::span<const double> field);
HessianField recover_hessian(const TetMesh& mesh, std::span<const double> field);

/// Spacing for one Hessian eigenvalue magnitude given the refinement constant K.
double spacing_from_eigenvalue(double abs_lambda, double k, const SpacingConfig& cfg);

/// Sorts spacings ascending with their axes, clamps to [delta_min, delta_max]
/// and shrinks d2, d3 to at most stretch_cap * d1.
MetricFrame clamp_frame(MetricFrame frame, const SpacingConfig& cfg);

struct TargetSummary {
  double lambda_max = 0.0; // largest |eigenvalue| over all nodes
  double k = 0.0;          // S^2 delta_min^2 lambda_max
};

/// Per-node metric from the Hessian eigen-decomposition using |lambda|, the
/// global lambda_max, the clamping rule and the stretch cap. A zero Hessian
/// field yields the isotropic delta_max metric everywhere.
MetricField target_metric_field(const TetMesh& mesh, const HessianField& hessians, const SpacingConfig& cfg,
                                TargetSummary* summary = nullptr);

} // namespace anisonet
