#include "hessian.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace anisonet {

void SpacingConfig::validate() const {
  if (!(delta_min > 0.0 && delta_min < delta_max && std::isfinite(delta_max)))
    throw InvalidArgument("spacing config needs 0 < delta_min < delta_max");
  if (!(scale > 0.0 && scale <= 1.0)) throw InvalidArgument("spacing scale S must lie in (0, 1]");
  if (!(stretch_cap >= 1.0 && std::isfinite(stretch_cap))) throw InvalidArgument("stretch cap must be >= 1");
}

GradientRecovery::GradientRecovery(const TetMesh& mesh)
    : mesh_(&mesh), shape_grads_(mesh.num_tets()), volume_(mesh.num_tets()), weight_(mesh.num_nodes(), 0.0) {
  const double diam = mesh_diameter(mesh);
  const double min_volume = 1e-14 * diam * diam * diam;
  h_min_ = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.num_tets(); ++t) {
    const Tet& tet = mesh.tets[t];
    const Vec3& x0 = mesh.nodes[tet[0]];
    Mat3 j;
    for (int k = 0; k < 3; ++k) j.col(k) = mesh.nodes[tet[k + 1]] - x0;
    const double vol = j.determinant() / 6.0;
    if (!(std::abs(vol) > min_volume)) throw TopologyError("degenerate tet " + std::to_string(t) + " in gradient recovery");
    const Mat3 inv = j.inverse();
    auto& g = shape_grads_[t];
    for (int k = 0; k < 3; ++k) g[k + 1] = inv.row(k).transpose();
    g[0] = -(g[1] + g[2] + g[3]);
    volume_[t] = std::abs(vol);
    for (int v : tet) weight_[v] += volume_[t];
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) h_min_ = std::min(h_min_, (mesh.nodes[tet[a]] - mesh.nodes[tet[b]]).norm());
  }
}

GradientField GradientRecovery::gradient(std::span<const double> field) const {
  if (field.size() != weight_.size()) throw InvalidArgument("field length does not match mesh node count");
  GradientField grad(weight_.size(), Vec3::Zero());
  for (std::size_t t = 0; t < shape_grads_.size(); ++t) {
    const Tet& tet = mesh_->tets[t];
    Vec3 g = Vec3::Zero();
    for (int k = 0; k < 4; ++k) g += field[tet[k]] * shape_grads_[t][k];
    for (int v : tet) grad[v] += volume_[t] * g;
  }
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (weight_[i] > 0.0) grad[i] /= weight_[i];
  return grad;
}

HessianField GradientRecovery::hessian(std::span<const double> field) const {
  const GradientField grad = gradient(field);
  const std::size_t n = grad.size();
  HessianField hess(n, Mat3::Zero());
  std::vector<double> component(n);
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < n; ++i) component[i] = grad[i][k];
    const GradientField row = gradient(component);
    for (std::size_t i = 0; i < n; ++i) hess[i].row(k) = row[i].transpose();
  }
  double g_max = 0.0;
  for (const Vec3& g : grad) g_max = std::max(g_max, g.norm());
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * g_max / h_min_;
  for (Mat3& h : hess) {
    h = (0.5 * (h + h.transpose())).eval();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        if (std::abs(h(r, c)) <= floor) h(r, c) = 0.0;
  }
  return hess;
}

GradientField recover_gradient(const TetMesh& mesh, std::span<const double> field) {
  return GradientRecovery(mesh).gradient(field);
}

HessianField recover_hessian(const TetMesh& mesh, std::span<const double> field) {
  return GradientRecovery(mesh).hessian(field);
}

double spacing_from_eigenvalue(double abs_lambda, double k, const SpacingConfig& cfg) {
  if (abs_lambda > k / (cfg.delta_min * cfg.delta_min)) return cfg.delta_min;
  if (abs_lambda < k / (cfg.delta_max * cfg.delta_max)) return cfg.delta_max;
  return std::sqrt(k / abs_lambda);
}

MetricFrame clamp_frame(MetricFrame frame, const SpacingConfig& cfg) {
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frame.spacing[a] < frame.spacing[b]; });
  MetricFrame out;
  for (int k = 0; k < 3; ++k) {
    out.axes[k] = frame.axes[order[k]];
    out.spacing[k] = std::clamp(frame.spacing[order[k]], cfg.delta_min, cfg.delta_max);
  }
  const double cap = cfg.stretch_cap * out.spacing[0];
  out.spacing[1] = std::min(out.spacing[1], cap);
  out.spacing[2] = std::min(out.spacing[2], cap);
  return out;
}

MetricField target_metric_field(const TetMesh& mesh, const HessianField& hessians, const SpacingConfig& cfg,
                                TargetSummary* summary) {
  cfg.validate();
  if (hessians.size() != mesh.num_nodes()) throw InvalidArgument("Hessian field length does not match mesh");
  std::vector<SymEigen> eig;
  eig.reserve(hessians.size());
  double lambda_max = 0.0;
  for (const Mat3& h : hessians) {
    if (!h.allFinite()) throw NumericError("non-finite Hessian");
    eig.push_back(eigen_sym(h));
    for (int j = 0; j < 3; ++j) lambda_max = std::max(lambda_max, std::abs(eig.back().values[j]));
  }
  const double k = cfg.scale * cfg.scale * cfg.delta_min * cfg.delta_min * lambda_max;
  if (summary) *summary = {lambda_max, k};

  MetricField out;
  out.reserve(hessians.size());
  if (!(lambda_max > 0.0)) {
    out.assign(hessians.size(), Metric::isotropic(cfg.delta_max));
    return out;
  }
  for (const SymEigen& e : eig) {
    MetricFrame f;
    for (int j = 0; j < 3; ++j) {
      f.axes[j] = e.vectors.col(j);
      f.spacing[j] = spacing_from_eigenvalue(std::abs(e.values[j]), k, cfg);
    }
    out.push_back(metric_from_frame(clamp_frame(f, cfg)));
  }
  return out;
}

} // namespace anisonet
