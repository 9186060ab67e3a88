#pragma once

#include "ann.hpp"
#include "hessian.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace anisonet {

struct ParameterSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

/// Training cases: raw parameters (n_params x n_cases) and physical encoded
/// targets (9 * n_nodes x n_cases, row node * 9 + k with k over
/// d1 d2 d3 v1x v1y v2x v2y v3x v3y).
struct DatasetMatrix {
  std::vector<std::string> case_ids;
  std::vector<ParameterSpec> parameters;
  Matrix inputs;
  Matrix outputs;

  std::size_t num_cases() const { return case_ids.size(); }
  std::size_t num_nodes() const { return std::size_t(outputs.rows()) / 9; }
  void validate() const;
  DatasetMatrix subset(const std::vector<int>& cases) const;
  /// First n cases.
  DatasetMatrix head(std::size_t n) const;
};

DatasetMatrix read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const DatasetMatrix& data);

/// Output groups of the encoding: "spacing" (3 per node, MSE) and "v1",
/// "v2", "v3" (one 2-vector per node, alignment loss).
const std::vector<std::string>& output_group_names();
/// Rows of the dataset output covered by the listed groups, node-major.
std::vector<int> group_rows(std::size_t n_nodes, const std::vector<std::string>& groups);

struct NetworkPlan {
  std::string name;
  LossKind loss = LossKind::Mse;
  std::vector<std::string> groups;
};

/// Constituent networks of model variant 1, 2 or 3.
std::vector<NetworkPlan> variant_plan(int variant);

enum class SpacingScale { Log2, Linear };
const char* spacing_scale_name(SpacingScale s);
SpacingScale parse_spacing_scale(const std::string& s);

/// Per output row: optional log2, then min-max over the training cases. A
/// constant row maps to 0.
struct ColumnTransform {
  bool log2 = false;
  double lo = 0.0;
  double hi = 1.0;

  double apply(double x) const;
  double invert(double t) const;
};

struct HiddenSpec {
  int layers = 2;
  int neurons = 10;
  auto operator<=>(const HiddenSpec&) const = default;
};

struct TrainedNetwork {
  NetworkPlan plan;
  HiddenSpec hidden;
  std::vector<int> rows;
  std::vector<ColumnTransform> transforms;
  MlpModel model;
  std::uint64_t seed = 0;
  int best_epoch = -1;
  int epochs_run = 0;
  double val_loss = 0.0;
};

/// One trained model variant: parameter ranges, spacing bounds applied on
/// prediction, and the networks that together cover every output row.
struct SurrogateModel {
  int variant = 1;
  std::size_t n_nodes = 0;
  std::vector<ParameterSpec> parameters;
  SpacingConfig spacing;
  SpacingScale scale = SpacingScale::Log2;
  std::vector<TrainedNetwork> networks;

  /// Physical outputs for raw parameters (one case per column). Throws
  /// InvalidArgument for parameters outside their ranges.
  Matrix predict(const Matrix& params) const;
};

void save_model(const std::filesystem::path& path, const SurrogateModel& model);
SurrogateModel load_model(const std::filesystem::path& path);

/// Parameters scaled to [0, 1] over their declared ranges.
Matrix normalize_inputs(const std::vector<ParameterSpec>& params, const Matrix& raw);

/// Best of cfg.n_seeds restarts for one network.
TrainedNetwork train_network(const DatasetMatrix& data, const NetworkPlan& plan, HiddenSpec hidden,
                             const TrainConfig& cfg, SpacingScale scale);

SurrogateModel assemble_model(int variant, const DatasetMatrix& data, const SpacingConfig& spacing,
                              SpacingScale scale, std::vector<TrainedNetwork> networks);

/// Every network of the variant with the same hidden layout.
SurrogateModel train_variant(int variant, const DatasetMatrix& data, HiddenSpec hidden, const TrainConfig& cfg,
                             const SpacingConfig& spacing, SpacingScale scale);

/// MAE of a network on the validation cases, in physical units.
double validation_mae(const TrainedNetwork& net, const DatasetMatrix& data, const TrainConfig& cfg);

struct GridCell {
  std::string network;
  HiddenSpec hidden;
  double val_loss = 0.0;
  double val_mae = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::map<std::string, HiddenSpec> best; // per network
  SurrogateModel model;                   // best cell of every network

  std::string to_text() const;
};

/// Trains every network of the variant on each (layers, neurons) cell and
/// keeps, per network, the cell with the lowest validation MAE; ties go to
/// fewer layers, then fewer neurons.
GridResult grid_search(int variant, const DatasetMatrix& data, const std::vector<int>& layer_counts,
                       const std::vector<int>& neuron_counts, const TrainConfig& cfg, const SpacingConfig& spacing,
                       SpacingScale scale);

} // namespace anisonet
