#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace anisonet {

// Matrices in this module hold one case per column: inputs are
// n_inputs x n_cases, targets and predictions n_outputs x n_cases.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class LossKind { Mse, Alignment };

const char* loss_name(LossKind kind);
LossKind parse_loss(const std::string& name);

/// Fully connected network: sigmoid hidden layers, linear output. All
/// parameters live in one flat vector, per layer the weight matrix
/// (n_out x n_in, column-major) followed by the bias.
class MlpModel {
public:
  MlpModel() = default;
  /// All parameters zero.
  explicit MlpModel(std::vector<int> layer_sizes);

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) per weight, zero biases.
  static MlpModel glorot(std::vector<int> layer_sizes, std::uint64_t seed);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int num_inputs() const { return sizes_.front(); }
  int num_outputs() const { return sizes_.back(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<Vector> bias(int layer);
  Eigen::Map<const Vector> bias(int layer) const;

  Vector forward(const Vector& x) const;
  Matrix forward(const Matrix& x) const;

private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offset_; // start of each layer's weights
  Vector params_;

  void layout();
};

/// Mean squared error over all entries.
double loss_mse(const Matrix& targets, const Matrix& predictions);
/// Mean over 2-vectors (consecutive output rows) of (1 - y.h)^2.
double loss_alignment(const Matrix& targets, const Matrix& predictions);
double loss_value(LossKind kind, const Matrix& targets, const Matrix& predictions);

/// Loss and its gradient with respect to model.params().
double backprop(const MlpModel& model, const Matrix& inputs, const Matrix& targets, LossKind kind, Vector& grad);

struct AdamConfig {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;

  explicit AdamState(Eigen::Index n = 0) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

/// One bias-corrected ADAM update; increments state.step.
void adam_step(Vector& params, const Vector& grad, AdamState& state, const AdamConfig& cfg);

struct TrainConfig {
  int max_epochs = 5000;
  int patience = 100;
  int batch_size = 8;
  int n_seeds = 5;
  AdamConfig adam;
  double validation_fraction = 0.2;
  /// Drives the train/validation split, which is shared by all restarts.
  std::uint64_t split_seed = 0;

  void validate() const;
};

/// Validation cases: round(fraction * n), at least one, chosen by split_seed.
/// Returned ascending.
std::vector<int> validation_cases(int n_cases, const TrainConfig& cfg);

struct TrainResult {
  MlpModel model; // parameters at the best validation epoch
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1; // 0-based
  double best_val_loss = 0.0;
  std::uint64_t seed = 0;
};

/// Minibatch ADAM with early stopping on the validation loss. Inputs and
/// targets are already normalized. Throws TrainingDiverged on a non-finite loss.
TrainResult train(const std::vector<int>& layer_sizes, LossKind kind, const Matrix& inputs, const Matrix& targets,
                  const TrainConfig& cfg, std::uint64_t seed);

/// n_seeds restarts with seeds base_seed, base_seed + 1, ...; keeps the
/// lowest validation loss, earlier seed on ties.
TrainResult train_restarts(const std::vector<int>& layer_sizes, LossKind kind, const Matrix& inputs,
                           const Matrix& targets, const TrainConfig& cfg, std::uint64_t base_seed = 0);

/// Layer sizes for `hidden_layers` hidden layers of `neurons` each.
std::vector<int> mlp_shape(int n_inputs, int hidden_layers, int neurons, int n_outputs);

} // namespace anisonet
