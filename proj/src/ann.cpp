#include "ann.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace anisonet {

const char* loss_name(LossKind kind) { return kind == LossKind::Mse ? "mse" : "alignment"; }

LossKind parse_loss(const std::string& name) {
  if (name == "mse") return LossKind::Mse;
  if (name == "alignment") return LossKind::Alignment;
  throw InvalidArgument("unknown loss kind '" + name + "'");
}

MlpModel::MlpModel(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) { layout(); }

void MlpModel::layout() {
  if (sizes_.size() < 2) throw InvalidArgument("a network needs an input and an output layer");
  for (int s : sizes_)
    if (s <= 0) throw InvalidArgument("layer sizes must be positive");
  offset_.clear();
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offset_.push_back(n);
    n += Eigen::Index(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = Vector::Zero(n);
}

MlpModel MlpModel::glorot(std::vector<int> layer_sizes, std::uint64_t seed) {
  MlpModel m(std::move(layer_sizes));
  std::mt19937_64 rng(seed);
  for (int l = 0; l < m.num_layers(); ++l) {
    const double r = std::sqrt(6.0 / (m.sizes_[l] + m.sizes_[l + 1]));
    std::uniform_real_distribution<double> dist(-r, r);
    auto w = m.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
  }
  return m;
}

Eigen::Map<Matrix> MlpModel::weight(int l) {
  return {params_.data() + offset_[l], sizes_[l + 1], sizes_[l]};
}
Eigen::Map<const Matrix> MlpModel::weight(int l) const {
  return {params_.data() + offset_[l], sizes_[l + 1], sizes_[l]};
}
Eigen::Map<Vector> MlpModel::bias(int l) {
  return {params_.data() + offset_[l] + Eigen::Index(sizes_[l + 1]) * sizes_[l], sizes_[l + 1]};
}
Eigen::Map<const Vector> MlpModel::bias(int l) const {
  return {params_.data() + offset_[l] + Eigen::Index(sizes_[l + 1]) * sizes_[l], sizes_[l + 1]};
}

namespace {

void sigmoid_inplace(Matrix& a) { a = (1.0 + (-a.array()).exp()).inverse().matrix(); }

// Activations of every layer; z[0] is the input.
void forward_all(const MlpModel& m, const Matrix& x, std::vector<Matrix>& z) {
  if (x.rows() != m.num_inputs()) throw InvalidArgument("input size does not match the network");
  const int L = m.num_layers();
  z.resize(L + 1);
  z[0] = x;
  for (int l = 0; l < L; ++l) {
    z[l + 1].noalias() = m.weight(l) * z[l];
    z[l + 1].colwise() += m.bias(l);
    if (l + 1 < L) sigmoid_inplace(z[l + 1]);
  }
}

void check_shapes(const Matrix& y, const Matrix& h) {
  if (y.rows() != h.rows() || y.cols() != h.cols()) throw InvalidArgument("target and prediction shapes differ");
  if (y.size() == 0) throw InvalidArgument("empty target matrix");
}

// Loss and dL/dh.
double loss_and_seed(LossKind kind, const Matrix& y, const Matrix& h, Matrix* d) {
  check_shapes(y, h);
  if (kind == LossKind::Mse) {
    const double n = double(y.size());
    if (d) *d = (2.0 / n) * (h - y);
    return (h - y).squaredNorm() / n;
  }
  if (y.rows() % 2) throw InvalidArgument("alignment loss needs an even number of outputs");
  const Eigen::Index groups = y.rows() / 2;
  const double n = double(groups * y.cols());
  if (d) d->resize(y.rows(), y.cols());
  double sum = 0.0;
  for (Eigen::Index c = 0; c < y.cols(); ++c)
    for (Eigen::Index g = 0; g < groups; ++g) {
      const Eigen::Index r = 2 * g;
      const double res = 1.0 - (y(r, c) * h(r, c) + y(r + 1, c) * h(r + 1, c));
      sum += res * res;
      if (d) {
        (*d)(r, c) = -2.0 * res * y(r, c) / n;
        (*d)(r + 1, c) = -2.0 * res * y(r + 1, c) / n;
      }
    }
  return sum / n;
}

} // namespace

Vector MlpModel::forward(const Vector& x) const { return forward(Matrix(x)).col(0); }

Matrix MlpModel::forward(const Matrix& x) const {
  std::vector<Matrix> z;
  forward_all(*this, x, z);
  return std::move(z.back());
}

double loss_mse(const Matrix& targets, const Matrix& predictions) {
  return loss_and_seed(LossKind::Mse, targets, predictions, nullptr);
}

double loss_alignment(const Matrix& targets, const Matrix& predictions) {
  return loss_and_seed(LossKind::Alignment, targets, predictions, nullptr);
}

double loss_value(LossKind kind, const Matrix& targets, const Matrix& predictions) {
  return loss_and_seed(kind, targets, predictions, nullptr);
}

namespace {

// Buffers reused across minibatches.
struct Workspace {
  std::vector<Matrix> z;
  Matrix delta, back;
  MlpModel grad;
};

double backprop_into(const MlpModel& model, const Matrix& inputs, const Matrix& targets, LossKind kind,
                     Workspace& ws) {
  forward_all(model, inputs, ws.z);
  const double loss = loss_and_seed(kind, targets, ws.z.back(), &ws.delta);
  if (ws.grad.layer_sizes() != model.layer_sizes()) ws.grad = MlpModel(model.layer_sizes());
  for (int l = model.num_layers() - 1; l >= 0; --l) {
    ws.grad.weight(l).noalias() = ws.delta * ws.z[l].transpose();
    ws.grad.bias(l) = ws.delta.rowwise().sum();
    if (l > 0) {
      ws.back.noalias() = model.weight(l).transpose() * ws.delta;
      ws.delta = ws.back.array() * ws.z[l].array() * (1.0 - ws.z[l].array());
    }
  }
  return loss;
}

} // namespace

double backprop(const MlpModel& model, const Matrix& inputs, const Matrix& targets, LossKind kind, Vector& grad) {
  Workspace ws;
  const double loss = backprop_into(model, inputs, targets, kind, ws);
  grad = std::move(ws.grad.params());
  return loss;
}

void adam_step(Vector& params, const Vector& grad, AdamState& s, const AdamConfig& cfg) {
  if (grad.size() != params.size()) throw InvalidArgument("gradient size does not match the parameters");
  if (s.m.size() != params.size()) {
    s.m = Vector::Zero(params.size());
    s.v = Vector::Zero(params.size());
  }
  ++s.step;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, double(s.step));
  const double c2 = 1.0 - std::pow(b2, double(s.step));
  const double lr = cfg.step / c1, inv_c2 = 1.0 / c2;
  double* p = params.data();
  double* m = s.m.data();
  double* v = s.v.data();
  const double* g = grad.data();
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= lr * m[i] / (std::sqrt(v[i] * inv_c2) + cfg.epsilon);
  }
}

void TrainConfig::validate() const {
  if (max_epochs <= 0 || patience <= 0 || batch_size <= 0 || n_seeds <= 0)
    throw InvalidArgument("epochs, patience, batch size and seed count must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
    throw InvalidArgument("validation fraction must lie in (0, 0.5]");
  if (!(adam.step > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0))
    throw InvalidArgument("invalid ADAM parameters");
}

std::vector<int> validation_cases(int n_cases, const TrainConfig& cfg) {
  const int n_val = std::max(1, int(std::lround(cfg.validation_fraction * n_cases)));
  if (n_val >= n_cases) throw InvalidArgument("too few cases to hold out a validation set");
  std::vector<int> order(n_cases);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(n_val);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

Matrix gather(const Matrix& m, const std::vector<int>& cols, std::size_t begin, std::size_t end) {
  Matrix out(m.rows(), Eigen::Index(end - begin));
  for (std::size_t k = begin; k < end; ++k) out.col(Eigen::Index(k - begin)) = m.col(cols[k]);
  return out;
}

} // namespace

TrainResult train(const std::vector<int>& layer_sizes, LossKind kind, const Matrix& inputs, const Matrix& targets,
                  const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (inputs.cols() != targets.cols()) throw InvalidArgument("input and target case counts differ");
  if (inputs.rows() != layer_sizes.front() || targets.rows() != layer_sizes.back())
    throw InvalidArgument("data does not match the layer sizes");
  const int n = int(inputs.cols());
  const std::vector<int> val = validation_cases(n, cfg);
  std::vector<int> tr;
  for (int i = 0, k = 0; i < n; ++i) {
    if (k < int(val.size()) && val[k] == i) {
      ++k;
      continue;
    }
    tr.push_back(i);
  }
  const Matrix xv = gather(inputs, val, 0, val.size());
  const Matrix yv = gather(targets, val, 0, val.size());

  TrainResult res;
  res.seed = seed;
  res.model = MlpModel::glorot(layer_sizes, seed);
  MlpModel& model = res.model;
  Vector best = model.params();
  res.best_val_loss = std::numeric_limits<double>::infinity();
  AdamState state(model.params().size());
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Workspace ws;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(tr.begin(), tr.end(), rng);
    double sum = 0.0;
    for (std::size_t b = 0; b < tr.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(tr.size(), b + std::size_t(cfg.batch_size));
      const double l = backprop_into(model, gather(inputs, tr, b, e), gather(targets, tr, b, e), kind, ws);
      if (!std::isfinite(l))
        throw TrainingDiverged("training loss became non-finite at epoch " + std::to_string(epoch) + " (seed " +
                               std::to_string(seed) + ")");
      sum += l * double(e - b);
      adam_step(model.params(), ws.grad.params(), state, cfg.adam);
    }
    res.train_loss.push_back(sum / double(tr.size()));
    const double vl = loss_value(kind, yv, model.forward(xv));
    if (!std::isfinite(vl))
      throw TrainingDiverged("validation loss became non-finite at epoch " + std::to_string(epoch) + " (seed " +
                             std::to_string(seed) + ")");
    res.val_loss.push_back(vl);
    if (vl < res.best_val_loss) {
      res.best_val_loss = vl;
      res.best_epoch = epoch;
      best = model.params();
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
  }
  model.params() = best;
  return res;
}

TrainResult train_restarts(const std::vector<int>& layer_sizes, LossKind kind, const Matrix& inputs,
                           const Matrix& targets, const TrainConfig& cfg, std::uint64_t base_seed) {
  cfg.validate();
  TrainResult best;
  for (int s = 0; s < cfg.n_seeds; ++s) {
    TrainResult r = train(layer_sizes, kind, inputs, targets, cfg, base_seed + std::uint64_t(s));
    if (s == 0 || r.best_val_loss < best.best_val_loss) best = std::move(r);
  }
  return best;
}

std::vector<int> mlp_shape(int n_inputs, int hidden_layers, int neurons, int n_outputs) {
  if (hidden_layers < 0 || (hidden_layers > 0 && neurons <= 0)) throw InvalidArgument("invalid hidden layer spec");
  std::vector<int> s{n_inputs};
  for (int l = 0; l < hidden_layers; ++l) s.push_back(neurons);
  s.push_back(n_outputs);
  return s;
}

} // namespace anisonet
