#include "surrogate.hpp"

#include "encoding.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace anisonet {

using nlohmann::json;

void DatasetMatrix::validate() const {
  const auto n = Eigen::Index(case_ids.size());
  if (inputs.cols() != n || outputs.cols() != n) throw InvalidArgument("dataset case counts do not match");
  if (inputs.rows() != Eigen::Index(parameters.size())) throw InvalidArgument("dataset parameter count mismatch");
  if (outputs.rows() % 9) throw InvalidArgument("dataset outputs are not 9 per node");
  for (const ParameterSpec& p : parameters)
    if (!(p.lo < p.hi)) throw InvalidArgument("parameter '" + p.name + "' has an empty range");
}

DatasetMatrix DatasetMatrix::subset(const std::vector<int>& cases) const {
  DatasetMatrix out;
  out.parameters = parameters;
  out.inputs.resize(inputs.rows(), Eigen::Index(cases.size()));
  out.outputs.resize(outputs.rows(), Eigen::Index(cases.size()));
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const int c = cases[k];
    if (c < 0 || std::size_t(c) >= num_cases()) throw InvalidArgument("case index out of range");
    out.case_ids.push_back(case_ids[c]);
    out.inputs.col(Eigen::Index(k)) = inputs.col(c);
    out.outputs.col(Eigen::Index(k)) = outputs.col(c);
  }
  return out;
}

DatasetMatrix DatasetMatrix::head(std::size_t n) const {
  if (n > num_cases()) throw InvalidArgument("dataset has fewer cases than requested");
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = int(i);
  return subset(idx);
}

DatasetMatrix read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  LineReader r(in, path.string());
  auto h = r.tokens();
  if (h.size() != 5 || h[0] != "dmatrix" || h[1] != "1")
    r.fail("expected header 'dmatrix 1 <rows> <n_in> <n_out>'");
  const std::size_t rows = r.to_count(h[2]), n_in = r.to_count(h[3]), n_out = r.to_count(h[4]);
  DatasetMatrix d;
  for (std::size_t p = 0; p < n_in; ++p) {
    auto t = r.tokens();
    if (t.size() != 4 || t[0] != "param") r.fail("expected 'param <name> <lo> <hi>'");
    d.parameters.push_back({t[1], r.to_double(t[2]), r.to_double(t[3])});
  }
  d.inputs.resize(Eigen::Index(n_in), Eigen::Index(rows));
  d.outputs.resize(Eigen::Index(n_out), Eigen::Index(rows));
  for (std::size_t c = 0; c < rows; ++c) {
    auto t = r.tokens();
    if (t.size() != 1 + n_in + n_out) r.fail("wrong number of values in case row");
    d.case_ids.push_back(t[0]);
    for (std::size_t k = 0; k < n_in; ++k) d.inputs(Eigen::Index(k), Eigen::Index(c)) = r.to_double(t[1 + k]);
    for (std::size_t k = 0; k < n_out; ++k)
      d.outputs(Eigen::Index(k), Eigen::Index(c)) = r.to_double(t[1 + n_in + k]);
  }
  r.expect_end();
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return d;
}

void write_dataset(const std::filesystem::path& path, const DatasetMatrix& d) {
  d.validate();
  std::ostringstream out;
  out << "dmatrix 1 " << d.num_cases() << ' ' << d.inputs.rows() << ' ' << d.outputs.rows() << '\n';
  for (const ParameterSpec& p : d.parameters) out << "param " << p.name << ' ' << fmt_real(p.lo) << ' ' << fmt_real(p.hi) << '\n';
  for (std::size_t c = 0; c < d.num_cases(); ++c) {
    out << d.case_ids[c];
    for (Eigen::Index k = 0; k < d.inputs.rows(); ++k) out << ' ' << fmt_real(d.inputs(k, Eigen::Index(c)));
    for (Eigen::Index k = 0; k < d.outputs.rows(); ++k) out << ' ' << fmt_real(d.outputs(k, Eigen::Index(c)));
    out << '\n';
  }
  write_text_file(path, out.str());
}

const std::vector<std::string>& output_group_names() {
  static const std::vector<std::string> names{"spacing", "v1", "v2", "v3"};
  return names;
}

std::vector<int> group_rows(std::size_t n_nodes, const std::vector<std::string>& groups) {
  std::vector<std::pair<int, int>> spans; // offset within the node, width
  for (const std::string& g : groups) {
    if (g == "spacing") spans.push_back({0, 3});
    else if (g == "v1") spans.push_back({3, 2});
    else if (g == "v2") spans.push_back({5, 2});
    else if (g == "v3") spans.push_back({7, 2});
    else throw InvalidArgument("unknown output group '" + g + "'");
  }
  std::vector<int> rows;
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (auto [off, w] : spans)
      for (int k = 0; k < w; ++k) rows.push_back(int(i) * 9 + off + k);
  return rows;
}

std::vector<NetworkPlan> variant_plan(int variant) {
  const NetworkPlan spacing{"spacing", LossKind::Mse, {"spacing"}};
  switch (variant) {
  case 1:
    return {spacing, {"v123", LossKind::Alignment, {"v1", "v2", "v3"}}};
  case 2:
    return {spacing, {"v12", LossKind::Alignment, {"v1", "v2"}}, {"v3", LossKind::Alignment, {"v3"}}};
  case 3:
    return {spacing,
            {"v1", LossKind::Alignment, {"v1"}},
            {"v2", LossKind::Alignment, {"v2"}},
            {"v3", LossKind::Alignment, {"v3"}}};
  default:
    throw InvalidArgument("model variant must be 1, 2 or 3");
  }
}

const char* spacing_scale_name(SpacingScale s) { return s == SpacingScale::Log2 ? "log2" : "linear"; }

SpacingScale parse_spacing_scale(const std::string& s) {
  if (s == "log2") return SpacingScale::Log2;
  if (s == "linear") return SpacingScale::Linear;
  throw InvalidArgument("spacing scale must be 'log2' or 'linear'");
}

double ColumnTransform::apply(double x) const {
  const double f = log2 ? std::log2(x) : x;
  return hi > lo ? (f - lo) / (hi - lo) : 0.0;
}

double ColumnTransform::invert(double t) const {
  const double f = hi > lo ? lo + t * (hi - lo) : lo;
  return log2 ? std::exp2(f) : f;
}

Matrix normalize_inputs(const std::vector<ParameterSpec>& params, const Matrix& raw) {
  if (raw.rows() != Eigen::Index(params.size())) throw InvalidArgument("parameter count mismatch");
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index p = 0; p < raw.rows(); ++p) {
    const ParameterSpec& s = params[p];
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      const double x = raw(p, c);
      if (!(x >= s.lo && x <= s.hi))
        throw InvalidArgument("parameter '" + s.name + "' = " + fmt_real(x) + " outside [" + fmt_real(s.lo) + ", " +
                              fmt_real(s.hi) + "]");
      out(p, c) = (x - s.lo) / (s.hi - s.lo);
    }
  }
  return out;
}

namespace {

bool is_spacing_row(int row) { return row % 9 < 3; }

std::vector<ColumnTransform> fit_transforms(const Matrix& outputs, const std::vector<int>& rows, SpacingScale scale) {
  std::vector<ColumnTransform> t(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!is_spacing_row(rows[k])) continue; // vectors stay raw: lo 0, hi 1
    t[k].log2 = scale == SpacingScale::Log2;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index c = 0; c < outputs.cols(); ++c) {
      const double x = outputs(rows[k], c);
      if (!(x > 0.0)) throw InvalidArgument("dataset spacing must be positive");
      const double f = t[k].log2 ? std::log2(x) : x;
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    t[k].lo = lo;
    t[k].hi = hi;
  }
  return t;
}

Matrix transformed_targets(const Matrix& outputs, const std::vector<int>& rows,
                           const std::vector<ColumnTransform>& t) {
  Matrix y(Eigen::Index(rows.size()), outputs.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (Eigen::Index c = 0; c < outputs.cols(); ++c) y(Eigen::Index(k), c) = t[k].apply(outputs(rows[k], c));
  return y;
}

Matrix network_outputs(const TrainedNetwork& net, const Matrix& normalized_inputs) {
  Matrix h = net.model.forward(normalized_inputs);
  for (Eigen::Index k = 0; k < h.rows(); ++k)
    for (Eigen::Index c = 0; c < h.cols(); ++c) h(k, c) = net.transforms[k].invert(h(k, c));
  return h;
}

} // namespace

TrainedNetwork train_network(const DatasetMatrix& data, const NetworkPlan& plan, HiddenSpec hidden,
                             const TrainConfig& cfg, SpacingScale scale) {
  data.validate();
  TrainedNetwork net;
  net.plan = plan;
  net.hidden = hidden;
  net.rows = group_rows(data.num_nodes(), plan.groups);
  net.transforms = fit_transforms(data.outputs, net.rows, scale);
  const Matrix x = normalize_inputs(data.parameters, data.inputs);
  const Matrix y = transformed_targets(data.outputs, net.rows, net.transforms);
  const auto shape = mlp_shape(int(x.rows()), hidden.layers, hidden.neurons, int(y.rows()));
  TrainResult r = train_restarts(shape, plan.loss, x, y, cfg);
  net.model = std::move(r.model);
  net.seed = r.seed;
  net.best_epoch = r.best_epoch;
  net.epochs_run = int(r.val_loss.size());
  net.val_loss = r.best_val_loss;
  return net;
}

SurrogateModel assemble_model(int variant, const DatasetMatrix& data, const SpacingConfig& spacing,
                              SpacingScale scale, std::vector<TrainedNetwork> networks) {
  SurrogateModel m;
  m.variant = variant;
  m.n_nodes = data.num_nodes();
  m.parameters = data.parameters;
  m.spacing = spacing;
  m.scale = scale;
  m.networks = std::move(networks);
  std::vector<int> covered(data.outputs.rows(), 0);
  for (const TrainedNetwork& n : m.networks)
    for (int r : n.rows) ++covered[r];
  if (!std::all_of(covered.begin(), covered.end(), [](int c) { return c == 1; }))
    throw InvalidArgument("networks must cover every output exactly once");
  return m;
}

SurrogateModel train_variant(int variant, const DatasetMatrix& data, HiddenSpec hidden, const TrainConfig& cfg,
                             const SpacingConfig& spacing, SpacingScale scale) {
  std::vector<TrainedNetwork> nets;
  for (const NetworkPlan& p : variant_plan(variant)) nets.push_back(train_network(data, p, hidden, cfg, scale));
  return assemble_model(variant, data, spacing, scale, std::move(nets));
}

Matrix SurrogateModel::predict(const Matrix& params) const {
  const Matrix x = normalize_inputs(parameters, params);
  Matrix out = Matrix::Zero(Eigen::Index(n_nodes * 9), params.cols());
  for (const TrainedNetwork& net : networks) {
    const Matrix h = network_outputs(net, x);
    for (std::size_t k = 0; k < net.rows.size(); ++k) out.row(net.rows[k]) = h.row(Eigen::Index(k));
  }
  return out;
}

double validation_mae(const TrainedNetwork& net, const DatasetMatrix& data, const TrainConfig& cfg) {
  const std::vector<int> val = validation_cases(int(data.num_cases()), cfg);
  const DatasetMatrix v = data.subset(val);
  const Matrix h = network_outputs(net, normalize_inputs(v.parameters, v.inputs));
  Matrix y(h.rows(), h.cols());
  for (std::size_t k = 0; k < net.rows.size(); ++k) y.row(Eigen::Index(k)) = v.outputs.row(net.rows[k]);
  return mae(y, h).mean;
}

std::string GridResult::to_text() const {
  std::ostringstream out;
  out << "network layers neurons val_loss val_mae\n";
  for (const GridCell& c : cells)
    out << c.network << ' ' << c.hidden.layers << ' ' << c.hidden.neurons << ' ' << fmt_real(c.val_loss) << ' '
        << fmt_real(c.val_mae) << '\n';
  for (const auto& [name, h] : best) out << "best " << name << ' ' << h.layers << ' ' << h.neurons << '\n';
  return out.str();
}

GridResult grid_search(int variant, const DatasetMatrix& data, const std::vector<int>& layer_counts,
                       const std::vector<int>& neuron_counts, const TrainConfig& cfg, const SpacingConfig& spacing,
                       SpacingScale scale) {
  if (layer_counts.empty() || neuron_counts.empty()) throw InvalidArgument("grid is empty");
  std::vector<HiddenSpec> specs;
  for (int l : layer_counts)
    for (int n : neuron_counts) specs.push_back({l, n});
  std::sort(specs.begin(), specs.end());
  specs.erase(std::unique(specs.begin(), specs.end()), specs.end());

  GridResult res;
  std::vector<TrainedNetwork> chosen;
  for (const NetworkPlan& plan : variant_plan(variant)) {
    double best_mae = std::numeric_limits<double>::infinity();
    TrainedNetwork best;
    for (const HiddenSpec& h : specs) {
      TrainedNetwork net = train_network(data, plan, h, cfg, scale);
      const double m = validation_mae(net, data, cfg);
      res.cells.push_back({plan.name, h, net.val_loss, m});
      if (m < best_mae) {
        best_mae = m;
        best = std::move(net);
      }
    }
    res.best[plan.name] = best.hidden;
    chosen.push_back(std::move(best));
  }
  res.model = assemble_model(variant, data, spacing, scale, std::move(chosen));
  return res;
}

namespace {

json params_json(const std::vector<ParameterSpec>& ps) {
  json a = json::array();
  for (const ParameterSpec& p : ps) a.push_back({{"name", p.name}, {"lo", p.lo}, {"hi", p.hi}});
  return a;
}

} // namespace

void save_model(const std::filesystem::path& path, const SurrogateModel& m) {
  json doc;
  doc["model"] = 1;
  doc["variant"] = m.variant;
  doc["n_nodes"] = m.n_nodes;
  doc["parameters"] = params_json(m.parameters);
  doc["spacing"] = {{"delta_min", m.spacing.delta_min},
                    {"delta_max", m.spacing.delta_max},
                    {"scale", m.spacing.scale},
                    {"stretch_cap", m.spacing.stretch_cap}};
  doc["spacing_scale"] = spacing_scale_name(m.scale);
  json nets = json::array();
  for (const TrainedNetwork& n : m.networks) {
    json j;
    j["name"] = n.plan.name;
    j["loss"] = loss_name(n.plan.loss);
    j["groups"] = n.plan.groups;
    j["hidden_layers"] = n.hidden.layers;
    j["neurons"] = n.hidden.neurons;
    j["layer_sizes"] = n.model.layer_sizes();
    j["hidden_activation"] = "sigmoid";
    j["output_activation"] = "linear";
    j["seed"] = n.seed;
    j["best_epoch"] = n.best_epoch;
    j["epochs_run"] = n.epochs_run;
    j["val_loss"] = n.val_loss;
    std::vector<int> log2;
    std::vector<double> lo, hi;
    for (const ColumnTransform& t : n.transforms) {
      log2.push_back(t.log2);
      lo.push_back(t.lo);
      hi.push_back(t.hi);
    }
    j["output_transform"] = {{"log2", log2}, {"lo", lo}, {"hi", hi}};
    json w = json::array(), b = json::array();
    for (int l = 0; l < n.model.num_layers(); ++l) {
      const auto W = n.model.weight(l);
      std::vector<double> rm;
      rm.reserve(std::size_t(W.size()));
      for (Eigen::Index r = 0; r < W.rows(); ++r)
        for (Eigen::Index c = 0; c < W.cols(); ++c) rm.push_back(W(r, c));
      w.push_back(rm);
      const auto B = n.model.bias(l);
      b.push_back(std::vector<double>(B.data(), B.data() + B.size()));
    }
    j["weights"] = std::move(w);
    j["biases"] = std::move(b);
    nets.push_back(std::move(j));
  }
  doc["networks"] = std::move(nets);
  write_text_file(path, doc.dump(1) + "\n");
}

SurrogateModel load_model(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    if (doc.at("model").get<int>() != 1) throw ParseError(path.string() + ": unsupported model version");
    SurrogateModel m;
    m.variant = doc.at("variant").get<int>();
    m.n_nodes = doc.at("n_nodes").get<std::size_t>();
    for (const json& p : doc.at("parameters"))
      m.parameters.push_back({p.at("name").get<std::string>(), p.at("lo").get<double>(), p.at("hi").get<double>()});
    const json& s = doc.at("spacing");
    m.spacing = {s.at("delta_min").get<double>(), s.at("delta_max").get<double>(), s.at("scale").get<double>(),
                 s.at("stretch_cap").get<double>()};
    m.spacing.validate();
    m.scale = parse_spacing_scale(doc.at("spacing_scale").get<std::string>());
    std::vector<int> covered(m.n_nodes * 9, 0);
    for (const json& j : doc.at("networks")) {
      TrainedNetwork n;
      n.plan.name = j.at("name").get<std::string>();
      n.plan.loss = parse_loss(j.at("loss").get<std::string>());
      n.plan.groups = j.at("groups").get<std::vector<std::string>>();
      n.hidden = {j.at("hidden_layers").get<int>(), j.at("neurons").get<int>()};
      n.seed = j.at("seed").get<std::uint64_t>();
      n.best_epoch = j.at("best_epoch").get<int>();
      n.epochs_run = j.at("epochs_run").get<int>();
      n.val_loss = j.at("val_loss").get<double>();
      if (j.at("hidden_activation") != "sigmoid" || j.at("output_activation") != "linear")
        throw ParseError(path.string() + ": unsupported activation");
      n.rows = group_rows(m.n_nodes, n.plan.groups);
      n.model = MlpModel(j.at("layer_sizes").get<std::vector<int>>());
      if (n.model.num_inputs() != int(m.parameters.size()) || n.model.num_outputs() != int(n.rows.size()))
        throw ParseError(path.string() + ": network '" + n.plan.name + "' has inconsistent layer sizes");
      const json& t = j.at("output_transform");
      const auto log2 = t.at("log2").get<std::vector<int>>();
      const auto lo = t.at("lo").get<std::vector<double>>();
      const auto hi = t.at("hi").get<std::vector<double>>();
      if (log2.size() != n.rows.size() || lo.size() != n.rows.size() || hi.size() != n.rows.size())
        throw ParseError(path.string() + ": output transform size mismatch");
      for (std::size_t k = 0; k < n.rows.size(); ++k) n.transforms.push_back({log2[k] != 0, lo[k], hi[k]});
      const json& w = j.at("weights");
      const json& b = j.at("biases");
      if (int(w.size()) != n.model.num_layers() || int(b.size()) != n.model.num_layers())
        throw ParseError(path.string() + ": layer count mismatch");
      for (int l = 0; l < n.model.num_layers(); ++l) {
        auto W = n.model.weight(l);
        const auto rm = w[l].get<std::vector<double>>();
        const auto bv = b[l].get<std::vector<double>>();
        if (Eigen::Index(rm.size()) != W.size() || Eigen::Index(bv.size()) != W.rows())
          throw ParseError(path.string() + ": weight array size mismatch");
        for (Eigen::Index r = 0; r < W.rows(); ++r)
          for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = rm[std::size_t(r * W.cols() + c)];
        n.model.bias(l) = Eigen::Map<const Vector>(bv.data(), Eigen::Index(bv.size()));
      }
      if (!n.model.params().allFinite()) throw ParseError(path.string() + ": non-finite parameters");
      for (int r : n.rows) ++covered[r];
      m.networks.push_back(std::move(n));
    }
    if (!std::all_of(covered.begin(), covered.end(), [](int c) { return c == 1; }))
      throw ParseError(path.string() + ": networks do not cover every output exactly once");
    return m;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

} // namespace anisonet
