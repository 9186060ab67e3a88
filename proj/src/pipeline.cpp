#include "pipeline.hpp"

#include "error.hpp"
#include "evaluation.hpp"
#include "morph.hpp"
#include "sampling.hpp"
#include "text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

namespace anisonet {

using nlohmann::json;

void SyntheticConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("synthetic sigma must be positive");
  if (!(x0_lo <= x0_hi) || !(c_lo <= c_hi)) throw InvalidArgument("synthetic ranges must be ordered");
}

std::vector<double> synthetic_field(const TetMesh& mesh, double a, double b, const SyntheticConfig& cfg) {
  cfg.validate();
  if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) throw InvalidArgument("synthetic parameters must lie in [0, 1]");
  const double x0 = cfg.x0_lo + a * (cfg.x0_hi - cfg.x0_lo);
  const double c = cfg.c_lo + b * (cfg.c_hi - cfg.c_lo);
  std::vector<double> p(mesh.num_nodes());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec3& x = mesh.nodes[i];
    p[i] = std::tanh(cfg.sigma * (x.x() - x0 - c * x.y()));
  }
  return p;
}

namespace {

json spacing_json(const SpacingConfig& s) {
  return {{"delta_min", s.delta_min}, {"delta_max", s.delta_max}, {"scale", s.scale}, {"stretch_cap", s.stretch_cap}};
}

SpacingConfig spacing_from(const json& j, SpacingConfig s = {}) {
  s.delta_min = j.value("delta_min", s.delta_min);
  s.delta_max = j.value("delta_max", s.delta_max);
  s.scale = j.value("scale", s.scale);
  s.stretch_cap = j.value("stretch_cap", s.stretch_cap);
  s.validate();
  return s;
}

json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// Rethrows the active exception with `context` prepended, keeping its type.
[[noreturn]] void rethrow_with(const std::string& context) {
  try {
    throw;
  } catch (const IoError& e) {
    throw IoError(context + e.what());
  } catch (const ParseError& e) {
    throw ParseError(context + e.what());
  } catch (const TopologyError& e) {
    throw TopologyError(context + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(context + e.what());
  } catch (const NumericError& e) {
    throw NumericError(context + e.what());
  } catch (const TrainingDiverged& e) {
    throw TrainingDiverged(context + e.what());
  } catch (const json::exception& e) {
    throw ParseError(context + e.what());
  }
}

} // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  const json doc = parse_json_file(path);
  try {
    if (doc.at("config").get<int>() != 1) throw ParseError(path.string() + ": unsupported config version");
    PipelineConfig c;
    if (doc.contains("spacing")) c.spacing = spacing_from(doc["spacing"]);
    if (doc.contains("train")) {
      const json& t = doc["train"];
      c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
      c.train.patience = t.value("patience", c.train.patience);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.n_seeds = t.value("seeds", c.train.n_seeds);
      c.train.validation_fraction = t.value("validation_fraction", c.train.validation_fraction);
      c.train.split_seed = t.value("split_seed", c.train.split_seed);
      if (t.contains("adam")) {
        const json& a = t["adam"];
        c.train.adam.step = a.value("step", c.train.adam.step);
        c.train.adam.beta1 = a.value("beta1", c.train.adam.beta1);
        c.train.adam.beta2 = a.value("beta2", c.train.adam.beta2);
        c.train.adam.epsilon = a.value("epsilon", c.train.adam.epsilon);
      }
      c.scale = parse_spacing_scale(t.value("spacing_scale", std::string(spacing_scale_name(c.scale))));
      c.train.validate();
    }
    if (doc.contains("grid")) {
      c.grid_layers = doc["grid"].value("layers", c.grid_layers);
      c.grid_neurons = doc["grid"].value("neurons", c.grid_neurons);
    }
    if (doc.contains("synthetic")) {
      const json& s = doc["synthetic"];
      c.synthetic.sigma = s.value("sigma", c.synthetic.sigma);
      if (s.contains("x0")) {
        c.synthetic.x0_lo = s["x0"].at(0).get<double>();
        c.synthetic.x0_hi = s["x0"].at(1).get<double>();
      }
      if (s.contains("c")) {
        c.synthetic.c_lo = s["c"].at(0).get<double>();
        c.synthetic.c_hi = s["c"].at(1).get<double>();
      }
      c.synthetic.validate();
    }
    return c;
  } catch (...) {
    rethrow_with(path.string() + ": ");
  }
}

void PipelineConfig::save(const std::filesystem::path& path) const {
  json doc;
  doc["config"] = 1;
  doc["spacing"] = spacing_json(spacing);
  doc["train"] = {{"max_epochs", train.max_epochs},
                  {"patience", train.patience},
                  {"batch_size", train.batch_size},
                  {"seeds", train.n_seeds},
                  {"validation_fraction", train.validation_fraction},
                  {"split_seed", train.split_seed},
                  {"spacing_scale", spacing_scale_name(scale)},
                  {"adam",
                   {{"step", train.adam.step},
                    {"beta1", train.adam.beta1},
                    {"beta2", train.adam.beta2},
                    {"epsilon", train.adam.epsilon}}}};
  doc["grid"] = {{"layers", grid_layers}, {"neurons", grid_neurons}};
  doc["synthetic"] = {{"sigma", synthetic.sigma},
                      {"x0", {synthetic.x0_lo, synthetic.x0_hi}},
                      {"c", {synthetic.c_lo, synthetic.c_hi}}};
  write_text_file(path, doc.dump(2) + "\n");
}

std::filesystem::path DatasetManifest::resolve(const std::string& rel) const {
  const std::filesystem::path p(rel);
  return p.is_absolute() ? p : base_dir / p;
}

const ManifestCase& DatasetManifest::find(const std::string& id) const {
  for (const ManifestCase& c : cases)
    if (c.id == id) return c;
  throw InvalidArgument("case '" + id + "' is not in the manifest");
}

void DatasetManifest::validate() const {
  spacing.validate();
  for (const ParameterSpec& p : parameters)
    if (!(p.lo < p.hi)) throw InvalidArgument("parameter '" + p.name + "' has an empty range");
  std::map<std::string, int> seen;
  for (const ManifestCase& c : cases) {
    if (c.id.empty() || c.id.find_first_of(" \t\n/\\") != std::string::npos)
      throw InvalidArgument("case id '" + c.id + "' must be non-empty without whitespace or slashes");
    if (seen[c.id]++) throw InvalidArgument("duplicate case id '" + c.id + "'");
    if (c.role != "train" && c.role != "test")
      throw InvalidArgument("case " + c.id + ": role must be 'train' or 'test'");
    if (c.params.size() != parameters.size())
      throw InvalidArgument("case " + c.id + ": expected " + std::to_string(parameters.size()) + " parameters");
    for (std::size_t k = 0; k < c.params.size(); ++k)
      if (!(c.params[k] >= parameters[k].lo && c.params[k] <= parameters[k].hi))
        throw InvalidArgument("case " + c.id + ": parameter '" + parameters[k].name + "' out of range");
    if (c.encoding.empty() && (c.mesh.empty() || c.solution.empty()))
      throw InvalidArgument("case " + c.id + ": needs either an encoding or a mesh and a solution");
  }
  if (background_mesh.empty()) throw InvalidArgument("manifest has no background mesh");
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  const json doc = parse_json_file(path);
  try {
    if (doc.at("manifest").get<int>() != 1) throw ParseError("unsupported manifest version");
    DatasetManifest m;
    m.base_dir = path.parent_path();
    for (const json& p : doc.at("parameters"))
      m.parameters.push_back({p.at("name").get<std::string>(), p.at("lo").get<double>(), p.at("hi").get<double>()});
    m.background_mesh = doc.at("background_mesh").get<std::string>();
    if (doc.contains("spacing")) m.spacing = spacing_from(doc["spacing"]);
    for (const json& c : doc.at("cases")) {
      ManifestCase mc;
      mc.id = c.at("id").get<std::string>();
      mc.params = c.at("params").get<std::vector<double>>();
      mc.role = c.at("role").get<std::string>();
      mc.mesh = c.value("mesh", std::string());
      mc.solution = c.value("solution", std::string());
      mc.displacement = c.value("displacement", std::string());
      mc.encoding = c.value("encoding", std::string());
      m.cases.push_back(std::move(mc));
    }
    m.validate();
    return m;
  } catch (...) {
    rethrow_with(path.string() + ": ");
  }
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  validate();
  json doc;
  doc["manifest"] = 1;
  json ps = json::array();
  for (const ParameterSpec& p : parameters) ps.push_back({{"name", p.name}, {"lo", p.lo}, {"hi", p.hi}});
  doc["parameters"] = ps;
  doc["background_mesh"] = background_mesh;
  doc["spacing"] = spacing_json(spacing);
  json cs = json::array();
  for (const ManifestCase& c : cases) {
    json j{{"id", c.id}, {"params", c.params}, {"role", c.role}};
    if (!c.mesh.empty()) j["mesh"] = c.mesh;
    if (!c.solution.empty()) j["solution"] = c.solution;
    if (!c.displacement.empty()) j["displacement"] = c.displacement;
    if (!c.encoding.empty()) j["encoding"] = c.encoding;
    cs.push_back(std::move(j));
  }
  doc["cases"] = std::move(cs);
  write_text_file(path, doc.dump(2) + "\n");
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t h) {
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

EncodingTable compute_case_encoding(const TetMesh& comp_mesh, std::span<const double> solution, const TetMesh& bg_mesh,
                                    const SpacingConfig& spacing, TransferReport* report) {
  if (solution.size() != comp_mesh.num_nodes())
    throw InvalidArgument("solution has " + std::to_string(solution.size()) + " values for " +
                          std::to_string(comp_mesh.num_nodes()) + " mesh nodes");
  const HessianField hess = recover_hessian(comp_mesh, solution);
  const MetricField target = target_metric_field(comp_mesh, hess, spacing);
  const TransferAssignment assignment = assign_nodes(comp_mesh, bg_mesh);
  return encode_field(transfer_metric(target, assignment, bg_mesh, comp_mesh, report));
}

namespace {

// Background meshes and solution files are shared by many cases; read each once.
struct BuildContext {
  const DatasetManifest& manifest;
  std::map<std::filesystem::path, std::string> text;
  std::map<std::filesystem::path, std::shared_ptr<TetMesh>> meshes;
  std::unique_ptr<BoundaryGraph> graph;
  std::unique_ptr<MorphBinding> binding;

  const std::string& file(const std::string& rel) {
    const auto p = manifest.resolve(rel);
    auto it = text.find(p);
    if (it == text.end()) it = text.emplace(p, read_text_file(p)).first;
    return it->second;
  }

  const TetMesh& mesh(const std::string& rel) {
    const auto p = manifest.resolve(rel);
    auto it = meshes.find(p);
    if (it == meshes.end()) {
      std::istringstream in(file(rel));
      it = meshes.emplace(p, std::make_shared<TetMesh>(parse_mesh(in))).first;
    }
    return *it->second;
  }

  TetMesh morphed_background(const std::string& displacement) {
    const TetMesh& bg = mesh(manifest.background_mesh);
    if (!graph) {
      graph = std::make_unique<BoundaryGraph>(build_boundary_graph(bg));
      binding = std::make_unique<MorphBinding>(bind_mesh(*graph, bg));
    }
    std::istringstream in(file(displacement));
    const NodalField d = parse_nfield(in);
    if (d.components != 3 || d.num_nodes() != bg.num_nodes())
      throw InvalidArgument("displacement file needs one 3-component row per background node");
    std::vector<Vec3> pos(bg.num_nodes());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = Vec3(d(i, 0), d(i, 1), d(i, 2));
    MorphReport rep;
    TetMesh out = morph_mesh(bg, *graph, *binding, pos, &rep);
    if (rep.inverted_tets) throw TopologyError("morphed background mesh has inverted tets");
    return out;
  }
};

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EncodingTable case_encoding(BuildContext& ctx, const ManifestCase& c, const std::filesystem::path& cache_dir) {
  const DatasetManifest& m = ctx.manifest;
  if (!c.encoding.empty()) return read_aenc(m.resolve(c.encoding));

  std::uint64_t h = fnv1a("aenc-key 1");
  for (const std::string* rel : {&c.mesh, &c.solution, &m.background_mesh, &c.displacement}) {
    h = fnv1a(*rel, h);
    h = fnv1a("\n", h);
    if (!rel->empty()) h = fnv1a(ctx.file(*rel), h);
  }
  const SpacingConfig& s = m.spacing;
  h = fnv1a(fmt_real(s.delta_min) + ' ' + fmt_real(s.delta_max) + ' ' + fmt_real(s.scale) + ' ' +
                fmt_real(s.stretch_cap),
            h);
  const std::string key = hex64(h) + "\n";
  const auto aenc = cache_dir / (c.id + ".aenc");
  const auto keyfile = cache_dir / (c.id + ".key");
  if (!cache_dir.empty() && std::filesystem::exists(aenc) && std::filesystem::exists(keyfile) &&
      read_text_file(keyfile) == key)
    return read_aenc(aenc);

  const TetMesh& comp = ctx.mesh(c.mesh);
  std::istringstream in(ctx.file(c.solution));
  const NodalField sol = parse_nfield(in);
  if (sol.components != 1) throw InvalidArgument("solution must be a scalar field");
  EncodingTable enc = c.displacement.empty()
                          ? compute_case_encoding(comp, sol.values, ctx.mesh(m.background_mesh), s)
                          : compute_case_encoding(comp, sol.values, ctx.morphed_background(c.displacement), s);
  if (!cache_dir.empty()) {
    write_aenc(aenc, enc);
    write_text_file(keyfile, key);
  }
  return enc;
}

} // namespace

DatasetMatrix build_dataset(const DatasetManifest& manifest, const std::filesystem::path& cache_dir,
                            const std::string& role) {
  manifest.validate();
  if (!role.empty() && role != "train" && role != "test") throw InvalidArgument("role must be 'train' or 'test'");
  BuildContext ctx{manifest, {}, {}, {}, {}};
  DatasetMatrix d;
  d.parameters = manifest.parameters;
  std::vector<EncodingTable> tables;
  std::vector<std::vector<double>> params;
  for (const ManifestCase& c : manifest.cases) {
    if (!role.empty() && c.role != role) continue;
    try {
      tables.push_back(case_encoding(ctx, c, cache_dir));
    } catch (...) {
      rethrow_with("case " + c.id + ": ");
    }
    if (tables.size() > 1 && tables.back().size() != tables.front().size())
      throw InvalidArgument("case " + c.id + ": encoding node count differs from earlier cases");
    d.case_ids.push_back(c.id);
    params.push_back(c.params);
  }
  if (tables.empty()) throw InvalidArgument("no cases with role '" + role + "' in the manifest");
  d.inputs.resize(Eigen::Index(manifest.parameters.size()), Eigen::Index(params.size()));
  for (std::size_t c = 0; c < params.size(); ++c)
    for (std::size_t k = 0; k < params[c].size(); ++k) d.inputs(Eigen::Index(k), Eigen::Index(c)) = params[c][k];
  d.outputs = encoding_matrix(tables);
  d.validate();
  return d;
}

namespace {

MetricField decode_clamped(const Matrix& outputs, Eigen::Index col, const SpacingConfig& s) {
  const Eigen::Index n = outputs.rows() / 9;
  MetricField field;
  field.reserve(std::size_t(n));
  double row[9];
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < 9; ++k) row[k] = outputs(i * 9 + k, col);
    AnisoEncoding e = AnisoEncoding::from_row(row);
    for (double& d : e.spacing) d = std::isfinite(d) ? std::clamp(d, s.delta_min, s.delta_max) : s.delta_max;
    try {
      field.push_back(metric_from_frame(clamp_frame(decode_frame(e), s)));
    } catch (const Error& err) {
      throw NumericError("node " + std::to_string(i) + ": " + err.what());
    }
  }
  return field;
}

} // namespace

MetricField predict_case(const SurrogateModel& model, const std::vector<double>& params) {
  if (params.size() != model.parameters.size())
    throw InvalidArgument("expected " + std::to_string(model.parameters.size()) + " parameters");
  const Matrix p = Eigen::Map<const Vector>(params.data(), Eigen::Index(params.size()));
  return decode_clamped(model.predict(p), 0, model.spacing);
}

std::vector<EncodingTable> predict_encodings(const SurrogateModel& model, const Matrix& params) {
  const Matrix out = model.predict(params);
  std::vector<EncodingTable> res;
  for (Eigen::Index c = 0; c < params.cols(); ++c) res.push_back(encode_field(decode_clamped(out, c, model.spacing)));
  return res;
}

DatasetManifest synth_project(const std::filesystem::path& dir, const SynthProjectSpec& spec) {
  spec.synthetic.validate();
  spec.spacing.validate();
  if (spec.n_cases < 1 || spec.n_train < 0 || spec.n_train > spec.n_cases)
    throw InvalidArgument("need 0 <= n_train <= n_cases and n_cases >= 1");
  if (spec.comp_cells < 1 || spec.bg_cells < 1) throw InvalidArgument("mesh resolutions must be positive");

  const TetMesh comp = make_box_mesh({spec.comp_cells, spec.comp_cells, spec.comp_cells});
  BoxMeshSpec bs{spec.bg_cells, spec.bg_cells, spec.bg_cells};
  bs.jitter = spec.bg_jitter;
  bs.seed = spec.mesh_seed;
  const TetMesh bg = make_box_mesh(bs);
  write_mesh(dir / "comp.tmesh", comp);
  write_mesh(dir / "background.tmesh", bg);

  DatasetManifest m;
  m.base_dir = dir;
  m.parameters = {{"a", 0.0, 1.0}, {"b", 0.0, 1.0}};
  m.background_mesh = "background.tmesh";
  m.spacing = spec.spacing;
  const auto pts = halton_sample(spec.n_cases, 2, spec.scramble_seed);
  for (int i = 0; i < spec.n_cases; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "case%03d", i);
    ManifestCase c;
    c.id = id;
    c.params = pts[i];
    c.role = i < spec.n_train ? "train" : "test";
    c.mesh = "comp.tmesh";
    c.solution = "solutions/" + c.id + ".nfield";
    write_nfield(dir / c.solution, {1, synthetic_field(comp, pts[i][0], pts[i][1], spec.synthetic)});
    m.cases.push_back(std::move(c));
  }
  m.save(dir / "manifest.json");
  return m;
}

} // namespace anisonet
