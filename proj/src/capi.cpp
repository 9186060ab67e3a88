#include "anisonet/anisonet.h"

#include "encoding.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "hessian.hpp"
#include "mesh.hpp"
#include "metric.hpp"
#include "morph.hpp"
#include "pipeline.hpp"
#include "sampling.hpp"
#include "surrogate.hpp"
#include "text_io.hpp"
#include "transfer.hpp"

#include <filesystem>
#include <new>
#include <string>

namespace an = anisonet;

struct an_mesh {
  an::TetMesh mesh;
};
struct an_nfield {
  an::NodalField field;
};
struct an_mfield {
  an::MetricField field;
};
struct an_encoding {
  an::EncodingTable table;
};
struct an_model {
  an::SurrogateModel model;
};

namespace {

thread_local std::string g_last_error;

an_status fail(an_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <class F>
an_status guard(F&& f) {
  try {
    f();
    return AN_OK;
  } catch (const an::IoError& e) {
    return fail(AN_ERR_IO, e.what());
  } catch (const an::ParseError& e) {
    return fail(AN_ERR_PARSE, e.what());
  } catch (const an::TopologyError& e) {
    return fail(AN_ERR_TOPOLOGY, e.what());
  } catch (const an::InvalidArgument& e) {
    return fail(AN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const an::NumericError& e) {
    return fail(AN_ERR_NUMERIC, e.what());
  } catch (const an::TrainingDiverged& e) {
    return fail(AN_ERR_TRAINING, e.what());
  } catch (const std::bad_alloc&) {
    return fail(AN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(AN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(AN_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* name) {
  if (!p) throw an::InvalidArgument(std::string(name) + " must not be NULL");
}

an::SpacingConfig spacing_of(const an_spacing_config* c) {
  an::SpacingConfig s;
  if (c) s = {c->delta_min, c->delta_max, c->scale, c->stretch_cap};
  s.validate();
  return s;
}

} // namespace

extern "C" {

const char* an_version(void) { return "0.1.0"; }

const char* an_status_name(an_status s) {
  switch (s) {
  case AN_OK: return "ok";
  case AN_ERR_IO: return "io error";
  case AN_ERR_PARSE: return "parse error";
  case AN_ERR_TOPOLOGY: return "topology error";
  case AN_ERR_INVALID_ARGUMENT: return "invalid argument";
  case AN_ERR_NUMERIC: return "numeric error";
  case AN_ERR_TRAINING: return "training diverged";
  case AN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* an_last_error(void) { return g_last_error.c_str(); }

an_status an_mesh_read(const char* path, an_mesh** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new an_mesh{an::read_mesh(path)};
  });
}

an_status an_mesh_write(const an_mesh* mesh, const char* path) {
  return guard([&] {
    need(mesh, "mesh");
    need(path, "path");
    an::write_mesh(std::filesystem::path(path), mesh->mesh);
  });
}

an_status an_mesh_box(int nx, int ny, int nz, const double lo[3], const double hi[3], double jitter, uint64_t seed,
                      an_mesh** out) {
  return guard([&] {
    need(lo, "lo");
    need(hi, "hi");
    need(out, "out");
    an::BoxMeshSpec s{nx, ny, nz, an::Vec3(lo[0], lo[1], lo[2]), an::Vec3(hi[0], hi[1], hi[2]), jitter, seed};
    *out = new an_mesh{an::make_box_mesh(s)};
  });
}

size_t an_mesh_num_nodes(const an_mesh* mesh) { return mesh ? mesh->mesh.num_nodes() : 0; }
size_t an_mesh_num_tets(const an_mesh* mesh) { return mesh ? mesh->mesh.num_tets() : 0; }

an_status an_mesh_node(const an_mesh* mesh, size_t node, double xyz[3]) {
  return guard([&] {
    need(mesh, "mesh");
    need(xyz, "xyz");
    if (node >= mesh->mesh.num_nodes()) throw an::InvalidArgument("node index out of range");
    for (int k = 0; k < 3; ++k) xyz[k] = mesh->mesh.nodes[node][k];
  });
}

an_status an_mesh_tet(const an_mesh* mesh, size_t tet, int32_t nodes[4]) {
  return guard([&] {
    need(mesh, "mesh");
    need(nodes, "nodes");
    if (tet >= mesh->mesh.num_tets()) throw an::InvalidArgument("tet index out of range");
    for (int k = 0; k < 4; ++k) nodes[k] = mesh->mesh.tets[tet][k];
  });
}

void an_mesh_free(an_mesh* mesh) { delete mesh; }

an_status an_nfield_create(size_t n_nodes, size_t n_components, const double* values, an_nfield** out) {
  return guard([&] {
    need(out, "out");
    if (n_components == 0) throw an::InvalidArgument("a field needs at least one component");
    if (n_nodes && !values) throw an::InvalidArgument("values must not be NULL");
    an::NodalField f{n_components, std::vector<double>(values, values + n_nodes * n_components)};
    *out = new an_nfield{std::move(f)};
  });
}

an_status an_nfield_read(const char* path, an_nfield** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new an_nfield{an::read_nfield(path)};
  });
}

an_status an_nfield_write(const an_nfield* field, const char* path) {
  return guard([&] {
    need(field, "field");
    need(path, "path");
    an::write_nfield(path, field->field);
  });
}

size_t an_nfield_num_nodes(const an_nfield* f) { return f ? f->field.num_nodes() : 0; }
size_t an_nfield_num_components(const an_nfield* f) { return f ? f->field.components : 0; }
const double* an_nfield_data(const an_nfield* f) { return f ? f->field.values.data() : nullptr; }
void an_nfield_free(an_nfield* f) { delete f; }

an_status an_mfield_read(const char* path, an_mfield** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new an_mfield{an::read_mfield(path)};
  });
}

an_status an_mfield_write(const an_mfield* field, const char* path) {
  return guard([&] {
    need(field, "field");
    need(path, "path");
    an::write_mfield(path, field->field);
  });
}

size_t an_mfield_size(const an_mfield* f) { return f ? f->field.size() : 0; }

an_status an_mfield_get(const an_mfield* f, size_t node, double m[6]) {
  return guard([&] {
    need(f, "field");
    need(m, "m");
    if (node >= f->field.size()) throw an::InvalidArgument("node index out of range");
    for (int k = 0; k < 6; ++k) m[k] = f->field[node].c[k];
  });
}

void an_mfield_free(an_mfield* f) { delete f; }

void an_spacing_config_default(an_spacing_config* cfg) {
  if (!cfg) return;
  const an::SpacingConfig s;
  *cfg = {s.delta_min, s.delta_max, s.scale, s.stretch_cap};
}

an_status an_spacing_config_load(const char* config_path, an_spacing_config* cfg) {
  return guard([&] {
    need(config_path, "config_path");
    need(cfg, "cfg");
    const auto s = an::PipelineConfig::load(config_path).spacing;
    *cfg = {s.delta_min, s.delta_max, s.scale, s.stretch_cap};
  });
}

an_status an_metric_from_solution(const an_mesh* mesh, const an_nfield* solution, const an_spacing_config* cfg,
                                  an_mfield** out) {
  return guard([&] {
    need(mesh, "mesh");
    need(solution, "solution");
    need(out, "out");
    const an::SpacingConfig s = spacing_of(cfg);
    if (solution->field.components != 1) throw an::InvalidArgument("solution must be a scalar field");
    if (solution->field.num_nodes() != mesh->mesh.num_nodes())
      throw an::InvalidArgument("solution and mesh node counts differ");
    const auto h = an::recover_hessian(mesh->mesh, solution->field.values);
    *out = new an_mfield{an::target_metric_field(mesh->mesh, h, s)};
  });
}

an_status an_transfer(const an_mfield* comp_field, const an_mesh* comp_mesh, const an_mesh* bg_mesh, an_mfield** out,
                      an_transfer_report* report) {
  return guard([&] {
    need(comp_field, "comp_field");
    need(comp_mesh, "comp_mesh");
    need(bg_mesh, "bg_mesh");
    need(out, "out");
    if (comp_field->field.size() != comp_mesh->mesh.num_nodes())
      throw an::InvalidArgument("metric field and computational mesh node counts differ");
    const auto a = an::assign_nodes(comp_mesh->mesh, bg_mesh->mesh);
    an::TransferReport rep;
    auto f = an::transfer_metric(comp_field->field, a, bg_mesh->mesh, comp_mesh->mesh, &rep);
    if (report)
      *report = {rep.background_nodes, rep.computational_nodes, rep.empty_patches, rep.orphan_nodes,
                 rep.exterior_background_nodes};
    *out = new an_mfield{std::move(f)};
  });
}

an_status an_morph(const an_mesh* reference, const an_nfield* positions, const char* binding_path, an_mesh** out,
                   size_t* inverted_tets) {
  return guard([&] {
    need(reference, "reference");
    need(positions, "positions");
    need(out, "out");
    const an::TetMesh& ref = reference->mesh;
    if (positions->field.components != 3 || positions->field.num_nodes() != ref.num_nodes())
      throw an::InvalidArgument("positions need one 3-component row per mesh node");
    const an::BoundaryGraph g = an::build_boundary_graph(ref);
    an::MorphBinding b;
    if (binding_path && std::filesystem::exists(binding_path)) {
      b = an::read_binding(binding_path, ref.num_nodes(), g.graph.tets.size());
    } else {
      b = an::bind_mesh(g, ref);
      if (binding_path) an::write_binding(binding_path, b, g.graph.tets.size());
    }
    std::vector<an::Vec3> pos(ref.num_nodes());
    for (std::size_t i = 0; i < pos.size(); ++i)
      pos[i] = an::Vec3(positions->field(i, 0), positions->field(i, 1), positions->field(i, 2));
    an::MorphReport rep;
    auto m = an::morph_mesh(ref, g, b, pos, &rep);
    if (inverted_tets) *inverted_tets = rep.inverted_tets;
    *out = new an_mesh{std::move(m)};
  });
}

an_status an_encode(const an_mfield* field, an_encoding** out) {
  return guard([&] {
    need(field, "field");
    need(out, "out");
    *out = new an_encoding{an::encode_field(field->field)};
  });
}

an_status an_decode(const an_encoding* enc, an_mfield** out) {
  return guard([&] {
    need(enc, "enc");
    need(out, "out");
    *out = new an_mfield{an::decode_field(enc->table)};
  });
}

an_status an_encoding_read(const char* path, an_encoding** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new an_encoding{an::read_aenc(path)};
  });
}

an_status an_encoding_write(const an_encoding* enc, const char* path) {
  return guard([&] {
    need(enc, "enc");
    need(path, "path");
    an::write_aenc(path, enc->table);
  });
}

size_t an_encoding_size(const an_encoding* enc) { return enc ? enc->table.size() : 0; }

an_status an_encoding_get(const an_encoding* enc, size_t node, double row[9]) {
  return guard([&] {
    need(enc, "enc");
    need(row, "row");
    if (node >= enc->table.size()) throw an::InvalidArgument("node index out of range");
    const auto r = enc->table[node].row();
    for (int k = 0; k < 9; ++k) row[k] = r[k];
  });
}

void an_encoding_free(an_encoding* enc) { delete enc; }

an_status an_halton(size_t n, size_t dims, int scrambled, uint64_t seed, double* out) {
  return guard([&] {
    need(out, "out");
    const auto pts = an::halton_sample(int(n), int(dims),
                                       scrambled ? std::optional<std::uint64_t>(seed) : std::nullopt);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dims; ++d) out[i * dims + d] = pts[i][d];
  });
}

void an_synth_spec_default(an_synth_spec* spec) {
  if (!spec) return;
  const an::SynthProjectSpec s;
  *spec = {s.n_cases, s.n_train, s.comp_cells, s.bg_cells, s.bg_jitter, s.scramble_seed, s.synthetic.sigma};
}

an_status an_synth_project(const char* dir, const an_synth_spec* spec, const char* config_path) {
  return guard([&] {
    need(dir, "dir");
    need(spec, "spec");
    an::SynthProjectSpec s;
    if (config_path) {
      const auto cfg = an::PipelineConfig::load(config_path);
      s.synthetic = cfg.synthetic;
      s.spacing = cfg.spacing;
    }
    s.n_cases = spec->n_cases;
    s.n_train = spec->n_train;
    s.comp_cells = spec->comp_cells;
    s.bg_cells = spec->bg_cells;
    s.bg_jitter = spec->bg_jitter;
    s.scramble_seed = spec->scramble_seed;
    if (spec->sigma > 0.0) s.synthetic.sigma = spec->sigma;
    an::synth_project(dir, s);
  });
}

an_status an_dataset_build(const char* manifest_path, const char* cache_dir, const char* role, const char* out_path,
                           size_t* n_cases) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(out_path, "out_path");
    const auto m = an::DatasetManifest::load(manifest_path);
    const auto d = an::build_dataset(m, cache_dir ? cache_dir : "", role ? role : "");
    an::write_dataset(out_path, d);
    if (n_cases) *n_cases = d.num_cases();
  });
}

void an_train_options_default(an_train_options* o) {
  if (!o) return;
  *o = {1, 2, 10, 0, 0, 0, 0, 0};
}

an_status an_train(const char* dataset_path, const char* config_path, const an_train_options* opts,
                   const char* model_path, const char* grid_table_path) {
  return guard([&] {
    need(dataset_path, "dataset_path");
    need(opts, "opts");
    need(model_path, "model_path");
    an::PipelineConfig cfg = config_path ? an::PipelineConfig::load(config_path) : an::PipelineConfig{};
    if (opts->seeds) cfg.train.n_seeds = opts->seeds;
    if (opts->max_epochs) cfg.train.max_epochs = opts->max_epochs;
    if (opts->patience) cfg.train.patience = opts->patience;
    if (opts->batch) cfg.train.batch_size = opts->batch;
    cfg.train.validate();
    const an::DatasetMatrix data = an::read_dataset(dataset_path);
    if (opts->grid) {
      const auto g =
          an::grid_search(opts->variant, data, cfg.grid_layers, cfg.grid_neurons, cfg.train, cfg.spacing, cfg.scale);
      if (grid_table_path) an::write_text_file(grid_table_path, g.to_text());
      an::save_model(model_path, g.model);
    } else {
      const auto m = an::train_variant(opts->variant, data, {opts->layers, opts->neurons}, cfg.train, cfg.spacing,
                                       cfg.scale);
      an::save_model(model_path, m);
    }
  });
}

an_status an_model_load(const char* path, an_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new an_model{an::load_model(path)};
  });
}

size_t an_model_num_parameters(const an_model* m) { return m ? m->model.parameters.size() : 0; }
size_t an_model_num_nodes(const an_model* m) { return m ? m->model.n_nodes : 0; }
void an_model_free(an_model* m) { delete m; }

an_status an_predict(const an_model* model, const double* params, size_t n_params, an_mfield** out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    if (n_params && !params) throw an::InvalidArgument("params must not be NULL");
    *out = new an_mfield{an::predict_case(model->model, std::vector<double>(params, params + n_params))};
  });
}

an_status an_evaluate(const char* model_path, const char* dataset_path, const char* out_dir, double acceptable[3]) {
  return guard([&] {
    need(model_path, "model_path");
    need(dataset_path, "dataset_path");
    need(out_dir, "out_dir");
    const auto model = an::load_model(model_path);
    const auto data = an::read_dataset(dataset_path);
    if (data.num_nodes() != model.n_nodes) throw an::InvalidArgument("dataset and model node counts differ");
    const auto pred = an::predict_encodings(model, data.inputs);
    const auto rep = an::evaluate_cases(pred, an::encoding_tables(data.outputs), data.case_ids);
    rep.write(out_dir);
    if (acceptable)
      for (int k = 0; k < 3; ++k) acceptable[k] = rep.histograms[k].acceptable_fraction;
  });
}

} // extern "C"
