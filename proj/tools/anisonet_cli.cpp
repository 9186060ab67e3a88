// Command-line front end; everything goes through the C API.
#include <anisonet/anisonet.h>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Failure {
  an_status status;
};

void check(an_status s) {
  if (s != AN_OK) {
    std::cerr << "anisonet: " << an_status_name(s) << ": " << an_last_error() << '\n';
    throw Failure{s};
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Mesh = std::unique_ptr<an_mesh, Deleter<an_mesh, an_mesh_free>>;
using NField = std::unique_ptr<an_nfield, Deleter<an_nfield, an_nfield_free>>;
using MField = std::unique_ptr<an_mfield, Deleter<an_mfield, an_mfield_free>>;
using Encoding = std::unique_ptr<an_encoding, Deleter<an_encoding, an_encoding_free>>;
using Model = std::unique_ptr<an_model, Deleter<an_model, an_model_free>>;

Mesh read_mesh(const std::string& path) {
  an_mesh* m = nullptr;
  check(an_mesh_read(path.c_str(), &m));
  return Mesh(m);
}

NField read_nfield(const std::string& path) {
  an_nfield* f = nullptr;
  check(an_nfield_read(path.c_str(), &f));
  return NField(f);
}

MField read_mfield(const std::string& path) {
  an_mfield* f = nullptr;
  check(an_mfield_read(path.c_str(), &f));
  return MField(f);
}

an_spacing_config spacing(const std::string& config) {
  an_spacing_config s;
  an_spacing_config_default(&s);
  if (!config.empty()) check(an_spacing_config_load(config.c_str(), &s));
  return s;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw CLI::ValidationError("--params", "'" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic background-mesh metric prediction with neural networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", an_version());
  std::string config;
  auto add_config = [&](CLI::App* c) { c->add_option("--config", config, "pipeline config (JSON)"); };

  // sample
  auto* sample = app.add_subcommand("sample", "Halton points in [0,1]^dims");
  int n_points = 10, dims = 2;
  std::uint64_t scramble_seed = 1;
  bool unscrambled = false;
  std::string sample_out;
  sample->add_option("--n", n_points, "number of points")->check(CLI::PositiveNumber);
  sample->add_option("--dims", dims, "dimensions")->check(CLI::PositiveNumber);
  sample->add_option("--seed", scramble_seed, "scramble seed");
  sample->add_flag("--unscrambled", unscrambled, "plain radical inverses");
  sample->add_option("--out", sample_out, "output file (default stdout)");
  add_config(sample);

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic tanh-layer project");
  std::string synth_dir;
  an_synth_spec ss;
  an_synth_spec_default(&ss);
  synth->add_option("--out", synth_dir, "project directory")->required();
  synth->add_option("--cases", ss.n_cases, "number of cases");
  synth->add_option("--train", ss.n_train, "training cases (the first ones)");
  synth->add_option("--comp-cells", ss.comp_cells, "computational mesh cells per axis");
  synth->add_option("--bg-cells", ss.bg_cells, "background mesh cells per axis");
  synth->add_option("--jitter", ss.bg_jitter, "background node jitter (fraction of h)");
  synth->add_option("--seed", ss.scramble_seed, "Halton scramble seed");
  auto* sigma_opt = synth->add_option("--sigma", ss.sigma, "layer steepness");
  add_config(synth);

  // metric-from-solution
  auto* mfs = app.add_subcommand("metric-from-solution", "target metric field from a scalar solution");
  std::string mesh_path, solution_path, out_path;
  mfs->add_option("--mesh", mesh_path)->required();
  mfs->add_option("--solution", solution_path)->required();
  mfs->add_option("--out", out_path, "metric field")->required();
  add_config(mfs);

  // transfer
  auto* transfer = app.add_subcommand("transfer", "conservative transfer onto a background mesh");
  std::string field_path, bg_path, report_path;
  transfer->add_option("--comp-mesh", mesh_path)->required();
  transfer->add_option("--field", field_path, "metric field on the computational mesh")->required();
  transfer->add_option("--background", bg_path)->required();
  transfer->add_option("--out", out_path)->required();
  transfer->add_option("--report", report_path, "transfer report (default stdout)");
  add_config(transfer);

  // morph
  auto* morph = app.add_subcommand("morph", "move a mesh with its boundary nodes");
  std::string positions_path, binding_path;
  morph->add_option("--mesh", mesh_path, "reference mesh")->required();
  morph->add_option("--positions", positions_path, "nfield, 3 components per node")->required();
  morph->add_option("--binding", binding_path, "binding sidecar (reused when present)");
  morph->add_option("--out", out_path)->required();
  add_config(morph);

  // encode / decode
  auto* encode = app.add_subcommand("encode", "metric field to encoding table");
  encode->add_option("--field", field_path)->required();
  encode->add_option("--out", out_path)->required();
  add_config(encode);
  auto* decode = app.add_subcommand("decode", "encoding table to metric field");
  std::string encoding_path;
  decode->add_option("--encoding", encoding_path)->required();
  decode->add_option("--out", out_path)->required();
  add_config(decode);

  // dataset build
  auto* dataset = app.add_subcommand("dataset", "dataset operations");
  dataset->require_subcommand(1);
  auto* build = dataset->add_subcommand("build", "encode every case of a manifest");
  std::string manifest_path, cache_dir, role;
  build->add_option("--manifest", manifest_path)->required();
  build->add_option("--cache", cache_dir, "per-case encoding cache directory");
  build->add_option("--role", role, "train or test (default all)")->check(CLI::IsMember({"train", "test"}));
  build->add_option("--out", out_path, "dataset matrix")->required();
  add_config(build);

  // train
  auto* train = app.add_subcommand("train", "train a model variant");
  std::string dataset_path, grid_table;
  an_train_options to;
  an_train_options_default(&to);
  bool grid = false;
  train->add_option("--dataset", dataset_path)->required();
  train->add_option("--variant", to.variant)->check(CLI::IsMember({1, 2, 3}));
  train->add_option("--layers", to.layers, "hidden layers")->check(CLI::NonNegativeNumber);
  train->add_option("--neurons", to.neurons, "neurons per hidden layer")->check(CLI::PositiveNumber);
  train->add_option("--seeds", to.seeds, "restarts per network")->check(CLI::PositiveNumber);
  train->add_option("--max-epochs", to.max_epochs)->check(CLI::PositiveNumber);
  train->add_option("--patience", to.patience)->check(CLI::PositiveNumber);
  train->add_option("--batch", to.batch)->check(CLI::PositiveNumber);
  train->add_flag("--grid", grid, "grid search over the config grid");
  train->add_option("--grid-table", grid_table, "where to write the grid table");
  train->add_option("--out", out_path, "model file")->required();
  add_config(train);

  // predict
  auto* predict = app.add_subcommand("predict", "predict the background metric field");
  std::string model_path, params_text;
  predict->add_option("--model", model_path)->required();
  predict->add_option("--params", params_text, "comma-separated parameter values")->required();
  predict->add_option("--out", out_path, "metric field")->required();
  predict->add_option("--encoding-out", encoding_path, "also write the encoding table");
  add_config(predict);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a model on a dataset");
  evaluate->add_option("--model", model_path)->required();
  evaluate->add_option("--dataset", dataset_path)->required();
  evaluate->add_option("--out", out_path, "report directory")->required();
  add_config(evaluate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) {
      std::vector<double> pts(std::size_t(n_points) * std::size_t(dims));
      check(an_halton(std::size_t(n_points), std::size_t(dims), !unscrambled, scramble_seed, pts.data()));
      std::ostringstream out;
      char buf[32];
      for (int i = 0; i < n_points; ++i) {
        for (int d = 0; d < dims; ++d) {
          std::snprintf(buf, sizeof buf, "%.17g", pts[std::size_t(i) * dims + d]);
          out << (d ? " " : "") << buf;
        }
        out << '\n';
      }
      if (sample_out.empty()) {
        std::cout << out.str();
      } else {
        std::ofstream f(sample_out);
        if (!(f << out.str())) {
          std::cerr << "anisonet: cannot write " << sample_out << '\n';
          return AN_ERR_IO;
        }
      }
    } else if (synth->parsed()) {
      if (sigma_opt->count() == 0) ss.sigma = 0.0;
      check(an_synth_project(synth_dir.c_str(), &ss, config.empty() ? nullptr : config.c_str()));
      std::cout << "wrote " << synth_dir << "/manifest.json\n";
    } else if (mfs->parsed()) {
      const auto mesh = read_mesh(mesh_path);
      const auto sol = read_nfield(solution_path);
      const auto s = spacing(config);
      an_mfield* f = nullptr;
      check(an_metric_from_solution(mesh.get(), sol.get(), &s, &f));
      MField out(f);
      check(an_mfield_write(out.get(), out_path.c_str()));
    } else if (transfer->parsed()) {
      const auto comp = read_mesh(mesh_path);
      const auto bg = read_mesh(bg_path);
      const auto field = read_mfield(field_path);
      an_mfield* f = nullptr;
      an_transfer_report rep;
      check(an_transfer(field.get(), comp.get(), bg.get(), &f, &rep));
      MField out(f);
      check(an_mfield_write(out.get(), out_path.c_str()));
      std::ostringstream text;
      text << "background_nodes " << rep.background_nodes << "\ncomputational_nodes " << rep.computational_nodes
           << "\nempty_patches " << rep.empty_patches << "\norphan_nodes " << rep.orphan_nodes
           << "\nexterior_background_nodes " << rep.exterior_background_nodes << '\n';
      if (report_path.empty()) {
        std::cout << text.str();
      } else {
        std::ofstream r(report_path);
        if (!(r << text.str())) {
          std::cerr << "anisonet: cannot write " << report_path << '\n';
          return AN_ERR_IO;
        }
      }
    } else if (morph->parsed()) {
      const auto mesh = read_mesh(mesh_path);
      const auto pos = read_nfield(positions_path);
      an_mesh* m = nullptr;
      std::size_t inverted = 0;
      check(an_morph(mesh.get(), pos.get(), binding_path.empty() ? nullptr : binding_path.c_str(), &m, &inverted));
      Mesh out(m);
      check(an_mesh_write(out.get(), out_path.c_str()));
      if (inverted) std::cerr << "anisonet: warning: " << inverted << " inverted tets after morphing\n";
    } else if (encode->parsed()) {
      const auto field = read_mfield(field_path);
      an_encoding* e = nullptr;
      check(an_encode(field.get(), &e));
      Encoding enc(e);
      check(an_encoding_write(enc.get(), out_path.c_str()));
    } else if (decode->parsed()) {
      an_encoding* e = nullptr;
      check(an_encoding_read(encoding_path.c_str(), &e));
      Encoding enc(e);
      an_mfield* f = nullptr;
      check(an_decode(enc.get(), &f));
      MField out(f);
      check(an_mfield_write(out.get(), out_path.c_str()));
    } else if (build->parsed()) {
      std::size_t rows = 0;
      check(an_dataset_build(manifest_path.c_str(), cache_dir.empty() ? nullptr : cache_dir.c_str(),
                             role.empty() ? nullptr : role.c_str(), out_path.c_str(), &rows));
      std::cout << "wrote " << rows << " cases to " << out_path << '\n';
    } else if (train->parsed()) {
      to.grid = grid ? 1 : 0;
      check(an_train(dataset_path.c_str(), config.empty() ? nullptr : config.c_str(), &to, out_path.c_str(),
                     grid_table.empty() ? nullptr : grid_table.c_str()));
      std::cout << "wrote " << out_path << '\n';
    } else if (predict->parsed()) {
      an_model* m = nullptr;
      check(an_model_load(model_path.c_str(), &m));
      Model model(m);
      const std::vector<double> params = parse_list(params_text);
      an_mfield* f = nullptr;
      check(an_predict(model.get(), params.data(), params.size(), &f));
      MField out(f);
      check(an_mfield_write(out.get(), out_path.c_str()));
      if (!encoding_path.empty()) {
        an_encoding* e = nullptr;
        check(an_encode(out.get(), &e));
        Encoding enc(e);
        check(an_encoding_write(enc.get(), encoding_path.c_str()));
      }
    } else if (evaluate->parsed()) {
      double acceptable[3];
      check(an_evaluate(model_path.c_str(), dataset_path.c_str(), out_path.c_str(), acceptable));
      std::cout << "acceptable fraction e1 " << acceptable[0] << " e2 " << acceptable[1] << " e3 " << acceptable[2]
                << '\n';
    }
  } catch (const Failure& f) {
    return int(f.status);
  } catch (const CLI::ValidationError& e) {
    return app.exit(e);
  }
  return 0;
}
