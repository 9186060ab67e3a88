#pragma once

#include "encoding.hpp"
#include "hessian.hpp"
#include "mesh.hpp"
#include "surrogate.hpp"
#include "transfer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace anisonet {

/// Analytic stand-in for a flow solution: p = tanh(sigma (x - x0(a) - c(b) y)),
/// with x0 and c mapped linearly from a, b in [0, 1] onto their ranges.
struct SyntheticConfig {
  double sigma = 10.0;
  double x0_lo = 0.3, x0_hi = 0.7;
  double c_lo = 0.0, c_hi = 0.5;

  void validate() const;
};

std::vector<double> synthetic_field(const TetMesh& mesh, double a, double b, const SyntheticConfig& cfg);

/// Everything the stage commands read from `--config`.
struct PipelineConfig {
  SpacingConfig spacing;
  TrainConfig train;
  SpacingScale scale = SpacingScale::Log2;
  std::vector<int> grid_layers{2, 3, 4, 5};
  std::vector<int> grid_neurons{5, 10, 20, 50, 100, 200};
  SyntheticConfig synthetic;

  static PipelineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct ManifestCase {
  std::string id;
  std::vector<double> params;
  std::string role; // "train" or "test"
  // Paths relative to the manifest directory; empty when absent.
  std::string mesh;
  std::string solution;
  std::string displacement; // background-mesh node positions for this geometry
  std::string encoding;     // precomputed encoding, bypasses the metric stages
};

struct DatasetManifest {
  std::vector<ParameterSpec> parameters;
  std::string background_mesh;
  SpacingConfig spacing;
  std::vector<ManifestCase> cases;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& rel) const;
  const ManifestCase& find(const std::string& id) const;
  void validate() const;

  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// Computational solution to background encoding: Hessian, target metric,
/// conservative transfer, encode.
EncodingTable compute_case_encoding(const TetMesh& comp_mesh, std::span<const double> solution, const TetMesh& bg_mesh,
                                    const SpacingConfig& spacing, TransferReport* report = nullptr);

/// Builds (or reads back from `cache_dir`) the encoding of every case with
/// the given role ("train", "test" or "" for all), in manifest order. Cached
/// entries are keyed by a hash of every input file and the spacing settings.
DatasetMatrix build_dataset(const DatasetManifest& manifest, const std::filesystem::path& cache_dir,
                            const std::string& role = "");

/// Decoded prediction for one parameter vector. Spacings are clamped to
/// [delta_min, delta_max] and the stretch cap is re-applied, so every metric
/// is SPD. Parameters outside their ranges are refused.
MetricField predict_case(const SurrogateModel& model, const std::vector<double>& params);

/// Encodings of `predict_case` for every column of `params`.
std::vector<EncodingTable> predict_encodings(const SurrogateModel& model, const Matrix& params);

struct SynthProjectSpec {
  int n_cases = 50;
  int n_train = 40;
  int comp_cells = 15;
  int bg_cells = 13;
  double bg_jitter = 0.2;
  std::uint64_t mesh_seed = 7;
  std::uint64_t scramble_seed = 1;
  SyntheticConfig synthetic;
  SpacingConfig spacing;
};

/// Writes comp.tmesh, background.tmesh, solutions/<id>.nfield and
/// manifest.json into `dir`; the first n_train Halton points are training cases.
DatasetManifest synth_project(const std::filesystem::path& dir, const SynthProjectSpec& spec);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL);

} // namespace anisonet
