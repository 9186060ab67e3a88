/* anisonet C API.
 *
 * Every function returns an an_status; on failure the message is available
 * from an_last_error() on the calling thread until the next failing call.
 * Objects are opaque handles created by the library and released with the
 * matching *_free function (NULL is accepted). Output handles are only
 * written on success.
 */
#ifndef ANISONET_ANISONET_H
#define ANISONET_ANISONET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ANISONET_API __declspec(dllexport)
#else
#define ANISONET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum an_status {
  AN_OK = 0,
  AN_ERR_IO = 1,
  AN_ERR_PARSE = 2,
  AN_ERR_TOPOLOGY = 3,
  AN_ERR_INVALID_ARGUMENT = 4,
  AN_ERR_NUMERIC = 5,
  AN_ERR_TRAINING = 6,
  AN_ERR_INTERNAL = 7
} an_status;

ANISONET_API const char* an_version(void);
ANISONET_API const char* an_status_name(an_status status);
ANISONET_API const char* an_last_error(void);

typedef struct an_mesh an_mesh;         /* tetrahedral mesh */
typedef struct an_nfield an_nfield;     /* nodal field, n_nodes x n_components */
typedef struct an_mfield an_mfield;     /* per-node metric tensors */
typedef struct an_encoding an_encoding; /* per-node 9-value encodings */
typedef struct an_model an_model;       /* trained model variant */

/* Meshes. */
ANISONET_API an_status an_mesh_read(const char* path, an_mesh** out);
ANISONET_API an_status an_mesh_write(const an_mesh* mesh, const char* path);
/* Structured box of nx*ny*nz cells, 6 tets each; interior nodes jittered by
 * up to jitter*h per axis (jitter in [0, 0.25)). */
ANISONET_API an_status an_mesh_box(int nx, int ny, int nz, const double lo[3], const double hi[3], double jitter,
                                   uint64_t seed, an_mesh** out);
ANISONET_API size_t an_mesh_num_nodes(const an_mesh* mesh);
ANISONET_API size_t an_mesh_num_tets(const an_mesh* mesh);
ANISONET_API an_status an_mesh_node(const an_mesh* mesh, size_t node, double xyz[3]);
ANISONET_API an_status an_mesh_tet(const an_mesh* mesh, size_t tet, int32_t nodes[4]);
ANISONET_API void an_mesh_free(an_mesh* mesh);

/* Nodal fields; values are row-major, values[node * n_components + c]. */
ANISONET_API an_status an_nfield_create(size_t n_nodes, size_t n_components, const double* values, an_nfield** out);
ANISONET_API an_status an_nfield_read(const char* path, an_nfield** out);
ANISONET_API an_status an_nfield_write(const an_nfield* field, const char* path);
ANISONET_API size_t an_nfield_num_nodes(const an_nfield* field);
ANISONET_API size_t an_nfield_num_components(const an_nfield* field);
ANISONET_API const double* an_nfield_data(const an_nfield* field);
ANISONET_API void an_nfield_free(an_nfield* field);

/* Metric fields; components (m11, m12, m13, m22, m23, m33). */
ANISONET_API an_status an_mfield_read(const char* path, an_mfield** out);
ANISONET_API an_status an_mfield_write(const an_mfield* field, const char* path);
ANISONET_API size_t an_mfield_size(const an_mfield* field);
ANISONET_API an_status an_mfield_get(const an_mfield* field, size_t node, double m[6]);
ANISONET_API void an_mfield_free(an_mfield* field);

typedef struct an_spacing_config {
  double delta_min;
  double delta_max;
  double scale;       /* refinement factor in (0, 1] */
  double stretch_cap; /* largest spacing ratio */
} an_spacing_config;

ANISONET_API void an_spacing_config_default(an_spacing_config* cfg);
/* Spacing section of a pipeline config file (defaults where absent). */
ANISONET_API an_status an_spacing_config_load(const char* config_path, an_spacing_config* cfg);

/* Target metric per node of `mesh` from the recovered Hessian of a scalar
 * solution. cfg may be NULL for the defaults. */
ANISONET_API an_status an_metric_from_solution(const an_mesh* mesh, const an_nfield* solution,
                                               const an_spacing_config* cfg, an_mfield** out);

typedef struct an_transfer_report {
  size_t background_nodes;
  size_t computational_nodes;
  size_t empty_patches;
  size_t orphan_nodes;
  size_t exterior_background_nodes;
} an_transfer_report;

/* Conservative (intersection) transfer of a computational-mesh metric field
 * onto a background mesh. report may be NULL. */
ANISONET_API an_status an_transfer(const an_mfield* comp_field, const an_mesh* comp_mesh, const an_mesh* bg_mesh,
                                   an_mfield** out, an_transfer_report* report);

/* Moves `reference` so its boundary nodes land on the rows of `positions`
 * (3 components, one row per node; interior rows are ignored). binding_path
 * may be NULL; otherwise the node binding is read from it when present and
 * written to it when not. inverted_tets may be NULL. */
ANISONET_API an_status an_morph(const an_mesh* reference, const an_nfield* positions, const char* binding_path,
                                an_mesh** out, size_t* inverted_tets);

/* Encodings: per node d1 d2 d3 v1x v1y v2x v2y v3x v3y. */
ANISONET_API an_status an_encode(const an_mfield* field, an_encoding** out);
ANISONET_API an_status an_decode(const an_encoding* enc, an_mfield** out);
ANISONET_API an_status an_encoding_read(const char* path, an_encoding** out);
ANISONET_API an_status an_encoding_write(const an_encoding* enc, const char* path);
ANISONET_API size_t an_encoding_size(const an_encoding* enc);
ANISONET_API an_status an_encoding_get(const an_encoding* enc, size_t node, double row[9]);
ANISONET_API void an_encoding_free(an_encoding* enc);

/* Halton points 1..n in the first `dims` prime bases, written row-major to
 * out[n * dims]. scrambled != 0 applies the seed-keyed digit permutation. */
ANISONET_API an_status an_halton(size_t n, size_t dims, int scrambled, uint64_t seed, double* out);

typedef struct an_synth_spec {
  int n_cases;
  int n_train;
  int comp_cells;
  int bg_cells;
  double bg_jitter;
  uint64_t scramble_seed;
  double sigma; /* 0 keeps the config (or default) value */
} an_synth_spec;

ANISONET_API void an_synth_spec_default(an_synth_spec* spec);

/* Writes a synthetic project (meshes, solutions, manifest.json) into dir.
 * config_path may be NULL; its spacing and synthetic sections are used. */
ANISONET_API an_status an_synth_project(const char* dir, const an_synth_spec* spec, const char* config_path);

/* Builds the dataset matrix of one role ("train", "test" or NULL for all)
 * and writes it to out_path. cache_dir may be NULL to disable caching. */
ANISONET_API an_status an_dataset_build(const char* manifest_path, const char* cache_dir, const char* role,
                                        const char* out_path, size_t* n_cases);

typedef struct an_train_options {
  int variant; /* 1, 2 or 3 */
  int layers;  /* hidden layers, ignored with grid */
  int neurons; /* per hidden layer, ignored with grid */
  int grid;    /* nonzero: grid search over the config grid */
  /* Overrides of the config values; 0 keeps the config value. */
  int seeds;
  int max_epochs;
  int patience;
  int batch;
} an_train_options;

ANISONET_API void an_train_options_default(an_train_options* opts);

/* Trains a model variant on a dataset file. config_path and grid_table_path
 * may be NULL; the grid table is only written with opts->grid. */
ANISONET_API an_status an_train(const char* dataset_path, const char* config_path, const an_train_options* opts,
                                const char* model_path, const char* grid_table_path);

ANISONET_API an_status an_model_load(const char* path, an_model** out);
ANISONET_API size_t an_model_num_parameters(const an_model* model);
ANISONET_API size_t an_model_num_nodes(const an_model* model);
ANISONET_API void an_model_free(an_model* model);

/* Predicted background metric field for one parameter vector. Parameters
 * outside the training ranges are refused with AN_ERR_INVALID_ARGUMENT. */
ANISONET_API an_status an_predict(const an_model* model, const double* params, size_t n_params, an_mfield** out);

/* Evaluates a model on every case of a dataset file, writing report.txt,
 * histogram_e{1,2,3}.csv and outputs.csv into out_dir. acceptable may be
 * NULL; otherwise it receives the acceptable-ratio fraction along e1..e3. */
ANISONET_API an_status an_evaluate(const char* model_path, const char* dataset_path, const char* out_dir,
                                   double acceptable[3]);

#ifdef __cplusplus
}
#endif

#endif
