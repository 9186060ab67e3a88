/* Exercises the shared library through its C header only. */
#include <anisonet/anisonet.h>

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

static int failures = 0;

#define CHECK(cond)                                                                                                    \
  do {                                                                                                                 \
    if (!(cond)) {                                                                                                     \
      fprintf(stderr, "%s:%d: CHECK(%s) failed (last error: %s)\n", __FILE__, __LINE__, #cond, an_last_error());      \
      ++failures;                                                                                                      \
    }                                                                                                                  \
  } while (0)

static void write_file(const char* path, const char* text) {
  FILE* f = fopen(path, "w");
  if (!f) {
    perror(path);
    exit(1);
  }
  fputs(text, f);
  fclose(f);
}

static int file_exists(const char* path) {
  struct stat st;
  return stat(path, &st) == 0;
}

static void test_basics(void) {
  CHECK(strlen(an_version()) > 0);
  CHECK(strcmp(an_status_name(AN_OK), "ok") == 0);
  CHECK(strcmp(an_status_name(AN_ERR_NUMERIC), "numeric error") == 0);

  an_mesh* m = NULL;
  const double lo[3] = {0, 0, 0}, hi[3] = {1, 1, 1};
  CHECK(an_mesh_box(2, 2, 2, lo, hi, 0.0, 0, &m) == AN_OK);
  CHECK(an_mesh_num_nodes(m) == 27);
  CHECK(an_mesh_num_tets(m) == 48);
  double x[3];
  CHECK(an_mesh_node(m, 26, x) == AN_OK);
  CHECK(x[0] == 1.0 && x[1] == 1.0 && x[2] == 1.0);
  CHECK(an_mesh_node(m, 27, x) == AN_ERR_INVALID_ARGUMENT);
  CHECK(strstr(an_last_error(), "out of range") != NULL);
  int32_t t[4];
  CHECK(an_mesh_tet(m, 0, t) == AN_OK);
  CHECK(an_mesh_box(2, 2, 2, lo, hi, 0.3, 0, &m) == AN_ERR_INVALID_ARGUMENT);
  CHECK(an_mesh_box(2, 2, 2, lo, hi, 0.0, 0, NULL) == AN_ERR_INVALID_ARGUMENT);

  an_mesh* missing = NULL;
  CHECK(an_mesh_read("/nonexistent/anisonet.tmesh", &missing) == AN_ERR_IO);
  CHECK(missing == NULL);
  an_mesh_free(NULL);
  an_nfield_free(NULL);
  an_mfield_free(NULL);
  an_encoding_free(NULL);
  an_model_free(NULL);

  /* Linear solution: isotropic delta_max everywhere. */
  double* p = malloc(sizeof(double) * an_mesh_num_nodes(m));
  for (size_t i = 0; i < an_mesh_num_nodes(m); ++i) {
    CHECK(an_mesh_node(m, i, x) == AN_OK);
    p[i] = 2 * x[0] - x[1] + 0.5 * x[2];
  }
  an_nfield* sol = NULL;
  CHECK(an_nfield_create(an_mesh_num_nodes(m), 1, p, &sol) == AN_OK);
  CHECK(an_nfield_data(sol)[3] == p[3]);
  free(p);
  an_spacing_config cfg;
  an_spacing_config_default(&cfg);
  an_mfield* metric = NULL;
  CHECK(an_metric_from_solution(m, sol, &cfg, &metric) == AN_OK);
  CHECK(an_mfield_size(metric) == 27);
  double mm[6];
  CHECK(an_mfield_get(metric, 13, mm) == AN_OK);
  const double want = 1.0 / (cfg.delta_max * cfg.delta_max);
  CHECK(fabs(mm[0] - want) < 1e-9 * want && mm[1] == 0.0 && fabs(mm[5] - want) < 1e-9 * want);

  an_spacing_config bad = cfg;
  bad.delta_min = bad.delta_max;
  an_mfield* none = NULL;
  CHECK(an_metric_from_solution(m, sol, &bad, &none) == AN_ERR_INVALID_ARGUMENT);
  CHECK(none == NULL);

  /* Transfer onto a one-cell background and encode/decode. */
  an_mesh* bg = NULL;
  CHECK(an_mesh_box(1, 1, 1, lo, hi, 0.0, 0, &bg) == AN_OK);
  an_mfield* moved = NULL;
  an_transfer_report rep;
  CHECK(an_transfer(metric, m, bg, &moved, &rep) == AN_OK);
  CHECK(rep.background_nodes == 8);
  CHECK(rep.computational_nodes == 27);
  CHECK(rep.orphan_nodes == 0);
  an_encoding* enc = NULL;
  CHECK(an_encode(moved, &enc) == AN_OK);
  CHECK(an_encoding_size(enc) == 8);
  double row[9];
  CHECK(an_encoding_get(enc, 0, row) == AN_OK);
  CHECK(fabs(row[0] - cfg.delta_max) < 1e-12 && row[3] == 1.0 && row[4] == 0.0);
  an_mfield* back = NULL;
  CHECK(an_decode(enc, &back) == AN_OK);
  CHECK(an_mfield_get(back, 0, mm) == AN_OK);
  CHECK(fabs(mm[3] - want) < 1e-9 * want);

  an_encoding_free(enc);
  an_mfield_free(back);
  an_mfield_free(moved);
  an_mfield_free(metric);
  an_nfield_free(sol);
  an_mesh_free(bg);
  an_mesh_free(m);

  double h[6];
  CHECK(an_halton(3, 2, 0, 0, h) == AN_OK);
  CHECK(h[0] == 0.5 && h[2] == 0.25 && h[4] == 0.75);
  CHECK(fabs(h[1] - 1.0 / 3) < 1e-15);
  CHECK(an_halton(0, 2, 0, 0, h) == AN_ERR_INVALID_ARGUMENT);
}

static void test_workflow(const char* dir) {
  char path[1024], cache[1024], train[1024], test[1024], model[1024], grid[1024], report[1024], cfgp[1024];
  snprintf(cfgp, sizeof cfgp, "%s/config.json", dir);
  write_file(cfgp, "{\"config\": 1, \"train\": {\"max_epochs\": 40, \"patience\": 10, \"seeds\": 1},"
                   " \"grid\": {\"layers\": [1], \"neurons\": [2, 3]}}");
  an_synth_spec s;
  an_synth_spec_default(&s);
  CHECK(s.n_cases == 50 && s.n_train == 40);
  s.n_cases = 6;
  s.n_train = 4;
  s.comp_cells = 5;
  s.bg_cells = 2;
  CHECK(an_synth_project(dir, &s, cfgp) == AN_OK);

  snprintf(path, sizeof path, "%s/manifest.json", dir);
  snprintf(cache, sizeof cache, "%s/cache", dir);
  snprintf(train, sizeof train, "%s/train.dmat", dir);
  snprintf(test, sizeof test, "%s/test.dmat", dir);
  size_t n = 0;
  CHECK(an_dataset_build(path, cache, "train", train, &n) == AN_OK);
  CHECK(n == 4);
  CHECK(an_dataset_build(path, cache, "test", test, &n) == AN_OK);
  CHECK(n == 2);
  CHECK(an_dataset_build(path, cache, "neither", test, &n) == AN_ERR_INVALID_ARGUMENT);

  an_train_options o;
  an_train_options_default(&o);
  o.grid = 1;
  snprintf(model, sizeof model, "%s/model.json", dir);
  snprintf(grid, sizeof grid, "%s/grid.txt", dir);
  CHECK(an_train(train, cfgp, &o, model, grid) == AN_OK);
  CHECK(file_exists(grid));
  o.variant = 4;
  CHECK(an_train(train, cfgp, &o, model, NULL) == AN_ERR_INVALID_ARGUMENT);

  an_model* mdl = NULL;
  CHECK(an_model_load(model, &mdl) == AN_OK);
  CHECK(an_model_num_parameters(mdl) == 2);
  CHECK(an_model_num_nodes(mdl) == 27);
  const double ok[2] = {0.0, 1.0}, out[2] = {0.5, 1.5};
  an_mfield* pred = NULL;
  CHECK(an_predict(mdl, ok, 2, &pred) == AN_OK);
  CHECK(an_mfield_size(pred) == 27);
  an_mfield* refused = NULL;
  CHECK(an_predict(mdl, out, 2, &refused) == AN_ERR_INVALID_ARGUMENT);
  CHECK(refused == NULL);
  CHECK(an_predict(mdl, ok, 1, &refused) == AN_ERR_INVALID_ARGUMENT);
  an_mfield_free(pred);
  an_model_free(mdl);

  snprintf(report, sizeof report, "%s/report", dir);
  double acc[3] = {-1, -1, -1};
  CHECK(an_evaluate(model, test, report, acc) == AN_OK);
  CHECK(acc[0] >= 0.0 && acc[0] <= 1.0);
  snprintf(path, sizeof path, "%s/report/histogram_e1.csv", dir);
  CHECK(file_exists(path));
  CHECK(an_evaluate("/nonexistent/model.json", test, report, NULL) == AN_ERR_IO);
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : "capi_scratch";
  mkdir(dir, 0755);
  test_basics();
  test_workflow(dir);
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("all C API checks passed\n");
  return 0;
}
