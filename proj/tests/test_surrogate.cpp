#include "error.hpp"
#include "support.hpp"
#include "surrogate.hpp"
#include "text_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace anisonet;

namespace {

// Two-parameter toy dataset with smooth spacing and direction dependence.
DatasetMatrix toy_dataset(int cases, int nodes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DatasetMatrix d;
  d.parameters = {{"a", 0.0, 1.0}, {"b", -2.0, 2.0}};
  d.inputs.resize(2, cases);
  d.outputs.resize(9 * nodes, cases);
  for (int c = 0; c < cases; ++c) {
    const double a = u(rng), b = -2.0 + 4.0 * u(rng);
    d.case_ids.push_back("case" + std::to_string(c));
    d.inputs.col(c) << a, b;
    for (int i = 0; i < nodes; ++i) {
      const double base = 0.02 * std::exp2(3.0 * a + 0.1 * i);
      const double th = 0.4 * a + 0.2 * b + 0.3 * i;
      const double col[9] = {base,         base * (1.5 + 0.1 * b + 0.5), base * (2.5 + 0.2 * b + 0.5),
                             std::cos(th), std::sin(th),                  std::cos(2 * th),
                             std::sin(2 * th), std::cos(-th),             std::sin(-th)};
      for (int k = 0; k < 9; ++k) d.outputs(9 * i + k, c) = col[k];
    }
  }
  return d;
}

TrainConfig quick() {
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.patience = 40;
  cfg.n_seeds = 2;
  cfg.adam.step = 1e-2;
  return cfg;
}

} // namespace

TEST_SUITE("surrogate") {

TEST_CASE("variant plans cover every output group once") {
  const std::size_t want[] = {2, 3, 4};
  for (int v = 1; v <= 3; ++v) {
    const auto plan = variant_plan(v);
    CHECK(plan.size() == want[v - 1]);
    CHECK(plan[0].loss == LossKind::Mse);
    CHECK(plan[0].groups == std::vector<std::string>{"spacing"});
    std::multiset<std::string> seen;
    for (const auto& n : plan) {
      if (n.name != "spacing") CHECK(n.loss == LossKind::Alignment);
      seen.insert(n.groups.begin(), n.groups.end());
    }
    CHECK(seen == std::multiset<std::string>{"spacing", "v1", "v2", "v3"});
  }
  CHECK(variant_plan(2)[1].groups == std::vector<std::string>{"v1", "v2"});
  CHECK_THROWS_AS(variant_plan(4), InvalidArgument);
  CHECK_THROWS_AS(variant_plan(0), InvalidArgument);
}

TEST_CASE("group rows") {
  CHECK(group_rows(2, {"spacing"}) == std::vector<int>{0, 1, 2, 9, 10, 11});
  CHECK(group_rows(2, {"v1", "v3"}) == std::vector<int>{3, 4, 7, 8, 12, 13, 16, 17});
  CHECK(group_rows(1, {"v2"}) == std::vector<int>{5, 6});
  CHECK_THROWS_AS(group_rows(1, {"v4"}), InvalidArgument);
}

TEST_CASE("column transforms") {
  const ColumnTransform lin{false, 2.0, 6.0};
  CHECK(lin.apply(4.0) == 0.5);
  CHECK(lin.invert(0.5) == 4.0);
  const ColumnTransform lg{true, -3.0, 1.0};
  CHECK(lg.apply(0.125) == 0.0);
  CHECK(lg.apply(2.0) == 1.0);
  CHECK(lg.invert(0.75) == doctest::Approx(1.0));
  const ColumnTransform flat{true, 1.0, 1.0};
  CHECK(flat.apply(5.0) == 0.0);
  CHECK(flat.invert(0.3) == 2.0);
  CHECK(parse_spacing_scale("log2") == SpacingScale::Log2);
  CHECK(parse_spacing_scale(spacing_scale_name(SpacingScale::Linear)) == SpacingScale::Linear);
  CHECK_THROWS_AS(parse_spacing_scale("ln"), InvalidArgument);
}

TEST_CASE("input normalization and range refusal") {
  const std::vector<ParameterSpec> ps{{"a", 0.0, 1.0}, {"b", -2.0, 2.0}};
  Matrix raw(2, 2);
  raw << 0.25, 1.0, -2.0, 1.0;
  const Matrix n = normalize_inputs(ps, raw);
  CHECK(n(0, 0) == 0.25);
  CHECK(n(1, 0) == 0.0);
  CHECK(n(1, 1) == 0.75);
  raw(1, 1) = 2.5;
  CHECK_THROWS_WITH_AS(normalize_inputs(ps, raw), "parameter 'b' = 2.5 outside [-2, 2]", InvalidArgument);
  CHECK_THROWS_AS(normalize_inputs(ps, Matrix(3, 1)), InvalidArgument);
}

TEST_CASE("dataset file roundtrip and subsets") {
  const DatasetMatrix d = toy_dataset(6, 2, 1);
  const auto dir = testing::scratch_dir("dataset");
  write_dataset(dir / "d.dmat", d);
  const DatasetMatrix r = read_dataset(dir / "d.dmat");
  CHECK(r.case_ids == d.case_ids);
  CHECK(r.inputs == d.inputs);
  CHECK(r.outputs == d.outputs);
  CHECK(r.parameters[1].name == "b");
  CHECK(r.parameters[1].lo == -2.0);
  CHECK(r.num_nodes() == 2);

  const DatasetMatrix h = d.head(3);
  CHECK(h.case_ids == std::vector<std::string>{"case0", "case1", "case2"});
  CHECK(h.outputs == d.outputs.leftCols(3));
  const DatasetMatrix s = d.subset({4, 1});
  CHECK(s.case_ids == std::vector<std::string>{"case4", "case1"});
  CHECK(s.inputs.col(0) == d.inputs.col(4));
  CHECK_THROWS_AS(d.head(7), InvalidArgument);
  CHECK_THROWS_AS(d.subset({6}), InvalidArgument);

  write_text_file(dir / "bad.dmat", "dmatrix 1 1 1 9\nparam a 0 1\nc0 0.5 1 2 3\n");
  CHECK_THROWS_AS(read_dataset(dir / "bad.dmat"), ParseError);
  write_text_file(dir / "bad2.dmat", "dmatrix 1 0 1 8\nparam a 0 1\n");
  CHECK_THROWS_AS(read_dataset(dir / "bad2.dmat"), ParseError);
  CHECK_THROWS_AS(read_dataset(dir / "missing.dmat"), IoError);
}

TEST_CASE("each variant trains one network per plan entry and predicts every output") {
  const DatasetMatrix d = toy_dataset(20, 2, 2);
  const SpacingConfig sp;
  for (int v = 1; v <= 3; ++v) {
    const SurrogateModel m = train_variant(v, d, {1, 4}, quick(), sp, SpacingScale::Log2);
    CHECK(m.networks.size() == variant_plan(v).size());
    CHECK(m.n_nodes == 2);
    for (const TrainedNetwork& n : m.networks) {
      CHECK(n.model.num_inputs() == 2);
      CHECK(n.model.num_outputs() == int(n.rows.size()));
      CHECK(n.model.layer_sizes() == mlp_shape(2, 1, 4, int(n.rows.size())));
      CHECK(n.epochs_run > n.best_epoch);
    }
    const Matrix p = m.predict(d.inputs);
    CHECK(p.rows() == 18);
    CHECK(p.cols() == 20);
    CHECK(p.allFinite());
    // Log-scaled spacings stay positive whatever the network outputs.
    for (int r : group_rows(2, {"spacing"})) CHECK(p.row(r).minCoeff() > 0.0);
  }
}

TEST_CASE("networks must cover every output exactly once") {
  const DatasetMatrix d = toy_dataset(10, 1, 3);
  std::vector<TrainedNetwork> nets;
  nets.push_back(train_network(d, variant_plan(1)[0], {1, 3}, quick(), SpacingScale::Log2));
  CHECK_THROWS_AS(assemble_model(1, d, SpacingConfig{}, SpacingScale::Log2, nets), InvalidArgument);
  nets.push_back(nets[0]);
  CHECK_THROWS_AS(assemble_model(1, d, SpacingConfig{}, SpacingScale::Log2, nets), InvalidArgument);
}

TEST_CASE("spacing network learns a smooth dependence") {
  const DatasetMatrix d = toy_dataset(40, 1, 4);
  TrainConfig cfg;
  cfg.n_seeds = 1;
  cfg.adam.step = 1e-2;
  cfg.max_epochs = 2000;
  const TrainedNetwork n = train_network(d, variant_plan(1)[0], {1, 8}, cfg, SpacingScale::Log2);
  const double m = validation_mae(n, d, cfg);
  // Spacings span 0.02..0.8; a few percent of the range is a working fit.
  CHECK(m < 0.02);
}

TEST_CASE("grid search keeps the lowest validation MAE per network") {
  const DatasetMatrix d = toy_dataset(16, 1, 5);
  const TrainConfig cfg = quick();
  const GridResult g = grid_search(2, d, {2, 1}, {3, 5, 3}, cfg, SpacingConfig{}, SpacingScale::Log2);
  CHECK(g.cells.size() == 3 * 4); // duplicates removed, three networks
  for (const NetworkPlan& p : variant_plan(2)) {
    double best = std::numeric_limits<double>::infinity();
    HiddenSpec spec;
    for (const GridCell& c : g.cells)
      if (c.network == p.name && c.val_mae < best) {
        best = c.val_mae;
        spec = c.hidden;
      }
    CHECK(g.best.at(p.name) == spec);
  }
  // Cells are visited in ascending (layers, neurons) order, so ties go to the smaller layout.
  std::vector<HiddenSpec> order;
  for (const GridCell& c : g.cells)
    if (c.network == "spacing") order.push_back(c.hidden);
  CHECK(order == std::vector<HiddenSpec>{{1, 3}, {1, 5}, {2, 3}, {2, 5}});
  CHECK(g.to_text().find("spacing") != std::string::npos);
  CHECK_THROWS_AS(grid_search(2, d, {}, {3}, cfg, SpacingConfig{}, SpacingScale::Log2), InvalidArgument);
}

TEST_CASE("single-cell grid equals direct training") {
  const DatasetMatrix d = toy_dataset(12, 1, 6);
  const TrainConfig cfg = quick();
  const GridResult g = grid_search(1, d, {1}, {4}, cfg, SpacingConfig{}, SpacingScale::Linear);
  const SurrogateModel m = train_variant(1, d, {1, 4}, cfg, SpacingConfig{}, SpacingScale::Linear);
  REQUIRE(g.model.networks.size() == m.networks.size());
  for (std::size_t k = 0; k < m.networks.size(); ++k)
    CHECK(g.model.networks[k].model.params() == m.networks[k].model.params());
}

TEST_CASE("model file roundtrip predicts identically") {
  const DatasetMatrix d = toy_dataset(12, 2, 7);
  const SpacingConfig sp{0.01, 0.5, 0.25, 20.0};
  const SurrogateModel m = train_variant(3, d, {2, 3}, quick(), sp, SpacingScale::Log2);
  const auto dir = testing::scratch_dir("model");
  save_model(dir / "m.json", m);
  const SurrogateModel r = load_model(dir / "m.json");
  CHECK(r.variant == 3);
  CHECK(r.n_nodes == 2);
  CHECK(r.scale == SpacingScale::Log2);
  CHECK(r.spacing.delta_min == sp.delta_min);
  CHECK(r.spacing.stretch_cap == sp.stretch_cap);
  CHECK(r.parameters[1].hi == 2.0);
  CHECK(r.predict(d.inputs) == m.predict(d.inputs));

  Matrix out(2, 1);
  out << 0.5, 3.0;
  CHECK_THROWS_AS(m.predict(out), InvalidArgument);

  write_text_file(dir / "bad.json", "{\"format\": \"something-else\"}");
  CHECK_THROWS_AS(load_model(dir / "bad.json"), ParseError);
  write_text_file(dir / "broken.json", "{");
  CHECK_THROWS_AS(load_model(dir / "broken.json"), ParseError);
}

} // TEST_SUITE
