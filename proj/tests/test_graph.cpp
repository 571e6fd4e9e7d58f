#include <doctest.h>

#include <filesystem>

#include "csvio.hpp"
#include "graph_io.hpp"
#include "helpers.hpp"
#include "synthgen.hpp"

using namespace ktn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "ktnlab_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("neighbor mean: single edge copies the source row") {
  HeteroGraph g;
  g.schema.add_node_type("x", 2);
  g.schema.add_node_type("y", 2);
  g.schema.add_relation("xy", "x", "y");
  g.counts = {1, 1};
  g.edges.push_back(CsrMatrix::from_pairs(1, 1, {{0, 0}}));
  g.features.push_back((Eigen::MatrixXd(1, 2) << 3.0, -1.5).finished());
  g.features.push_back(Eigen::MatrixXd::Zero(1, 2));
  g.labels.assign(2, {});

  NeighborMeanOperator op = build_neighbor_mean(g, "xy");
  Eigen::MatrixXd out = op.weights.multiply(g.features[0]);
  CHECK(out(0, 0) == 3.0);
  CHECK(out(0, 1) == -1.5);
}

TEST_CASE("neighbor mean: two neighbors average") {
  HeteroGraph g;
  g.schema.add_node_type("x", 2);
  g.schema.add_node_type("y", 2);
  g.schema.add_relation("xy", "x", "y");
  g.counts = {2, 1};
  g.edges.push_back(CsrMatrix::from_pairs(2, 1, {{0, 0}, {1, 0}}));
  Eigen::MatrixXd u(2, 2);
  u << 1.0, 2.0, 3.0, 6.0;
  g.features.push_back(u);
  g.features.push_back(Eigen::MatrixXd::Zero(1, 2));
  g.labels.assign(2, {});

  Eigen::MatrixXd out = build_neighbor_mean(g, "xy").weights.multiply(u);
  CHECK(out(0, 0) == doctest::Approx(2.0));
  CHECK(out(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("neighbor mean: hand-computed means [1,2,4] -> [1.5, 3.0]") {
  HeteroGraph g;
  g.schema.add_node_type("x", 1);
  g.schema.add_node_type("y", 1);
  g.schema.add_relation("xy", "x", "y");
  g.counts = {3, 2};
  g.edges.push_back(CsrMatrix::from_pairs(3, 2, {{0, 0}, {1, 0}, {1, 1}, {2, 1}}));
  g.features.push_back((Eigen::MatrixXd(3, 1) << 1.0, 2.0, 4.0).finished());
  g.features.push_back(Eigen::MatrixXd::Zero(2, 1));
  g.labels.assign(2, {});

  Eigen::MatrixXd out = build_neighbor_mean(g, "xy").weights.multiply(g.features[0]);
  CHECK(out(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(out(1, 0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("neighbor mean: unknown relation is an error naming it") {
  HeteroGraph g = testing::fig1a_graph();
  CHECK_THROWS_WITH_AS(build_neighbor_mean(g, "nope"), doctest::Contains("nope"), Error);
}

TEST_CASE("neighbor mean: rows sum to one and pattern transposes the block") {
  Rng rng(11);
  HeteroGraph g = testing::random_two_type_graph(rng, 17, 13, 3, 2);
  for (int r = 0; r < g.schema.num_relations(); ++r) {
    NeighborMeanOperator op = build_neighbor_mean(g, r);
    const CsrMatrix& w = op.weights;
    for (int j = 0; j < w.rows; ++j) {
      double sum = 0.0;
      for (std::int64_t k = w.row_ptr[j]; k < w.row_ptr[j + 1]; ++k) sum += w.vals[k];
      if (w.row_ptr[j + 1] > w.row_ptr[j]) CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    CsrMatrix tt = g.edges[r].transposed();
    CHECK(w.row_ptr == tt.row_ptr);
    CHECK(w.col_idx == tt.col_idx);
  }
}

TEST_CASE("neighbor mean: output rows stay in the componentwise convex hull") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    HeteroGraph g = testing::random_two_type_graph(rng, 12, 9, 4, 4);
    for (int r = 0; r < g.schema.num_relations(); ++r) {
      const Eigen::MatrixXd& x = g.features[g.schema.relation(r).src];
      Eigen::MatrixXd out = build_neighbor_mean(g, r).weights.multiply(x);
      Eigen::RowVectorXd lo = x.colwise().minCoeff();
      Eigen::RowVectorXd hi = x.colwise().maxCoeff();
      const CsrMatrix& w = build_neighbor_mean(g, r).weights;
      for (int j = 0; j < out.rows(); ++j) {
        if (w.row_ptr[j + 1] == w.row_ptr[j]) continue;  // isolated rows are zero
        for (int c = 0; c < out.cols(); ++c) {
          CHECK(out(j, c) >= lo(c) - 1e-12);
          CHECK(out(j, c) <= hi(c) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("neighbor mean: agrees with a dense edge-loop oracle") {
  Rng rng(5);
  HeteroGraph g = testing::random_two_type_graph(rng, 40, 60, 5, 3);
  for (int r = 0; r < g.schema.num_relations(); ++r) {
    const RelationType& rel = g.schema.relation(r);
    const Eigen::MatrixXd& x = g.features[rel.src];
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(g.counts[rel.dst], x.cols());
    Eigen::VectorXd deg = Eigen::VectorXd::Zero(g.counts[rel.dst]);
    for (const auto& [i, j] : g.edges[r].pairs()) {
      expect.row(j) += x.row(i);
      deg[j] += 1.0;
    }
    for (int j = 0; j < expect.rows(); ++j)
      if (deg[j] > 0.0) expect.row(j) /= deg[j];
    Eigen::MatrixXd got = build_neighbor_mean(g, r).weights.multiply(x);
    CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("graph io: empty graph round-trips") {
  HeteroGraph g;
  g.schema.add_node_type("only", 3);
  g.counts = {0};
  g.features.push_back(Eigen::MatrixXd(0, 3));
  g.labels.emplace_back();

  fs::path dir = temp_dir("empty_graph");
  save_graph(g, dir.string());
  HeteroGraph back = load_graph(dir.string());
  CHECK(back.schema == g.schema);
  CHECK(back.counts == g.counts);
  CHECK(back.features[0].rows() == 0);
  CHECK(back.features[0].cols() == 3);
}

TEST_CASE("graph io: toy 2-type/4-relation graph round-trips") {
  HeteroGraph g = testing::fig1a_graph(3, 2);
  fs::path dir = temp_dir("fig1a_graph");
  save_graph(g, dir.string());
  HeteroGraph back = load_graph(dir.string());
  CHECK(back.schema == g.schema);
  CHECK(back.counts == g.counts);
  for (int r = 0; r < 4; ++r) CHECK(back.edges[r].pairs() == g.edges[r].pairs());
  for (int t = 0; t < 2; ++t) CHECK(back.features[t] == g.features[t]);
}

TEST_CASE("graph io: generated graph round-trips with bit-exact features") {
  SynthConfig cfg = toy_config();
  cfg.types[0].nodes_per_cluster = 12;  // desk-size copy of the toy layout
  cfg.types[1].nodes_per_cluster = 12;
  cfg.q = 0.08;
  cfg.seed = 42;
  SynthResult synth = generate(cfg);

  fs::path dir = temp_dir("synth_graph");
  save_synth(synth, dir.string());
  HeteroGraph back = load_graph(dir.string());
  CHECK(back.schema == synth.graph.schema);
  CHECK(back.counts == synth.graph.counts);
  for (int t = 0; t < back.schema.num_types(); ++t) {
    CHECK(back.features[t] == synth.graph.features[t]);  // bit-exact
    CHECK(back.labels[t] == synth.graph.labels[t]);
  }
  for (int r = 0; r < back.schema.num_relations(); ++r)
    CHECK(back.edges[r].pairs() == synth.graph.edges[r].pairs());
}

TEST_CASE("graph io: malformed inputs are reported with their location") {
  fs::path dir = temp_dir("bad_graph");
  write_text_file((dir / "schema.json").string(), "{ not json");
  CHECK_THROWS_WITH_AS(load_graph(dir.string()), doctest::Contains("schema.json"), Error);

  HeteroGraph g = testing::fig1a_graph();
  save_graph(g, dir.string());
  write_text_file((dir / "edges_ss.csv").string(), "src_id,dst_id\n5,0\n");
  CHECK_THROWS_WITH_AS(load_graph(dir.string()), doctest::Contains("out of range"), Error);

  save_graph(g, dir.string());
  write_text_file((dir / "features_t.csv").string(), "1.0,2.0,3.0\n4.0,5.0,6.0\n");
  CHECK_THROWS_WITH_AS(load_graph(dir.string()), doctest::Contains("features_t.csv"), Error);
}

TEST_CASE("validate: well-formed graph yields no violations") {
  HeteroGraph g = testing::fig1a_graph();
  CHECK(validate(g).empty());
}

TEST_CASE("validate: dst index == n_dst is one out-of-bounds violation") {
  HeteroGraph g = testing::fig1a_graph();
  g.edges[0].col_idx[0] = 2;  // n_dst is 2
  std::vector<Violation> v = validate(g);
  REQUIRE(v.size() == 1);
  CHECK(v[0].where == "relation 'ss'");
  CHECK(v[0].what.find("out of bounds") != std::string::npos);
}

TEST_CASE("validate: short feature matrix is one dimension violation") {
  HeteroGraph g = testing::fig1a_graph(3, 3);
  g.features[0] = Eigen::MatrixXd::Zero(1, 3);  // one row short
  std::vector<Violation> v = validate(g);
  REQUIRE(v.size() == 1);
  CHECK(v[0].where == "type 's'");
  CHECK(v[0].what.find("rows") != std::string::npos);
}

TEST_CASE("schema distance") {
  Schema s;
  s.add_node_type("a", 1);
  s.add_node_type("b", 1);
  s.add_node_type("c", 1);
  s.add_relation("ab", "a", "b");
  s.add_relation("bc", "b", "c");
  CHECK(schema_distance(s, 0, 0) == 0);
  CHECK(schema_distance(s, 0, 2) == 2);
  CHECK(schema_distance(s, 2, 0) == -1);
}
