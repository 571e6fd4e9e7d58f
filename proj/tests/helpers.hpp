#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"

namespace ktn::testing {

// The 4-node toy graph: two s-nodes {v1, v3}, two t-nodes {v2, v4}, with
// v3 -> v1 (ss), v2 -> v1 (ts), v1 -> v2 (st), v4 -> v2 (tt).
inline HeteroGraph fig1a_graph(int ds = 1, int dt = 1) {
  HeteroGraph g;
  g.schema.add_node_type("s", ds, 2);
  g.schema.add_node_type("t", dt, 2);
  g.schema.add_relation("ss", "s", "s");
  g.schema.add_relation("ts", "t", "s");
  g.schema.add_relation("st", "s", "t");
  g.schema.add_relation("tt", "t", "t");
  g.counts = {2, 2};
  g.edges.push_back(CsrMatrix::from_pairs(2, 2, {{1, 0}}));  // ss: v3 -> v1
  g.edges.push_back(CsrMatrix::from_pairs(2, 2, {{0, 0}}));  // ts: v2 -> v1
  g.edges.push_back(CsrMatrix::from_pairs(2, 2, {{0, 0}}));  // st: v1 -> v2
  g.edges.push_back(CsrMatrix::from_pairs(2, 2, {{1, 0}}));  // tt: v4 -> v2
  Rng rng(7);
  g.features.push_back(gaussian(2, ds, rng));
  g.features.push_back(gaussian(2, dt, rng));
  g.labels.emplace_back();
  g.labels.emplace_back();
  return g;
}

// Random graph over the complete 2-type relation set with every node given
// at least one in-neighbor per relation (keeps mean operators total).
inline HeteroGraph random_two_type_graph(Rng& rng, int n_s, int n_t, int d_s, int d_t,
                                         double extra_edge_prob = 0.25) {
  HeteroGraph g;
  g.schema.add_node_type("s", d_s);
  g.schema.add_node_type("t", d_t);
  g.schema.add_relation("ss", "s", "s");
  g.schema.add_relation("ts", "t", "s");
  g.schema.add_relation("st", "s", "t");
  g.schema.add_relation("tt", "t", "t");
  g.counts = {n_s, n_t};
  auto edges = [&](int n_src, int n_dst) {
    std::vector<std::pair<int, int>> pairs;
    std::uniform_int_distribution<int> pick(0, n_src - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int j = 0; j < n_dst; ++j) {
      pairs.emplace_back(pick(rng), j);
      for (int i = 0; i < n_src; ++i)
        if (unif(rng) < extra_edge_prob) pairs.emplace_back(i, j);
    }
    return pairs;
  };
  g.edges.push_back(CsrMatrix::from_pairs(n_s, n_s, edges(n_s, n_s)));
  g.edges.push_back(CsrMatrix::from_pairs(n_t, n_s, edges(n_t, n_s)));
  g.edges.push_back(CsrMatrix::from_pairs(n_s, n_t, edges(n_s, n_t)));
  g.edges.push_back(CsrMatrix::from_pairs(n_t, n_t, edges(n_t, n_t)));
  g.features.push_back(gaussian(n_s, d_s, rng));
  g.features.push_back(gaussian(n_t, d_t, rng));
  g.labels.emplace_back();
  g.labels.emplace_back();
  return g;
}

}  // namespace ktn::testing
