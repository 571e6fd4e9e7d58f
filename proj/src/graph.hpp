#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "schema.hpp"
#include "sparse.hpp"

namespace ktn {

// Typed node sets with relation-typed sparse edge blocks, per-type feature
// matrices and optional per-type multi-hot label matrices. Immutable after
// construction; safe to share across threads for reading.
struct HeteroGraph {
  Schema schema;
  std::vector<int> counts;                // nodes per type
  std::vector<CsrMatrix> edges;           // per relation, (n_src x n_dst) pattern
  std::vector<Eigen::MatrixXd> features;  // per type, (n_t x d_t)
  std::vector<Eigen::MatrixXd> labels;    // per type, (n_t x C_t); 0x0 when absent

  int num_nodes(int t) const { return counts[t]; }
  int total_nodes() const;
  bool has_labels(int t) const { return labels[t].size() > 0; }
};

// Row-stochastic mean operator of a relation r = (x -> y): shape (n_y x n_x),
// row j holds 1/|E_r(j)| on each x-neighbor of y-node j. Rows of isolated
// nodes are all-zero, which realizes the zero-aggregate convention.
struct NeighborMeanOperator {
  int relation = -1;
  CsrMatrix weights;
};

NeighborMeanOperator build_neighbor_mean(const HeteroGraph& g, int relation);
NeighborMeanOperator build_neighbor_mean(const HeteroGraph& g, const std::string& relation);

// Per-relation operators the forward passes and baselines need, built once
// per graph.
struct GraphOperators {
  std::vector<NeighborMeanOperator> nbr;       // per relation
  std::vector<CsrMatrix> adj_transpose;        // per relation: A_r^T pattern
  std::vector<Eigen::VectorXd> dst_mask;       // per relation: 1 where dst has neighbors
};

GraphOperators build_operators(const HeteroGraph& g);

struct Violation {
  std::string where;  // offending type/relation/index
  std::string what;
  std::string str() const { return where + ": " + what; }
};

// Empty iff all HeteroGraph invariants hold. Violations are data, not errors.
std::vector<Violation> validate(const HeteroGraph& g);

// Fewest relation hops from one type to another in the schema type-graph;
// -1 when unreachable.
int schema_distance(const Schema& schema, int from_type, int to_type);

}  // namespace ktn
