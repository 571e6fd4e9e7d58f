#pragma once

#include <Eigen/Dense>
#include <vector>

#include "graph.hpp"

namespace ktn {

// Type-agnostic label propagation: every node averages the label
// distributions of its in-neighbors across all relations, optionally
// re-clamping the known source rows each iteration. Nodes without incoming
// edges keep their current value. Rows are renormalized to the simplex.
struct LpResult {
  std::vector<Eigen::MatrixXd> dist;  // per type, (n_t x C)
};

LpResult label_propagation(const HeteroGraph& graph, const GraphOperators& ops, int source_type,
                           const Eigen::MatrixXd& source_labels,
                           const std::vector<int>& labeled_rows, int num_iters, bool clamp);

// Embedding propagation: source rows are clamped to the given embeddings,
// every other type starts at zero and averages N_r * Z over its incoming
// relations (Jacobi updates). Returns the target-type rows after num_iters.
Eigen::MatrixXd embedding_propagation(const HeteroGraph& graph, const GraphOperators& ops,
                                      int source_type, int target_type,
                                      const Eigen::MatrixXd& h_source, int num_iters);

}  // namespace ktn
