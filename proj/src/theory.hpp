#pragma once

#include <Eigen/Dense>

#include "hgnn.hpp"

namespace ktn {

// Exact cross-type operators for the no-skip linear regime. q_star maps
// target-type embeddings into the source embedding space; a_star aggregates
// the mapped rows onto source nodes. Materialized densely.
struct TheoryOperators {
  int layer = 0;
  int source_type = -1;
  int target_type = -1;
  Eigen::MatrixXd a_star;  // n_s x n_t
  Eigen::MatrixXd q_star;  // d x d
  double reconstruction_residual = 0.0;  // relative Frobenius
  double cond_a = 0.0;
  double cond_q = 0.0;
  bool rank_deficient = false;  // a pseudo-inverse dropped singular values
};

// SVD pseudo-inverse with singular values below rel_cutoff * sigma_max
// dropped. cond is the ratio of the largest to the smallest retained
// singular value; rank the number retained.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_cutoff = 1e-10,
                               double* cond = nullptr, int* rank = nullptr);

// Q_{x,dst} = M_{x->dst} * W_dst[block of (x->dst)], a (in_dim(x) x d) block;
// zero when the relation is absent from the schema. Requires no_skip mode.
Eigen::MatrixXd build_q_block(const HgnnModel& model, int layer, int src_type, int dst_type);

// Blocks stacked vertically over all source types in schema order.
Eigen::MatrixXd build_q_stack(const HgnnModel& model, int layer, int dst_type);

// Neighbor-mean blocks [N_{x->dst}]_x concatenated horizontally over all
// types in schema order (n_dst x total_nodes), zero where absent.
Eigen::MatrixXd build_a_stack(const HeteroGraph& graph, const GraphOperators& ops, int dst_type);

// Max entrywise discrepancy, over every type, between the layer-l forward
// output and the stacked-block form  A_stack * blockdiag(H^{(l-1)}) * Q_stack.
// Requires no_skip mode and identity activation.
double verify_block_identity(const HgnnModel& model, const HeteroGraph& graph,
                             const GraphOperators& ops, int layer);

TheoryOperators build_theory_map(const HgnnModel& model, const HeteroGraph& graph,
                                 const GraphOperators& ops, int source_type, int target_type,
                                 int layer);

// q_star only, without the dense aggregation operator; the residual field is
// NaN. Enough for the feature-space evaluation path.
TheoryOperators build_theory_map_feature_only(const HgnnModel& model, int source_type,
                                              int target_type, int layer);

// Feature-space map only (no a_star): H_t * q_star.
Eigen::MatrixXd theoretical_transfer(const Eigen::MatrixXd& h_t, const TheoryOperators& ops);

}  // namespace ktn
