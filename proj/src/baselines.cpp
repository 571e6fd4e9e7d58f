#include "baselines.hpp"

namespace ktn {

LpResult label_propagation(const HeteroGraph& graph, const GraphOperators& ops, int source_type,
                           const Eigen::MatrixXd& source_labels,
                           const std::vector<int>& labeled_rows, int num_iters, bool clamp) {
  const Schema& s = graph.schema;
  if (source_labels.rows() != graph.counts[source_type])
    throw Error("label_propagation: label rows do not match the source type");
  const Eigen::Index C = source_labels.cols();

  LpResult res;
  for (int t = 0; t < s.num_types(); ++t)
    res.dist.push_back(Eigen::MatrixXd::Zero(graph.counts[t], C));
  for (int i : labeled_rows) res.dist[source_type].row(i) = source_labels.row(i);

  // Total in-degree per node across all relations.
  std::vector<Eigen::VectorXd> indeg;
  for (int t = 0; t < s.num_types(); ++t) indeg.push_back(Eigen::VectorXd::Zero(graph.counts[t]));
  for (int r = 0; r < s.num_relations(); ++r) {
    const CsrMatrix& at = ops.adj_transpose[r];
    for (int j = 0; j < at.rows; ++j)
      indeg[s.relation(r).dst][j] += static_cast<double>(at.row_ptr[j + 1] - at.row_ptr[j]);
  }

  for (int iter = 0; iter < num_iters; ++iter) {
    std::vector<Eigen::MatrixXd> next;
    for (int t = 0; t < s.num_types(); ++t)
      next.push_back(Eigen::MatrixXd::Zero(graph.counts[t], C));
    for (int r = 0; r < s.num_relations(); ++r)
      next[s.relation(r).dst] += ops.adj_transpose[r].multiply(res.dist[s.relation(r).src]);
    for (int t = 0; t < s.num_types(); ++t) {
      for (int j = 0; j < graph.counts[t]; ++j) {
        if (indeg[t][j] > 0.0)
          res.dist[t].row(j) = next[t].row(j) / indeg[t][j];
        // nodes without incoming edges keep their current value
        double sum = res.dist[t].row(j).sum();
        if (sum > 0.0) res.dist[t].row(j) /= sum;
      }
    }
    if (clamp)
      for (int i : labeled_rows) res.dist[source_type].row(i) = source_labels.row(i);
  }
  return res;
}

Eigen::MatrixXd embedding_propagation(const HeteroGraph& graph, const GraphOperators& ops,
                                      int source_type, int target_type,
                                      const Eigen::MatrixXd& h_source, int num_iters) {
  const Schema& s = graph.schema;
  if (h_source.rows() != graph.counts[source_type])
    throw Error("embedding_propagation: embeddings do not match the source type");
  const Eigen::Index d = h_source.cols();

  std::vector<Eigen::MatrixXd> z;
  for (int t = 0; t < s.num_types(); ++t)
    z.push_back(t == source_type ? h_source
                                 : Eigen::MatrixXd::Zero(graph.counts[t], d));

  for (int iter = 0; iter < num_iters; ++iter) {
    std::vector<Eigen::MatrixXd> next = z;
    for (int t = 0; t < s.num_types(); ++t) {
      if (t == source_type) continue;  // source rows stay clamped
      std::vector<int> incoming = s.incoming(t);
      if (incoming.empty()) continue;
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(graph.counts[t], d);
      for (int r : incoming) acc += ops.nbr[r].weights.multiply(z[s.relation(r).src]);
      next[t] = acc / static_cast<double>(incoming.size());
    }
    z = std::move(next);
  }
  return z[target_type];
}

}  // namespace ktn
