#include "graph.hpp"

#include <deque>

namespace ktn {

int HeteroGraph::total_nodes() const {
  int n = 0;
  for (int c : counts) n += c;
  return n;
}

NeighborMeanOperator build_neighbor_mean(const HeteroGraph& g, int relation) {
  if (relation < 0 || relation >= g.schema.num_relations())
    throw Error("unknown relation id " + std::to_string(relation));
  CsrMatrix t = g.edges[relation].transposed();
  t.vals.assign(t.col_idx.size(), 0.0);
  for (int r = 0; r < t.rows; ++r) {
    std::int64_t deg = t.row_ptr[r + 1] - t.row_ptr[r];
    if (deg == 0) continue;
    double w = 1.0 / static_cast<double>(deg);
    for (std::int64_t k = t.row_ptr[r]; k < t.row_ptr[r + 1]; ++k) t.vals[k] = w;
  }
  return {relation, std::move(t)};
}

NeighborMeanOperator build_neighbor_mean(const HeteroGraph& g, const std::string& relation) {
  int id = g.schema.find_relation(relation);
  if (id < 0) throw Error("unknown relation '" + relation + "'");
  return build_neighbor_mean(g, id);
}

GraphOperators build_operators(const HeteroGraph& g) {
  GraphOperators ops;
  ops.nbr.reserve(g.schema.num_relations());
  for (int r = 0; r < g.schema.num_relations(); ++r) {
    ops.nbr.push_back(build_neighbor_mean(g, r));
    ops.adj_transpose.push_back(g.edges[r].transposed());
    const CsrMatrix& w = ops.nbr.back().weights;
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(w.rows);
    for (int j = 0; j < w.rows; ++j)
      if (w.row_ptr[j + 1] > w.row_ptr[j]) mask[j] = 1.0;
    ops.dst_mask.push_back(std::move(mask));
  }
  return ops;
}

std::vector<Violation> validate(const HeteroGraph& g) {
  std::vector<Violation> out;
  const Schema& s = g.schema;

  if (static_cast<int>(g.counts.size()) != s.num_types())
    out.push_back({"graph", "counts size != number of node types"});
  if (static_cast<int>(g.features.size()) != s.num_types())
    out.push_back({"graph", "features size != number of node types"});
  if (static_cast<int>(g.labels.size()) != s.num_types())
    out.push_back({"graph", "labels size != number of node types"});
  if (static_cast<int>(g.edges.size()) != s.num_relations())
    out.push_back({"graph", "edge blocks size != number of relations"});
  if (!out.empty()) return out;  // container shapes broken, skip the rest

  for (int t = 0; t < s.num_types(); ++t) {
    const std::string where = "type '" + s.type(t).name + "'";
    if (g.counts[t] < 0) out.push_back({where, "negative node count"});
    if (g.features[t].rows() != g.counts[t])
      out.push_back({where, "feature matrix has " + std::to_string(g.features[t].rows()) +
                                " rows, expected " + std::to_string(g.counts[t])});
    if (g.features[t].cols() != s.type(t).feature_dim)
      out.push_back({where, "feature matrix has " + std::to_string(g.features[t].cols()) +
                                " cols, expected " + std::to_string(s.type(t).feature_dim)});
    if (g.has_labels(t)) {
      if (g.labels[t].rows() != g.counts[t])
        out.push_back({where, "label matrix has " + std::to_string(g.labels[t].rows()) +
                                  " rows, expected " + std::to_string(g.counts[t])});
      if (s.type(t).num_classes > 0 && g.labels[t].cols() != s.type(t).num_classes)
        out.push_back({where, "label matrix has " + std::to_string(g.labels[t].cols()) +
                                  " cols, expected " + std::to_string(s.type(t).num_classes)});
      for (int i = 0; i < g.labels[t].rows(); ++i) {
        for (int c = 0; c < g.labels[t].cols(); ++c) {
          double v = g.labels[t](i, c);
          if (v != 0.0 && v != 1.0) {
            out.push_back({where, "label entry (" + std::to_string(i) + ", " +
                                      std::to_string(c) + ") = " + std::to_string(v) +
                                      " is not 0/1"});
            c = static_cast<int>(g.labels[t].cols());
            i = static_cast<int>(g.labels[t].rows());
          }
        }
      }
    }
  }

  for (int r = 0; r < s.num_relations(); ++r) {
    const RelationType& rel = s.relation(r);
    const std::string where = "relation '" + rel.name + "'";
    const CsrMatrix& a = g.edges[r];
    if (a.rows != g.counts[rel.src] || a.cols != g.counts[rel.dst]) {
      out.push_back({where, "block is " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                ", expected " + std::to_string(g.counts[rel.src]) + "x" +
                                std::to_string(g.counts[rel.dst])});
      continue;
    }
    for (int i = 0; i < a.rows; ++i) {
      for (std::int64_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
        int j = a.col_idx[k];
        if (j < 0 || j >= g.counts[rel.dst])
          out.push_back({where, "edge (" + std::to_string(i) + ", " + std::to_string(j) +
                                    "): dst index out of bounds [0, " +
                                    std::to_string(g.counts[rel.dst]) + ")"});
      }
    }
  }
  return out;
}

int schema_distance(const Schema& schema, int from_type, int to_type) {
  if (from_type == to_type) return 0;
  std::vector<int> dist(schema.num_types(), -1);
  std::deque<int> queue;
  dist[from_type] = 0;
  queue.push_back(from_type);
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int r : schema.outgoing(u)) {
      int v = schema.relation(r).dst;
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        if (v == to_type) return dist[v];
        queue.push_back(v);
      }
    }
  }
  return dist[to_type];
}

}  // namespace ktn
