#include "theory.hpp"

#include <limits>

namespace ktn {

namespace {

void require_theory_mode(const HgnnModel& model, bool need_identity) {
  if (model.config().message_mode != MessageMode::no_skip)
    throw Error("theory operators require no_skip message mode");
  if (need_identity && model.config().activation != Activation::identity)
    throw Error("theory operators require identity activation");
}

int find_relation(const Schema& s, int src, int dst) {
  for (int r = 0; r < s.num_relations(); ++r)
    if (s.relation(r).src == src && s.relation(r).dst == dst) return r;
  return -1;
}

}  // namespace

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_cutoff, double* cond,
                               int* rank) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? rel_cutoff * sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  int kept = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) {
      inv(i) = 1.0 / sv(i);
      ++kept;
    }
  }
  if (cond) {
    // full-spectrum condition: infinite when the matrix is singular
    double smin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
    *cond = sv.size() == 0 ? 0.0
            : smin > 0.0   ? sv(0) / smin
                           : std::numeric_limits<double>::infinity();
  }
  if (rank) *rank = kept;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd build_q_block(const HgnnModel& model, int layer, int src_type, int dst_type) {
  require_theory_mode(model, false);
  const Schema& s = model.schema();
  const int in_dim = model.input_dim(layer, src_type);
  const int d = model.config().hidden_dim;
  int r = find_relation(s, src_type, dst_type);
  if (r < 0) return Eigen::MatrixXd::Zero(in_dim, d);

  const Eigen::MatrixXd& m = model.message_param(layer, r).value;  // in_dim x d
  const Eigen::MatrixXd& w = model.transform_param(layer, dst_type).value;
  const std::vector<int> incoming = s.incoming(dst_type);
  int block = 0;
  while (incoming[block] != r) ++block;
  return m * w.middleRows(static_cast<Eigen::Index>(block) * d, d);
}

Eigen::MatrixXd build_q_stack(const HgnnModel& model, int layer, int dst_type) {
  const Schema& s = model.schema();
  int total = 0;
  for (int x = 0; x < s.num_types(); ++x) total += model.input_dim(layer, x);
  Eigen::MatrixXd stack(total, model.config().hidden_dim);
  int at = 0;
  for (int x = 0; x < s.num_types(); ++x) {
    Eigen::MatrixXd block = build_q_block(model, layer, x, dst_type);
    stack.middleRows(at, block.rows()) = block;
    at += static_cast<int>(block.rows());
  }
  return stack;
}

Eigen::MatrixXd build_a_stack(const HeteroGraph& graph, const GraphOperators& ops, int dst_type) {
  const Schema& s = graph.schema;
  Eigen::MatrixXd stack =
      Eigen::MatrixXd::Zero(graph.counts[dst_type], graph.total_nodes());
  int at = 0;
  for (int x = 0; x < s.num_types(); ++x) {
    int r = find_relation(s, x, dst_type);
    if (r >= 0) stack.middleCols(at, graph.counts[x]) = ops.nbr[r].weights.dense();
    at += graph.counts[x];
  }
  return stack;
}

double verify_block_identity(const HgnnModel& model, const HeteroGraph& graph,
                             const GraphOperators& ops, int layer) {
  require_theory_mode(model, true);
  if (layer < 1 || layer > model.config().layers)
    throw Error("verify_block_identity: bad layer " + std::to_string(layer));

  ad::Tape tape;
  ForwardResult fwd = hgnn_forward(tape, model, graph, ops);
  const Schema& s = graph.schema;

  double max_err = 0.0;
  for (int c = 0; c < s.num_types(); ++c) {
    const Eigen::MatrixXd& lhs = fwd.layer[layer][c].value();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(lhs.rows(), lhs.cols());
    for (int x = 0; x < s.num_types(); ++x) {
      int r = find_relation(s, x, c);
      if (r < 0) continue;
      Eigen::MatrixXd q = build_q_block(model, layer, x, c);
      rhs += ops.nbr[r].weights.multiply(fwd.layer[layer - 1][x].value()) * q;
    }
    double err = (lhs - rhs).cwiseAbs().maxCoeff();
    if (err > max_err) max_err = err;
  }
  return max_err;
}

TheoryOperators build_theory_map(const HgnnModel& model, const HeteroGraph& graph,
                                 const GraphOperators& ops, int source_type, int target_type,
                                 int layer) {
  require_theory_mode(model, true);
  if (layer < 1 || layer > model.config().layers)
    throw Error("build_theory_map: bad layer " + std::to_string(layer));

  TheoryOperators out;
  out.layer = layer;
  out.source_type = source_type;
  out.target_type = target_type;

  Eigen::MatrixXd a_s = build_a_stack(graph, ops, source_type);
  Eigen::MatrixXd a_t = build_a_stack(graph, ops, target_type);
  Eigen::MatrixXd q_s = build_q_stack(model, layer, source_type);
  Eigen::MatrixXd q_t = build_q_stack(model, layer, target_type);

  int rank_a = 0, rank_q = 0;
  Eigen::MatrixXd a_t_pinv = pseudo_inverse(a_t, 1e-10, &out.cond_a, &rank_a);
  Eigen::MatrixXd q_t_pinv = pseudo_inverse(q_t, 1e-10, &out.cond_q, &rank_q);
  out.a_star = a_s * a_t_pinv;
  out.q_star = q_t_pinv * q_s;
  out.rank_deficient = rank_a < std::min(a_t.rows(), a_t.cols()) ||
                       rank_q < std::min(q_t.rows(), q_t.cols());

  ad::Tape tape;
  ForwardResult fwd = hgnn_forward(tape, model, graph, ops);
  const Eigen::MatrixXd& h_s = fwd.layer[layer][source_type].value();
  const Eigen::MatrixXd& h_t = fwd.layer[layer][target_type].value();
  double denom = h_s.norm();
  out.reconstruction_residual =
      (out.a_star * h_t * out.q_star - h_s).norm() / (denom > 0.0 ? denom : 1.0);
  return out;
}

TheoryOperators build_theory_map_feature_only(const HgnnModel& model, int source_type,
                                              int target_type, int layer) {
  require_theory_mode(model, true);
  TheoryOperators out;
  out.layer = layer;
  out.source_type = source_type;
  out.target_type = target_type;
  Eigen::MatrixXd q_s = build_q_stack(model, layer, source_type);
  Eigen::MatrixXd q_t = build_q_stack(model, layer, target_type);
  int rank_q = 0;
  out.q_star = pseudo_inverse(q_t, 1e-10, &out.cond_q, &rank_q) * q_s;
  out.rank_deficient = rank_q < std::min(q_t.rows(), q_t.cols());
  out.reconstruction_residual = std::numeric_limits<double>::quiet_NaN();
  return out;
}

Eigen::MatrixXd theoretical_transfer(const Eigen::MatrixXd& h_t, const TheoryOperators& ops) {
  if (h_t.cols() != ops.q_star.rows())
    throw Error("theoretical_transfer: shape mismatch " + std::to_string(h_t.cols()) + " vs " +
                std::to_string(ops.q_star.rows()));
  return h_t * ops.q_star;
}

}  // namespace ktn
