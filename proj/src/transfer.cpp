#include "transfer.hpp"

#include <algorithm>
#include <numeric>

#include "metrics.hpp"
#include "rng.hpp"

using nlohmann::json;

namespace ktn {

namespace {

void dfs_paths(const Schema& schema, int at, int to, int max_len, std::vector<int>& chain,
               std::vector<MetaPath>& out) {
  if (static_cast<int>(chain.size()) >= max_len) return;
  for (int r = 0; r < schema.num_relations(); ++r) {
    if (schema.relation(r).src != at) continue;
    chain.push_back(r);
    if (schema.relation(r).dst == to) out.push_back({chain});
    dfs_paths(schema, schema.relation(r).dst, to, max_len, chain, out);
    chain.pop_back();
  }
}

}  // namespace

std::vector<MetaPath> enumerate_metapaths(const Schema& schema, int from_type, int to_type,
                                          int max_len) {
  std::vector<MetaPath> out;
  std::vector<int> chain;
  dfs_paths(schema, from_type, to_type, max_len, chain, out);

  auto names = [&](const MetaPath& p) {
    std::vector<std::string> n;
    n.reserve(p.relations.size());
    for (int r : p.relations) n.push_back(schema.relation(r).name);
    return n;
  };
  std::sort(out.begin(), out.end(), [&](const MetaPath& a, const MetaPath& b) {
    if (a.length() != b.length()) return a.length() < b.length();
    return names(a) < names(b);
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const MetaPath& a, const MetaPath& b) {
                          return a.relations == b.relations;
                        }),
            out.end());
  return out;
}

KtnMapper KtnMapper::init(const Schema& schema, int source_type, int target_type,
                          std::vector<MetaPath> paths, int dim, std::uint64_t seed,
                          double lambda) {
  if (lambda < 0.0) throw Error("ktn mapper: lambda must be >= 0");
  for (const auto& p : paths) {
    if (p.relations.empty()) throw Error("ktn mapper: empty meta-path");
    int at = target_type;
    for (int r : p.relations) {
      if (schema.relation(r).src != at)
        throw Error("ktn mapper: meta-path does not chain at relation '" +
                    schema.relation(r).name + "'");
      at = schema.relation(r).dst;
    }
    if (at != source_type) throw Error("ktn mapper: meta-path does not end at the source type");
  }

  KtnMapper m;
  m.source_type_ = source_type;
  m.target_type_ = target_type;
  m.dim_ = dim;
  m.lambda_ = lambda;
  m.paths_ = std::move(paths);
  Rng rng(seed);
  for (std::size_t p = 0; p < m.paths_.size(); ++p) {
    std::vector<std::unique_ptr<ad::Param>> steps;
    for (std::size_t s = 0; s < m.paths_[p].relations.size(); ++s) {
      const std::string name = "ktn.p" + std::to_string(p) + ".s" + std::to_string(s) + "." +
                               schema.relation(m.paths_[p].relations[s]).name;
      Eigen::MatrixXd t =
          Eigen::MatrixXd::Identity(dim, dim) + 0.01 * glorot_uniform(dim, dim, rng);
      steps.push_back(std::make_unique<ad::Param>(name, std::move(t)));
    }
    m.transforms_.push_back(std::move(steps));
  }
  return m;
}

ad::Param& KtnMapper::transform(int path, int step) const {
  return *transforms_.at(path).at(step);
}

std::vector<ad::Param*> KtnMapper::parameters() const {
  std::vector<ad::Param*> out;
  for (const auto& path : transforms_)
    for (const auto& p : path) out.push_back(p.get());
  return out;
}

json KtnMapper::to_json(const Schema& schema) const {
  json j;
  j["source_type"] = schema.type(source_type_).name;
  j["target_type"] = schema.type(target_type_).name;
  j["dim"] = dim_;
  j["lambda"] = lambda_;
  j["normalize_adjacency"] = normalize_adjacency_;
  json paths = json::array();
  for (std::size_t p = 0; p < paths_.size(); ++p) {
    json rels = json::array();
    for (int r : paths_[p].relations) rels.push_back(schema.relation(r).name);
    paths.push_back(std::move(rels));
  }
  j["paths"] = std::move(paths);
  json params = json::object();
  for (const auto& path : transforms_) {
    for (const auto& p : path) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < p->value.cols(); ++c) row.push_back(p->value(i, c));
        rows.push_back(std::move(row));
      }
      params[p->name] = std::move(rows);
    }
  }
  j["params"] = std::move(params);
  return j;
}

KtnMapper KtnMapper::from_json(const json& j, const Schema& schema) {
  std::vector<MetaPath> paths;
  for (const auto& rels : j.at("paths")) {
    MetaPath p;
    for (const auto& name : rels) p.relations.push_back(schema.relation_id(name.get<std::string>()));
    paths.push_back(std::move(p));
  }
  KtnMapper m = init(schema, schema.type_id(j.at("source_type").get<std::string>()),
                     schema.type_id(j.at("target_type").get<std::string>()), std::move(paths),
                     j.at("dim").get<int>(), 0, j.at("lambda").get<double>());
  m.normalize_adjacency_ = j.value("normalize_adjacency", true);
  for (const auto& path : m.transforms_) {
    for (const auto& p : path) {
      if (!j.at("params").contains(p->name))
        throw Error("mapper checkpoint: missing parameter '" + p->name + "'");
      const json& rows = j.at("params")[p->name];
      for (Eigen::Index i = 0; i < p->value.rows(); ++i)
        for (Eigen::Index c = 0; c < p->value.cols(); ++c)
          p->value(i, c) = rows[i][c].get<double>();
    }
  }
  return m;
}

ad::Tensor ktn_map_train(ad::Tape& tape, const KtnMapper& mapper, const HeteroGraph& graph,
                         const GraphOperators& ops, ad::Tensor h_t) {
  const int n_s = graph.counts[mapper.source_type()];
  ad::Tensor sum;
  for (std::size_t p = 0; p < mapper.paths().size(); ++p) {
    ad::Tensor z = h_t;
    const auto& rels = mapper.paths()[p].relations;
    for (std::size_t s = 0; s < rels.size(); ++s) {
      const CsrMatrix& a = mapper.normalize_adjacency() ? ops.nbr[rels[s]].weights
                                                        : ops.adj_transpose[rels[s]];
      z = tape.sparse_matmul(a, z);
      z = tape.matmul(z, tape.leaf(mapper.transform(static_cast<int>(p), static_cast<int>(s))));
    }
    sum = sum.defined() ? tape.scale_add(sum, z, 1.0, 1.0) : z;
  }
  if (!sum.defined())
    sum = tape.constant(Eigen::MatrixXd::Zero(n_s, mapper.dim() > 0 ? mapper.dim() : h_t.cols()));
  return sum;
}

ad::Tensor ktn_map_test(ad::Tape& tape, const KtnMapper& mapper, ad::Tensor h_t) {
  ad::Tensor sum;
  for (std::size_t p = 0; p < mapper.paths().size(); ++p) {
    ad::Tensor z = h_t;
    for (std::size_t s = 0; s < mapper.paths()[p].relations.size(); ++s)
      z = tape.matmul(z, tape.leaf(mapper.transform(static_cast<int>(p), static_cast<int>(s))));
    sum = sum.defined() ? tape.scale_add(sum, z, 1.0, 1.0) : z;
  }
  if (!sum.defined())
    sum = tape.constant(Eigen::MatrixXd::Zero(h_t.rows(), h_t.cols()));
  return sum;
}

namespace {

ad::Tensor class_loss(ad::Tape& tape, ad::Tensor logits, const Eigen::MatrixXd& labels,
                      ClassLossForm form) {
  if (form == ClassLossForm::softmax) return tape.softmax_xent(logits, labels);
  return tape.sigmoid_bce(logits, labels);
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(k) = m.row(rows[k]);
  return out;
}

}  // namespace

JointLossParts joint_loss(ad::Tape& tape, const HgnnModel& model, const KtnMapper& mapper,
                          const HeteroGraph& graph, const GraphOperators& ops,
                          const ForwardResult& fwd, const Eigen::MatrixXd& source_labels,
                          const std::vector<int>& source_rows, ClassLossForm cl_form,
                          KtnLossForm ktn_form) {
  const int s = mapper.source_type();
  const int t = mapper.target_type();
  if (source_labels.rows() != graph.counts[s])
    throw Error("joint_loss: missing or misshapen source labels");

  JointLossParts parts;
  ad::Tensor logits = hgnn_classify(tape, model, fwd.final()[s]);
  ad::Tensor train_logits = tape.gather_rows(logits, source_rows);
  parts.cl = class_loss(tape, train_logits, take_rows(source_labels, source_rows), cl_form);

  ad::Tensor h_star = ktn_map_train(tape, mapper, graph, ops, fwd.final()[t]);
  parts.ktn = ktn_form == KtnLossForm::mse ? tape.mse_loss(fwd.final()[s], h_star)
                                           : tape.frobenius_loss(fwd.final()[s], h_star);
  parts.total = tape.scale_add(parts.cl, parts.ktn, 1.0, mapper.lambda());
  return parts;
}

ad::Tensor predict_target(ad::Tape& tape, const HgnnModel& model, const KtnMapper& mapper,
                          const HeteroGraph& graph, const GraphOperators& ops) {
  ForwardResult fwd = hgnn_forward(tape, model, graph, ops);
  ad::Tensor mapped = ktn_map_test(tape, mapper, fwd.final()[mapper.target_type()]);
  return hgnn_classify(tape, model, mapped);
}

TransferTask make_task(const Eigen::MatrixXd& y_source, const Eigen::MatrixXd& y_target,
                       double train_frac, std::uint64_t seed) {
  TransferTask task;
  task.y_source = y_source;
  task.y_target = y_target;
  std::vector<int> labeled;
  for (Eigen::Index i = 0; i < y_source.rows(); ++i)
    if (y_source.row(i).sum() > 0.0) labeled.push_back(static_cast<int>(i));
  Rng rng(seed);
  std::shuffle(labeled.begin(), labeled.end(), rng);
  std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(labeled.size()));
  if (n_train == 0 && !labeled.empty()) n_train = labeled.size() > 1 ? labeled.size() - 1 : 1;
  task.train_rows.assign(labeled.begin(), labeled.begin() + n_train);
  task.test_rows.assign(labeled.begin() + n_train, labeled.end());
  std::sort(task.train_rows.begin(), task.train_rows.end());
  std::sort(task.test_rows.begin(), task.test_rows.end());
  return task;
}

TrainLog train(HgnnModel& model, KtnMapper& mapper, const HeteroGraph& graph,
               const GraphOperators& ops, const TransferTask& task, const TrainOptions& opts) {
  std::vector<ad::Param*> params = model.parameters();
  for (ad::Param* p : mapper.parameters()) params.push_back(p);

  TrainLog log;
  const int s = mapper.source_type();
  const bool have_target_labels = task.y_target.size() > 0;
  Rng batch_rng(opts.seed ^ 0x9e3779b97f4a7c15ull);

  auto eval_metrics = [&](ad::Tape& tape, ad::Tensor logits_all_src) {
    const std::vector<int>& rows = task.test_rows.empty() ? task.train_rows : task.test_rows;
    double src_acc = accuracy(take_rows(logits_all_src.value(), rows),
                              take_rows(task.y_source, rows));
    double tgt_acc = 0.0;
    if (have_target_labels) {
      ad::Tensor tgt_logits = predict_target(tape, model, mapper, graph, ops);
      tgt_acc = accuracy(tgt_logits.value(), task.y_target);
    }
    return std::make_pair(src_acc, tgt_acc);
  };

  for (int epoch = 0; epoch <= opts.epochs; ++epoch) {
    const bool last = epoch == opts.epochs;
    ad::Tape tape;
    ForwardResult fwd = hgnn_forward(tape, model, graph, ops);

    std::vector<int> cl_rows = task.train_rows;
    if (opts.batch_nodes > 0 && static_cast<int>(cl_rows.size()) > opts.batch_nodes) {
      std::shuffle(cl_rows.begin(), cl_rows.end(), batch_rng);
      cl_rows.resize(opts.batch_nodes);
      std::sort(cl_rows.begin(), cl_rows.end());
    }

    JointLossParts parts;
    try {
      parts = joint_loss(tape, model, mapper, graph, ops, fwd, task.y_source, cl_rows,
                         opts.cl_loss, opts.ktn_loss);
    } catch (const Error& e) {
      if (std::string(e.what()).find("non-finite") != std::string::npos)
        throw Error("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      throw;
    }
    const double total = parts.total.value()(0, 0);
    if (!std::isfinite(total))
      throw Error("training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");

    const bool do_eval = last || (opts.eval_every > 0 && epoch % opts.eval_every == 0);
    if (do_eval) {
      ad::Tensor logits = hgnn_classify(tape, model, fwd.final()[s]);
      auto [src_acc, tgt_acc] = eval_metrics(tape, logits);
      log.rows.push_back({epoch, parts.cl.value()(0, 0), parts.ktn.value()(0, 0), total,
                          src_acc, tgt_acc});
      if (last) {
        log.final_src_metric = src_acc;
        log.final_tgt_metric = tgt_acc;
      }
    }
    if (last) break;

    ad::zero_grads(params);
    tape.backward(parts.total);
    if (opts.grad_norms_every > 0 && epoch % opts.grad_norms_every == 0) {
      std::map<std::string, double> norms = model.grad_norms();
      for (ad::Param* p : mapper.parameters()) norms[p->name] = p->grad_norm();
      log.grad_norms.emplace_back(epoch, std::move(norms));
    }
    ad::adam_step(params, opts.lr, opts.adam_beta1, opts.adam_beta2, opts.adam_eps, epoch + 1);
  }
  return log;
}

}  // namespace ktn
