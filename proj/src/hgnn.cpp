#include "hgnn.hpp"

#include <unordered_map>

#include "graph_io.hpp"
#include "rng.hpp"

using nlohmann::json;

namespace ktn {

std::string to_string(MessageMode m) {
  return m == MessageMode::skip_concat ? "skip_concat" : "no_skip";
}
std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }
std::string to_string(Sharing s) {
  switch (s) {
    case Sharing::full: return "full";
    case Sharing::v1: return "v1";
    default: return "v2";
  }
}

MessageMode message_mode_from_string(const std::string& s) {
  if (s == "skip_concat") return MessageMode::skip_concat;
  if (s == "no_skip") return MessageMode::no_skip;
  throw Error("unknown message mode '" + s + "'");
}
Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw Error("unknown activation '" + s + "'");
}
Sharing sharing_from_string(const std::string& s) {
  if (s == "full") return Sharing::full;
  if (s == "v1") return Sharing::v1;
  if (s == "v2") return Sharing::v2;
  throw Error("unknown sharing mode '" + s + "'");
}

void HgnnConfig::check() const {
  if (layers < 1) throw Error("hgnn config: layers must be >= 1");
  if (hidden_dim < 1) throw Error("hgnn config: hidden_dim must be >= 1");
  if (num_classes < 0) throw Error("hgnn config: negative num_classes");
}

ad::Param* HgnnModel::make_param(const std::string& name, int rows, int cols, Rng& rng) {
  store_.push_back(std::make_unique<ad::Param>(name, glorot_uniform(rows, cols, rng)));
  return store_.back().get();
}

int HgnnModel::input_dim(int layer, int type) const {
  if (layer == 1 && config_.sharing == Sharing::full) return schema_.type(type).feature_dim;
  return config_.hidden_dim;
}

HgnnModel HgnnModel::init(const Schema& schema, const HgnnConfig& config, std::uint64_t seed) {
  config.check();
  if (schema.num_types() < 1) throw Error("hgnn init: schema has no node types");

  HgnnModel m;
  m.schema_ = schema;
  m.config_ = config;
  Rng rng(seed);

  const int d = config.hidden_dim;
  const int skip = config.message_mode == MessageMode::skip_concat ? 1 : 0;
  const int T = schema.num_types();
  const int R = schema.num_relations();

  if (config.sharing != Sharing::full) {
    m.proj_.resize(T, nullptr);
    for (int t = 0; t < T; ++t)
      m.proj_[t] = m.make_param("proj." + schema.type(t).name, schema.type(t).feature_dim, d, rng);
  }

  m.msg_.assign(config.layers, std::vector<ad::Param*>(R, nullptr));
  m.xform_.assign(config.layers, std::vector<ad::Param*>(T, nullptr));

  auto msg_in = [&](int layer, int r) {
    int w = m.input_dim(layer, schema.relation(r).src);
    if (skip) w += m.input_dim(layer, schema.relation(r).dst);
    return w;
  };

  switch (config.sharing) {
    case Sharing::full: {
      for (int l = 1; l <= config.layers; ++l) {
        const std::string lp = "l" + std::to_string(l);
        for (int r = 0; r < R; ++r)
          m.msg_[l - 1][r] = m.make_param(lp + ".M." + schema.relation(r).name, msg_in(l, r), d, rng);
        for (int t = 0; t < T; ++t) {
          int k = static_cast<int>(schema.incoming(t).size());
          if (k == 0) continue;
          m.xform_[l - 1][t] = m.make_param(lp + ".W." + schema.type(t).name, k * d, d, rng);
        }
      }
      break;
    }
    case Sharing::v1: {
      int k = -1;
      for (int t = 0; t < T; ++t) {
        int kt = static_cast<int>(schema.incoming(t).size());
        if (kt == 0) continue;
        if (k < 0) k = kt;
        if (kt != k)
          throw Error("v1 sharing needs a uniform incoming-relation count; type '" +
                      schema.type(t).name + "' has " + std::to_string(kt) + ", expected " +
                      std::to_string(k));
      }
      ad::Param* shared_m = m.make_param("shared.M", d * (1 + skip), d, rng);
      ad::Param* shared_w = k > 0 ? m.make_param("shared.W", k * d, d, rng) : nullptr;
      for (int l = 0; l < config.layers; ++l) {
        for (int r = 0; r < R; ++r) m.msg_[l][r] = shared_m;
        for (int t = 0; t < T; ++t)
          if (!schema.incoming(t).empty()) m.xform_[l][t] = shared_w;
      }
      break;
    }
    case Sharing::v2: {
      for (int r = 0; r < R; ++r) {
        ad::Param* p =
            m.make_param("shared.M." + schema.relation(r).name, d * (1 + skip), d, rng);
        for (int l = 0; l < config.layers; ++l) m.msg_[l][r] = p;
      }
      for (int t = 0; t < T; ++t) {
        int k = static_cast<int>(schema.incoming(t).size());
        if (k == 0) continue;
        ad::Param* p = m.make_param("shared.W." + schema.type(t).name, k * d, d, rng);
        for (int l = 0; l < config.layers; ++l) m.xform_[l][t] = p;
      }
      break;
    }
  }

  if (config.num_classes > 0) {
    m.cls_w_ = m.make_param("cls.W", d, config.num_classes, rng);
    m.store_.push_back(std::make_unique<ad::Param>(
        "cls.b", Eigen::MatrixXd::Zero(1, config.num_classes)));
    m.cls_b_ = m.store_.back().get();
  }
  return m;
}

ad::Param& HgnnModel::message_param(int layer, int relation) const {
  if (layer < 1 || layer > config_.layers) throw Error("message_param: bad layer " + std::to_string(layer));
  ad::Param* p = msg_.at(layer - 1).at(relation);
  if (!p) throw Error("message_param: no parameter for relation " + std::to_string(relation));
  return *p;
}

ad::Param& HgnnModel::transform_param(int layer, int type) const {
  if (layer < 1 || layer > config_.layers) throw Error("transform_param: bad layer " + std::to_string(layer));
  ad::Param* p = xform_.at(layer - 1).at(type);
  if (!p)
    throw Error("transform_param: type '" + schema_.type(type).name + "' has no incoming relations");
  return *p;
}

ad::Param& HgnnModel::classifier_weight() const {
  if (!cls_w_) throw Error("model has no classifier head");
  return *cls_w_;
}

ad::Param& HgnnModel::classifier_bias() const {
  if (!cls_b_) throw Error("model has no classifier head");
  return *cls_b_;
}

std::vector<ad::Param*> HgnnModel::parameters() const {
  std::vector<ad::Param*> out;
  out.reserve(store_.size());
  for (const auto& p : store_) out.push_back(p.get());
  return out;
}

std::map<std::string, double> HgnnModel::grad_norms() const {
  std::map<std::string, double> out;
  for (const auto& p : store_) out[p->name] = p->grad_norm();
  return out;
}

json HgnnModel::to_json() const {
  json j;
  j["config"] = {{"layers", config_.layers},
                 {"hidden_dim", config_.hidden_dim},
                 {"message_mode", to_string(config_.message_mode)},
                 {"activation", to_string(config_.activation)},
                 {"sharing", to_string(config_.sharing)},
                 {"num_classes", config_.num_classes}};
  j["schema"] = schema_to_json(schema_);
  json params = json::object();
  for (const auto& p : store_) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) row.push_back(p->value(i, c));
      rows.push_back(std::move(row));
    }
    params[p->name] = std::move(rows);
  }
  j["params"] = std::move(params);
  return j;
}

HgnnModel HgnnModel::from_json(const json& j) {
  if (!j.contains("config") || !j.contains("schema") || !j.contains("params"))
    throw Error("model checkpoint: missing 'config', 'schema' or 'params'");
  const json& c = j["config"];
  HgnnConfig config;
  config.layers = c.at("layers").get<int>();
  config.hidden_dim = c.at("hidden_dim").get<int>();
  config.message_mode = message_mode_from_string(c.at("message_mode").get<std::string>());
  config.activation = activation_from_string(c.at("activation").get<std::string>());
  config.sharing = sharing_from_string(c.at("sharing").get<std::string>());
  config.num_classes = c.at("num_classes").get<int>();
  Schema schema = schema_from_json(j["schema"], "model checkpoint");

  HgnnModel m = init(schema, config, 0);
  for (const auto& p : m.store_) {
    if (!j["params"].contains(p->name))
      throw Error("model checkpoint: missing parameter '" + p->name + "'");
    const json& rows = j["params"][p->name];
    if (static_cast<Eigen::Index>(rows.size()) != p->value.rows())
      throw Error("model checkpoint: parameter '" + p->name + "' has wrong row count");
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      const json& row = rows[i];
      if (static_cast<Eigen::Index>(row.size()) != p->value.cols())
        throw Error("model checkpoint: parameter '" + p->name + "' has wrong column count");
      for (Eigen::Index col = 0; col < p->value.cols(); ++col)
        p->value(i, col) = row[col].get<double>();
    }
  }
  return m;
}

namespace {

// One leaf per parameter per tape keeps shared parameters shared on the tape.
class LeafCache {
 public:
  LeafCache(ad::Tape& tape) : tape_(tape) {}
  ad::Tensor operator()(ad::Param& p) {
    auto it = cache_.find(&p);
    if (it != cache_.end()) return it->second;
    ad::Tensor t = tape_.leaf(p);
    cache_.emplace(&p, t);
    return t;
  }

 private:
  ad::Tape& tape_;
  std::unordered_map<ad::Param*, ad::Tensor> cache_;
};

std::vector<ad::Tensor> input_layer(ad::Tape& tape, const HgnnModel& model,
                                    const HeteroGraph& graph, LeafCache& leaf) {
  const Schema& s = model.schema();
  std::vector<ad::Tensor> h0(s.num_types());
  for (int t = 0; t < s.num_types(); ++t) {
    if (graph.features[t].rows() != graph.counts[t] ||
        graph.features[t].cols() != s.type(t).feature_dim)
      throw Error("forward: feature matrix of type '" + s.type(t).name +
                  "' does not match the schema");
    ad::Tensor x = tape.constant(graph.features[t]);
    h0[t] = model.input_proj(t) ? tape.matmul(x, leaf(*model.input_proj(t))) : x;
  }
  return h0;
}

ad::Tensor apply_activation(ad::Tape& tape, const HgnnModel& model, ad::Tensor z) {
  return model.config().activation == Activation::relu ? tape.relu(z) : z;
}

}  // namespace

ForwardResult hgnn_forward(ad::Tape& tape, const HgnnModel& model, const HeteroGraph& graph,
                           const GraphOperators& ops) {
  const Schema& s = model.schema();
  const HgnnConfig& cfg = model.config();
  LeafCache leaf(tape);

  ForwardResult res;
  res.layer.resize(cfg.layers + 1);
  res.layer[0] = input_layer(tape, model, graph, leaf);

  for (int l = 1; l <= cfg.layers; ++l) {
    res.layer[l].resize(s.num_types());
    const auto& prev = res.layer[l - 1];
    for (int t = 0; t < s.num_types(); ++t) {
      std::vector<int> incoming = s.incoming(t);
      if (incoming.empty()) {
        res.layer[l][t] =
            tape.constant(Eigen::MatrixXd::Zero(graph.counts[t], cfg.hidden_dim));
        continue;
      }
      std::vector<ad::Tensor> parts;
      parts.reserve(incoming.size());
      for (int r : incoming) {
        int x = s.relation(r).src;
        ad::Tensor mean_src = tape.sparse_matmul(ops.nbr[r].weights, prev[x]);
        ad::Tensor part;
        if (cfg.message_mode == MessageMode::no_skip) {
          part = tape.matmul(mean_src, leaf(model.message_param(l, r)));
        } else {
          ad::Tensor cc = tape.concat_cols({mean_src, prev[t]});
          part = tape.matmul(cc, leaf(model.message_param(l, r)));
          part = tape.row_scale(part, ops.dst_mask[r]);
        }
        parts.push_back(part);
      }
      ad::Tensor agg = parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
      ad::Tensor z = tape.matmul(agg, leaf(model.transform_param(l, t)));
      res.layer[l][t] = apply_activation(tape, model, z);
    }
  }
  return res;
}

ad::Tensor hgnn_message(ad::Tape& tape, const HgnnModel& model, int layer, int relation,
                        ad::Tensor h_src_aligned, ad::Tensor h_dst_aligned) {
  ad::Param& m = model.message_param(layer, relation);
  if (model.config().message_mode == MessageMode::no_skip)
    return tape.matmul(h_src_aligned, tape.leaf(m));
  return tape.matmul(tape.concat_cols({h_src_aligned, h_dst_aligned}), tape.leaf(m));
}

ad::Tensor hgnn_classify(ad::Tape& tape, const HgnnModel& model, ad::Tensor h) {
  return tape.bias_add(tape.matmul(h, tape.leaf(model.classifier_weight())),
                       tape.leaf(model.classifier_bias()));
}

ad::Tensor hgnn_forward_as(ad::Tape& tape, const HgnnModel& model, const HeteroGraph& graph,
                           const GraphOperators& ops, int eval_type, int path_type) {
  const Schema& s = model.schema();
  const HgnnConfig& cfg = model.config();
  LeafCache leaf(tape);

  ForwardResult normal = hgnn_forward(tape, model, graph, ops);

  ad::Tensor x = tape.constant(graph.features[eval_type]);
  ad::Tensor prev =
      model.input_proj(eval_type) ? tape.matmul(x, leaf(*model.input_proj(eval_type))) : x;

  const std::vector<int> path_in = s.incoming(path_type);
  const std::vector<int> eval_in = s.incoming(eval_type);
  const int n_eval = graph.counts[eval_type];

  for (int l = 1; l <= cfg.layers; ++l) {
    if (path_in.empty()) {
      prev = tape.constant(Eigen::MatrixXd::Zero(n_eval, cfg.hidden_dim));
      continue;
    }
    std::vector<ad::Tensor> parts;
    parts.reserve(path_in.size());
    for (int rp : path_in) {
      int x_type = s.relation(rp).src;
      int r_eval = -1;
      for (int re : eval_in)
        if (s.relation(re).src == x_type) {
          r_eval = re;
          break;
        }
      if (r_eval < 0) {
        parts.push_back(tape.constant(Eigen::MatrixXd::Zero(n_eval, cfg.hidden_dim)));
        continue;
      }
      ad::Tensor mean_src = tape.sparse_matmul(ops.nbr[r_eval].weights, normal.layer[l - 1][x_type]);
      ad::Tensor part;
      if (cfg.message_mode == MessageMode::no_skip) {
        part = tape.matmul(mean_src, leaf(model.message_param(l, rp)));
      } else {
        ad::Tensor cc = tape.concat_cols({mean_src, prev});
        part = tape.matmul(cc, leaf(model.message_param(l, rp)));
        part = tape.row_scale(part, ops.dst_mask[r_eval]);
      }
      parts.push_back(part);
    }
    ad::Tensor agg = parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
    ad::Tensor z = tape.matmul(agg, leaf(model.transform_param(l, path_type)));
    prev = apply_activation(tape, model, z);
  }
  return prev;
}

}  // namespace ktn
