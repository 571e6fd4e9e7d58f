#pragma once

#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"
#include "tape.hpp"

namespace ktn {

enum class MessageMode { skip_concat, no_skip };
enum class Activation { relu, identity };
enum class Sharing { full, v1, v2 };

std::string to_string(MessageMode m);
std::string to_string(Activation a);
std::string to_string(Sharing s);
MessageMode message_mode_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);
Sharing sharing_from_string(const std::string& s);

struct HgnnConfig {
  int layers = 2;
  int hidden_dim = 128;
  MessageMode message_mode = MessageMode::skip_concat;
  Activation activation = Activation::relu;
  Sharing sharing = Sharing::full;
  int num_classes = 0;  // classifier head width; 0 = no head

  void check() const;
};

// Per-layer, per-relation message matrices M and per-type transform matrices
// W, stored as right multipliers of row-major embeddings. The column blocks
// of each W follow the canonical (schema declaration) order of the incoming
// relations of its type. v1 shares one M and one W everywhere behind
// per-type input projections; v2 keeps per-relation/per-type matrices but
// shares them across layers.
class HgnnModel {
 public:
  HgnnModel() = default;
  static HgnnModel init(const Schema& schema, const HgnnConfig& config, std::uint64_t seed);

  const Schema& schema() const { return schema_; }
  const HgnnConfig& config() const { return config_; }

  ad::Param* input_proj(int type) const { return proj_.empty() ? nullptr : proj_[type]; }
  ad::Param& message_param(int layer, int relation) const;   // layer is 1-based
  ad::Param& transform_param(int layer, int type) const;     // layer is 1-based
  ad::Param& classifier_weight() const;
  ad::Param& classifier_bias() const;
  bool has_classifier() const { return cls_w_ != nullptr; }

  // Distinct parameters in stable declaration order.
  std::vector<ad::Param*> parameters() const;
  std::map<std::string, double> grad_norms() const;

  // Embedding width of type t entering layer `layer` (1-based).
  int input_dim(int layer, int type) const;

  nlohmann::json to_json() const;
  static HgnnModel from_json(const nlohmann::json& j);

 private:
  Schema schema_;
  HgnnConfig config_;
  std::vector<std::unique_ptr<ad::Param>> store_;
  std::vector<ad::Param*> proj_;                 // per type; empty in full sharing
  std::vector<std::vector<ad::Param*>> msg_;     // [layer][relation]
  std::vector<std::vector<ad::Param*>> xform_;   // [layer][type]; null when R(t) empty
  ad::Param* cls_w_ = nullptr;
  ad::Param* cls_b_ = nullptr;

  ad::Param* make_param(const std::string& name, int rows, int cols, Rng& rng);
};

struct ForwardResult {
  // layer[l][t] = embeddings of type t after l layers; layer[0] is the input
  // (projected in v1/v2 modes).
  std::vector<std::vector<ad::Tensor>> layer;
  const std::vector<ad::Tensor>& final() const { return layer.back(); }
};

ForwardResult hgnn_forward(ad::Tape& tape, const HgnnModel& model, const HeteroGraph& graph,
                           const GraphOperators& ops);

// Per-edge message: M_r over edge-aligned source rows (no_skip) or over the
// column concat of source and destination rows (skip_concat).
ad::Tensor hgnn_message(ad::Tape& tape, const HgnnModel& model, int layer, int relation,
                        ad::Tensor h_src_aligned, ad::Tensor h_dst_aligned);

ad::Tensor hgnn_classify(ad::Tape& tape, const HgnnModel& model, ad::Tensor h);

// Embeddings of eval_type nodes computed along path_type's parameter path:
// each incoming relation of eval_type feeds the path_type block with the
// matching source type. Used for the cross-extractor evaluation.
ad::Tensor hgnn_forward_as(ad::Tape& tape, const HgnnModel& model, const HeteroGraph& graph,
                           const GraphOperators& ops, int eval_type, int path_type);

}  // namespace ktn
