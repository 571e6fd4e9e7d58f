#pragma once

#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hgnn.hpp"

namespace ktn {

// Chain of relations from the target type to the source type. Consecutive
// relations must link dst -> src.
struct MetaPath {
  std::vector<int> relations;
  int length() const { return static_cast<int>(relations.size()); }
};

// All relation chains from `from_type` to `to_type` with length <= max_len,
// deduplicated, ordered by (length, lexicographic relation names).
std::vector<MetaPath> enumerate_metapaths(const Schema& schema, int from_type, int to_type,
                                          int max_len);

enum class KtnLossForm { mse, frobenius };

// Trainable transfer map: one (d x d) transform per step of each meta-path,
// initialized at identity plus small Glorot noise.
class KtnMapper {
 public:
  KtnMapper() = default;
  static KtnMapper init(const Schema& schema, int source_type, int target_type,
                        std::vector<MetaPath> paths, int dim, std::uint64_t seed,
                        double lambda = 1.0);

  int source_type() const { return source_type_; }
  int target_type() const { return target_type_; }
  double lambda() const { return lambda_; }
  void set_lambda(double l) { lambda_ = l; }
  bool normalize_adjacency() const { return normalize_adjacency_; }
  void set_normalize_adjacency(bool v) { normalize_adjacency_ = v; }
  int dim() const { return dim_; }

  const std::vector<MetaPath>& paths() const { return paths_; }
  ad::Param& transform(int path, int step) const;
  std::vector<ad::Param*> parameters() const;

  nlohmann::json to_json(const Schema& schema) const;
  static KtnMapper from_json(const nlohmann::json& j, const Schema& schema);

 private:
  int source_type_ = -1;
  int target_type_ = -1;
  int dim_ = 0;
  double lambda_ = 1.0;
  bool normalize_adjacency_ = true;
  std::vector<MetaPath> paths_;
  std::vector<std::vector<std::unique_ptr<ad::Param>>> transforms_;  // [path][step]
};

// Training-time map: per path fold Z <- N_{x->y} Z T_{xy} starting from the
// target embeddings, summed over paths. Shape (n_source x d). An empty path
// set yields zeros.
ad::Tensor ktn_map_train(ad::Tape& tape, const KtnMapper& mapper, const HeteroGraph& graph,
                         const GraphOperators& ops, ad::Tensor h_t);

// Test-time map: per path fold Z <- Z T_{xy} with no adjacency, summed over
// paths. One mapped row per target node.
ad::Tensor ktn_map_test(ad::Tape& tape, const KtnMapper& mapper, ad::Tensor h_t);

struct JointLossParts {
  ad::Tensor cl;
  ad::Tensor ktn;
  ad::Tensor total;
};

enum class ClassLossForm { softmax, sigmoid };

// L_CL over the given source rows plus lambda * L_KTN between source
// embeddings and the mapped target embeddings.
JointLossParts joint_loss(ad::Tape& tape, const HgnnModel& model, const KtnMapper& mapper,
                          const HeteroGraph& graph, const GraphOperators& ops,
                          const ForwardResult& fwd, const Eigen::MatrixXd& source_labels,
                          const std::vector<int>& source_rows, ClassLossForm cl_form,
                          KtnLossForm ktn_form);

// Classifier applied to the test-time mapped target embeddings.
ad::Tensor predict_target(ad::Tape& tape, const HgnnModel& model, const KtnMapper& mapper,
                          const HeteroGraph& graph, const GraphOperators& ops);

struct TrainOptions {
  int epochs = 500;
  double lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  KtnLossForm ktn_loss = KtnLossForm::mse;
  ClassLossForm cl_loss = ClassLossForm::softmax;
  int eval_every = 10;        // 0 = only at the end
  int grad_norms_every = 1;   // 0 = never
  int batch_nodes = 0;        // >0 subsamples source rows of both loss terms
  std::uint64_t seed = 1;
};

struct EpochRow {
  int epoch;  // 0-based step index; metrics refer to the state before the step
  double loss_cl;
  double loss_ktn;
  double loss_total;
  double src_metric;
  double tgt_metric;
};

struct TrainLog {
  std::vector<EpochRow> rows;
  std::vector<std::pair<int, std::map<std::string, double>>> grad_norms;
  double final_src_metric = 0.0;
  double final_tgt_metric = 0.0;
};

// Task labels and the seeded source split used for the joint objective.
struct TransferTask {
  Eigen::MatrixXd y_source;  // n_s x C
  Eigen::MatrixXd y_target;  // n_t x C (evaluation only; may be empty)
  std::vector<int> train_rows;
  std::vector<int> test_rows;
};

// 80/20 seeded split over the labeled source rows; target nodes are
// evaluation-only.
TransferTask make_task(const Eigen::MatrixXd& y_source, const Eigen::MatrixXd& y_target,
                       double train_frac, std::uint64_t seed);

// Full-batch joint optimization of model, classifier and mapper.
// Aborts with the offending epoch when the loss turns non-finite.
TrainLog train(HgnnModel& model, KtnMapper& mapper, const HeteroGraph& graph,
               const GraphOperators& ops, const TransferTask& task, const TrainOptions& opts);

}  // namespace ktn
