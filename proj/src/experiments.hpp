#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "graph_io.hpp"
#include "synthgen.hpp"
#include "transfer.hpp"

namespace ktn {

// Resolved experiment settings. Every command dumps the resolved form into
// run.json next to its outputs.
struct ExperimentConfig {
  std::string source_type = "s";
  std::string target_type = "t";
  int layers = 2;
  int hidden_dim = 128;
  std::string message_mode = "skip_concat";
  std::string activation = "relu";
  std::string sharing = "full";
  double lr = 1e-4;
  int epochs = 500;
  double lambda = 1.0;
  std::string loss_ktn = "mse";    // mse | frobenius
  std::string loss_cl = "auto";    // auto | softmax | sigmoid
  int metapath_max_len = 0;        // 0 = minimum-length paths only
  std::uint64_t seed = 1;
  bool deterministic = true;
  int eval_every = 10;
  int grad_norms_every = 1;
  double train_frac = 0.8;
  std::string label_source = "auto";  // auto | labels | groups
  bool ktn_normalize_adjacency = true;
  std::string ep_seed_source = "embeddings";  // embeddings | features
  int batch_nodes = 0;
  int sweep_seeds = 5;
  std::vector<double> sweep_values = {1.0, 4.0, 10.0};
  int jobs = 0;  // parallel sweep points; 0 = auto

  nlohmann::json to_json() const;
  void apply(const nlohmann::json& overrides);  // unknown keys are errors
  static ExperimentConfig from_json(const nlohmann::json& j);

  HgnnConfig hgnn_config(int num_classes) const;
  TrainOptions train_options(const Eigen::MatrixXd& y_source) const;
};

// Task labels for a transfer run. When truth files are present (or
// label_source = groups), cluster-group ids become the shared class space;
// otherwise the per-type label matrices are used directly.
struct ResolvedTask {
  int source_type = -1;
  int target_type = -1;
  int num_classes = 0;
  Eigen::MatrixXd y_source;
  Eigen::MatrixXd y_target;  // empty when unavailable
};

ResolvedTask resolve_task(const HeteroGraph& graph, const std::string& graph_dir,
                          const ExperimentConfig& cfg);

// Meta-path selection: all minimum-length paths by default, all paths up to
// metapath_max_len when it is positive.
std::vector<MetaPath> select_metapaths(const Schema& schema, int target_type, int source_type,
                                       int metapath_max_len);

struct ToyOutcome {
  double src_acc = 0.0;            // f_s on held-out source nodes
  double tgt_src_path_acc = 0.0;   // f_s evaluated on target nodes
  double tgt_org_path_acc = 0.0;   // f_t on target nodes, no adaptation
  double theory_acc = 0.0;         // f_t mapped by q_star
  double trained_ktn_acc = 0.0;    // jointly trained mapper
  double trained_ktn_src_acc = 0.0;
  TrainLog source_only_log;
  TrainLog joint_log;
};

// Source-only training plus the four-way evaluation and a jointly trained
// mapper on the same graph/model seeds.
ToyOutcome run_toy_experiment(const SynthResult& synth, const ExperimentConfig& cfg);

struct SweepRow {
  std::string scenario;
  std::string pair;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string method;  // KTN | EP | LP
  double src_acc = 0.0;
  double tgt_acc = 0.0;
  long wall_ms = 0;
};

std::vector<SweepRow> run_sweep(const std::string& scenario, const std::string& pair,
                                const ExperimentConfig& cfg);

// CLI-level commands. Config arguments are JSON text; outputs land in
// out_dir together with run.json capturing the resolved configuration.
void cmd_generate(const std::string& config_json, const std::string& out_dir);
void cmd_train(const std::string& graph_dir, const std::string& config_json,
               const std::string& out_dir);
nlohmann::json cmd_eval(const std::string& checkpoint_path, const std::string& graph_dir);
void cmd_toy(const std::string& out_dir, const std::string& overrides_json);
void cmd_sweep(const std::string& scenario, const std::string& pair, const std::string& out_dir,
               const std::string& overrides_json);
void cmd_baseline(const std::string& method, const std::string& graph_dir,
                  const std::string& config_json, const std::string& out_dir);

}  // namespace ktn
