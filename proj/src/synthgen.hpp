#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "graph.hpp"

namespace ktn {

struct SynthTypeConfig {
  std::string name;
  int clusters = 0;
  int nodes_per_cluster = 0;
  int feature_dim = 0;
};

struct SynthRelationConfig {
  std::string name;
  std::string src;
  std::string dst;
};

// Attributed stochastic-block-model generator config. Edge and feature
// signal-to-noise ratios are keyed by unordered type pairs ("s|t"). Cluster
// groups partition the clusters of every type; group ids are the shared
// cross-type class space.
struct SynthConfig {
  std::vector<SynthTypeConfig> types;
  std::vector<SynthRelationConfig> relations;
  std::map<std::string, double> edge_snr;  // within-pair and cross-pair p/q ratios
  std::map<std::string, double> feat_snr;  // center spread (within) / alignment (cross)
  double q = 0.004;                        // base between-cluster edge probability
  std::uint64_t seed = 1;

  static std::string pair_key(const std::string& a, const std::string& b);
  double sigma_e(const std::string& a, const std::string& b) const;
  double sigma_f(const std::string& a, const std::string& b) const;
  int num_groups() const;  // min_t clusters
  void check() const;

  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SynthResult {
  HeteroGraph graph;
  std::vector<std::vector<int>> cluster;  // per type, per node
  std::vector<std::vector<int>> group;    // per type, per node
  int num_groups = 0;

  // One-hot group labels (n_t x num_groups) for cross-type tasks.
  Eigen::MatrixXd group_onehot(int type) const;
};

// Deterministic for a fixed config. Within-type edges connect with
// probability sigma_e*q inside a cluster and q otherwise; cross-type edges
// use sigma_e*q inside a shared cluster group. Features are a Gaussian
// mixture with unit within-cluster std.
SynthResult generate(const SynthConfig& config);

// 2 types, 4 relations, 4 clusters of 400 nodes per type, feature dim 24,
// every signal-to-noise ratio at 10.
SynthConfig toy_config();

// 3 types t - x - s with no direct t<->s relation.
SynthConfig indirect_config();

// One config per value; the non-swept ratios stay at 10. scenario "easy":
// 4+4 clusters, dims 24/24; "hard": 4 source / 8 target clusters, dims 32/48.
// pair is one of e_ss, e_tt, e_st, f_ss, f_tt, f_st.
std::vector<SynthConfig> sensitivity_grid(const std::string& scenario, const std::string& pair,
                                          const std::vector<double>& values);

// Interchange-format directory plus truth_<type>.csv cluster assignments.
void save_synth(const SynthResult& result, const std::string& dir);

// Reads truth_<type>.csv files back; returns empty when any is missing.
std::vector<std::vector<std::pair<int, int>>> load_truth(const Schema& schema,
                                                         const std::string& dir);

}  // namespace ktn
