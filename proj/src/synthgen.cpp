#include "synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csvio.hpp"
#include "graph_io.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ktn {

std::string SynthConfig::pair_key(const std::string& a, const std::string& b) {
  return a <= b ? a + "|" + b : b + "|" + a;
}

double SynthConfig::sigma_e(const std::string& a, const std::string& b) const {
  auto it = edge_snr.find(pair_key(a, b));
  return it == edge_snr.end() ? 1.0 : it->second;
}

double SynthConfig::sigma_f(const std::string& a, const std::string& b) const {
  auto it = feat_snr.find(pair_key(a, b));
  return it == feat_snr.end() ? 1.0 : it->second;
}

int SynthConfig::num_groups() const {
  int k = 0;
  for (const auto& t : types) k = k == 0 ? t.clusters : std::min(k, t.clusters);
  return k;
}

void SynthConfig::check() const {
  if (types.empty()) throw Error("synth config: no node types");
  for (const auto& t : types) {
    if (t.clusters < 1 || t.nodes_per_cluster < 0 || t.feature_dim < 1)
      throw Error("synth config: type '" + t.name + "' has invalid sizes");
  }
  if (q <= 0.0 || q > 1.0) throw Error("synth config: q must be in (0, 1]");
  for (const auto& [key, sigma] : edge_snr) {
    if (sigma < 1.0) throw Error("synth config: edge snr '" + key + "' must be >= 1");
    if (sigma * q > 1.0)
      throw Error("synth config: edge snr '" + key + "' gives probability " +
                  format_double(sigma * q) + " > 1");
  }
  for (const auto& [key, sigma] : feat_snr)
    if (sigma < 1.0) throw Error("synth config: feature snr '" + key + "' must be >= 1");
}

json SynthConfig::to_json() const {
  json j;
  j["types"] = json::array();
  for (const auto& t : types)
    j["types"].push_back({{"name", t.name},
                          {"clusters", t.clusters},
                          {"nodes_per_cluster", t.nodes_per_cluster},
                          {"feature_dim", t.feature_dim}});
  j["relations"] = json::array();
  for (const auto& r : relations)
    j["relations"].push_back({{"name", r.name}, {"src", r.src}, {"dst", r.dst}});
  j["edge_snr"] = edge_snr;
  j["feat_snr"] = feat_snr;
  j["q"] = q;
  j["seed"] = seed;
  return j;
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  for (const auto& t : j.at("types"))
    c.types.push_back({t.at("name").get<std::string>(), t.at("clusters").get<int>(),
                       t.at("nodes_per_cluster").get<int>(), t.at("feature_dim").get<int>()});
  for (const auto& r : j.at("relations"))
    c.relations.push_back({r.at("name").get<std::string>(), r.at("src").get<std::string>(),
                           r.at("dst").get<std::string>()});
  if (j.contains("edge_snr")) c.edge_snr = j["edge_snr"].get<std::map<std::string, double>>();
  if (j.contains("feat_snr")) c.feat_snr = j["feat_snr"].get<std::map<std::string, double>>();
  c.q = j.value("q", 0.004);
  c.seed = j.value("seed", static_cast<std::uint64_t>(1));
  c.check();
  return c;
}

Eigen::MatrixXd SynthResult::group_onehot(int type) const {
  const auto& g = group[type];
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()), num_groups);
  for (std::size_t i = 0; i < g.size(); ++i) y(static_cast<Eigen::Index>(i), g[i]) = 1.0;
  return y;
}

SynthResult generate(const SynthConfig& config) {
  config.check();
  const int T = static_cast<int>(config.types.size());
  const int K = config.num_groups();
  Rng rng(config.seed);

  SynthResult out;
  out.num_groups = K;

  // Schema + cluster/group assignments.
  for (const auto& t : config.types)
    out.graph.schema.add_node_type(t.name, t.feature_dim, t.clusters);
  for (const auto& r : config.relations) out.graph.schema.add_relation(r.name, r.src, r.dst);

  for (int u = 0; u < T; ++u) {
    const auto& tc = config.types[u];
    const int n = tc.clusters * tc.nodes_per_cluster;
    out.graph.counts.push_back(n);
    std::vector<int> cl(n), gr(n);
    for (int i = 0; i < n; ++i) {
      cl[i] = i / std::max(tc.nodes_per_cluster, 1);
      gr[i] = cl[i] % K;
    }
    out.cluster.push_back(std::move(cl));
    out.group.push_back(std::move(gr));
  }

  // Cluster centers: a cross-type group component plus a per-cluster
  // component, mixed so the per-type marginal spread stays sigma_f(u,u).
  const int latent_dim = 64;
  std::vector<Eigen::VectorXd> group_latent;
  group_latent.reserve(K);
  for (int g = 0; g < K; ++g) group_latent.push_back(gaussian(latent_dim, 1, rng));

  for (int u = 0; u < T; ++u) {
    const auto& tc = config.types[u];
    Eigen::MatrixXd proj =
        gaussian(latent_dim, tc.feature_dim, rng, 1.0 / std::sqrt(static_cast<double>(latent_dim)));

    double rho = 0.0;
    int cross_pairs = 0;
    for (int w = 0; w < T; ++w) {
      if (w == u) continue;
      auto it = config.feat_snr.find(SynthConfig::pair_key(tc.name, config.types[w].name));
      if (it == config.feat_snr.end()) continue;
      rho += 1.0 - 1.0 / it->second;
      ++cross_pairs;
    }
    if (cross_pairs > 0) rho /= cross_pairs;

    const double spread = config.sigma_f(tc.name, tc.name);
    Eigen::MatrixXd centers(tc.clusters, tc.feature_dim);
    for (int c = 0; c < tc.clusters; ++c) {
      Eigen::RowVectorXd shared = (group_latent[c % K].transpose() * proj).row(0);
      Eigen::RowVectorXd own = gaussian(1, tc.feature_dim, rng).row(0);
      centers.row(c) = spread * (std::sqrt(rho) * shared + std::sqrt(1.0 - rho) * own);
    }

    const int n = out.graph.counts[u];
    Eigen::MatrixXd x(n, tc.feature_dim);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      x.row(i) = centers.row(out.cluster[u][i]);
      for (int dcol = 0; dcol < tc.feature_dim; ++dcol) x(i, dcol) += noise(rng);
    }
    out.graph.features.push_back(std::move(x));

    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, tc.clusters);
    for (int i = 0; i < n; ++i) y(i, out.cluster[u][i]) = 1.0;
    out.graph.labels.push_back(std::move(y));
  }

  // Edges: directed pairs, no self-loops.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& rc : config.relations) {
    const int u = out.graph.schema.type_id(rc.src);
    const int v = out.graph.schema.type_id(rc.dst);
    const bool within = u == v;
    const double p_hi = config.sigma_e(rc.src, rc.dst) * config.q;
    const double p_lo = config.q;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < out.graph.counts[u]; ++i) {
      for (int jj = 0; jj < out.graph.counts[v]; ++jj) {
        if (within && i == jj) continue;
        const bool linked = within ? out.cluster[u][i] == out.cluster[v][jj]
                                   : out.group[u][i] == out.group[v][jj];
        if (unif(rng) < (linked ? p_hi : p_lo)) pairs.emplace_back(i, jj);
      }
    }
    out.graph.edges.push_back(
        CsrMatrix::from_pairs(out.graph.counts[u], out.graph.counts[v], std::move(pairs)));
  }
  return out;
}

SynthConfig toy_config() {
  SynthConfig c;
  c.types = {{"s", 4, 400, 24}, {"t", 4, 400, 24}};
  c.relations = {{"ss", "s", "s"}, {"ts", "t", "s"}, {"st", "s", "t"}, {"tt", "t", "t"}};
  c.edge_snr = {{"s|s", 10.0}, {"s|t", 10.0}, {"t|t", 10.0}};
  c.feat_snr = {{"s|s", 10.0}, {"s|t", 10.0}, {"t|t", 10.0}};
  // Expected degree ~ 20 per relation: 400 partners at 10q + 1200 at q.
  c.q = 20.0 / 5200.0;
  c.seed = 1;
  return c;
}

SynthConfig indirect_config() {
  SynthConfig c;
  c.types = {{"s", 4, 200, 24}, {"x", 4, 200, 24}, {"t", 4, 200, 24}};
  c.relations = {{"sx", "s", "x"}, {"xs", "x", "s"}, {"xt", "x", "t"}, {"tx", "t", "x"}};
  c.edge_snr = {{"s|x", 10.0}, {"t|x", 10.0}};
  c.feat_snr = {{"s|s", 10.0}, {"x|x", 10.0}, {"t|t", 10.0}, {"s|x", 10.0}, {"t|x", 10.0}};
  c.q = 20.0 / 2600.0;
  c.seed = 1;
  return c;
}

std::vector<SynthConfig> sensitivity_grid(const std::string& scenario, const std::string& pair,
                                          const std::vector<double>& values) {
  if (scenario != "easy" && scenario != "hard")
    throw Error("sensitivity grid: unknown scenario '" + scenario + "'");
  static const std::map<std::string, std::pair<bool, std::string>> kPairs = {
      {"e_ss", {true, "s|s"}},  {"e_tt", {true, "t|t"}},  {"e_st", {true, "s|t"}},
      {"f_ss", {false, "s|s"}}, {"f_tt", {false, "t|t"}}, {"f_st", {false, "s|t"}}};
  auto it = kPairs.find(pair);
  if (it == kPairs.end()) throw Error("sensitivity grid: unknown pair '" + pair + "'");
  for (double v : values)
    if (v < 1.0 || v > 10.0)
      throw Error("sensitivity grid: value " + format_double(v) + " outside [1, 10]");

  SynthConfig base;
  if (scenario == "easy") {
    base.types = {{"s", 4, 200, 24}, {"t", 4, 200, 24}};
  } else {
    base.types = {{"s", 4, 200, 32}, {"t", 8, 100, 48}};
  }
  base.relations = {{"ss", "s", "s"}, {"ts", "t", "s"}, {"st", "s", "t"}, {"tt", "t", "t"}};
  base.edge_snr = {{"s|s", 10.0}, {"s|t", 10.0}, {"t|t", 10.0}};
  base.feat_snr = {{"s|s", 10.0}, {"s|t", 10.0}, {"t|t", 10.0}};
  base.q = 20.0 / 2600.0;
  base.seed = 1;

  std::vector<SynthConfig> grid;
  for (double v : values) {
    SynthConfig c = base;
    (it->second.first ? c.edge_snr : c.feat_snr)[it->second.second] = v;
    grid.push_back(std::move(c));
  }
  return grid;
}

void save_synth(const SynthResult& result, const std::string& dir) {
  save_graph(result.graph, dir);
  for (int t = 0; t < result.graph.schema.num_types(); ++t) {
    std::ostringstream out;
    out << "node_id,cluster,group\n";
    for (std::size_t i = 0; i < result.cluster[t].size(); ++i)
      out << i << ',' << result.cluster[t][i] << ',' << result.group[t][i] << '\n';
    write_text_file(
        (fs::path(dir) / ("truth_" + result.graph.schema.type(t).name + ".csv")).string(),
        out.str());
  }
}

std::vector<std::vector<std::pair<int, int>>> load_truth(const Schema& schema,
                                                         const std::string& dir) {
  std::vector<std::vector<std::pair<int, int>>> out;
  for (int t = 0; t < schema.num_types(); ++t) {
    const std::string path = (fs::path(dir) / ("truth_" + schema.type(t).name + ".csv")).string();
    if (!fs::exists(path)) return {};
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::pair<int, int>> rows;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      int node = 0, cluster = 0, group = 0;
      if (std::sscanf(line.c_str(), "%d,%d,%d", &node, &cluster, &group) != 3)
        throw Error(path + ": malformed truth row '" + line + "'");
      rows.emplace_back(cluster, group);
    }
    out.push_back(std::move(rows));
  }
  return out;
}

}  // namespace ktn
