#include "graph_io.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

#include "csvio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ktn {

namespace {

json parse_json_file(const std::string& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(path + ": malformed JSON");
  return j;
}

}  // namespace

nlohmann::json schema_to_json(const Schema& schema) {
  json j;
  j["node_types"] = json::array();
  for (int t = 0; t < schema.num_types(); ++t) {
    const NodeType& nt = schema.type(t);
    j["node_types"].push_back(
        {{"name", nt.name}, {"feature_dim", nt.feature_dim}, {"num_classes", nt.num_classes}});
  }
  j["relation_types"] = json::array();
  for (int r = 0; r < schema.num_relations(); ++r) {
    const RelationType& rel = schema.relation(r);
    j["relation_types"].push_back({{"name", rel.name},
                                   {"src", schema.type(rel.src).name},
                                   {"dst", schema.type(rel.dst).name}});
  }
  return j;
}

Schema schema_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.contains("node_types") || !j["node_types"].is_array())
    throw Error(where + ": missing 'node_types' array");
  if (!j.contains("relation_types") || !j["relation_types"].is_array())
    throw Error(where + ": missing 'relation_types' array");
  Schema schema;
  for (const auto& t : j["node_types"]) {
    if (!t.contains("name") || !t.contains("feature_dim"))
      throw Error(where + ": node type needs 'name' and 'feature_dim'");
    schema.add_node_type(t["name"].get<std::string>(), t["feature_dim"].get<int>(),
                         t.value("num_classes", 0));
  }
  for (const auto& r : j["relation_types"]) {
    if (!r.contains("name") || !r.contains("src") || !r.contains("dst"))
      throw Error(where + ": relation type needs 'name', 'src' and 'dst'");
    schema.add_relation(r["name"].get<std::string>(), r["src"].get<std::string>(),
                        r["dst"].get<std::string>());
  }
  return schema;
}

HeteroGraph load_graph(const std::string& dir) {
  const std::string schema_path = (fs::path(dir) / "schema.json").string();
  if (!fs::exists(schema_path)) throw Error(schema_path + ": missing schema file");
  json j = parse_json_file(schema_path);

  HeteroGraph g;
  g.schema = schema_from_json(j, schema_path);

  for (int t = 0; t < g.schema.num_types(); ++t) {
    const NodeType& nt = g.schema.type(t);
    const std::string fpath = (fs::path(dir) / ("features_" + nt.name + ".csv")).string();
    if (!fs::exists(fpath)) throw Error(fpath + ": missing feature file for type '" + nt.name + "'");
    Eigen::MatrixXd x = read_matrix_csv(fpath);
    if (x.rows() > 0 && x.cols() != nt.feature_dim)
      throw Error(fpath + ": feature dim " + std::to_string(x.cols()) + " != schema dim " +
                  std::to_string(nt.feature_dim));
    if (x.rows() == 0) x.resize(0, nt.feature_dim);
    g.counts.push_back(static_cast<int>(x.rows()));
    g.features.push_back(std::move(x));

    const std::string lpath = (fs::path(dir) / ("labels_" + nt.name + ".csv")).string();
    if (fs::exists(lpath)) {
      Eigen::MatrixXd y = read_matrix_csv(lpath);
      if (y.rows() != g.counts[t])
        throw Error(lpath + ": " + std::to_string(y.rows()) + " label rows for " +
                    std::to_string(g.counts[t]) + " nodes");
      for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index c = 0; c < y.cols(); ++c)
          if (y(i, c) != 0.0 && y(i, c) != 1.0)
            throw Error(lpath + ":" + std::to_string(i + 1) + ": label value " +
                        format_double(y(i, c)) + " is not 0/1");
      g.labels.push_back(std::move(y));
    } else {
      g.labels.emplace_back();
    }
  }

  for (int r = 0; r < g.schema.num_relations(); ++r) {
    const RelationType& rel = g.schema.relation(r);
    const std::string epath = (fs::path(dir) / ("edges_" + rel.name + ".csv")).string();
    if (!fs::exists(epath)) throw Error(epath + ": missing edge file for relation '" + rel.name + "'");
    auto pairs = read_edges_csv(epath);
    const int n_src = g.counts[rel.src];
    const int n_dst = g.counts[rel.dst];
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& [s, d] = pairs[k];
      if (s < 0 || s >= n_src || d < 0 || d >= n_dst)
        throw Error(epath + ": edge " + std::to_string(k) + " (" + std::to_string(s) + ", " +
                    std::to_string(d) + ") out of range for relation '" + rel.name + "' (" +
                    std::to_string(n_src) + " -> " + std::to_string(n_dst) + " nodes)");
    }
    // Multi-edges collapse to a single edge here.
    g.edges.push_back(CsrMatrix::from_pairs(n_src, n_dst, std::move(pairs)));
  }
  return g;
}

void save_graph(const HeteroGraph& g, const std::string& dir) {
  fs::create_directories(dir);
  write_text_file((fs::path(dir) / "schema.json").string(), schema_to_json(g.schema).dump(2) + "\n");

  for (int t = 0; t < g.schema.num_types(); ++t) {
    const std::string name = g.schema.type(t).name;
    write_matrix_csv((fs::path(dir) / ("features_" + name + ".csv")).string(), g.features[t]);
    if (g.has_labels(t))
      write_matrix_csv((fs::path(dir) / ("labels_" + name + ".csv")).string(), g.labels[t], true);
  }
  for (int r = 0; r < g.schema.num_relations(); ++r) {
    const std::string name = g.schema.relation(r).name;
    write_edges_csv((fs::path(dir) / ("edges_" + name + ".csv")).string(), g.edges[r].pairs());
  }
}

}  // namespace ktn
