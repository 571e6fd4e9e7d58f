#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "graph.hpp"

namespace ktn {

// Graph interchange format: a directory holding schema.json,
// features_<type>.csv, optional labels_<type>.csv and edges_<relation>.csv.
// load(save(g)) is structurally identical to g with bit-exact features.
HeteroGraph load_graph(const std::string& dir);
void save_graph(const HeteroGraph& g, const std::string& dir);

nlohmann::json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace ktn
