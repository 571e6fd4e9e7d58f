#include "schema.hpp"

namespace ktn {

int Schema::add_node_type(const std::string& name, int feature_dim, int num_classes) {
  if (name.empty()) throw Error("node type name must be non-empty");
  if (feature_dim < 0) throw Error("node type '" + name + "': negative feature_dim");
  if (find_type(name) >= 0) throw Error("duplicate node type '" + name + "'");
  types_.push_back({name, feature_dim, num_classes});
  return static_cast<int>(types_.size()) - 1;
}

int Schema::add_relation(const std::string& name, const std::string& src, const std::string& dst) {
  int s = find_type(src);
  int d = find_type(dst);
  if (s < 0) throw Error("relation '" + name + "': unknown src type '" + src + "'");
  if (d < 0) throw Error("relation '" + name + "': unknown dst type '" + dst + "'");
  for (const auto& r : relations_) {
    if (r.src == s && r.dst == d && r.name == name)
      throw Error("duplicate relation (" + src + " -> " + dst + ", '" + name + "')");
  }
  relations_.push_back({name, s, d});
  return static_cast<int>(relations_.size()) - 1;
}

const NodeType& Schema::type(int id) const {
  if (id < 0 || id >= num_types()) throw Error("node type id out of range: " + std::to_string(id));
  return types_[id];
}

const RelationType& Schema::relation(int id) const {
  if (id < 0 || id >= num_relations()) throw Error("relation id out of range: " + std::to_string(id));
  return relations_[id];
}

int Schema::find_type(const std::string& name) const {
  for (int i = 0; i < num_types(); ++i)
    if (types_[i].name == name) return i;
  return -1;
}

int Schema::find_relation(const std::string& name) const {
  for (int i = 0; i < num_relations(); ++i)
    if (relations_[i].name == name) return i;
  return -1;
}

int Schema::type_id(const std::string& name) const {
  int id = find_type(name);
  if (id < 0) throw Error("unknown node type '" + name + "'");
  return id;
}

int Schema::relation_id(const std::string& name) const {
  int id = find_relation(name);
  if (id < 0) throw Error("unknown relation '" + name + "'");
  return id;
}

std::vector<int> Schema::incoming(int t) const {
  std::vector<int> out;
  for (int i = 0; i < num_relations(); ++i)
    if (relations_[i].dst == t) out.push_back(i);
  return out;
}

std::vector<int> Schema::outgoing(int t) const {
  std::vector<int> out;
  for (int i = 0; i < num_relations(); ++i)
    if (relations_[i].src == t) out.push_back(i);
  return out;
}

bool Schema::operator==(const Schema& other) const {
  if (num_types() != other.num_types() || num_relations() != other.num_relations()) return false;
  for (int i = 0; i < num_types(); ++i) {
    const auto& a = types_[i];
    const auto& b = other.types_[i];
    if (a.name != b.name || a.feature_dim != b.feature_dim || a.num_classes != b.num_classes)
      return false;
  }
  for (int i = 0; i < num_relations(); ++i) {
    const auto& a = relations_[i];
    const auto& b = other.relations_[i];
    if (a.name != b.name || a.src != b.src || a.dst != b.dst) return false;
  }
  return true;
}

}  // namespace ktn
