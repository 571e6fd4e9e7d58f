#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ktn {

// Library-wide error type; the C API translates these into status codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NodeType {
  std::string name;
  int feature_dim = 0;
  int num_classes = 0;
};

// Directed relation between two node types.
struct RelationType {
  std::string name;
  int src = -1;
  int dst = -1;
};

// Node and relation type tables. Type ids are dense indices in declaration
// order; that order is the canonical one used for W column blocks.
class Schema {
 public:
  int add_node_type(const std::string& name, int feature_dim, int num_classes = 0);
  int add_relation(const std::string& name, const std::string& src, const std::string& dst);

  int num_types() const { return static_cast<int>(types_.size()); }
  int num_relations() const { return static_cast<int>(relations_.size()); }

  const NodeType& type(int id) const;
  const RelationType& relation(int id) const;

  int find_type(const std::string& name) const;      // -1 when absent
  int find_relation(const std::string& name) const;  // -1 when absent
  int type_id(const std::string& name) const;        // throws when absent
  int relation_id(const std::string& name) const;    // throws when absent

  // Relation ids with dst == t (resp. src == t), in declaration order.
  std::vector<int> incoming(int t) const;
  std::vector<int> outgoing(int t) const;

  bool operator==(const Schema& other) const;

 private:
  std::vector<NodeType> types_;
  std::vector<RelationType> relations_;
};

}  // namespace ktn
