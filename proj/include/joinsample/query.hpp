#pragma once

#include "joinsample/value.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace joinsample {

struct RelationSchema {
  std::string name;
  std::vector<AttributeId> columns;  // declared order
  AttrSet attrs() const { return make_attr_set(columns); }
};

struct ForeignKey {
  std::string child;
  std::vector<std::string> key;
  std::string parent;
};

struct GhdNodeSpec {
  std::string name;
  std::vector<AttributeId> attrs;  // declared order
  /// Elimination order for delta enumeration; defaults to `attrs`.
  std::vector<AttributeId> order;
};

struct GhdSpec {
  std::vector<GhdNodeSpec> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  /// Base relation name -> node index; overrides the first-covering-node rule.
  std::map<std::string, std::size_t> anchors;
};

/// Unrooted tree over hyperedges. Nodes are indices into `edges`.
class JoinTree {
 public:
  JoinTree() = default;
  /// Throws InvalidJoinTree if the edges do not form a spanning tree or an
  /// attribute's nodes are disconnected.
  JoinTree(std::vector<AttrSet> nodes, std::vector<std::pair<std::size_t, std::size_t>> edges,
           const AttributeCatalog* names = nullptr);

  std::size_t size() const { return nodes_.size(); }
  const AttrSet& attrs(std::size_t node) const { return nodes_[node]; }
  const std::vector<std::size_t>& neighbours(std::size_t node) const { return adj_[node]; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }

 private:
  std::vector<AttrSet> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

/// Returns a description of the first violated condition, or nullopt when
/// (nodes, edges) is a valid join tree.
std::optional<std::string> join_tree_violation(const std::vector<AttrSet>& nodes,
                                               const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                               const AttributeCatalog* names = nullptr);

/// GYO ear reduction. Returns join-tree edges when the hypergraph is acyclic,
/// nullopt otherwise. Disconnected acyclic hypergraphs get a forest joined by
/// arbitrary edges (valid: the pieces share no attributes).
std::optional<std::vector<std::pair<std::size_t, std::size_t>>> gyo_join_tree(const std::vector<AttrSet>& nodes);

/// A join tree rooted at one node.
struct RootedTree {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::size_t root = 0;
  std::vector<std::size_t> parent;
  std::vector<std::vector<std::size_t>> children;
  std::vector<AttrSet> attrs;
  std::vector<AttrSet> key;  // attrs ∩ attrs(parent); empty at the root
  std::vector<std::size_t> subtree_size;
  /// Nodes in preorder (parents before children).
  std::vector<std::size_t> preorder;

  bool is_leaf(std::size_t e) const { return children[e].empty(); }
};

RootedTree root_tree(const JoinTree& tree, std::size_t root);

/// A parsed query configuration. Attribute names are interned in `attributes`.
struct QuerySpec {
  std::string name;
  AttributeCatalog attributes;
  std::vector<RelationSchema> relations;
  /// Tree over index-level relations: base relations, or fused relations when
  /// foreign keys are declared. Unused for GHD queries.
  std::vector<std::pair<std::string, std::string>> tree;
  std::vector<ForeignKey> foreign_keys;
  /// Fact relation name -> fused relation name.
  std::map<std::string, std::string> fused_names;
  /// Index-level relation name -> grouping flag (default on).
  std::map<std::string, bool> grouping;
  std::optional<GhdSpec> ghd;
  /// Free-form generator hints (`workload:` section), string-valued.
  std::map<std::string, std::string> workload;

  std::size_t relation_index(std::string_view name) const;  // throws UnknownRelation
  bool grouping_enabled(const std::string& rel) const {
    auto it = grouping.find(rel);
    return it == grouping.end() || it->second;
  }
};

/// Parses a YAML query config without structural validation.
QuerySpec parse_query(const std::string& text);

enum class PlanKind { Acyclic, ForeignKey, Ghd };

/// A foreign-key component collapsed into one streamed relation.
struct FusedRelation {
  std::string name;
  /// Base relation indices; members[0] is the fact relation.
  std::vector<std::size_t> members;
  /// (child member position, parent member position, key attrs) per FK edge.
  struct Link {
    std::size_t child;
    std::size_t parent;
    AttrSet key;
  };
  std::vector<Link> links;
  std::vector<AttributeId> columns;
};

struct GhdLayout {
  std::vector<GhdNodeSpec> nodes;
  /// Anchor node per base relation.
  std::vector<std::size_t> anchor;
  /// Per node: (base relation, e ∩ λ(u)) for every overlapping relation.
  std::vector<std::vector<std::pair<std::size_t, AttrSet>>> parts;
};

/// A validated query: the index-level schema the acyclic index runs over, its
/// join tree rooted once per relation, and the front end that maps base
/// events onto index-level insertions.
struct JoinQuery {
  QuerySpec spec;
  PlanKind kind = PlanKind::Acyclic;
  std::vector<RelationSchema> index_relations;
  JoinTree tree;
  std::vector<RootedTree> rooted;
  std::vector<bool> grouping;
  /// Base relation -> index relation (Acyclic), fused component (ForeignKey).
  std::vector<std::size_t> base_to_index;
  std::vector<FusedRelation> fused;  // ForeignKey only; index relation i <-> fused[i]
  GhdLayout ghd;                     // Ghd only; index relation i <-> node i
  AttrSet attributes;                // every attribute of the query
};

/// Parses and validates. Throws ParseError, InvalidJoinTree, InvalidGhd,
/// UnknownRelation.
JoinQuery load_query(const std::string& text);
JoinQuery load_query_file(const std::string& path);
JoinQuery build_query(QuerySpec spec);

}  // namespace joinsample
