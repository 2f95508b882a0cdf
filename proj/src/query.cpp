#include "joinsample/query.hpp"

#include "joinsample/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace joinsample {

namespace {

std::string attr_name(AttributeId a, const AttributeCatalog* names) {
  return names != nullptr ? names->name(a) : "#" + std::to_string(a);
}

std::size_t find_root(std::vector<std::size_t>& uf, std::size_t x) {
  while (uf[x] != x) x = uf[x] = uf[uf[x]];
  return x;
}

}  // namespace

std::optional<std::string> join_tree_violation(const std::vector<AttrSet>& nodes,
                                               const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                               const AttributeCatalog* names) {
  const std::size_t n = nodes.size();
  if (n == 0) return "a join tree needs at least one node";
  if (edges.size() != n - 1) {
    return "expected " + std::to_string(n - 1) + " tree edges, got " + std::to_string(edges.size());
  }
  std::vector<std::size_t> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  for (auto [a, b] : edges) {
    if (a >= n || b >= n || a == b) return std::string("tree edge refers to an invalid node");
    const auto ra = find_root(uf, a);
    const auto rb = find_root(uf, b);
    if (ra == rb) return std::string("tree edges contain a cycle");
    uf[ra] = rb;
  }
  // In a tree, the nodes holding X induce a connected subgraph iff they span
  // exactly (#nodes - 1) tree edges.
  std::set<AttributeId> all;
  for (const auto& e : nodes) all.insert(e.begin(), e.end());
  for (auto x : all) {
    std::size_t holders = 0;
    for (const auto& e : nodes) holders += attr_contains(e, x) ? 1 : 0;
    std::size_t spanned = 0;
    for (auto [a, b] : edges) spanned += (attr_contains(nodes[a], x) && attr_contains(nodes[b], x)) ? 1 : 0;
    if (spanned + 1 != holders) {
      return "nodes containing attribute '" + attr_name(x, names) + "' do not form a connected subtree";
    }
  }
  return std::nullopt;
}

JoinTree::JoinTree(std::vector<AttrSet> nodes, std::vector<std::pair<std::size_t, std::size_t>> edges,
                   const AttributeCatalog* names)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  if (auto why = join_tree_violation(nodes_, edges_, names)) throw InvalidJoinTree(*why);
  adj_.resize(nodes_.size());
  for (auto [a, b] : edges_) {
    adj_[a].push_back(b);
    adj_[b].push_back(a);
  }
}

std::optional<std::vector<std::pair<std::size_t, std::size_t>>> gyo_join_tree(const std::vector<AttrSet>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<bool> alive(n, true);
  std::size_t remaining = n;
  // An ear e has a witness f such that every attribute of e shared with any
  // other live node lies in f. Removing it attaches e to f.
  while (remaining > 1) {
    bool removed = false;
    for (std::size_t e = 0; e < n && !removed; ++e) {
      if (!alive[e]) continue;
      AttrSet shared;
      for (std::size_t f = 0; f < n; ++f) {
        if (f != e && alive[f]) shared = attr_union(shared, attr_intersection(nodes[e], nodes[f]));
      }
      for (std::size_t f = 0; f < n; ++f) {
        if (f == e || !alive[f]) continue;
        if (attr_subset(shared, nodes[f])) {
          edges.emplace_back(f, e);
          alive[e] = false;
          --remaining;
          removed = true;
          break;
        }
      }
    }
    if (!removed) return std::nullopt;
  }
  return edges;
}

RootedTree root_tree(const JoinTree& tree, std::size_t root) {
  const std::size_t n = tree.size();
  RootedTree t;
  t.root = root;
  t.parent.assign(n, RootedTree::kNone);
  t.children.assign(n, {});
  t.key.assign(n, {});
  t.subtree_size.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) t.attrs.push_back(tree.attrs(i));
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{root};
  seen[root] = true;
  while (!stack.empty()) {
    const auto e = stack.back();
    stack.pop_back();
    t.preorder.push_back(e);
    for (auto c : tree.neighbours(e)) {
      if (seen[c]) continue;
      seen[c] = true;
      t.parent[c] = e;
      t.children[e].push_back(c);
      t.key[c] = attr_intersection(tree.attrs(c), tree.attrs(e));
    }
    // Push in reverse so children are visited in declaration order.
    for (auto it = t.children[e].rbegin(); it != t.children[e].rend(); ++it) stack.push_back(*it);
  }
  for (auto it = t.preorder.rbegin(); it != t.preorder.rend(); ++it) {
    if (t.parent[*it] != RootedTree::kNone) t.subtree_size[t.parent[*it]] += t.subtree_size[*it];
  }
  return t;
}

std::size_t QuerySpec::relation_index(std::string_view name) const {
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (relations[i].name == name) return i;
  }
  throw UnknownRelation("unknown relation '" + std::string(name) + "'");
}

namespace {

std::size_t yaml_line(const YAML::Node& n) {
  const auto mark = n.Mark();
  return mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0;
}

std::vector<std::string> string_list(const YAML::Node& n, const char* what) {
  if (!n.IsSequence()) throw ParseError(std::string(what) + " must be a list", yaml_line(n));
  std::vector<std::string> out;
  for (const auto& item : n) {
    if (!item.IsScalar()) throw ParseError(std::string(what) + " entries must be scalars", yaml_line(item));
    out.push_back(item.as<std::string>());
  }
  return out;
}

std::string required_scalar(const YAML::Node& map, const char* key) {
  const auto n = map[key];
  if (!n || !n.IsScalar()) throw ParseError(std::string("missing scalar field '") + key + "'", yaml_line(map));
  return n.as<std::string>();
}

std::vector<AttributeId> intern_all(AttributeCatalog& cat, const std::vector<std::string>& names) {
  std::vector<AttributeId> out;
  for (const auto& s : names) out.push_back(cat.intern(s));
  return out;
}

}  // namespace

QuerySpec parse_query(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, e.mark.line >= 0 ? static_cast<std::size_t>(e.mark.line) + 1 : 0);
  }
  if (!root.IsMap()) throw ParseError("query config must be a mapping");
  QuerySpec q;
  if (root["name"]) q.name = root["name"].as<std::string>();

  const auto rels = root["relations"];
  if (!rels || !rels.IsSequence() || rels.size() == 0) throw ParseError("'relations' must be a non-empty list");
  for (const auto& r : rels) {
    if (!r.IsMap()) throw ParseError("relation entries must be mappings", yaml_line(r));
    RelationSchema schema;
    schema.name = required_scalar(r, "name");
    if (!r["attrs"]) throw ParseError("relation '" + schema.name + "' has no attrs", yaml_line(r));
    schema.columns = intern_all(q.attributes, string_list(r["attrs"], "attrs"));
    if (schema.columns.empty()) throw ParseError("relation '" + schema.name + "' has no attrs", yaml_line(r));
    if (make_attr_set(schema.columns).size() != schema.columns.size()) {
      throw ParseError("relation '" + schema.name + "' repeats an attribute", yaml_line(r));
    }
    for (const auto& other : q.relations) {
      if (other.name == schema.name) throw ParseError("duplicate relation '" + schema.name + "'", yaml_line(r));
    }
    q.relations.push_back(std::move(schema));
  }

  if (const auto tree = root["tree"]) {
    if (!tree.IsSequence()) throw ParseError("'tree' must be a list of pairs", yaml_line(tree));
    for (const auto& edge : tree) {
      auto names = string_list(edge, "tree edge");
      if (names.size() != 2) throw ParseError("tree edges must name exactly two relations", yaml_line(edge));
      q.tree.emplace_back(names[0], names[1]);
    }
  }

  if (const auto fks = root["foreign_keys"]) {
    if (!fks.IsSequence()) throw ParseError("'foreign_keys' must be a list", yaml_line(fks));
    for (const auto& fk : fks) {
      if (!fk.IsMap()) throw ParseError("foreign key entries must be mappings", yaml_line(fk));
      ForeignKey f;
      f.child = required_scalar(fk, "child");
      f.parent = required_scalar(fk, "parent");
      if (!fk["key"]) throw ParseError("foreign key needs 'key'", yaml_line(fk));
      f.key = string_list(fk["key"], "key");
      q.foreign_keys.push_back(std::move(f));
    }
  }

  if (const auto fused = root["fused"]) {
    if (!fused.IsMap()) throw ParseError("'fused' must map fact relations to names", yaml_line(fused));
    for (const auto& kv : fused) q.fused_names[kv.first.as<std::string>()] = kv.second.as<std::string>();
  }

  if (const auto grouping = root["grouping"]) {
    if (!grouping.IsMap()) throw ParseError("'grouping' must map relations to booleans", yaml_line(grouping));
    for (const auto& kv : grouping) {
      try {
        q.grouping[kv.first.as<std::string>()] = kv.second.as<bool>();
      } catch (const YAML::Exception&) {
        throw ParseError("grouping flags must be booleans", yaml_line(kv.second));
      }
    }
  }

  if (const auto ghd = root["ghd"]) {
    if (!ghd.IsMap()) throw ParseError("'ghd' must be a mapping", yaml_line(ghd));
    GhdSpec spec;
    const auto nodes = ghd["nodes"];
    if (!nodes || !nodes.IsSequence() || nodes.size() == 0) {
      throw ParseError("'ghd.nodes' must be a non-empty list", yaml_line(ghd));
    }
    std::map<std::string, std::size_t> by_name;
    for (const auto& n : nodes) {
      if (!n.IsMap()) throw ParseError("ghd node entries must be mappings", yaml_line(n));
      GhdNodeSpec node;
      node.name = required_scalar(n, "name");
      if (by_name.count(node.name)) throw ParseError("duplicate ghd node '" + node.name + "'", yaml_line(n));
      if (!n["attrs"]) throw ParseError("ghd node '" + node.name + "' has no attrs", yaml_line(n));
      for (const auto& a : string_list(n["attrs"], "attrs")) {
        if (!q.attributes.contains(a)) {
          throw ParseError("ghd node '" + node.name + "' uses unknown attribute '" + a + "'", yaml_line(n));
        }
        node.attrs.push_back(q.attributes.id(a));
      }
      if (n["order"]) {
        for (const auto& a : string_list(n["order"], "order")) {
          if (!q.attributes.contains(a)) throw ParseError("unknown attribute '" + a + "' in order", yaml_line(n));
          node.order.push_back(q.attributes.id(a));
        }
      } else {
        node.order = node.attrs;
      }
      by_name[node.name] = spec.nodes.size();
      spec.nodes.push_back(std::move(node));
    }
    if (const auto edges = ghd["edges"]) {
      for (const auto& edge : edges) {
        auto names = string_list(edge, "ghd edge");
        if (names.size() != 2) throw ParseError("ghd edges must name exactly two nodes", yaml_line(edge));
        auto a = by_name.find(names[0]);
        auto b = by_name.find(names[1]);
        if (a == by_name.end() || b == by_name.end()) {
          throw InvalidGhd("ghd edge refers to an unknown node");
        }
        spec.edges.emplace_back(a->second, b->second);
      }
    }
    if (const auto anchors = ghd["anchors"]) {
      for (const auto& kv : anchors) {
        auto it = by_name.find(kv.second.as<std::string>());
        if (it == by_name.end()) throw InvalidGhd("anchor refers to an unknown node");
        spec.anchors[kv.first.as<std::string>()] = it->second;
      }
    }
    q.ghd = std::move(spec);
  }

  if (const auto workload = root["workload"]) {
    if (!workload.IsMap()) throw ParseError("'workload' must be a mapping", yaml_line(workload));
    for (const auto& kv : workload) {
      if (!kv.second.IsScalar()) throw ParseError("workload hints must be scalars", yaml_line(kv.second));
      q.workload[kv.first.as<std::string>()] = kv.second.as<std::string>();
    }
  }
  return q;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> resolve_edges(
    const std::vector<std::pair<std::string, std::string>>& named, const std::vector<RelationSchema>& rels) {
  auto find = [&](const std::string& name) {
    for (std::size_t i = 0; i < rels.size(); ++i) {
      if (rels[i].name == name) return i;
    }
    throw UnknownRelation("tree refers to unknown relation '" + name + "'");
  };
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& [a, b] : named) out.emplace_back(find(a), find(b));
  return out;
}

void build_acyclic(JoinQuery& q) {
  q.index_relations = q.spec.relations;
  q.base_to_index.resize(q.spec.relations.size());
  std::iota(q.base_to_index.begin(), q.base_to_index.end(), 0);
}

void build_fused(JoinQuery& q) {
  const auto& spec = q.spec;
  const std::size_t n = spec.relations.size();
  std::vector<std::size_t> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  struct Edge {
    std::size_t child, parent;
    AttrSet key;
  };
  std::vector<Edge> edges;
  std::vector<bool> is_parent(n, false);
  for (const auto& fk : spec.foreign_keys) {
    const auto c = spec.relation_index(fk.child);
    const auto p = spec.relation_index(fk.parent);
    if (c == p) throw InvalidJoinTree("foreign key from '" + fk.child + "' to itself");
    AttrSet key;
    for (const auto& a : fk.key) {
      if (!spec.attributes.contains(a)) throw UnsupportedAttributes("unknown foreign-key attribute '" + a + "'");
      key.push_back(spec.attributes.id(a));
    }
    key = make_attr_set(key);
    if (key.empty() || !attr_subset(key, spec.relations[c].attrs()) || !attr_subset(key, spec.relations[p].attrs())) {
      throw UnsupportedAttributes("foreign key " + fk.child + "->" + fk.parent +
                                  " must use attributes present in both relations");
    }
    if (attr_intersection(spec.relations[c].attrs(), spec.relations[p].attrs()) != key) {
      throw UnsupportedAttributes("foreign key " + fk.child + "->" + fk.parent +
                                  " must cover every attribute the two relations share");
    }
    edges.push_back({c, p, key});
    is_parent[p] = true;
    const auto rc = find_root(uf, c);
    const auto rp = find_root(uf, p);
    if (rc == rp) throw InvalidJoinTree("foreign keys around '" + fk.child + "' form a cycle");
    uf[rc] = rp;
  }
  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < n; ++i) components[find_root(uf, i)].push_back(i);
  // Components are emitted in order of their smallest base relation index.
  std::vector<std::vector<std::size_t>> ordered;
  for (auto& [root, members] : components) ordered.push_back(members);
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

  q.base_to_index.assign(n, 0);
  for (const auto& members : ordered) {
    std::vector<std::size_t> facts;
    for (auto m : members) {
      if (!is_parent[m]) facts.push_back(m);
    }
    if (facts.size() != 1) {
      throw InvalidJoinTree("foreign-key component containing '" + spec.relations[members.front()].name +
                            "' must have exactly one fact relation");
    }
    FusedRelation fr;
    const auto fact = facts.front();
    auto it = spec.fused_names.find(spec.relations[fact].name);
    fr.name = it != spec.fused_names.end() ? it->second : spec.relations[fact].name;
    // Members in BFS order from the fact along child->parent edges.
    fr.members.push_back(fact);
    for (std::size_t head = 0; head < fr.members.size(); ++head) {
      for (const auto& e : edges) {
        if (e.child != fr.members[head]) continue;
        auto pos = std::find(fr.members.begin(), fr.members.end(), e.parent);
        if (pos == fr.members.end()) fr.members.push_back(e.parent);
      }
    }
    if (fr.members.size() != members.size()) {
      throw InvalidJoinTree("every relation in the foreign-key component of '" + spec.relations[fact].name +
                            "' must be reachable from its fact relation");
    }
    auto position = [&](std::size_t rel) {
      return static_cast<std::size_t>(std::find(fr.members.begin(), fr.members.end(), rel) - fr.members.begin());
    };
    for (const auto& e : edges) {
      if (find_root(uf, e.child) == find_root(uf, fact)) fr.links.push_back({position(e.child), position(e.parent), e.key});
    }
    for (auto m : fr.members) {
      for (auto a : spec.relations[m].columns) {
        if (std::find(fr.columns.begin(), fr.columns.end(), a) == fr.columns.end()) fr.columns.push_back(a);
      }
    }
    for (auto m : fr.members) q.base_to_index[m] = q.fused.size();
    q.index_relations.push_back({fr.name, fr.columns});
    q.fused.push_back(std::move(fr));
  }
  for (std::size_t i = 0; i < q.index_relations.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (q.index_relations[i].name == q.index_relations[j].name) {
        throw ParseError("fused relation name '" + q.index_relations[i].name + "' is not unique");
      }
    }
  }
}

void build_ghd(JoinQuery& q) {
  const auto& spec = q.spec;
  const auto& g = *spec.ghd;
  q.ghd.nodes = g.nodes;
  std::vector<AttrSet> lambdas;
  for (const auto& node : g.nodes) {
    AttrSet lambda = make_attr_set(node.attrs);
    if (lambda.size() != node.attrs.size()) throw InvalidGhd("ghd node '" + node.name + "' repeats an attribute");
    if (make_attr_set(node.order) != lambda) {
      throw InvalidGhd("elimination order of ghd node '" + node.name + "' must list exactly its attributes");
    }
    lambdas.push_back(lambda);
    q.index_relations.push_back({node.name, node.attrs});
  }
  if (auto why = join_tree_violation(lambdas, g.edges, &spec.attributes)) throw InvalidGhd(*why);
  q.ghd.anchor.assign(spec.relations.size(), 0);
  q.ghd.parts.assign(g.nodes.size(), {});
  for (std::size_t r = 0; r < spec.relations.size(); ++r) {
    const auto e = spec.relations[r].attrs();
    std::optional<std::size_t> anchor;
    for (std::size_t u = 0; u < lambdas.size(); ++u) {
      if (!anchor && attr_subset(e, lambdas[u])) anchor = u;
      auto part = attr_intersection(e, lambdas[u]);
      if (!part.empty()) q.ghd.parts[u].emplace_back(r, std::move(part));
    }
    if (!anchor) throw InvalidGhd("relation '" + spec.relations[r].name + "' is not covered by any ghd node");
    if (auto it = g.anchors.find(spec.relations[r].name); it != g.anchors.end()) {
      if (!attr_subset(e, lambdas[it->second])) {
        throw InvalidGhd("anchor node for '" + spec.relations[r].name + "' does not cover it");
      }
      anchor = it->second;
    }
    q.ghd.anchor[r] = *anchor;
  }
  for (const auto& [name, node] : g.anchors) spec.relation_index(name);
  for (std::size_t u = 0; u < lambdas.size(); ++u) {
    AttrSet covered;
    for (const auto& [r, part] : q.ghd.parts[u]) covered = attr_union(covered, part);
    if (covered != lambdas[u]) throw InvalidGhd("ghd node '" + g.nodes[u].name + "' has an attribute no relation covers");
  }
}

}  // namespace

JoinQuery build_query(QuerySpec spec) {
  JoinQuery q;
  q.spec = std::move(spec);
  for (const auto& r : q.spec.relations) q.attributes = attr_union(q.attributes, r.attrs());

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (q.spec.ghd) {
    if (!q.spec.foreign_keys.empty()) throw InvalidGhd("foreign-key fusion is not supported together with a ghd");
    q.kind = PlanKind::Ghd;
    build_ghd(q);
    edges = q.spec.ghd->edges;
  } else {
    if (!q.spec.foreign_keys.empty()) {
      q.kind = PlanKind::ForeignKey;
      build_fused(q);
    } else {
      build_acyclic(q);
    }
    edges = resolve_edges(q.spec.tree, q.index_relations);
  }
  std::vector<AttrSet> nodes;
  for (const auto& r : q.index_relations) nodes.push_back(r.attrs());
  if (!q.spec.ghd && q.spec.tree.empty() && nodes.size() > 1) {
    auto found = gyo_join_tree(nodes);
    if (!found) throw InvalidJoinTree("query is cyclic and no ghd is given");
    edges = std::move(*found);
  }
  q.tree = JoinTree(nodes, edges, &q.spec.attributes);
  for (std::size_t i = 0; i < q.index_relations.size(); ++i) {
    q.rooted.push_back(root_tree(q.tree, i));
    q.grouping.push_back(q.spec.grouping_enabled(q.index_relations[i].name));
  }
  for (const auto& [name, flag] : q.spec.grouping) {
    bool known = false;
    for (const auto& r : q.index_relations) known = known || r.name == name;
    if (!known) throw UnknownRelation("grouping flag for unknown relation '" + name + "'");
  }
  return q;
}

JoinQuery load_query(const std::string& text) { return build_query(parse_query(text)); }

JoinQuery load_query_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open query config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_query(ss.str());
}

}  // namespace joinsample
