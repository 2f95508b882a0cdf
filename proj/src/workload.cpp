#include "joinsample/workload.hpp"

#include "joinsample/errors.hpp"

#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>

namespace joinsample {

Workload ingest(std::istream& in, const QuerySpec& spec) {
  Workload w;
  std::string line;
  std::size_t number = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fields.clear();
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    std::size_t rel = 0;
    try {
      rel = spec.relation_index(fields[0]);
    } catch (const UnknownRelation&) {
      throw ParseError("unknown relation '" + std::string(fields[0]) + "'", number);
    }
    const auto arity = spec.relations[rel].columns.size();
    if (fields.size() != arity + 1) {
      throw ParseError("relation '" + spec.relations[rel].name + "' expects " + std::to_string(arity) +
                           " values, got " + std::to_string(fields.size() - 1),
                       number);
    }
    StreamEvent e;
    e.relation = rel;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) throw ParseError("empty value", number);
      e.values.push_back(parse_value(fields[i], w.strings));
    }
    w.events.push_back(std::move(e));
  }
  return w;
}

Workload ingest_file(const std::string& path, const QuerySpec& spec) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open stream file '" + path + "'");
  return ingest(in, spec);
}

void write_events(std::ostream& out, const Workload& w, const QuerySpec& spec) {
  for (const auto& e : w.events) {
    out << spec.relations[e.relation].name;
    for (const auto& v : e.values) out << ',' << format_value(v, w.strings);
    out << '\n';
  }
}

namespace {

std::vector<Edge> distinct_edges(std::size_t m, std::uint64_t limit, const std::function<Edge()>& draw) {
  std::vector<Edge> edges;
  absl::flat_hash_set<std::pair<std::int64_t, std::int64_t>> seen;
  std::uint64_t attempts = 0;
  while (edges.size() < m) {
    if (++attempts > limit) throw std::invalid_argument("graph generator cannot place that many distinct edges");
    const auto e = draw();
    if (e.first == e.second) continue;
    if (seen.insert(e).second) edges.push_back(e);
  }
  return edges;
}

}  // namespace

std::vector<Edge> erdos_renyi(std::int64_t n, std::size_t m, Rng& rng) {
  if (n < 2) throw std::invalid_argument("need at least two vertices");
  std::uniform_int_distribution<std::int64_t> vertex(0, n - 1);
  return distinct_edges(m, 100 * (m + 10), [&] { return Edge{vertex(rng.engine()), vertex(rng.engine())}; });
}

std::vector<Edge> chung_lu(std::int64_t n, std::size_t m, double gamma, Rng& rng) {
  if (n < 2) throw std::invalid_argument("need at least two vertices");
  if (gamma <= 1.0) throw std::invalid_argument("power-law exponent must exceed 1");
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) weights[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), -1.0 / (gamma - 1.0));
  std::discrete_distribution<std::int64_t> vertex(weights.begin(), weights.end());
  return distinct_edges(m, 1000 * (m + 10), [&] { return Edge{vertex(rng.engine()), vertex(rng.engine())}; });
}

Workload graph_stream(const QuerySpec& spec, const std::vector<Edge>& edges, Rng& rng) {
  Workload w;
  for (std::size_t r = 0; r < spec.relations.size(); ++r) {
    if (spec.relations[r].columns.size() != 2) {
      throw UnsupportedAttributes("graph streams need binary relations; '" + spec.relations[r].name + "' is not");
    }
    for (const auto& [a, b] : edges) w.events.push_back({r, {Value::integer(a), Value::integer(b)}});
  }
  std::shuffle(w.events.begin(), w.events.end(), rng.engine());
  return w;
}

Workload schema_stream(const QuerySpec& spec, Rng& rng, double scale) {
  auto hint = [&](const std::string& key, std::int64_t fallback) {
    auto it = spec.workload.find(key);
    return it == spec.workload.end() ? fallback : std::stoll(it->second);
  };
  std::set<std::string> preload;
  std::vector<std::string> preload_order;
  if (auto it = spec.workload.find("preload"); it != spec.workload.end()) {
    std::string_view rest(it->second);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      std::string name(rest.substr(0, comma));
      name.erase(0, name.find_first_not_of(' '));
      name.erase(name.find_last_not_of(' ') + 1);
      spec.relation_index(name);
      preload.insert(name);
      preload_order.push_back(name);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  const auto n = spec.relations.size();
  std::vector<std::int64_t> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto base = hint("rows." + spec.relations[r].name, 1000);
    rows[r] = preload.count(spec.relations[r].name) ? base
                                                     : std::max<std::int64_t>(1, std::llround(static_cast<double>(base) * scale));
  }
  // Key attributes of each parent relation, and for each child attribute the
  // parent whose key range it draws from.
  std::map<std::pair<std::size_t, AttributeId>, std::size_t> fk_parent;
  std::vector<AttrSet> parent_key(n);
  for (const auto& fk : spec.foreign_keys) {
    const auto c = spec.relation_index(fk.child);
    const auto p = spec.relation_index(fk.parent);
    for (const auto& a : fk.key) {
      const auto id = spec.attributes.id(a);
      fk_parent[{c, id}] = p;
      parent_key[p] = attr_union(parent_key[p], AttrSet{id});
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (parent_key[r].size() > 1) {
      throw UnsupportedAttributes("schema generator supports single-attribute primary keys only");
    }
  }
  std::vector<std::vector<StreamEvent>> per_rel(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& cols = spec.relations[r].columns;
    for (std::int64_t i = 0; i < rows[r]; ++i) {
      StreamEvent e;
      e.relation = r;
      for (auto a : cols) {
        std::int64_t v = 0;
        if (attr_contains(parent_key[r], a)) {
          v = i;  // a single-attribute primary key: distinct values
        } else if (auto it = fk_parent.find({r, a}); it != fk_parent.end()) {
          v = std::uniform_int_distribution<std::int64_t>(0, rows[it->second] - 1)(rng.engine());
        } else {
          const auto dom = hint("domain." + spec.attributes.name(a), 100);
          v = std::uniform_int_distribution<std::int64_t>(0, dom - 1)(rng.engine());
        }
        e.values.push_back(Value::integer(v));
      }
      per_rel[r].push_back(std::move(e));
    }
  }
  Workload w;
  for (const auto& name : preload_order) {
    auto& list = per_rel[spec.relation_index(name)];
    w.events.insert(w.events.end(), list.begin(), list.end());
  }
  std::vector<StreamEvent> rest;
  for (std::size_t r = 0; r < n; ++r) {
    if (!preload.count(spec.relations[r].name)) rest.insert(rest.end(), per_rel[r].begin(), per_rel[r].end());
  }
  std::shuffle(rest.begin(), rest.end(), rng.engine());
  w.events.insert(w.events.end(), rest.begin(), rest.end());
  return w;
}

}  // namespace joinsample
