#include "joinsample/errors.hpp"
#include "joinsample/query.hpp"
#include "joinsample/relation.hpp"
#include "joinsample/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>

using namespace joinsample;
using testutil::ints;

TEST_CASE("values compare equal iff their encodings match") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto draw = [&] {
      const auto kind = rng.below(2) == 0 ? Value::Kind::Int : Value::Kind::Str;
      return Value{kind, static_cast<std::int64_t>(rng.below(4)) - 2};
    };
    const Value a = draw();
    const Value b = draw();
    std::string ea, eb;
    a.encode(ea);
    b.encode(eb);
    CHECK((a == b) == (ea == eb));
    CHECK(ea.size() == 9);
  }
  CHECK(Value::integer(5) < Value::string_id(0));
}

TEST_CASE("parse_value and format_value round-trip") {
  StringPool pool;
  const auto a = parse_value("42", pool);
  const auto b = parse_value("-7", pool);
  const auto c = parse_value("alice", pool);
  const auto d = parse_value("alice", pool);
  CHECK(a == Value::integer(42));
  CHECK(b == Value::integer(-7));
  CHECK_FALSE(c.is_int());
  CHECK(c == d);
  CHECK(format_value(c, pool) == "alice");
  CHECK(format_value(b, pool) == "-7");
  CHECK_FALSE(parse_value("12x", pool).is_int());
}

TEST_CASE("project") {
  AttributeCatalog cat;
  const auto x = cat.intern("X");
  const auto y = cat.intern("Y");
  Tuple t{make_attr_set({x, y}), ints({1, 2}), 0, 0};
  const auto p = project(t, {y});
  CHECK(p.support == AttrSet{y});
  CHECK(p.values == ints({2}));
  CHECK(project(t, t.support) == t);
  Tuple other{make_attr_set({x, y}), ints({5, 6}), 0, 0};
  CHECK(project(t, {}) == project(other, {}));
  CHECK(project(t, {}).values.empty());
  CHECK_THROWS_AS(project(t, {cat.intern("Z")}), UnsupportedAttributes);
}

TEST_CASE("semi-join lists follow arrival order") {
  AttributeCatalog cat;
  const auto y = cat.intern("Y");
  const auto z = cat.intern("Z");
  Database db;
  const auto r2 = db.add_relation("R2", {y, z});
  auto& rel = db.relation(r2);
  rel.insert(ints({1, 1}));
  rel.insert(ints({1, 2}));
  rel.insert(ints({2, 3}));
  Tuple probe{{y}, ints({1}), 0, 0};
  CHECK_THROWS_AS(db.semijoin(r2, probe, {y}), MissingIndex);
  db.index(r2, {y});
  auto list = db.semijoin(r2, probe, {y});
  REQUIRE(list.size() == 2);
  CHECK(std::vector<Value>(rel.row(list[0]).begin(), rel.row(list[0]).end()) == ints({1, 1}));
  CHECK(std::vector<Value>(rel.row(list[1]).begin(), rel.row(list[1]).end()) == ints({1, 2}));
  CHECK(db.semijoin(r2, Tuple{{y}, ints({9}), 0, 0}, {y}).empty());
  CHECK_FALSE(rel.insert(ints({1, 2})).has_value());
  CHECK(rel.duplicates() == 1);
  rel.insert(ints({1, 9}));
  list = db.semijoin(r2, probe, {y});
  REQUIRE(list.size() == 3);
  CHECK(rel.row(list[2])[1] == Value::integer(9));
  CHECK_THROWS_AS(db.semijoin(r2, Tuple{{z}, ints({1}), 0, 0}, {y}), UnsupportedAttributes);
}

TEST_CASE("semi-join lists match a brute-force filter") {
  AttributeCatalog cat;
  const auto a = cat.intern("A");
  const auto b = cat.intern("B");
  const auto c = cat.intern("C");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Database db;
    const auto r = db.add_relation("R", {a, b, c});
    db.index(r, {b});
    db.index(r, make_attr_set({a, c}));
    std::vector<std::vector<Value>> stored;
    for (int i = 0; i < 200; ++i) {
      auto v = ints({static_cast<std::int64_t>(rng.below(5)), static_cast<std::int64_t>(rng.below(5)),
                     static_cast<std::int64_t>(rng.below(5))});
      const bool fresh = std::find(stored.begin(), stored.end(), v) == stored.end();
      CHECK(db.relation(r).insert(v).has_value() == fresh);
      if (fresh) stored.push_back(v);
      if (i % 20 != 19) continue;
      for (std::int64_t p = 0; p < 5; ++p) {
        for (std::int64_t q = 0; q < 5; ++q) {
          std::vector<std::vector<Value>> expect;
          for (const auto& s : stored) {
            if (s[0] == Value::integer(p) && s[2] == Value::integer(q)) expect.push_back(s);
          }
          std::vector<std::vector<Value>> got;
          for (auto row : db.semijoin(r, Tuple{make_attr_set({a, c}), ints({p, q}), 0, 0}, make_attr_set({a, c}))) {
            got.emplace_back(db.relation(r).row(row).begin(), db.relation(r).row(row).end());
          }
          CHECK(got == expect);
        }
        std::size_t expect_b = 0;
        for (const auto& s : stored) expect_b += s[1] == Value::integer(p);
        CHECK(db.semijoin(r, Tuple{{b}, ints({p}), 0, 0}, {b}).size() == expect_b);
      }
    }
  }
}

TEST_CASE("load_query derives keys for every rooted tree") {
  auto two = testutil::load("two-table");
  const auto& cat = two->spec.attributes;
  REQUIRE(two->rooted.size() == 2);
  CHECK(two->rooted[1].key[0] == AttrSet{cat.id("y")});
  CHECK(two->rooted[1].key[1].empty());

  auto line3 = testutil::load("line-3");
  REQUIRE(line3->rooted.size() == 3);
  const auto& r1 = line3->rooted[0];
  CHECK(r1.root == 0);
  CHECK(r1.parent[1] == 0);
  CHECK(r1.key[1] == AttrSet{line3->spec.attributes.id("x2")});
  CHECK(r1.subtree_size[0] == 3);
  CHECK(r1.subtree_size[2] == 1);
  CHECK(line3->rooted[1].children[1].size() == 2);
}

TEST_CASE("load_query rejects invalid configs") {
  CHECK_THROWS_AS(load_query(R"(
relations:
  - {name: R1, attrs: [X, Y]}
  - {name: R2, attrs: [Y, Z]}
  - {name: R3, attrs: [X, W]}
tree: [[R1, R2], [R2, R3]]
)"),
                  InvalidJoinTree);
  try {
    load_query(R"(
relations:
  - {name: R1, attrs: [X, Y]}
  - {name: R2, attrs: [Y, Z]}
  - {name: R3, attrs: [X, W]}
tree: [[R1, R2], [R2, R3]]
)");
  } catch (const InvalidJoinTree& e) {
    CHECK(std::string(e.what()).find("'X'") != std::string::npos);
  }
  CHECK_THROWS_AS(load_query("relations:\n  - {name: R1, attrs: [X]}\ntree: [[R1, R9]]\n"), UnknownRelation);
  CHECK_THROWS_AS(load_query("relations: [\n"), ParseError);
  CHECK_THROWS_AS(load_query("name: x\n"), ParseError);
  CHECK_THROWS_AS(load_query(R"(
relations:
  - {name: R1, attrs: [X, Y]}
  - {name: R2, attrs: [Y, Z]}
  - {name: R3, attrs: [Z, X]}
)"),
                  InvalidJoinTree);
  CHECK_THROWS_AS(load_query(R"(
relations:
  - {name: R1, attrs: [X, Y]}
grouping: {R7: false}
)"),
                  UnknownRelation);
}

TEST_CASE("a missing tree is found by ear reduction") {
  auto q = load_query(R"(
relations:
  - {name: A, attrs: [x, y]}
  - {name: B, attrs: [y, z]}
  - {name: C, attrs: [y, w]}
)");
  CHECK(q.tree.edges().size() == 2);
}

TEST_CASE("all bundled query configs load") {
  for (const char* name : {"two-table", "line-2", "line-3", "line-4", "line-5", "star-3", "star-4", "star-5", "star-6",
                           "triangle", "dumbbell", "qx", "qy", "qz", "q10"}) {
    CAPTURE(name);
    CHECK_NOTHROW(testutil::load(name));
  }
  CHECK(testutil::load("qz")->kind == PlanKind::ForeignKey);
  CHECK(testutil::load("dumbbell")->kind == PlanKind::Ghd);
}

namespace {

// Attribute connectedness checked by graph search, independent of the
// edge-counting rule the library uses.
bool tree_valid_bfs(const std::vector<AttrSet>& nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  const std::size_t n = nodes.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (auto v : adj[u]) {
      if (!seen[v]) seen[v] = true, stack.push_back(v);
    }
  }
  if (std::count(seen.begin(), seen.end(), true) != static_cast<long>(n)) return false;
  for (AttributeId x = 0; x < 5; ++x) {
    std::vector<std::size_t> holders;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(nodes[i].begin(), nodes[i].end(), x) != nodes[i].end()) holders.push_back(i);
    }
    if (holders.empty()) continue;
    std::vector<bool> reach(n, false);
    std::vector<std::size_t> st{holders[0]};
    reach[holders[0]] = true;
    while (!st.empty()) {
      auto u = st.back();
      st.pop_back();
      for (auto v : adj[u]) {
        if (reach[v] || std::find(holders.begin(), holders.end(), v) == holders.end()) continue;
        reach[v] = true;
        st.push_back(v);
      }
    }
    for (auto h : holders) {
      if (!reach[h]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("join-tree validation agrees with ear reduction on all small hypergraphs") {
  std::vector<AttrSet> subsets;
  for (unsigned mask = 1; mask < 32; ++mask) {
    AttrSet s;
    for (AttributeId a = 0; a < 5; ++a) {
      if (mask & (1u << a)) s.push_back(a);
    }
    subsets.push_back(s);
  }
  std::size_t acyclic = 0;
  std::size_t cyclic = 0;
  std::size_t trees_checked = 0;
  std::function<void(std::vector<std::size_t>&)> visit = [&](std::vector<std::size_t>& pick) {
    if (!pick.empty()) {
      std::vector<AttrSet> nodes;
      for (auto i : pick) nodes.push_back(subsets[i]);
      const std::size_t n = nodes.size();
      std::vector<std::pair<std::size_t, std::size_t>> all;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) all.emplace_back(a, b);
      }
      bool any_valid = false;
      // Every (n-1)-subset of the complete graph's edges.
      for (unsigned mask = 0; mask < (1u << all.size()); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n - 1) continue;
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t i = 0; i < all.size(); ++i) {
          if (mask & (1u << i)) edges.push_back(all[i]);
        }
        const bool expect = tree_valid_bfs(nodes, edges);
        const bool got = !join_tree_violation(nodes, edges, nullptr).has_value();
        if (expect != got) FAIL("validation disagrees with the search oracle");
        any_valid = any_valid || expect;
        ++trees_checked;
      }
      const auto found = gyo_join_tree(nodes);
      if (found.has_value() != any_valid) FAIL("ear reduction disagrees with exhaustive search");
      if (found) {
        if (!tree_valid_bfs(nodes, *found)) FAIL("ear reduction produced an invalid tree");
        ++acyclic;
      } else {
        ++cyclic;
      }
    }
    if (pick.size() == 4) return;
    const std::size_t from = pick.empty() ? 0 : pick.back();
    for (std::size_t i = from; i < subsets.size(); ++i) {
      pick.push_back(i);
      visit(pick);
      pick.pop_back();
    }
  };
  std::vector<std::size_t> pick;
  visit(pick);
  CHECK(acyclic > 0);
  CHECK(cyclic > 0);
  MESSAGE("hypergraphs: " << acyclic << " acyclic, " << cyclic << " cyclic; trees checked: " << trees_checked);
}
