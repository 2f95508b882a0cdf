#include "doctest.h"
#include "index_oracle.hpp"
#include "test_util.hpp"

#include "joinsample/errors.hpp"
#include "joinsample/ghd.hpp"

#include <set>

using namespace joinsample;
using testutil::ints;

namespace {

using NodeResult = std::pair<std::size_t, std::vector<Value>>;

/// Q_u over the inserted base tuples, by trying every assignment of λ(u) over
/// [0, domain) against each part's projection set.
std::set<NodeResult> node_results_brute(const JoinQuery& q, const Workload& w, std::int64_t domain) {
  std::set<NodeResult> out;
  for (std::size_t u = 0; u < q.ghd.nodes.size(); ++u) {
    const auto& attrs = q.ghd.nodes[u].attrs;
    std::vector<std::set<std::vector<Value>>> proj(q.ghd.parts[u].size());
    for (const auto& e : w.events) {
      for (std::size_t p = 0; p < q.ghd.parts[u].size(); ++p) {
        const auto& [base, part_attrs] = q.ghd.parts[u][p];
        if (base != e.relation) continue;
        const auto& cols = q.spec.relations[base].columns;
        std::vector<Value> v;
        for (auto a : part_attrs) v.push_back(e.values[std::find(cols.begin(), cols.end(), a) - cols.begin()]);
        proj[p].insert(v);
      }
    }
    std::vector<std::int64_t> digits(attrs.size(), 0);
    while (true) {
      bool ok = true;
      for (std::size_t p = 0; p < proj.size() && ok; ++p) {
        std::vector<Value> v;
        for (auto a : q.ghd.parts[u][p].second) {
          v.push_back(Value::integer(digits[std::find(attrs.begin(), attrs.end(), a) - attrs.begin()]));
        }
        ok = proj[p].count(v) > 0;
      }
      if (ok) {
        std::vector<Value> v;
        for (auto d : digits) v.push_back(Value::integer(d));
        out.insert({u, v});
      }
      std::size_t i = 0;
      while (i < digits.size() && ++digits[i] == domain) digits[i++] = 0;
      if (i == digits.size()) break;
    }
  }
  return out;
}

Workload edge_stream(const JoinQuery& q, std::size_t edges, std::int64_t domain, std::uint64_t seed) {
  Rng rng(seed);
  auto list = erdos_renyi(domain, edges, rng);
  std::vector<Edge> es(list.begin(), list.end());
  return graph_stream(q.spec, es, rng);
}

}  // namespace

TEST_CASE("triangle delta from the closing edge") {
  auto q = testutil::load("triangle");
  GhdFrontEnd g(*q);
  std::vector<GhdFrontEnd::NodeTuple> out;
  g.ingest(1, ints({2, 3}), out);  // G2(x2, x3)
  g.ingest(2, ints({3, 1}), out);  // G3(x3, x1)
  CHECK(out.empty());
  g.ingest(0, ints({1, 2}), out);  // G1(x1, x2)
  REQUIRE(out.size() == 1);
  CHECK(out[0].node == 0);
  CHECK(out[0].anchor);
  CHECK(out[0].values == ints({1, 2, 3}));
  CHECK(g.simulated_insertions() == 1);
}

TEST_CASE("an edge that closes nothing has an empty delta") {
  auto q = testutil::load("triangle");
  GhdFrontEnd g(*q);
  std::vector<GhdFrontEnd::NodeTuple> out;
  g.ingest(1, ints({2, 3}), out);
  g.ingest(2, ints({4, 1}), out);
  g.ingest(0, ints({1, 2}), out);
  CHECK(out.empty());
  CHECK_FALSE(g.ingest(0, ints({1, 2}), out));
  CHECK(g.simulated_insertions() == 0);
}

TEST_CASE("dumbbell node insertions equal the final node results, each exactly once") {
  auto q = testutil::load("dumbbell");
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const std::int64_t domain = 7;
    const auto w = edge_stream(*q, 20, domain, seed);  // 140 events
    GhdFrontEnd g(*q);
    std::set<NodeResult> emitted;
    bool disjoint = true;
    std::uint64_t anchors = 0;
    for (const auto& e : w.events) {
      std::vector<GhdFrontEnd::NodeTuple> out;
      g.ingest(e.relation, e.values, out);
      bool seen_anchor = false;
      for (const auto& t : out) {
        if (!emitted.insert({t.node, t.values}).second) disjoint = false;
        // Anchor tuples come after every plain insertion of the event.
        if (t.anchor) {
          seen_anchor = true;
          ++anchors;
          CHECK(t.node == q->ghd.anchor[e.relation]);
        } else {
          CHECK_FALSE(seen_anchor);
        }
      }
    }
    CHECK(disjoint);
    const auto expected = node_results_brute(*q, w, domain);
    CHECK(emitted == expected);
    CHECK(g.node_results() == expected.size());
    CHECK(g.simulated_insertions() == anchors);
    MESSAGE("seed " << seed << ": " << expected.size() << " node results");
  }
}

TEST_CASE("cyclic engine deltas match the oracle") {
  for (const char* name : {"triangle", "dumbbell"}) {
    auto q = testutil::load(name);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto w = edge_stream(*q, 25, 6, seed);
      std::vector<Assignment> results;
      CHECK(testutil::delta_mismatches(q, w, results, seed) == 0);
      std::set<Assignment> distinct(results.begin(), results.end());
      CHECK(distinct.size() == results.size());
      Oracle oracle(q->spec);
      for (const auto& e : w.events) oracle.insert(e.relation, e.values);
      CHECK(distinct.size() == oracle.join().size());
      CHECK(!results.empty());
      MESSAGE(std::string(name) << " seed " << seed << ": " << results.size() << " results");
    }
  }
}

TEST_CASE("invalid ghds are rejected") {
  const std::string rels = R"(
relations:
  - {name: G1, attrs: [x1, x2]}
  - {name: G2, attrs: [x2, x3]}
  - {name: G3, attrs: [x3, x1]}
)";
  // Relation not covered by any node.
  CHECK_THROWS_AS(testutil::parse(rels + R"(
ghd:
  nodes:
    - {name: A, attrs: [x1, x2]}
    - {name: B, attrs: [x2, x3]}
  edges: [[A, B]]
)"),
                  InvalidGhd);
  // x1 appears in two nodes that are not connected through it.
  CHECK_THROWS_AS(testutil::parse(rels + R"(
ghd:
  nodes:
    - {name: A, attrs: [x1, x2, x3]}
    - {name: B, attrs: [x2]}
    - {name: C, attrs: [x1, x3]}
  edges: [[A, B], [B, C]]
)"),
                  InvalidGhd);
  // Unknown node in an edge.
  CHECK_THROWS_AS(testutil::parse(rels + R"(
ghd:
  nodes:
    - {name: A, attrs: [x1, x2, x3]}
  edges: [[A, Z]]
)"),
                  InvalidGhd);
  // Elimination order is not a permutation of the node's attributes.
  CHECK_THROWS_AS(testutil::parse(rels + R"(
ghd:
  nodes:
    - {name: A, attrs: [x1, x2, x3], order: [x1, x2]}
  edges: []
)"),
                  InvalidGhd);
}
