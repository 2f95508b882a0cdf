#pragma once

#include "joinsample/query.hpp"
#include "joinsample/relation.hpp"

#include <memory>
#include <span>
#include <vector>

namespace joinsample {

/// Maintains the projected sub-instance of every GHD node and turns a base
/// insertion into node-level insertions for the acyclic index over the GHD
/// tree.
class GhdFrontEnd {
 public:
  struct NodeTuple {
    std::size_t node;
    std::vector<Value> values;  // node attributes in declared order
    /// Only anchor-node tuples open a delta batch; the others are plain
    /// index insertions and are emitted first.
    bool anchor;
  };

  explicit GhdFrontEnd(const JoinQuery& query);
  GhdFrontEnd(const GhdFrontEnd&) = delete;
  GhdFrontEnd& operator=(const GhdFrontEnd&) = delete;

  /// Returns false when the base tuple is a duplicate.
  bool ingest(std::size_t rel, std::span<const Value> values, std::vector<NodeTuple>& out);

  /// Q_u(R_u) ⋉ t for the projection just added to `part` of node u, where
  /// `values` are the projection's values in sorted-attribute order.
  void delta_enumerate(std::size_t node, std::size_t part, std::span<const Value> values,
                       std::vector<std::vector<Value>>& out) const;

  std::uint64_t simulated_insertions() const { return simulated_; }
  std::uint64_t node_results() const { return node_results_; }

 private:
  struct Step {
    AttributeId attr;
    std::size_t slot;  // position of attr in λ(u) sorted
    /// Per part containing attr: index on bound ∩ part (candidates) and on
    /// (bound ∪ {attr}) ∩ part (membership).
    struct Probe {
      std::size_t part;
      HashIndex* candidates;
      std::vector<std::size_t> candidate_slots;
      HashIndex* check;
      std::vector<std::size_t> check_slots;
      std::size_t attr_column;
    };
    std::vector<Probe> probes;
  };
  struct Plan {
    std::vector<std::size_t> bound_slots;  // slots filled from the new projection
    /// Parts fully bound at the start, other than the inserted one.
    std::vector<std::pair<HashIndex*, std::vector<std::size_t>>> initial_checks;
    std::vector<Step> steps;
  };
  struct Node {
    AttrSet lambda;
    std::unique_ptr<Database> db;
    std::vector<RelationId> parts;                  // local relation per part
    std::vector<std::size_t> part_base;             // base relation per part
    std::vector<Plan> plans;                        // per inserted part
    std::vector<std::size_t> output_slots;          // declared attr order -> slot
  };

  void enumerate(const Node& node, const Plan& plan, std::size_t step, std::vector<Value>& assignment,
                 std::vector<std::vector<Value>>& out) const;

  const JoinQuery& query_;
  std::vector<Node> nodes_;
  std::vector<std::unique_ptr<Relation>> base_;
  std::uint64_t simulated_ = 0;
  std::uint64_t node_results_ = 0;
};

}  // namespace joinsample
