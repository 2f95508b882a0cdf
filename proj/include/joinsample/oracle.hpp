#pragma once

#include "joinsample/query.hpp"
#include "joinsample/value.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

namespace joinsample {

/// An assignment of values to every query attribute, in sorted attribute order.
using Assignment = std::vector<Value>;

/// Ground truth by naive backtracking over the base relations. Shares no code
/// with the index: its own storage, its own per-attribute hash maps.
class Oracle {
 public:
  /// `cap` bounds the number of results any single call may produce.
  Oracle(const QuerySpec& spec, std::uint64_t cap = 10'000'000);

  /// Inserts a base tuple (declared column order) and returns ΔQ, the results
  /// that contain it. Empty for a duplicate. Throws CapExceeded.
  std::vector<Assignment> insert(std::size_t rel, const std::vector<Value>& values);

  /// ΔQ(R, t) without inserting t.
  std::vector<Assignment> delta(std::size_t rel, const std::vector<Value>& values) const;

  /// Q(R). Throws CapExceeded.
  std::vector<Assignment> join() const;

  /// Q restricted to `rels`, semi-joined with a partial assignment: the number
  /// of results of the sub-join over `rels` that agree with `fixed` (unset
  /// entries free). Used for subtree counts.
  std::uint64_t count(const std::vector<std::size_t>& rels, const std::vector<std::optional<Value>>& fixed) const;

  std::size_t relation_size(std::size_t rel) const { return tuples_[rel].size(); }
  const std::vector<AttributeId>& attributes() const { return attrs_; }
  std::size_t slot(AttributeId a) const;

 private:
  struct ValueHash {
    std::size_t operator()(const Value& v) const {
      return std::hash<std::int64_t>()(v.payload) * 31 + static_cast<std::size_t>(v.kind);
    }
  };
  using Partial = std::vector<std::optional<Value>>;

  void search(const std::vector<std::size_t>& order, std::size_t depth, Partial& partial,
              std::vector<Assignment>* out, std::uint64_t& found) const;
  std::vector<std::size_t> plan(std::vector<std::size_t> rels, const Partial& partial) const;

  std::vector<AttributeId> attrs_;
  std::vector<std::vector<std::size_t>> rel_slots_;  // per relation: slot of each declared column
  std::vector<std::vector<std::vector<Value>>> tuples_;
  std::vector<std::set<std::vector<Value>>> present_;
  /// [relation][column] value -> tuple indices
  std::vector<std::vector<std::unordered_map<Value, std::vector<std::size_t>, ValueHash>>> by_value_;
  std::uint64_t cap_;
};

}  // namespace joinsample
