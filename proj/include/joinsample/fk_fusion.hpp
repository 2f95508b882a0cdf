#pragma once

#include "joinsample/query.hpp"
#include "joinsample/relation.hpp"

#include <span>
#include <vector>

namespace joinsample {

/// Rewrites base events of a foreign-key query into insertions of fused
/// tuples. A fused tuple is a fact tuple joined with its (unique) parent chain;
/// it is emitted as soon as the whole chain is present, so a late parent
/// flushes every buffered fact tuple that was waiting for it.
class ForeignKeyFuser {
 public:
  explicit ForeignKeyFuser(const JoinQuery& query);
  ForeignKeyFuser(const ForeignKeyFuser&) = delete;
  ForeignKeyFuser& operator=(const ForeignKeyFuser&) = delete;

  /// Inserts a base tuple (declared column order). Appends fused tuples, in
  /// fact-tuple arrival order, for index relation query.base_to_index[rel].
  /// Returns false for a duplicate. Throws PrimaryKeyViolation.
  bool ingest(std::size_t rel, std::span<const Value> values, std::vector<std::vector<Value>>& out);

  std::uint64_t emitted() const { return emitted_; }

 private:
  struct Link {
    std::size_t child, parent;  // member positions
    HashIndex* child_index;     // child relation on key
    HashIndex* parent_index;    // parent relation on key
  };
  struct Component {
    const FusedRelation* spec;
    std::vector<RelationId> rels;  // by member position
    std::vector<Link> links;
    /// For each fused column: (member position, column in that member).
    std::vector<std::pair<std::size_t, std::size_t>> sources;
  };

  const JoinQuery& query_;
  Database db_;
  std::vector<Component> components_;
  std::vector<std::pair<std::size_t, std::size_t>> member_of_;  // base rel -> (component, position)
  std::uint64_t emitted_ = 0;
};

}  // namespace joinsample
