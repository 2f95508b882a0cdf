#pragma once

#include "joinsample/query.hpp"
#include "joinsample/relation.hpp"
#include "joinsample/reservoir.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace joinsample {

struct IndexMetrics {
  std::uint64_t propagation_loop_count = 0;
  std::uint64_t wcnt_doublings = 0;
  std::uint64_t bucket_moves = 0;
  mutable std::uint64_t retrieve_calls = 0;
  mutable std::uint64_t dummy_hits = 0;
};

/// 2^ceil(log2 x), with 0 for x = 0.
constexpr std::uint64_t pow2_ceil(std::uint64_t x) {
  if (x <= 1) return x;
  return std::uint64_t{1} << (64 - __builtin_clzll(x - 1));
}

/// The index for one rooted join tree. Node ids are index-relation ids.
///
/// Per non-root node e and key value t of key(e), it keeps cnt[e,t] and the
/// degree buckets of R_e ⋉ t (or of its groups). Leaves keep no buckets:
/// their cnt is the length of the semi-join list.
class TreeIndex {
 public:
  struct BucketView {
    int exponent;
    std::size_t units;
  };

  TreeIndex(Database& db, const RootedTree& tree, const std::vector<bool>& grouping, IndexMetrics& metrics);

  const RootedTree& tree() const { return tree_; }
  std::size_t root() const { return tree_.root; }
  bool grouped(std::size_t e) const { return nodes_[e].grouped; }
  /// ē for a grouped node.
  const AttrSet& group_attrs(std::size_t e) const { return nodes_[e].group_attrs; }

  /// Call after `row` has been inserted into the relation of node e.
  void insert(std::size_t e, RowId row);

  std::uint64_t cnt(std::size_t e, KeyId key) const;
  std::uint64_t wcnt(std::size_t e, KeyId key) const { return pow2_ceil(cnt(e, key)); }
  /// Key id of π_key(e) for a row of node e's relation.
  KeyId key_of(std::size_t e, RowId row) const { return nodes_[e].key_index->row_key(row); }
  KeyDictionary& key_dictionary(std::size_t e) const { return nodes_[e].key_index->dictionary(); }
  /// Non-empty buckets of L_{e,t} in exponent order. Empty for leaves.
  std::vector<BucketView> buckets(std::size_t e, KeyId key) const;
  /// feq of the group containing `row` at a grouped node.
  std::uint64_t group_frequency(std::size_t e, RowId row) const;

  /// Size of the batch for a row inserted at the root: the product of the
  /// children's exact cnt values (1 when the root is the only node).
  std::uint64_t batch_size(RowId row) const;
  /// Fills out[node] for every node on success; false means position z is a
  /// dummy. z must be below batch_size(row).
  bool retrieve(RowId row, std::uint64_t z, std::span<RowId> out) const;

  /// Same as retrieve() below the root, for a key tuple of a non-root node.
  bool retrieve_key(std::size_t e, KeyId key, std::uint64_t z, std::span<RowId> out) const;

 private:
  struct Bucket {
    int exponent;
    std::vector<std::uint32_t> units;
  };
  struct Node {
    Relation* rel = nullptr;
    bool grouped = false;
    AttrSet group_attrs;
    HashIndex* key_index = nullptr;            // on key(e), non-root
    std::vector<HashIndex*> child_index;       // on key(c), per child
    HashIndex* group_index = nullptr;          // on ē, grouped
    std::size_t position_in_parent = 0;
    std::vector<std::uint64_t> cnt;            // internal non-root, by KeyId
    std::vector<std::vector<Bucket>> lists;    // internal non-root, by KeyId
    std::vector<std::int8_t> exponent;         // by unit; -1 unplaced, -2 reserve
    std::vector<std::uint32_t> slot;           // by unit
    std::vector<KeyId> group_key;              // by group
    std::vector<KeyId> group_child;            // by group × child
    std::vector<std::vector<std::vector<std::uint32_t>>> groups_by_child;  // [child][key]
  };

  static constexpr std::int8_t kUnplaced = -1;
  static constexpr std::int8_t kReserve = -2;

  KeyId unit_key(std::size_t e, std::uint32_t unit) const;
  KeyId unit_child_key(std::size_t e, std::uint32_t unit, std::size_t ci) const;
  std::uint64_t children_product(std::size_t e, std::uint32_t unit) const;
  void update_unit(std::size_t e, std::uint32_t unit);
  void propagate(std::size_t e, KeyId key);
  void bucket_remove(Node& n, KeyId key, std::uint32_t unit);
  void bucket_add(Node& n, KeyId key, std::uint32_t unit, int exponent);
  bool retrieve_row(std::size_t e, RowId row, std::uint64_t z, std::span<RowId> out) const;

  const RootedTree& tree_;
  std::vector<Node> nodes_;
  IndexMetrics& metrics_;
};

/// One TreeIndex per index relation, each rooted at that relation.
class AcyclicIndex {
 public:
  AcyclicIndex(Database& db, const JoinQuery& query);
  AcyclicIndex(const AcyclicIndex&) = delete;
  AcyclicIndex& operator=(const AcyclicIndex&) = delete;

  /// Updates every tree for a row already inserted into relation `rel`.
  void insert(RelationId rel, RowId row);
  const TreeIndex& tree(RelationId root) const { return trees_[root]; }
  std::size_t node_count() const { return trees_.size(); }
  const IndexMetrics& metrics() const { return metrics_; }

 private:
  std::vector<TreeIndex> trees_;
  IndexMetrics metrics_;
};

/// The dummy-padded delta array for one inserted row, read through the
/// stream primitives: remain() = N_B - 1 - pos, skip(i) advances pos by i+1.
class DeltaBatch {
 public:
  using Rows = std::vector<RowId>;

  DeltaBatch(const TreeIndex& tree, RowId row)
      : tree_(&tree), row_(row), size_(tree.batch_size(row)) {}

  std::uint64_t size() const { return size_; }
  std::uint64_t position() const { return next_; }
  std::uint64_t remain() const { return size_ - next_; }

  Draw skip(std::uint64_t i, Rows& out) {
    if (i >= size_ - next_) {
      next_ = size_;
      return Draw::End;
    }
    const std::uint64_t z = next_ + i;
    next_ = z + 1;
    out.resize(tree_->tree().attrs.size());
    return tree_->retrieve(row_, z, out) ? Draw::Real : Draw::Dummy;
  }

 private:
  const TreeIndex* tree_;
  RowId row_;
  std::uint64_t size_;
  std::uint64_t next_ = 0;  // pos + 1
};

}  // namespace joinsample
