#pragma once

#include "joinsample/value.hpp"

#include <absl/container/flat_hash_map.h>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace joinsample {

/// A tuple with explicit support. `support` is sorted and `values[i]` is the
/// value of attribute `support[i]`.
struct Tuple {
  AttrSet support;
  std::vector<Value> values;
  RelationId relation = 0;
  std::uint64_t arrival_index = 0;

  friend bool operator==(const Tuple& a, const Tuple& b) {
    return a.support == b.support && a.values == b.values;
  }

  std::optional<Value> get(AttributeId a) const;
};

/// pi_x(t). Throws UnsupportedAttributes if x is not a subset of supp(t).
Tuple project(const Tuple& t, const AttrSet& x);

/// Dense ids for the distinct values of one attribute set. Shared by every
/// hash index over that attribute set, so that R_e and R_p agree on the id of a
/// common key value.
class KeyDictionary {
 public:
  explicit KeyDictionary(AttrSet attrs) : attrs_(std::move(attrs)) {}

  const AttrSet& attrs() const { return attrs_; }
  KeyId intern(const Key& key);
  std::optional<KeyId> find(const Key& key) const;
  const Key& key(KeyId id) const { return keys_[id]; }
  std::size_t size() const { return keys_.size(); }

 private:
  AttrSet attrs_;
  std::vector<Key> keys_;
  absl::flat_hash_map<Key, KeyId> ids_;
};

class Relation;

/// Maps each key value of an attribute set to the rows carrying it, in
/// arrival order. Lists only grow by appending, so a position handed out once
/// stays valid.
class HashIndex {
 public:
  HashIndex(const Relation& rel, KeyDictionary& dict);

  const AttrSet& attrs() const { return dict_->attrs(); }
  KeyDictionary& dictionary() const { return *dict_; }

  std::span<const RowId> rows(KeyId key) const {
    if (key >= lists_.size()) return {};
    return lists_[key];
  }
  /// Empty when the key value has never been seen.
  std::span<const RowId> rows(const Key& key) const;
  KeyId row_key(RowId row) const { return row_key_[row]; }
  std::size_t list_size(KeyId key) const { return key < lists_.size() ? lists_[key].size() : 0; }

  void add(RowId row, std::span<const Value> values);

 private:
  KeyDictionary* dict_;
  std::vector<std::size_t> positions_;
  std::vector<std::vector<RowId>> lists_;
  std::vector<KeyId> row_key_;
};

/// A named relation with set semantics. Rows are stored in declared attribute
/// order and numbered by arrival.
class Relation {
 public:
  Relation(RelationId id, std::string name, std::vector<AttributeId> declared);

  RelationId id() const { return id_; }
  const std::string& name() const { return name_; }
  /// Attributes in declared (column) order.
  const std::vector<AttributeId>& columns() const { return columns_; }
  /// Attributes as a sorted set.
  const AttrSet& attrs() const { return attrs_; }
  std::size_t arity() const { return columns_.size(); }
  std::size_t size() const { return row_count_; }

  std::span<const Value> row(RowId r) const {
    return {data_.data() + static_cast<std::size_t>(r) * columns_.size(), columns_.size()};
  }
  /// Column position of attribute a, or -1.
  int column_of(AttributeId a) const;
  std::vector<std::size_t> columns_of(const AttrSet& x) const;
  Key project_row(RowId r, const std::vector<std::size_t>& cols) const;
  Tuple tuple(RowId r) const;

  /// Values in declared order. Returns the new row id, or nullopt for a
  /// duplicate (a no-op under set semantics).
  std::optional<RowId> insert(std::span<const Value> values);
  std::optional<RowId> find(std::span<const Value> values) const;

  /// Registers (or returns) the hash index on attribute set x ⊆ attrs.
  HashIndex& index(KeyDictionary& dict);
  HashIndex* find_index(const AttrSet& x) const;

  std::uint64_t duplicates() const { return duplicates_; }

 private:
  RelationId id_;
  std::string name_;
  std::vector<AttributeId> columns_;
  AttrSet attrs_;
  std::vector<Value> data_;
  std::size_t row_count_ = 0;
  absl::flat_hash_map<Key, RowId> rows_;
  std::map<AttrSet, std::unique_ptr<HashIndex>> indexes_;
  std::uint64_t duplicates_ = 0;
};

/// A set of relations plus the key dictionaries their indexes share.
class Database {
 public:
  Database() = default;
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;

  RelationId add_relation(std::string name, std::vector<AttributeId> declared);
  Relation& relation(RelationId id) { return *relations_.at(id); }
  const Relation& relation(RelationId id) const { return *relations_.at(id); }
  std::optional<RelationId> find(std::string_view name) const;
  std::size_t relation_count() const { return relations_.size(); }

  KeyDictionary& dictionary(const AttrSet& x);
  HashIndex& index(RelationId rel, const AttrSet& x);

  /// R ⋉ t on the registered index for `key`; throws MissingIndex when no
  /// index on `key` exists, UnsupportedAttributes when key ⊄ attrs ∩ supp(t).
  std::span<const RowId> semijoin(RelationId rel, const Tuple& t, const AttrSet& key) const;

 private:
  std::vector<std::unique_ptr<Relation>> relations_;
  std::map<AttrSet, std::unique_ptr<KeyDictionary>> dictionaries_;
};

}  // namespace joinsample
