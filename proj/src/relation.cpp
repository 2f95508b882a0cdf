#include "joinsample/relation.hpp"

#include "joinsample/errors.hpp"

#include <algorithm>

namespace joinsample {

std::optional<Value> Tuple::get(AttributeId a) const {
  auto it = std::lower_bound(support.begin(), support.end(), a);
  if (it == support.end() || *it != a) return std::nullopt;
  return values[static_cast<std::size_t>(it - support.begin())];
}

Tuple project(const Tuple& t, const AttrSet& x) {
  Tuple out;
  out.support = x;
  out.values.reserve(x.size());
  out.relation = t.relation;
  out.arrival_index = t.arrival_index;
  for (auto a : x) {
    auto v = t.get(a);
    if (!v) throw UnsupportedAttributes("projection onto an attribute outside the tuple's support");
    out.values.push_back(*v);
  }
  return out;
}

KeyId KeyDictionary::intern(const Key& key) {
  auto [it, inserted] = ids_.try_emplace(key, static_cast<KeyId>(keys_.size()));
  if (inserted) keys_.push_back(key);
  return it->second;
}

std::optional<KeyId> KeyDictionary::find(const Key& key) const {
  auto it = ids_.find(key);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

HashIndex::HashIndex(const Relation& rel, KeyDictionary& dict)
    : dict_(&dict), positions_(rel.columns_of(dict.attrs())) {
  for (RowId r = 0; r < rel.size(); ++r) add(r, rel.row(r));
}

std::span<const RowId> HashIndex::rows(const Key& key) const {
  auto id = dict_->find(key);
  if (!id) return {};
  return rows(*id);
}

void HashIndex::add(RowId row, std::span<const Value> values) {
  Key key;
  for (auto p : positions_) key.push_back(values[p]);
  const KeyId id = dict_->intern(key);
  if (id >= lists_.size()) lists_.resize(static_cast<std::size_t>(id) + 1);
  lists_[id].push_back(row);
  if (row_key_.size() <= row) row_key_.resize(static_cast<std::size_t>(row) + 1);
  row_key_[row] = id;
}

Relation::Relation(RelationId id, std::string name, std::vector<AttributeId> declared)
    : id_(id), name_(std::move(name)), columns_(std::move(declared)), attrs_(make_attr_set(columns_)) {
  if (attrs_.size() != columns_.size()) {
    throw ParseError("relation '" + name_ + "' lists an attribute twice");
  }
}

int Relation::column_of(AttributeId a) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == a) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::size_t> Relation::columns_of(const AttrSet& x) const {
  std::vector<std::size_t> out;
  out.reserve(x.size());
  for (auto a : x) {
    const int c = column_of(a);
    if (c < 0) throw UnsupportedAttributes("attribute not in relation '" + name_ + "'");
    out.push_back(static_cast<std::size_t>(c));
  }
  return out;
}

Key Relation::project_row(RowId r, const std::vector<std::size_t>& cols) const {
  Key key;
  auto values = row(r);
  for (auto c : cols) key.push_back(values[c]);
  return key;
}

Tuple Relation::tuple(RowId r) const {
  Tuple t;
  t.support = attrs_;
  t.relation = id_;
  t.values.reserve(attrs_.size());
  auto values = row(r);
  for (auto a : attrs_) t.values.push_back(values[static_cast<std::size_t>(column_of(a))]);
  return t;
}

std::optional<RowId> Relation::insert(std::span<const Value> values) {
  if (values.size() != columns_.size()) {
    throw ParseError("relation '" + name_ + "' expects " + std::to_string(columns_.size()) + " values, got " +
                     std::to_string(values.size()));
  }
  Key key(values.begin(), values.end());
  const auto row = static_cast<RowId>(row_count_);
  auto [it, inserted] = rows_.try_emplace(std::move(key), row);
  if (!inserted) {
    ++duplicates_;
    return std::nullopt;
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++row_count_;
  for (auto& [attrs, idx] : indexes_) idx->add(row, values);
  return row;
}

std::optional<RowId> Relation::find(std::span<const Value> values) const {
  Key key(values.begin(), values.end());
  auto it = rows_.find(key);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

HashIndex& Relation::index(KeyDictionary& dict) {
  auto it = indexes_.find(dict.attrs());
  if (it != indexes_.end()) return *it->second;
  if (!attr_subset(dict.attrs(), attrs_)) {
    throw UnsupportedAttributes("index attributes are not a subset of relation '" + name_ + "'");
  }
  auto [pos, _] = indexes_.emplace(dict.attrs(), std::make_unique<HashIndex>(*this, dict));
  return *pos->second;
}

HashIndex* Relation::find_index(const AttrSet& x) const {
  auto it = indexes_.find(x);
  return it == indexes_.end() ? nullptr : it->second.get();
}

RelationId Database::add_relation(std::string name, std::vector<AttributeId> declared) {
  const auto id = static_cast<RelationId>(relations_.size());
  relations_.push_back(std::make_unique<Relation>(id, std::move(name), std::move(declared)));
  return id;
}

std::optional<RelationId> Database::find(std::string_view name) const {
  for (const auto& r : relations_) {
    if (r->name() == name) return r->id();
  }
  return std::nullopt;
}

KeyDictionary& Database::dictionary(const AttrSet& x) {
  auto& slot = dictionaries_[x];
  if (!slot) slot = std::make_unique<KeyDictionary>(x);
  return *slot;
}

HashIndex& Database::index(RelationId rel, const AttrSet& x) {
  return relation(rel).index(dictionary(x));
}

std::span<const RowId> Database::semijoin(RelationId rel, const Tuple& t, const AttrSet& key) const {
  const auto& r = relation(rel);
  if (!attr_subset(key, r.attrs()) || !attr_subset(key, t.support)) {
    throw UnsupportedAttributes("semi-join key must lie in both the relation and the tuple support");
  }
  auto* idx = r.find_index(key);
  if (idx == nullptr) throw MissingIndex("no hash index on the requested key for relation '" + r.name() + "'");
  const auto projected = project(t, key);
  Key k(projected.values.begin(), projected.values.end());
  return idx->rows(k);
}

}  // namespace joinsample
