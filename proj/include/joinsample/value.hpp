#pragma once

#include <absl/container/flat_hash_map.h>
#include <absl/container/inlined_vector.h>
#include <absl/hash/hash.h>

#include <compare>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace joinsample {

using AttributeId = std::uint32_t;
using RelationId = std::uint32_t;
using RowId = std::uint32_t;
using KeyId = std::uint32_t;

/// An attribute value: a 64-bit integer or an interned string.
///
/// Strings are interned through a StringPool and carried by id, so two values
/// are equal iff their canonical encodings (kind byte + 8 payload bytes) are
/// byte-equal. The ordering is total: integers sort before strings, strings
/// sort by intern id.
struct Value {
  enum class Kind : std::uint8_t { Int = 0, Str = 1 };

  Kind kind = Kind::Int;
  std::int64_t payload = 0;

  static constexpr Value integer(std::int64_t v) { return Value{Kind::Int, v}; }
  static constexpr Value string_id(std::int64_t id) { return Value{Kind::Str, id}; }

  bool is_int() const { return kind == Kind::Int; }

  friend auto operator<=>(const Value&, const Value&) = default;
  friend bool operator==(const Value&, const Value&) = default;

  template <typename H>
  friend H AbslHashValue(H h, const Value& v) {
    return H::combine(std::move(h), static_cast<std::uint8_t>(v.kind), v.payload);
  }

  /// Appends the 9-byte canonical encoding.
  void encode(std::string& out) const;
};

/// Interns strings to dense ids. Ids are stable for the pool's lifetime.
class StringPool {
 public:
  StringPool() = default;
  StringPool(const StringPool&) = delete;
  StringPool& operator=(const StringPool&) = delete;
  // Moving a deque keeps its elements in place, so the views stay valid.
  StringPool(StringPool&&) = default;
  StringPool& operator=(StringPool&&) = default;

  std::int64_t intern(std::string_view s);
  const std::string& str(std::int64_t id) const { return strings_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return strings_.size(); }

 private:
  std::deque<std::string> strings_;
  absl::flat_hash_map<std::string_view, std::int64_t> ids_;
};

/// Parses a token as a 64-bit integer when possible, otherwise interns it.
Value parse_value(std::string_view token, StringPool& pool);
std::string format_value(const Value& v, const StringPool& pool);

/// A projection of a tuple onto an ordered attribute set.
using Key = absl::InlinedVector<Value, 4>;

/// Sorted, duplicate-free attribute list.
using AttrSet = std::vector<AttributeId>;

AttrSet make_attr_set(std::vector<AttributeId> attrs);
AttrSet attr_intersection(const AttrSet& a, const AttrSet& b);
AttrSet attr_union(const AttrSet& a, const AttrSet& b);
bool attr_subset(const AttrSet& sub, const AttrSet& super);
bool attr_contains(const AttrSet& s, AttributeId a);

/// Interned attribute names.
class AttributeCatalog {
 public:
  AttributeId intern(std::string_view name);
  /// Throws UnsupportedAttributes if the name is unknown.
  AttributeId id(std::string_view name) const;
  bool contains(std::string_view name) const { return ids_.contains(std::string(name)); }
  const std::string& name(AttributeId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  absl::flat_hash_map<std::string, AttributeId> ids_;
};

}  // namespace joinsample
