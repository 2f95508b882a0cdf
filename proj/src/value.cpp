#include "joinsample/value.hpp"

#include "joinsample/errors.hpp"

#include <algorithm>
#include <charconv>

namespace joinsample {

void Value::encode(std::string& out) const {
  out.push_back(static_cast<char>(kind));
  auto bits = static_cast<std::uint64_t>(payload);
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::int64_t StringPool::intern(std::string_view s) {
  if (auto it = ids_.find(s); it != ids_.end()) return it->second;
  const auto id = static_cast<std::int64_t>(strings_.size());
  strings_.emplace_back(s);
  ids_.emplace(std::string_view(strings_.back()), id);
  return id;
}

Value parse_value(std::string_view token, StringPool& pool) {
  std::int64_t v = 0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (!token.empty() && ec == std::errc() && ptr == last) return Value::integer(v);
  return Value::string_id(pool.intern(token));
}

std::string format_value(const Value& v, const StringPool& pool) {
  if (v.is_int()) return std::to_string(v.payload);
  return pool.str(v.payload);
}

AttrSet make_attr_set(std::vector<AttributeId> attrs) {
  std::sort(attrs.begin(), attrs.end());
  attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
  return attrs;
}

AttrSet attr_intersection(const AttrSet& a, const AttrSet& b) {
  AttrSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

AttrSet attr_union(const AttrSet& a, const AttrSet& b) {
  AttrSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool attr_subset(const AttrSet& sub, const AttrSet& super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

bool attr_contains(const AttrSet& s, AttributeId a) {
  return std::binary_search(s.begin(), s.end(), a);
}

AttributeId AttributeCatalog::intern(std::string_view name) {
  std::string key(name);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  const auto id = static_cast<AttributeId>(names_.size());
  names_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

AttributeId AttributeCatalog::id(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) throw UnsupportedAttributes("unknown attribute '" + std::string(name) + "'");
  return it->second;
}

}  // namespace joinsample
