#include "joinsample/oracle.hpp"

#include "joinsample/errors.hpp"

#include <algorithm>

namespace joinsample {

Oracle::Oracle(const QuerySpec& spec, std::uint64_t cap) : cap_(cap) {
  for (const auto& r : spec.relations) {
    for (auto a : r.columns) attrs_.push_back(a);
  }
  std::sort(attrs_.begin(), attrs_.end());
  attrs_.erase(std::unique(attrs_.begin(), attrs_.end()), attrs_.end());
  for (const auto& r : spec.relations) {
    std::vector<std::size_t> slots;
    for (auto a : r.columns) slots.push_back(slot(a));
    rel_slots_.push_back(std::move(slots));
    by_value_.emplace_back(r.columns.size());
  }
  tuples_.resize(spec.relations.size());
  present_.resize(spec.relations.size());
}

std::size_t Oracle::slot(AttributeId a) const {
  return static_cast<std::size_t>(std::lower_bound(attrs_.begin(), attrs_.end(), a) - attrs_.begin());
}

std::vector<std::size_t> Oracle::plan(std::vector<std::size_t> rels, const Partial& partial) const {
  std::vector<bool> bound(attrs_.size());
  for (std::size_t s = 0; s < partial.size(); ++s) bound[s] = partial[s].has_value();
  std::vector<std::size_t> order;
  while (!rels.empty()) {
    std::size_t best = 0;
    int best_score = -1;
    for (std::size_t i = 0; i < rels.size(); ++i) {
      int score = 0;
      for (auto s : rel_slots_[rels[i]]) score += bound[s] ? 1 : 0;
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    order.push_back(rels[best]);
    for (auto s : rel_slots_[rels[best]]) bound[s] = true;
    rels.erase(rels.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return order;
}

void Oracle::search(const std::vector<std::size_t>& order, std::size_t depth, Partial& partial,
                    std::vector<Assignment>* out, std::uint64_t& found) const {
  if (depth == order.size()) {
    if (++found > cap_) throw CapExceeded("oracle result count exceeds the configured cap");
    if (out != nullptr) {
      Assignment a;
      a.reserve(partial.size());
      for (const auto& v : partial) a.push_back(v.value_or(Value{}));
      out->push_back(std::move(a));
    }
    return;
  }
  const auto rel = order[depth];
  const auto& slots = rel_slots_[rel];
  const std::vector<std::size_t>* candidates = nullptr;
  for (std::size_t c = 0; c < slots.size(); ++c) {
    if (!partial[slots[c]]) continue;
    auto it = by_value_[rel][c].find(*partial[slots[c]]);
    if (it == by_value_[rel][c].end()) return;
    if (candidates == nullptr || it->second.size() < candidates->size()) candidates = &it->second;
  }
  std::vector<std::size_t> all;
  if (candidates == nullptr) {
    all.resize(tuples_[rel].size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    candidates = &all;
  }
  std::vector<std::size_t> assigned;
  for (auto idx : *candidates) {
    const auto& t = tuples_[rel][idx];
    bool ok = true;
    assigned.clear();
    for (std::size_t c = 0; c < slots.size(); ++c) {
      auto& cell = partial[slots[c]];
      if (cell) {
        if (*cell != t[c]) {
          ok = false;
          break;
        }
      } else {
        cell = t[c];
        assigned.push_back(slots[c]);
      }
    }
    if (ok) search(order, depth + 1, partial, out, found);
    for (auto s : assigned) partial[s].reset();
  }
}

std::vector<Assignment> Oracle::delta(std::size_t rel, const std::vector<Value>& values) const {
  std::vector<Assignment> out;
  if (present_[rel].count(values)) return out;
  Partial partial(attrs_.size());
  for (std::size_t c = 0; c < values.size(); ++c) {
    auto& cell = partial[rel_slots_[rel][c]];
    if (cell && *cell != values[c]) return out;
    cell = values[c];
  }
  std::vector<std::size_t> others;
  for (std::size_t r = 0; r < tuples_.size(); ++r) {
    if (r != rel) others.push_back(r);
  }
  std::uint64_t found = 0;
  search(plan(others, partial), 0, partial, &out, found);
  return out;
}

std::vector<Assignment> Oracle::insert(std::size_t rel, const std::vector<Value>& values) {
  if (values.size() != rel_slots_[rel].size()) throw ParseError("oracle: wrong arity");
  auto out = delta(rel, values);
  if (!present_[rel].insert(values).second) return {};
  const auto idx = tuples_[rel].size();
  tuples_[rel].push_back(values);
  for (std::size_t c = 0; c < values.size(); ++c) by_value_[rel][c][values[c]].push_back(idx);
  return out;
}

std::vector<Assignment> Oracle::join() const {
  std::vector<Assignment> out;
  Partial partial(attrs_.size());
  std::vector<std::size_t> all(tuples_.size());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  std::uint64_t found = 0;
  search(plan(all, partial), 0, partial, &out, found);
  return out;
}

std::uint64_t Oracle::count(const std::vector<std::size_t>& rels, const std::vector<std::optional<Value>>& fixed) const {
  Partial partial = fixed;
  partial.resize(attrs_.size());
  std::uint64_t found = 0;
  search(plan(rels, partial), 0, partial, nullptr, found);
  return found;
}

}  // namespace joinsample
