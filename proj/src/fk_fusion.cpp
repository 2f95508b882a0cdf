#include "joinsample/fk_fusion.hpp"

#include "joinsample/errors.hpp"

#include <algorithm>

namespace joinsample {

ForeignKeyFuser::ForeignKeyFuser(const JoinQuery& query) : query_(query) {
  const auto& rels = query.spec.relations;
  for (const auto& r : rels) db_.add_relation(r.name, r.columns);
  member_of_.resize(rels.size());
  for (const auto& fr : query.fused) {
    Component c;
    c.spec = &fr;
    for (std::size_t pos = 0; pos < fr.members.size(); ++pos) {
      c.rels.push_back(static_cast<RelationId>(fr.members[pos]));
      member_of_[fr.members[pos]] = {components_.size(), pos};
    }
    for (const auto& l : fr.links) {
      c.links.push_back({l.child, l.parent, &db_.index(c.rels[l.child], l.key), &db_.index(c.rels[l.parent], l.key)});
    }
    for (auto a : fr.columns) {
      for (std::size_t pos = 0; pos < c.rels.size(); ++pos) {
        const int col = db_.relation(c.rels[pos]).column_of(a);
        if (col >= 0) {
          c.sources.emplace_back(pos, static_cast<std::size_t>(col));
          break;
        }
      }
    }
    components_.push_back(std::move(c));
  }
}

bool ForeignKeyFuser::ingest(std::size_t rel, std::span<const Value> values, std::vector<std::vector<Value>>& out) {
  auto& relation = db_.relation(static_cast<RelationId>(rel));
  const auto row = relation.insert(values);
  if (!row) return false;
  const auto [ci, pos] = member_of_[rel];
  const auto& comp = components_[ci];

  for (const auto& l : comp.links) {
    if (l.parent != pos) continue;
    if (l.parent_index->list_size(l.parent_index->row_key(*row)) > 1) {
      throw PrimaryKeyViolation("second tuple in '" + relation.name() + "' with the same key value");
    }
  }

  // Fact rows that can join the new tuple: walk child links down to the fact.
  const std::size_t m = comp.rels.size();
  std::vector<std::vector<RowId>> frontier(m);
  frontier[pos].push_back(*row);
  std::vector<std::size_t> queue{pos};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto member = queue[head];
    for (const auto& l : comp.links) {
      if (l.parent != member) continue;
      const bool first = frontier[l.child].empty();
      for (auto r : frontier[member]) {
        for (auto child_row : l.child_index->rows(l.parent_index->row_key(r))) frontier[l.child].push_back(child_row);
      }
      if (first && !frontier[l.child].empty()) queue.push_back(l.child);
    }
  }
  auto facts = std::move(frontier[0]);
  std::sort(facts.begin(), facts.end());
  facts.erase(std::unique(facts.begin(), facts.end()), facts.end());

  std::vector<RowId> chain(m);
  std::vector<bool> have(m);
  for (auto fact : facts) {
    std::fill(have.begin(), have.end(), false);
    chain[0] = fact;
    have[0] = true;
    bool complete = true;
    // Members are in BFS order from the fact, so each parent's discovering
    // child is already resolved.
    for (std::size_t p = 1; p < m && complete; ++p) {
      for (const auto& l : comp.links) {
        if (l.parent != p || !have[l.child]) continue;
        const auto rows = l.parent_index->rows(l.child_index->row_key(chain[l.child]));
        if (rows.empty()) {
          complete = false;
        } else {
          chain[p] = rows.front();
          have[p] = true;
        }
        break;
      }
      complete = complete && have[p];
    }
    if (!complete) continue;
    bool consistent = chain[pos] == *row;
    for (const auto& l : comp.links) {
      consistent = consistent && l.child_index->row_key(chain[l.child]) == l.parent_index->row_key(chain[l.parent]);
    }
    if (!consistent) continue;
    std::vector<Value> fused;
    fused.reserve(comp.sources.size());
    for (auto [member, col] : comp.sources) fused.push_back(db_.relation(comp.rels[member]).row(chain[member])[col]);
    out.push_back(std::move(fused));
    ++emitted_;
  }
  return true;
}

}  // namespace joinsample
