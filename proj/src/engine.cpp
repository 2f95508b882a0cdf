#include "joinsample/engine.hpp"

#include "joinsample/errors.hpp"

#include <algorithm>

namespace joinsample {

Engine::Engine(std::shared_ptr<const JoinQuery> query, EngineOptions options)
    : query_(std::move(query)), reservoir_(options.k, options.seed) {
  if (options.k == 0) throw std::invalid_argument("sample size k must be positive");
  reservoir_.set_w_update(options.w_update);
  const auto& q = *query_;
  for (const auto& r : q.index_relations) db_.add_relation(r.name, r.columns);
  index_ = std::make_unique<AcyclicIndex>(db_, q);
  if (q.kind == PlanKind::ForeignKey) fuser_ = std::make_unique<ForeignKeyFuser>(q);
  if (q.kind == PlanKind::Ghd) ghd_ = std::make_unique<GhdFrontEnd>(q);
  for (auto a : q.attributes) {
    bool found = false;
    for (std::size_t r = 0; r < q.index_relations.size() && !found; ++r) {
      const int col = db_.relation(static_cast<RelationId>(r)).column_of(a);
      if (col >= 0) {
        attr_source_.emplace_back(r, static_cast<std::size_t>(col));
        found = true;
      }
    }
    if (!found) throw UnsupportedAttributes("attribute '" + q.spec.attributes.name(a) + "' is not covered");
  }
}

void Engine::feed(std::string_view relation, std::span<const Value> values) {
  feed(query_->spec.relation_index(relation), values);
}

void Engine::feed(std::size_t base, std::span<const Value> values) {
  const auto& q = *query_;
  if (base >= q.spec.relations.size()) throw UnknownRelation("relation id out of range");
  const auto& schema = q.spec.relations[base];
  if (values.size() != schema.columns.size()) {
    throw ParseError("relation '" + schema.name + "' expects " + std::to_string(schema.columns.size()) +
                     " values, got " + std::to_string(values.size()));
  }
  ++counts_.events;
  const auto loops_before = index_->metrics().propagation_loop_count;
  switch (q.kind) {
    case PlanKind::Acyclic:
      insert_index(q.base_to_index[base], values, true);
      break;
    case PlanKind::ForeignKey: {
      std::vector<std::vector<Value>> fused;
      if (!fuser_->ingest(base, values, fused)) ++counts_.duplicates;
      for (const auto& f : fused) insert_index(q.base_to_index[base], f, true);
      break;
    }
    case PlanKind::Ghd: {
      std::vector<GhdFrontEnd::NodeTuple> out;
      if (!ghd_->ingest(base, values, out)) ++counts_.duplicates;
      for (const auto& t : out) insert_index(t.node, t.values, t.anchor);
      break;
    }
  }
  counts_.max_event_propagation =
      std::max(counts_.max_event_propagation, index_->metrics().propagation_loop_count - loops_before);
}

void Engine::insert_index(std::size_t rel, std::span<const Value> values, bool with_batch) {
  auto& relation = db_.relation(static_cast<RelationId>(rel));
  const auto row = relation.insert(values);
  if (!row) {
    // Only reachable in the direct case; front ends deduplicate upstream.
    ++counts_.duplicates;
    return;
  }
  ++counts_.index_insertions;
  index_->insert(static_cast<RelationId>(rel), *row);
  if (!with_batch) return;
  const auto& tree = index_->tree(static_cast<RelationId>(rel));
  DeltaBatch batch(tree, *row);
  ++counts_.batches;
  counts_.batch_total += batch.size();
  if (observer_) observer_(tree, *row);
  reservoir_.batch_update(batch);
}

std::vector<Value> Engine::result_values(const ResultRows& rows) const {
  std::vector<Value> out;
  out.reserve(attr_source_.size());
  for (auto [rel, col] : attr_source_) out.push_back(db_.relation(static_cast<RelationId>(rel)).row(rows[rel])[col]);
  return out;
}

Snapshot Engine::snapshot() const {
  Snapshot s;
  s.arrival_index = counts_.events;
  s.join_upper = counts_.batch_total;
  for (const auto& rows : reservoir_.samples()) s.samples.push_back(result_values(rows));
  return s;
}

EngineMetrics Engine::metrics() const {
  EngineMetrics m = counts_;
  m.index = index_->metrics();
  m.reservoir = reservoir_.counters();
  return m;
}

}  // namespace joinsample
