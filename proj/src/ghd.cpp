#include "joinsample/ghd.hpp"

#include "joinsample/errors.hpp"

#include <absl/container/flat_hash_set.h>

#include <algorithm>

namespace joinsample {

namespace {

std::size_t slot_of(const AttrSet& lambda, AttributeId a) {
  return static_cast<std::size_t>(std::lower_bound(lambda.begin(), lambda.end(), a) - lambda.begin());
}

std::vector<std::size_t> slots_of(const AttrSet& lambda, const AttrSet& attrs) {
  std::vector<std::size_t> out;
  for (auto a : attrs) out.push_back(slot_of(lambda, a));
  return out;
}

Key gather(const std::vector<Value>& assignment, const std::vector<std::size_t>& slots) {
  Key key;
  for (auto s : slots) key.push_back(assignment[s]);
  return key;
}

}  // namespace

GhdFrontEnd::GhdFrontEnd(const JoinQuery& query) : query_(query) {
  if (query.kind != PlanKind::Ghd) throw InvalidGhd("query has no ghd");
  for (std::size_t r = 0; r < query.spec.relations.size(); ++r) {
    const auto& rs = query.spec.relations[r];
    base_.push_back(std::make_unique<Relation>(static_cast<RelationId>(r), rs.name, rs.columns));
  }
  const auto& layout = query.ghd;
  for (std::size_t u = 0; u < layout.nodes.size(); ++u) {
    Node node;
    node.lambda = make_attr_set(layout.nodes[u].attrs);
    node.db = std::make_unique<Database>();
    for (const auto& [r, attrs] : layout.parts[u]) {
      node.parts.push_back(node.db->add_relation(query.spec.relations[r].name, attrs));
      node.part_base.push_back(r);
    }
    for (auto a : layout.nodes[u].attrs) node.output_slots.push_back(slot_of(node.lambda, a));

    const auto part_attrs = [&](std::size_t p) -> const AttrSet& { return layout.parts[u][p].second; };
    for (std::size_t inserted = 0; inserted < node.parts.size(); ++inserted) {
      Plan plan;
      AttrSet bound = part_attrs(inserted);
      plan.bound_slots = slots_of(node.lambda, bound);
      for (std::size_t p = 0; p < node.parts.size(); ++p) {
        if (p != inserted && attr_subset(part_attrs(p), bound)) {
          plan.initial_checks.emplace_back(&node.db->index(node.parts[p], part_attrs(p)),
                                           slots_of(node.lambda, part_attrs(p)));
        }
      }
      for (auto a : layout.nodes[u].order) {
        if (attr_contains(bound, a)) continue;
        Step step;
        step.attr = a;
        step.slot = slot_of(node.lambda, a);
        AttrSet with_a = attr_union(bound, AttrSet{a});
        for (std::size_t p = 0; p < node.parts.size(); ++p) {
          if (!attr_contains(part_attrs(p), a)) continue;
          Step::Probe probe;
          probe.part = p;
          const auto cand = attr_intersection(bound, part_attrs(p));
          const auto check = attr_intersection(with_a, part_attrs(p));
          probe.candidates = &node.db->index(node.parts[p], cand);
          probe.candidate_slots = slots_of(node.lambda, cand);
          probe.check = &node.db->index(node.parts[p], check);
          probe.check_slots = slots_of(node.lambda, check);
          probe.attr_column = static_cast<std::size_t>(node.db->relation(node.parts[p]).column_of(a));
          step.probes.push_back(std::move(probe));
        }
        plan.steps.push_back(std::move(step));
        bound = std::move(with_a);
      }
      node.plans.push_back(std::move(plan));
    }
    nodes_.push_back(std::move(node));
  }
}

void GhdFrontEnd::enumerate(const Node& node, const Plan& plan, std::size_t step, std::vector<Value>& assignment,
                            std::vector<std::vector<Value>>& out) const {
  if (step == plan.steps.size()) {
    std::vector<Value> tuple;
    tuple.reserve(node.output_slots.size());
    for (auto s : node.output_slots) tuple.push_back(assignment[s]);
    out.push_back(std::move(tuple));
    return;
  }
  const auto& st = plan.steps[step];
  // Drive from the probe with the shortest candidate list.
  const Step::Probe* driver = nullptr;
  std::span<const RowId> rows;
  for (const auto& probe : st.probes) {
    auto list = probe.candidates->rows(gather(assignment, probe.candidate_slots));
    if (list.empty()) return;
    if (driver == nullptr || list.size() < rows.size()) {
      driver = &probe;
      rows = list;
    }
  }
  const auto& driver_rel = node.db->relation(node.parts[driver->part]);
  absl::flat_hash_set<Value> seen;
  for (auto r : rows) {
    const Value v = driver_rel.row(r)[driver->attr_column];
    if (!seen.insert(v).second) continue;
    assignment[st.slot] = v;
    bool ok = true;
    for (const auto& probe : st.probes) {
      if (&probe == driver) continue;
      if (probe.check->rows(gather(assignment, probe.check_slots)).empty()) {
        ok = false;
        break;
      }
    }
    if (ok) enumerate(node, plan, step + 1, assignment, out);
  }
}

void GhdFrontEnd::delta_enumerate(std::size_t u, std::size_t part, std::span<const Value> values,
                                  std::vector<std::vector<Value>>& out) const {
  const auto& node = nodes_[u];
  const auto& plan = node.plans[part];
  std::vector<Value> assignment(node.lambda.size());
  for (std::size_t i = 0; i < plan.bound_slots.size(); ++i) assignment[plan.bound_slots[i]] = values[i];
  for (const auto& [index, slots] : plan.initial_checks) {
    if (index->rows(gather(assignment, slots)).empty()) return;
  }
  enumerate(node, plan, 0, assignment, out);
}

bool GhdFrontEnd::ingest(std::size_t rel, std::span<const Value> values, std::vector<NodeTuple>& out) {
  if (rel >= base_.size()) throw UnknownRelation("relation id out of range");
  auto& base = *base_[rel];
  const auto row = base.insert(values);
  if (!row) return false;
  const Tuple t = base.tuple(*row);
  const auto anchor = query_.ghd.anchor[rel];
  std::vector<std::vector<Value>> anchor_results;
  std::vector<std::vector<Value>> results;
  for (std::size_t u = 0; u < nodes_.size(); ++u) {
    auto& node = nodes_[u];
    for (std::size_t p = 0; p < node.parts.size(); ++p) {
      if (node.part_base[p] != rel) continue;
      auto& local = node.db->relation(node.parts[p]);
      const auto proj = project(t, local.attrs());
      if (!local.insert(proj.values)) continue;
      auto& sink = u == anchor ? anchor_results : results;
      const auto before = sink.size();
      delta_enumerate(u, p, proj.values, sink);
      node_results_ += sink.size() - before;
      if (u != anchor) {
        for (std::size_t i = before; i < sink.size(); ++i) out.push_back({u, std::move(sink[i]), false});
      }
    }
  }
  for (auto& r : anchor_results) out.push_back({anchor, std::move(r), true});
  simulated_ += anchor_results.size();
  return true;
}

}  // namespace joinsample
