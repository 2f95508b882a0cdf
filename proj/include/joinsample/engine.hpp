#pragma once

#include "joinsample/acyclic_index.hpp"
#include "joinsample/fk_fusion.hpp"
#include "joinsample/ghd.hpp"
#include "joinsample/query.hpp"
#include "joinsample/relation.hpp"
#include "joinsample/reservoir.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace joinsample {

struct EngineOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  /// Testing hook for the biased-sampler mutation: disables w shrinking.
  bool w_update = true;
};

struct EngineMetrics {
  std::uint64_t events = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t index_insertions = 0;
  std::uint64_t batches = 0;
  std::uint64_t batch_total = 0;  // running Σ|ΔJ|
  std::uint64_t max_event_propagation = 0;
  IndexMetrics index;
  ReservoirCounters reservoir;
};

/// One join result: a row id per index relation.
using ResultRows = std::vector<RowId>;

struct Snapshot {
  std::uint64_t arrival_index = 0;
  std::uint64_t join_upper = 0;  // Σ|ΔJ| so far
  /// Samples as values over JoinQuery::attributes (sorted attribute order).
  std::vector<std::vector<Value>> samples;
};

/// Sampling engine: per event, update the index, build the delta batch and
/// run the batched reservoir update with θ = isReal.
class Engine {
 public:
  /// Called with (tree, inserted root row) just before a batch is consumed.
  using BatchObserver = std::function<void(const TreeIndex&, RowId)>;

  Engine(std::shared_ptr<const JoinQuery> query, EngineOptions options);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const JoinQuery& query() const { return *query_; }

  /// Inserts a base tuple, values in declared column order.
  void feed(std::size_t base_relation, std::span<const Value> values);
  void feed(std::string_view relation, std::span<const Value> values);

  Snapshot snapshot() const;
  /// Materialises one result as values over JoinQuery::attributes.
  std::vector<Value> result_values(const ResultRows& rows) const;
  const std::vector<ResultRows>& sample_rows() const { return reservoir_.samples(); }
  EngineMetrics metrics() const;

  const Database& database() const { return db_; }
  const AcyclicIndex& index() const { return *index_; }
  const Reservoir<ResultRows>& reservoir() const { return reservoir_; }
  void set_batch_observer(BatchObserver observer) { observer_ = std::move(observer); }

 private:
  void insert_index(std::size_t rel, std::span<const Value> values, bool with_batch);

  std::shared_ptr<const JoinQuery> query_;
  Database db_;
  std::unique_ptr<AcyclicIndex> index_;
  std::unique_ptr<ForeignKeyFuser> fuser_;
  std::unique_ptr<GhdFrontEnd> ghd_;
  Reservoir<ResultRows> reservoir_;
  BatchObserver observer_;
  EngineMetrics counts_;
  /// For each attribute of the query: (index relation, column) to read it from.
  std::vector<std::pair<std::size_t, std::size_t>> attr_source_;
};

}  // namespace joinsample
