#pragma once

#include "joinsample/engine.hpp"
#include "joinsample/oracle.hpp"
#include "joinsample/stats.hpp"
#include "joinsample/workload.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace joinsample {

/// Every delta batch of one engine run, fully swept: item = result id, or -1
/// for a dummy. Result ids are assigned in sweep order, so the results that
/// exist after event i are exactly the ids below results_after[i].
struct ReplayTrace {
  std::vector<std::vector<std::int32_t>> batches;
  std::vector<std::size_t> batches_after;  // per event: batches completed
  std::vector<std::size_t> results_after;  // per event: distinct results so far
  std::vector<Assignment> results;         // id -> values over query attributes
  std::uint64_t duplicate_results = 0;     // reals seen more than once (expected 0)
};

/// Runs the engine once and sweeps every batch. Throws CapExceeded when the
/// total batch length exceeds max_positions.
ReplayTrace record_trace(std::shared_ptr<const JoinQuery> query, const Workload& workload,
                         std::uint64_t max_positions = 50'000'000);

/// A batch read back from a trace, with the engine's stream primitives.
class ReplayBatch {
 public:
  explicit ReplayBatch(const std::vector<std::int32_t>& items) : items_(&items) {}
  std::uint64_t remain() const { return items_->size() - next_; }
  Draw skip(std::uint64_t i, std::int32_t& out) {
    if (i >= items_->size() - next_) {
      next_ = items_->size();
      return Draw::End;
    }
    next_ += i;
    out = (*items_)[next_++];
    return out >= 0 ? Draw::Real : Draw::Dummy;
  }

 private:
  const std::vector<std::int32_t>* items_;
  std::uint64_t next_ = 0;
};

struct CheckpointReport {
  std::uint64_t arrival_index = 0;
  UniformityReport stats;
  /// Cells outside 3 standard deviations, and the count expected by chance.
  std::size_t cells_beyond_3sigma = 0;
  double expected_beyond_3sigma = 0.0;
  /// Per result id (see ValidateReport::result_values): trials sampling it.
  std::vector<std::uint64_t> counts;
};

struct ValidateOptions {
  std::size_t k = 1;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  std::vector<double> checkpoints{0.25, 0.5, 1.0};
  bool w_update = true;
  /// Trials whose real-engine samples are compared with the replay.
  std::uint64_t engine_cross_checks = 4;
};

struct ValidateReport {
  std::vector<CheckpointReport> checkpoints;
  bool engine_matches_replay = true;
  std::uint64_t duplicate_results = 0;
  std::size_t results = 0;
  std::vector<Assignment> result_values;  // id -> values over query attributes
};

/// Monte Carlo uniformity check. Trial t uses seed mix_seed(seed, t) and
/// replays the recorded batches through a fresh reservoir, which consumes the
/// generator exactly as the engine does.
ValidateReport validate_uniformity(std::shared_ptr<const JoinQuery> query, const Workload& workload,
                                   const ValidateOptions& options);

/// Writes `<checkpoint rows>` of samples and metrics. Deterministic.
struct RunOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 0;  // 0: only at the end
};
void run_stream(std::shared_ptr<const JoinQuery> query, const Workload& workload, const RunOptions& options,
                std::ostream& samples, std::ostream& metrics);

void write_validate_report(std::ostream& out, const ValidateReport& report, std::size_t k, std::uint64_t trials);

enum class Baseline { None, Rebuild, Materialized, All };
Baseline parse_baseline(const std::string& name);

struct BenchOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 0;  // 0: every 10% of the stream
  Baseline baseline = Baseline::All;
  std::uint64_t cap = 10'000'000;      // oracle result cap for the baselines
  double budget_seconds = 600.0;       // per system
};

/// Engine vs. baselines. Deterministic counters go to `table`; wall times and
/// per-event latency percentiles go to `timing`.
void bench(std::shared_ptr<const JoinQuery> query, const Workload& workload, const BenchOptions& options,
           std::ostream& table, std::ostream& timing);

enum class PredicateMode { Busy, EditDistance };

struct RswpOptions {
  std::uint64_t n = 100'000;
  std::size_t k = 1000;
  std::vector<double> densities{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::uint64_t trials = 10;
  std::uint64_t seed = 0;
  PredicateMode mode = PredicateMode::Busy;
  std::uint32_t busy_iterations = 200;
  std::size_t edit_threshold = 16;
};

struct RswpRow {
  double density = 0.0;
  double realized_density = 0.0;  // fraction of real items
  double mean_visited = 0.0;      // predicate evaluations
  double mean_next = 0.0;
  double mean_stops = 0.0;
  double predicted_stops = 0.0;   // mean over trials of the stop-count formula
  double seconds = 0.0;           // not part of the deterministic table
};

std::vector<RswpRow> rswp(const RswpOptions& options);
void write_rswp(std::ostream& table, std::ostream& timing, const std::vector<RswpRow>& rows);

/// Edit distance with a band: returns min(distance, limit + 1).
std::size_t banded_edit_distance(std::string_view a, std::string_view b, std::size_t limit);

}  // namespace joinsample
