#include "doctest.h"
#include "index_oracle.hpp"
#include "test_util.hpp"

#include "joinsample/harness.hpp"

#include <set>

using namespace joinsample;
using testutil::ints;

TEST_CASE("first event on an empty two-table query opens an empty batch") {
  Engine engine(testutil::load("two-table"), EngineOptions{3, 1, true});
  engine.feed("R1", ints({1, 2}));
  const auto s = engine.snapshot();
  CHECK(s.arrival_index == 1);
  CHECK(s.join_upper == 0);
  CHECK(s.samples.empty());
  CHECK(engine.reservoir().counters().next_calls == 0);
}

TEST_CASE("a reservoir that is not full collects every real result") {
  const std::int64_t n1 = 7;
  Engine engine(testutil::load("two-table"), EngineOptions{10, 5, true});
  for (std::int64_t x = 0; x < n1; ++x) engine.feed("R1", ints({x, 42}));
  CHECK(engine.snapshot().samples.empty());
  engine.feed("R2", ints({42, 9}));
  auto samples = engine.snapshot().samples;
  std::sort(samples.begin(), samples.end());
  std::vector<std::vector<Value>> expected;
  for (std::int64_t x = 0; x < n1; ++x) expected.push_back(ints({x, 42, 9}));  // attributes x, y, z
  CHECK(samples == expected);
}

TEST_CASE("samples are always real results, |S| = min(k, |Q|), snapshots are pure") {
  for (const char* name : {"two-table", "line-3", "star-3", "triangle"}) {
    auto q = testutil::load(name);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto w = testutil::random_stream(q->spec, 120, 8, seed);
      for (std::size_t k : {1, 5, 40}) {
        Engine engine(q, EngineOptions{k, seed, true});
        Oracle oracle(q->spec);
        std::set<Assignment> all;
        bool ok = true;
        for (const auto& e : w.events) {
          engine.feed(e.relation, e.values);
          for (auto& r : oracle.insert(e.relation, e.values)) all.insert(std::move(r));
          const auto a = engine.snapshot();
          const auto b = engine.snapshot();
          if (a.samples != b.samples || a.join_upper != b.join_upper) ok = false;
          if (a.samples.size() != std::min<std::size_t>(k, all.size())) ok = false;
          std::set<Assignment> distinct;
          for (const auto& x : a.samples) {
            if (!all.count(x) || !distinct.insert(x).second) ok = false;
          }
        }
        CHECK_MESSAGE(ok, name << " seed " << seed << " k " << k);
      }
    }
  }
}

TEST_CASE("join_upper is the running sum of batch sizes") {
  auto q = testutil::load("line-3");
  const auto w = testutil::random_stream(q->spec, 200, 6, 3);
  Engine engine(q, EngineOptions{4, 1, true});
  std::uint64_t total = 0;
  engine.set_batch_observer([&](const TreeIndex& tree, RowId row) { total += tree.batch_size(row); });
  for (const auto& e : w.events) {
    engine.feed(e.relation, e.values);
    REQUIRE(engine.snapshot().join_upper == total);
  }
  CHECK(total > 0);
}

TEST_CASE("line-3 inclusion frequencies are uniform at every checkpoint") {
  auto q = testutil::load("line-3");
  const auto w = testutil::random_stream(q->spec, 60, 4, 11);
  ValidateOptions opts;
  opts.k = 5;
  opts.trials = 40000;
  opts.seed = 7;
  const auto report = validate_uniformity(q, w, opts);
  CHECK(report.engine_matches_replay);
  CHECK(report.duplicate_results == 0);
  REQUIRE(report.checkpoints.size() == 3);
  for (const auto& c : report.checkpoints) {
    CHECK(c.stats.p_value > 0.001);
    CHECK(c.stats.cells > 0);
    // Tail cells beyond 3 sigma should be rare: allow a generous multiple.
    CHECK(static_cast<double>(c.cells_beyond_3sigma) <= 3.0 * c.expected_beyond_3sigma + 3.0);
    MESSAGE("checkpoint " << c.arrival_index << ": " << c.stats.cells << " results, p = " << c.stats.p_value);
  }
}

TEST_CASE("skip stops across a run match the prediction from the batch density profile") {
  auto q = testutil::load("line-3");
  const auto w = testutil::random_stream(q->spec, 150, 5, 21);
  const auto trace = record_trace(q, w);
  std::vector<bool> marks;
  for (const auto& b : trace.batches) {
    for (auto x : b) marks.push_back(x >= 0);
  }
  const std::size_t k = 5;
  const auto prediction = expected_stops(DensityProfile::from_marks(marks), k);
  const std::uint64_t trials = 400;
  double stops = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    Engine engine(q, EngineOptions{k, mix_seed(3, t), true});
    for (const auto& e : w.events) engine.feed(e.relation, e.values);
    stops += static_cast<double>(engine.metrics().reservoir.skip_calls);
    CHECK(engine.metrics().reservoir.next_calls == prediction.next_count);
  }
  stops /= static_cast<double>(trials);
  MESSAGE(marks.size() << " positions, mean stops " << stops << ", predicted " << prediction.expected_skip_stops);
  CHECK(std::abs(stops - prediction.expected_skip_stops) <= 0.10 * prediction.expected_skip_stops);
}
