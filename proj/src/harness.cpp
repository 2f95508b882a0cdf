#include "joinsample/harness.hpp"

#include "joinsample/errors.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace joinsample {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

/// Event indices (1-based counts) at which checkpoints fall.
std::vector<std::size_t> checkpoint_events(const std::vector<double>& fractions, std::size_t events) {
  std::vector<std::size_t> out;
  if (events == 0) return out;
  for (double f : fractions) {
    auto i = static_cast<std::size_t>(std::ceil(f * static_cast<double>(events)));
    out.push_back(std::clamp<std::size_t>(i, 1, events));
  }
  return out;
}

// P[|Z| > 3] for a standard normal.
constexpr double kTail3Sigma = 0.0026997960632601866;

}  // namespace

ReplayTrace record_trace(std::shared_ptr<const JoinQuery> query, const Workload& workload,
                         std::uint64_t max_positions) {
  Engine engine(query, EngineOptions{1, 0, true});
  ReplayTrace trace;
  absl::flat_hash_map<Assignment, std::int32_t> ids;
  std::vector<RowId> rows;
  std::uint64_t positions = 0;
  engine.set_batch_observer([&](const TreeIndex& tree, RowId row) {
    const std::uint64_t n = tree.batch_size(row);
    positions += n;
    if (positions > max_positions) throw CapExceeded("trace exceeds " + std::to_string(max_positions) + " positions");
    std::vector<std::int32_t> items(n, -1);
    rows.resize(tree.tree().attrs.size());
    for (std::uint64_t z = 0; z < n; ++z) {
      if (!tree.retrieve(row, z, rows)) continue;
      auto values = engine.result_values(rows);
      auto [it, inserted] = ids.try_emplace(values, static_cast<std::int32_t>(trace.results.size()));
      if (inserted) {
        trace.results.push_back(std::move(values));
      } else {
        ++trace.duplicate_results;
      }
      items[z] = it->second;
    }
    trace.batches.push_back(std::move(items));
  });
  for (const auto& e : workload.events) {
    engine.feed(e.relation, e.values);
    trace.batches_after.push_back(trace.batches.size());
    trace.results_after.push_back(trace.results.size());
  }
  return trace;
}

ValidateReport validate_uniformity(std::shared_ptr<const JoinQuery> query, const Workload& workload,
                                   const ValidateOptions& options) {
  const ReplayTrace trace = record_trace(query, workload);
  ValidateReport report;
  report.duplicate_results = trace.duplicate_results;
  report.results = trace.results.size();
  report.result_values = trace.results;
  const auto cps = checkpoint_events(options.checkpoints, workload.events.size());
  std::vector<std::vector<std::uint64_t>> counts;
  for (auto i : cps) counts.emplace_back(trace.results_after[i - 1], 0);

  std::vector<std::vector<std::int32_t>> final_samples;
  for (std::uint64_t t = 0; t < options.trials; ++t) {
    Reservoir<std::int32_t> r(options.k, mix_seed(options.seed, t));
    r.set_w_update(options.w_update);
    std::size_t b = 0;
    for (std::size_t c = 0; c < cps.size(); ++c) {
      for (; b < trace.batches_after[cps[c] - 1]; ++b) {
        ReplayBatch batch(trace.batches[b]);
        r.batch_update(batch);
      }
      for (auto s : r.samples()) ++counts[c][static_cast<std::size_t>(s)];
    }
    for (; b < trace.batches.size(); ++b) {
      ReplayBatch batch(trace.batches[b]);
      r.batch_update(batch);
    }
    if (t < options.engine_cross_checks) final_samples.push_back(r.samples());
  }

  absl::flat_hash_map<Assignment, std::int32_t> ids;
  for (std::size_t i = 0; i < trace.results.size(); ++i) ids.emplace(trace.results[i], static_cast<std::int32_t>(i));
  for (std::size_t t = 0; t < final_samples.size(); ++t) {
    Engine engine(query, EngineOptions{options.k, mix_seed(options.seed, t), options.w_update});
    for (const auto& e : workload.events) engine.feed(e.relation, e.values);
    const auto snap = engine.snapshot();
    std::vector<std::int32_t> got;
    for (const auto& s : snap.samples) {
      auto it = ids.find(s);
      got.push_back(it == ids.end() ? -1 : it->second);
    }
    if (got != final_samples[t]) report.engine_matches_replay = false;
  }

  for (std::size_t c = 0; c < cps.size(); ++c) {
    CheckpointReport cr;
    cr.arrival_index = cps[c];
    cr.stats = uniformity_test(counts[c], options.trials, options.k);
    const std::size_t m = counts[c].size();
    if (m > options.k) {
      const double p = static_cast<double>(options.k) / static_cast<double>(m);
      const double t = static_cast<double>(options.trials);
      const double sd = std::sqrt(t * p * (1.0 - p));
      for (auto x : counts[c]) {
        if (std::abs(static_cast<double>(x) - t * p) > 3.0 * sd) ++cr.cells_beyond_3sigma;
      }
      cr.expected_beyond_3sigma = kTail3Sigma * static_cast<double>(m);
    }
    cr.counts = std::move(counts[c]);
    report.checkpoints.push_back(std::move(cr));
  }
  return report;
}

void write_validate_report(std::ostream& out, const ValidateReport& report, std::size_t k, std::uint64_t trials) {
  out << "checkpoint,arrival_index,results,k,trials,expected,chi2,df,p_value,max_sigma,max_deviation,"
         "beyond_3sigma,expected_beyond_3sigma,engine_matches_replay,duplicate_results\n";
  for (std::size_t c = 0; c < report.checkpoints.size(); ++c) {
    const auto& cr = report.checkpoints[c];
    out << c << ',' << cr.arrival_index << ',' << cr.stats.cells << ',' << k << ',' << trials << ','
        << fmt(cr.stats.expected) << ',' << fmt(cr.stats.chi2) << ',' << fmt(cr.stats.df) << ','
        << fmt(cr.stats.p_value) << ',' << fmt(cr.stats.max_sigma) << ',' << fmt(cr.stats.max_deviation) << ','
        << cr.cells_beyond_3sigma << ',' << fmt(cr.expected_beyond_3sigma) << ','
        << (report.engine_matches_replay ? 1 : 0) << ',' << report.duplicate_results << '\n';
  }
}

void run_stream(std::shared_ptr<const JoinQuery> query, const Workload& workload, const RunOptions& options,
                std::ostream& samples, std::ostream& metrics) {
  Engine engine(query, EngineOptions{options.k, options.seed, true});
  const auto& q = *query;
  samples << "checkpoint,arrival_index,sample_index";
  for (auto a : q.attributes) samples << ',' << q.spec.attributes.name(a);
  samples << '\n';
  metrics << "checkpoint,arrival_index,join_upper,sample_size,batches,index_insertions,duplicates,"
             "propagation_loops,max_event_propagation,wcnt_doublings,bucket_moves,retrieve_calls,dummy_hits,"
             "next_calls,skip_stops,replacements\n";
  std::size_t checkpoint = 0;
  auto emit = [&] {
    const auto snap = engine.snapshot();
    for (std::size_t s = 0; s < snap.samples.size(); ++s) {
      samples << checkpoint << ',' << snap.arrival_index << ',' << s;
      for (const auto& v : snap.samples[s]) samples << ',' << format_value(v, workload.strings);
      samples << '\n';
    }
    const auto m = engine.metrics();
    metrics << checkpoint << ',' << snap.arrival_index << ',' << snap.join_upper << ',' << snap.samples.size() << ','
            << m.batches << ',' << m.index_insertions << ',' << m.duplicates << ','
            << m.index.propagation_loop_count << ',' << m.max_event_propagation << ',' << m.index.wcnt_doublings
            << ',' << m.index.bucket_moves << ',' << m.index.retrieve_calls << ',' << m.index.dummy_hits << ','
            << m.reservoir.next_calls << ',' << m.reservoir.skip_calls << ',' << m.reservoir.replacements << '\n';
    ++checkpoint;
  };
  const std::size_t n = workload.events.size();
  for (std::size_t i = 0; i < n; ++i) {
    engine.feed(workload.events[i].relation, workload.events[i].values);
    if (options.checkpoint_every > 0 && (i + 1) % options.checkpoint_every == 0 && i + 1 != n) emit();
  }
  emit();
}

Baseline parse_baseline(const std::string& name) {
  if (name == "none") return Baseline::None;
  if (name == "rebuild" || name == "b1") return Baseline::Rebuild;
  if (name == "materialized" || name == "b2") return Baseline::Materialized;
  if (name == "all") return Baseline::All;
  throw std::invalid_argument("unknown baseline '" + name + "' (none, rebuild, materialized, all)");
}

namespace {

struct SystemRun {
  std::string name;
  struct Row {
    std::uint64_t input = 0;
    std::uint64_t join_upper = 0;
    std::uint64_t visited = 0;
    std::uint64_t work = 0;  // propagation loops or materialized tuples
  };
  std::vector<Row> rows;
  std::vector<double> latencies;  // seconds per event
  double total = 0.0;
};

std::vector<std::size_t> bench_checkpoints(std::size_t n, std::uint64_t every) {
  std::vector<std::size_t> out;
  if (n == 0) return out;
  if (every == 0) {
    for (int d = 1; d <= 10; ++d) out.push_back(std::max<std::size_t>(1, n * d / 10));
  } else {
    for (std::size_t i = every; i < n; i += every) out.push_back(i);
    out.push_back(n);
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <typename Step, typename Row>
SystemRun run_system(const std::string& name, const Workload& w, const std::vector<std::size_t>& cps, double budget,
                     Step step, Row row) {
  SystemRun run{name, {}, {}, 0.0};
  run.latencies.reserve(w.events.size());
  std::size_t c = 0;
  const auto start = Clock::now();
  for (std::size_t i = 0; i < w.events.size(); ++i) {
    const auto t0 = Clock::now();
    step(w.events[i]);
    run.latencies.push_back(seconds_since(t0));
    if (c < cps.size() && i + 1 == cps[c]) {
      run.rows.push_back(row(i + 1));
      ++c;
    }
    if (seconds_since(start) > budget) throw Timeout(name + " exceeded the " + fmt(budget) + " s budget");
  }
  run.total = seconds_since(start);
  return run;
}

/// k distinct values from [0, m) by Floyd's algorithm.
std::vector<std::uint64_t> floyd_sample(std::uint64_t m, std::uint64_t k, Rng& rng) {
  absl::flat_hash_set<std::uint64_t> chosen;
  std::vector<std::uint64_t> out;
  for (std::uint64_t j = m - k; j < m; ++j) {
    const auto t = rng.below(j + 1);
    const auto pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(pick);
  }
  return out;
}

double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const auto i = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size()))) - 1;
  return xs[std::min(i, xs.size() - 1)];
}

}  // namespace

void bench(std::shared_ptr<const JoinQuery> query, const Workload& workload, const BenchOptions& options,
           std::ostream& table, std::ostream& timing) {
  const auto cps = bench_checkpoints(workload.events.size(), options.checkpoint_every);
  const auto& spec = query->spec;
  std::vector<SystemRun> runs;
  // Σ|ΔQ| per checkpoint, known once an oracle-backed baseline has run.
  std::vector<std::uint64_t> exact;

  if (options.baseline == Baseline::Rebuild || options.baseline == Baseline::All) {
    Oracle oracle(spec, options.cap);
    std::vector<Assignment> all;
    Rng rng(options.seed);
    std::uint64_t visited = 0;
    std::vector<Assignment> sample;
    runs.push_back(run_system(
        "rebuild", workload, cps, options.budget_seconds,
        [&](const StreamEvent& e) {
          auto delta = oracle.insert(e.relation, e.values);
          visited += delta.size();
          if (all.size() + delta.size() > options.cap) throw CapExceeded("result count exceeds cap");
          for (auto& a : delta) all.push_back(std::move(a));
          const auto k = std::min<std::uint64_t>(options.k, all.size());
          sample.clear();
          for (auto j : floyd_sample(all.size(), k, rng)) sample.push_back(all[j]);
          visited += k;
        },
        [&](std::size_t input) {
          return SystemRun::Row{input, all.size(), visited, all.size()};
        }));
    for (const auto& r : runs.back().rows) exact.push_back(r.join_upper);
  }
  if (options.baseline == Baseline::Materialized || options.baseline == Baseline::All) {
    Oracle oracle(spec, options.cap);
    Reservoir<Assignment> reservoir(options.k, options.seed);
    std::uint64_t total = 0;
    runs.push_back(run_system(
        "materialized", workload, cps, options.budget_seconds,
        [&](const StreamEvent& e) {
          auto delta = oracle.insert(e.relation, e.values);
          total += delta.size();
          if (total > options.cap) throw CapExceeded("result count exceeds cap");
          for (auto& a : delta) reservoir.step_classic(std::move(a));
        },
        [&](std::size_t input) {
          return SystemRun::Row{input, total, total, total};
        }));
    if (exact.empty()) {
      for (const auto& r : runs.back().rows) exact.push_back(r.join_upper);
    }
  }
  {
    Engine engine(query, EngineOptions{options.k, options.seed, true});
    runs.insert(runs.begin(), run_system(
                                  "engine", workload, cps, options.budget_seconds,
                                  [&](const StreamEvent& e) { engine.feed(e.relation, e.values); },
                                  [&](std::size_t input) {
                                    const auto m = engine.metrics();
                                    return SystemRun::Row{input, m.batch_total, m.reservoir.visited(),
                                                          m.index.propagation_loop_count};
                                  }));
  }

  table << "system,checkpoint,input_count,join_upper,oracle_results,visited,work\n";
  for (const auto& run : runs) {
    for (std::size_t c = 0; c < run.rows.size(); ++c) {
      const auto& r = run.rows[c];
      table << run.name << ',' << c << ',' << r.input << ',' << r.join_upper << ',';
      if (c < exact.size()) {
        table << exact[c];
      } else {
        table << "NA";
      }
      table << ',' << r.visited << ',' << r.work << '\n';
    }
  }
  timing << "system,events,total_seconds,p50_us,p99_us,max_us\n";
  for (const auto& run : runs) {
    timing << run.name << ',' << run.latencies.size() << ',' << fmt(run.total) << ','
           << fmt(percentile(run.latencies, 0.5) * 1e6) << ',' << fmt(percentile(run.latencies, 0.99) * 1e6) << ','
           << fmt(percentile(run.latencies, 1.0) * 1e6) << '\n';
  }
}

std::size_t banded_edit_distance(std::string_view a, std::string_view b, std::size_t limit) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t over = limit + 1;
  if ((n > m ? n - m : m - n) > limit) return over;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = std::min(j, over);
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > limit ? i - limit : 1;
    const std::size_t hi = std::min(m, i + limit);
    std::fill(cur.begin(), cur.end(), over);
    cur[0] = std::min(i, over);
    std::size_t best = cur[0];
    for (std::size_t j = lo; j <= hi; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1, over});
      best = std::min(best, cur[j]);
    }
    if (best >= over) return over;
    std::swap(prev, cur);
  }
  return std::min(prev[m], over);
}

namespace {

volatile std::uint64_t g_busy_sink = 0;

constexpr std::string_view kQueryString = "thequickbrownfoxjumpsoverthelazydogagain";

class PredicateStream {
 public:
  PredicateStream(const RswpOptions& o, std::uint64_t trial_seed, double density)
      : o_(o), seed_(trial_seed), density_(density) {}

  bool marked(std::uint64_t i) const {
    return (static_cast<double>(mix_seed(seed_, i) >> 11) + 0.5) * 0x1.0p-53 < density_;
  }

  Draw skip(std::uint64_t i, std::uint64_t& out) {
    if (i >= o_.n - pos_) {
      pos_ = o_.n;
      return Draw::End;
    }
    pos_ += i;
    out = pos_;
    const bool real = evaluate(pos_);
    ++pos_;
    return real ? Draw::Real : Draw::Dummy;
  }

 private:
  bool evaluate(std::uint64_t i) const {
    if (o_.mode == PredicateMode::Busy) {
      std::uint64_t h = i;
      for (std::uint32_t it = 0; it < o_.busy_iterations; ++it) h = mix_seed(h, it);
      g_busy_sink = g_busy_sink ^ h;
      return marked(i);
    }
    // Reals are the query string with a few substitutions; dummies use a
    // disjoint alphabet, so their distance is the full length.
    std::string s(kQueryString);
    std::uint64_t h = mix_seed(seed_ ^ 0x5bd1e995ULL, i);
    if (marked(i)) {
      for (int e = 0; e < 8; ++e, h = mix_seed(h, e)) s[h % s.size()] = static_cast<char>('a' + (h >> 32) % 26);
    } else {
      for (auto& ch : s) {
        ch = static_cast<char>('A' + h % 26);
        h = mix_seed(h, 1);
      }
    }
    return banded_edit_distance(s, kQueryString, o_.edit_threshold) <= o_.edit_threshold;
  }

  const RswpOptions& o_;
  std::uint64_t seed_;
  double density_;
  std::uint64_t pos_ = 0;
};

}  // namespace

std::vector<RswpRow> rswp(const RswpOptions& options) {
  std::vector<RswpRow> rows;
  for (std::size_t d = 0; d < options.densities.size(); ++d) {
    RswpRow row;
    row.density = options.densities[d];
    const auto start = Clock::now();
    for (std::uint64_t t = 0; t < options.trials; ++t) {
      const auto trial_seed = mix_seed(options.seed, d * 1'000'003 + t);
      PredicateStream stream(options, trial_seed, row.density);
      Reservoir<std::uint64_t> r(options.k, mix_seed(trial_seed, 0xfeed));
      r.feed(stream);
      std::vector<bool> marks(options.n);
      std::uint64_t reals = 0;
      for (std::uint64_t i = 0; i < options.n; ++i) {
        marks[i] = stream.marked(i);
        reals += marks[i];
      }
      const auto prediction = expected_stops(DensityProfile::from_marks(marks), options.k);
      row.realized_density += static_cast<double>(reals) / static_cast<double>(std::max<std::uint64_t>(options.n, 1));
      row.mean_visited += static_cast<double>(r.counters().visited());
      row.mean_next += static_cast<double>(r.counters().next_calls);
      row.mean_stops += static_cast<double>(r.counters().skip_calls);
      row.predicted_stops += prediction.expected_skip_stops;
    }
    row.seconds = seconds_since(start);
    const double t = static_cast<double>(std::max<std::uint64_t>(options.trials, 1));
    row.realized_density /= t;
    row.mean_visited /= t;
    row.mean_next /= t;
    row.mean_stops /= t;
    row.predicted_stops /= t;
    rows.push_back(row);
  }
  return rows;
}

void write_rswp(std::ostream& table, std::ostream& timing, const std::vector<RswpRow>& rows) {
  table << "density,realized_density,mean_visited,mean_next_calls,mean_skip_stops,predicted_skip_stops\n";
  timing << "density,seconds\n";
  for (const auto& r : rows) {
    table << fmt(r.density) << ',' << fmt(r.realized_density) << ',' << fmt(r.mean_visited) << ','
          << fmt(r.mean_next) << ',' << fmt(r.mean_stops) << ',' << fmt(r.predicted_stops) << '\n';
    timing << fmt(r.density) << ',' << fmt(r.seconds) << '\n';
  }
}

}  // namespace joinsample
