#include "joinsample/reservoir.hpp"
#include "joinsample/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace joinsample;

namespace {

/// Items are their positions; marks say which are real.
class MarkedStream {
 public:
  explicit MarkedStream(const std::vector<bool>& real, std::size_t begin = 0, std::size_t end = SIZE_MAX)
      : real_(&real), pos_(begin), end_(std::min(end, real.size())) {}
  std::uint64_t remain() const { return end_ - pos_; }
  Draw skip(std::uint64_t i, int& out) {
    if (i >= end_ - pos_) {
      pos_ = end_;
      return Draw::End;
    }
    pos_ += i;
    out = static_cast<int>(pos_);
    return (*real_)[pos_++] ? Draw::Real : Draw::Dummy;
  }

 private:
  const std::vector<bool>* real_;
  std::size_t pos_;
  std::size_t end_;
};

std::vector<bool> alternating(std::size_t n) {
  std::vector<bool> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i % 2 == 0;
  return v;
}

std::vector<std::uint64_t> inclusion_counts(const std::vector<bool>& marks, std::size_t k, std::uint64_t trials,
                                            std::uint64_t seed) {
  std::vector<std::uint64_t> counts(marks.size(), 0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    Reservoir<int> r(k, mix_seed(seed, t));
    MarkedStream s(marks);
    r.feed(s);
    for (int x : r.samples()) ++counts[static_cast<std::size_t>(x)];
  }
  return counts;
}

/// Counts restricted to the real positions.
std::vector<std::uint64_t> real_cells(const std::vector<std::uint64_t>& counts, const std::vector<bool>& marks) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    if (marks[i]) out.push_back(counts[i]);
  }
  return out;
}

}  // namespace

TEST_CASE("geo_from_uniform examples") {
  CHECK(geo_from_uniform(0.5, 0.5) == 1);
  CHECK(geo_from_uniform(0.9, 0.99) == 0);
  CHECK(geo_from_uniform(1e-300, 0.5) == kMaxSkip);
}

TEST_CASE("geometric mean at w = 0.25") {
  Rng rng(1);
  double sum = 0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(geo_sample(0.25, rng));
  CHECK(sum / n == doctest::Approx(3.0).epsilon(0.02 / 3.0));
}

TEST_CASE("uniforms stay inside the open interval") {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    CHECK_UNARY(u > 0.0);
    CHECK_UNARY(u < 1.0);
  }
}

TEST_CASE("classic reservoir") {
  {
    Reservoir<char> r(2, 0);
    r.step_classic('a');
    r.step_classic('b');
    CHECK(r.samples() == std::vector<char>{'a', 'b'});
  }
  int b_wins = 0;
  const int trials = 200000;
  for (int t = 0; t < trials; ++t) {
    Reservoir<char> r(1, mix_seed(5, t));
    r.step_classic('a');
    r.step_classic('b');
    b_wins += r.samples()[0] == 'b';
  }
  CHECK(static_cast<double>(b_wins) / trials == doctest::Approx(0.5).epsilon(0.01));

  std::vector<int> counts(5, 0);
  const int n = 1'000'000;
  for (int t = 0; t < n; ++t) {
    Reservoir<int> r(2, mix_seed(6, t));
    for (int i = 0; i < 5; ++i) r.step_classic(i);
    for (int x : r.samples()) ++counts[x];
  }
  for (int c : counts) CHECK(std::abs(static_cast<double>(c) / n - 0.4) < 0.01);
}

TEST_CASE("feed: all-dummy stream visits every item") {
  std::vector<bool> marks(57, false);
  Reservoir<int> r(3, 1);
  MarkedStream s(marks);
  r.feed(s);
  CHECK(r.samples().empty());
  CHECK(r.counters().next_calls == 58);  // 57 items plus the end-of-stream read
  CHECK(r.counters().skip_calls == 0);
  CHECK_FALSE(r.initialized());
}

TEST_CASE("feed: all-real stream, N = 100, k = 10") {
  std::vector<bool> marks(100, true);
  const std::uint64_t trials = 1'000'000;
  const auto counts = inclusion_counts(marks, 10, trials, 7);
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) / trials - 0.1) < 0.005);
  const auto rep = uniformity_test(counts, trials, 10);
  CHECK(rep.p_value > 0.001);
}

TEST_CASE("feed: alternating stream, N = 200, k = 5") {
  const auto marks = alternating(200);
  const std::uint64_t trials = 400'000;
  const auto counts = inclusion_counts(marks, 5, trials, 8);
  for (std::size_t i = 0; i < marks.size(); ++i) {
    if (marks[i]) {
      CHECK(std::abs(static_cast<double>(counts[i]) / trials - 0.05) < 0.005);
    } else {
      CHECK(counts[i] == 0);
    }
  }
  CHECK(uniformity_test(real_cells(counts, marks), trials, 5).p_value > 0.001);
}

TEST_CASE("exact inclusion on short streams") {
  // Fixed patterns of at most 12 items; every real item must be sampled with
  // probability k / #real and no dummy ever enters S.
  Rng pick(99);
  const std::uint64_t trials = 200'000;
  for (int round = 0; round < 8; ++round) {
    const std::size_t n = 4 + pick.below(9);
    std::vector<bool> marks(n);
    std::size_t reals = 0;
    for (std::size_t i = 0; i < n; ++i) reals += (marks[i] = pick.below(3) != 0);
    const std::size_t k = 1 + pick.below(3);
    CAPTURE(round);
    CAPTURE(n);
    CAPTURE(k);
    const auto counts = inclusion_counts(marks, k, trials, 1000 + static_cast<std::uint64_t>(round));
    const double p = std::min(1.0, static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(reals, 1)));
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(trials));
    for (std::size_t i = 0; i < n; ++i) {
      if (!marks[i]) {
        CHECK(counts[i] == 0);
      } else if (p >= 1.0) {
        CHECK(counts[i] == trials);
      } else {
        CHECK(std::abs(static_cast<double>(counts[i]) / trials - p) <= 3 * se);
      }
    }
  }
}

TEST_CASE("batch_update carries the pending skip") {
  // Find a seed whose first skip after filling a k = 1 reservoir is 7.
  std::vector<bool> one(1, true);
  std::vector<bool> three(3, true);
  bool found = false;
  for (std::uint64_t seed = 0; seed < 10000 && !found; ++seed) {
    Reservoir<int> r(1, seed);
    MarkedStream a(one);
    r.batch_update(a);
    if (r.pending_skip() != 7) continue;
    found = true;
    const auto stops = r.counters().skip_calls;
    MarkedStream b(three);
    r.batch_update(b);
    CHECK(r.counters().skip_calls == stops);
    CHECK(r.pending_skip() == 4);
  }
  CHECK(found);
}

TEST_CASE("two all-real batches, k = 1") {
  std::vector<bool> marks(4, true);
  std::vector<std::uint64_t> counts(4, 0);
  const std::uint64_t trials = 1'000'000;
  for (std::uint64_t t = 0; t < trials; ++t) {
    Reservoir<int> r(1, mix_seed(21, t));
    MarkedStream b1(marks, 0, 2);
    MarkedStream b2(marks, 2, 4);
    r.batch_update(b1);
    r.batch_update(b2);
    ++counts[static_cast<std::size_t>(r.samples()[0])];
  }
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) / trials - 0.25) < 0.002);
}

TEST_CASE("single-item batches match the unsplit stream") {
  std::vector<bool> marks(1000, true);
  const std::uint64_t trials = 20000;
  const auto whole = inclusion_counts(marks, 10, trials, 31);
  std::vector<std::uint64_t> split(marks.size(), 0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    Reservoir<int> r(10, mix_seed(32, t));
    for (std::size_t i = 0; i < marks.size(); ++i) {
      MarkedStream b(marks, i, i + 1);
      r.batch_update(b);
    }
    for (int x : r.samples()) ++split[static_cast<std::size_t>(x)];
  }
  CHECK(homogeneity_test(whole, split, trials, 10).p_value > 0.001);
}

TEST_CASE("batch_update is rng-identical to feed over the concatenation") {
  Rng rng(41);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<bool> marks(n);
    for (std::size_t i = 0; i < n; ++i) marks[i] = rng.below(4) != 0;
    const std::size_t k = 1 + rng.below(8);
    Reservoir<int> a(k, static_cast<std::uint64_t>(round));
    MarkedStream whole(marks);
    a.feed(whole);
    Reservoir<int> b(k, static_cast<std::uint64_t>(round));
    std::size_t at = 0;
    while (at < n) {
      const std::size_t len = rng.below(20);
      MarkedStream part(marks, at, at + len);
      b.batch_update(part);
      at += len;
    }
    CHECK(a.samples() == b.samples());
    CHECK(a.counters().skip_calls == b.counters().skip_calls);
  }
}

TEST_CASE("w never increases") {
  std::vector<bool> marks(5000);
  Rng rng(51);
  for (auto&& m : marks) m = rng.below(2) == 0;
  Reservoir<int> r(8, 52);
  double last = 2.0;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    MarkedStream b(marks, i, i + 1);
    r.batch_update(b);
    if (!r.initialized()) continue;
    CHECK(r.w() > 0.0);
    CHECK(r.w() < 1.0);
    CHECK(r.w() <= last);
    last = r.w();
  }
  CHECK(r.initialized());
}

TEST_CASE("expected_stops examples") {
  const auto dense = DensityProfile::from_marks({true, true, true, true});
  const auto p = expected_stops(dense, 2);
  CHECK(p.next_count == 2);
  CHECK(p.expected_skip_stops == doctest::Approx(7.0 / 6.0));
  CHECK(dense.fill_point(2) == 3);

  const auto empty = DensityProfile::from_marks(std::vector<bool>(9, false));
  const auto q = expected_stops(empty, 2);
  CHECK(q.next_count == 9);
  CHECK(q.expected_skip_stops == 0.0);
  CHECK(empty.fill_point(2) == 10);

  const auto periodic = expected_stops_periodic({true, false}, 200, 5);
  const auto direct = expected_stops(DensityProfile::from_marks(alternating(200)), 5);
  CHECK(periodic.next_count == direct.next_count);
  CHECK(periodic.expected_skip_stops == doctest::Approx(direct.expected_skip_stops));
}

TEST_CASE("density of concrete sequences and the combinators") {
  CHECK(concat_density(0.5, 1.0 / 3) == doctest::Approx(1.0 / 3));
  CHECK(pad_density(1.0, 4, 4) == doctest::Approx(0.5));
  CHECK(product_density(0.5, 0.5) == doctest::Approx(0.125));
  CHECK(DensityProfile::from_marks({true, false, true, false}).density() == doctest::Approx(0.5));
  CHECK(DensityProfile::from_marks({true, true, true}).density() == doctest::Approx(1.0));
  CHECK(DensityProfile::from_marks({false, true}).density() == doctest::Approx(0.0));
  // Brute force over "reals among the first i >= phi i" for i = 1..N.
  Rng rng(61);
  for (int round = 0; round < 500; ++round) {
    std::vector<bool> marks(1 + rng.below(16));
    for (auto&& m : marks) m = rng.below(3) != 0;
    double best = 1.0;
    std::size_t q = 0;
    for (std::size_t i = 1; i <= marks.size(); ++i) {
      q += marks[i - 1];
      best = std::min(best, static_cast<double>(q) / static_cast<double>(i));
    }
    CHECK(DensityProfile::from_marks(marks).density() == doctest::Approx(best));
  }
}

TEST_CASE("stop-count law on small streams") {
  struct Case {
    std::vector<bool> pattern;
    std::uint64_t n;
  };
  std::vector<bool> sparse(20, false);
  sparse[0] = true;
  for (const auto& c : {Case{{true}, 5000}, Case{{true, false}, 5000}, Case{sparse, 20000}}) {
    std::vector<bool> marks(c.n);
    for (std::uint64_t i = 0; i < c.n; ++i) marks[i] = c.pattern[i % c.pattern.size()];
    const std::size_t k = 20;
    const auto predicted = expected_stops(DensityProfile::from_marks(marks), k);
    const std::uint64_t trials = 20000;
    double stops = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      Reservoir<int> r(k, mix_seed(71, t));
      MarkedStream s(marks);
      r.feed(s);
      stops += static_cast<double>(r.counters().skip_calls);
      CHECK(r.counters().next_calls == predicted.next_count + (predicted.next_count == c.n ? 1 : 0));
    }
    CHECK(stops / trials == doctest::Approx(predicted.expected_skip_stops).epsilon(0.05));
  }
}

TEST_CASE("dense-stream stops stay within 3 k ln(N/k)") {
  const std::size_t k = 16;
  for (std::uint64_t n : {1000ULL, 10000ULL, 100000ULL}) {
    std::vector<bool> marks(n, true);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Reservoir<int> r(k, seed);
      MarkedStream s(marks);
      r.feed(s);
      CHECK(static_cast<double>(r.counters().skip_calls) <= 3.0 * k * std::log(static_cast<double>(n) / k));
    }
  }
}
