#pragma once

#include "joinsample/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace joinsample {

/// Largest skip count; any skip past the end of the stream behaves the same.
inline constexpr std::uint64_t kMaxSkip = std::numeric_limits<std::uint64_t>::max();

/// floor(ln(u) / ln(1 - w)), saturating at kMaxSkip. Requires 0 < u < 1.
std::uint64_t geo_from_uniform(double w, double u);

inline std::uint64_t geo_sample(double w, Rng& rng) { return geo_from_uniform(w, rng.uniform()); }

/// Result of reading one position of a skippable stream.
enum class Draw { End, Dummy, Real };

struct ReservoirCounters {
  std::uint64_t next_calls = 0;    // fill-phase reads
  std::uint64_t skip_calls = 0;    // skip-phase stops
  std::uint64_t remain_calls = 0;
  std::uint64_t replacements = 0;  // stops that landed on a real item
  std::uint64_t batches = 0;

  std::uint64_t visited() const { return next_calls + skip_calls; }
};

/// Reservoir of k items with the predicate-aware skip machinery.
///
/// A stream for feed() provides `Draw skip(std::uint64_t i, Item& out)`, which
/// consumes i+1 items and fills `out` when the last one is real; next() is
/// skip(0). A batch for batch_update() additionally provides
/// `std::uint64_t remain()`, and its skip(i) is only called with i < remain().
template <typename Item>
class Reservoir {
 public:
  Reservoir(std::size_t k, std::uint64_t seed) : k_(k), rng_(seed) { samples_.reserve(k); }

  std::size_t capacity() const { return k_; }
  const std::vector<Item>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  /// +infinity until the skip machinery has been initialised.
  double w() const { return w_; }
  std::uint64_t pending_skip() const { return q_; }
  bool initialized() const { return w_ <= 1.0; }
  const ReservoirCounters& counters() const { return counters_; }
  Rng& rng() { return rng_; }

  /// Testing hook: when false, stops on real items no longer shrink w.
  void set_w_update(bool enabled) { update_w_ = enabled; }

  /// Classic Algorithm R step over an unfiltered stream.
  void step_classic(Item item) {
    ++seen_;
    if (samples_.size() < k_) {
      samples_.push_back(std::move(item));
      return;
    }
    const auto j = rng_.below(seen_);
    if (j < k_) samples_[j] = std::move(item);
  }

  /// Consumes the whole stream (fill phase, then geometric skips).
  template <typename Stream>
  void feed(Stream& stream) {
    Item x{};
    while (samples_.size() < k_) {
      ++counters_.next_calls;
      const Draw d = stream.skip(0, x);
      if (d == Draw::End) return;
      if (d == Draw::Real) samples_.push_back(x);
    }
    if (!initialized()) init_skip();
    while (true) {
      const Draw d = stream.skip(q_, x);
      if (d == Draw::End) return;
      ++counters_.skip_calls;
      if (d == Draw::Real) replace(x);
      q_ = geo_sample(w_, rng_);
    }
  }

  /// One call per batch; the pending skip carries across batch boundaries.
  template <typename Batch>
  void batch_update(Batch& batch) {
    ++counters_.batches;
    Item x{};
    while (samples_.size() < k_ && remain(batch) > 0) {
      ++counters_.next_calls;
      if (batch.skip(0, x) == Draw::Real) samples_.push_back(x);
    }
    if (samples_.size() < k_) return;
    if (!initialized()) init_skip();
    std::uint64_t left = remain(batch);
    while (left > q_) {
      ++counters_.skip_calls;
      if (batch.skip(q_, x) == Draw::Real) replace(x);
      q_ = geo_sample(w_, rng_);
      left = remain(batch);
    }
    q_ -= left;
  }

 private:
  template <typename Batch>
  std::uint64_t remain(Batch& batch) {
    ++counters_.remain_calls;
    return batch.remain();
  }

  double root_k() { return std::exp(std::log(rng_.uniform()) / static_cast<double>(k_)); }

  void init_skip() {
    w_ = root_k();
    q_ = geo_sample(w_, rng_);
  }

  void replace(const Item& x) {
    ++counters_.replacements;
    samples_[rng_.below(k_)] = x;
    if (update_w_) w_ *= root_k();
  }

  std::size_t k_;
  Rng rng_;
  std::vector<Item> samples_;
  double w_ = std::numeric_limits<double>::infinity();
  std::uint64_t q_ = 0;
  std::uint64_t seen_ = 0;
  bool update_w_ = true;
  ReservoirCounters counters_;
};

/// A concrete real/dummy sequence, as seen by the density analysis.
struct DensityProfile {
  std::uint64_t length = 0;
  /// r[i] = number of real items among the first i (r[0] = 0); so the
  /// analysis's r_i (reals among the first i-1) is r[i-1].
  std::vector<std::uint64_t> prefix_reals;

  static DensityProfile from_marks(const std::vector<bool>& real);
  /// Smallest 1-based i with (reals among the first i-1) = k, or N+1.
  std::uint64_t fill_point(std::uint64_t k) const;
  /// Largest phi with (reals among the first i-1) >= phi * (i-1) for
  /// i = 1..N+1, i.e. every prefix including the whole stream.
  double density() const;
};

struct StopPrediction {
  std::uint64_t next_count = 0;
  double expected_skip_stops = 0.0;
};

/// next_count = p - 1 and sum_{i=p}^{N} k / (r_i + 1).
StopPrediction expected_stops(const DensityProfile& profile, std::uint64_t k);

/// Same prediction for a long stream described by a repeating real/dummy
/// pattern, without materialising it.
StopPrediction expected_stops_periodic(const std::vector<bool>& pattern, std::uint64_t length, std::uint64_t k);

inline double concat_density(double a, double b) { return a < b ? a : b; }
inline double product_density(double a, double b) { return a * b / 2.0; }
inline double pad_density(double phi, std::uint64_t m, std::uint64_t n) {
  return phi * static_cast<double>(m) / static_cast<double>(m + n);
}

}  // namespace joinsample
