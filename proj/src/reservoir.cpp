#include "joinsample/reservoir.hpp"

#include <algorithm>

namespace joinsample {

std::uint64_t geo_from_uniform(double w, double u) {
  if (w >= 1.0) return 0;
  const double v = std::floor(std::log(u) / std::log1p(-w));
  // Also catches NaN and +inf.
  if (!(v < 18446744073709551616.0)) return kMaxSkip;
  return v <= 0.0 ? 0 : static_cast<std::uint64_t>(v);
}

DensityProfile DensityProfile::from_marks(const std::vector<bool>& real) {
  DensityProfile p;
  p.length = real.size();
  p.prefix_reals.assign(real.size() + 1, 0);
  for (std::size_t i = 0; i < real.size(); ++i) p.prefix_reals[i + 1] = p.prefix_reals[i] + (real[i] ? 1 : 0);
  return p;
}

std::uint64_t DensityProfile::fill_point(std::uint64_t k) const {
  for (std::uint64_t i = 1; i <= length; ++i) {
    if (prefix_reals[i - 1] == k) return i;
  }
  return length + 1;
}

double DensityProfile::density() const {
  double phi = 1.0;
  for (std::uint64_t j = 1; j <= length; ++j) {
    phi = std::min(phi, static_cast<double>(prefix_reals[j]) / static_cast<double>(j));
  }
  return phi;
}

StopPrediction expected_stops(const DensityProfile& profile, std::uint64_t k) {
  StopPrediction out;
  const auto p = profile.fill_point(k);
  out.next_count = p - 1;
  for (std::uint64_t i = p; i <= profile.length; ++i) {
    out.expected_skip_stops += static_cast<double>(k) / static_cast<double>(profile.prefix_reals[i - 1] + 1);
  }
  return out;
}

StopPrediction expected_stops_periodic(const std::vector<bool>& pattern, std::uint64_t length, std::uint64_t k) {
  StopPrediction out;
  std::uint64_t reals = 0;  // among the first i-1 items
  bool filled = false;
  for (std::uint64_t i = 1; i <= length; ++i) {
    if (!filled && reals == k) {
      filled = true;
      out.next_count = i - 1;
    }
    if (filled) out.expected_skip_stops += static_cast<double>(k) / static_cast<double>(reals + 1);
    if (pattern[(i - 1) % pattern.size()]) ++reals;
  }
  if (!filled) out.next_count = length;
  return out;
}

}  // namespace joinsample
