#pragma once

#include <cstdint>
#include <vector>

namespace joinsample {

/// Upper tail P[X >= stat] of a chi-square variable with df degrees of freedom.
double chi2_survival(double stat, double df);

struct UniformityReport {
  std::size_t cells = 0;
  std::uint64_t trials = 0;
  double expected = 0.0;     // T * k / M
  double chi2 = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  double max_sigma = 0.0;    // largest |c_j - expected| / sd
  double max_deviation = 0.0;  // largest |c_j / T - k / M|
};

/// Tests per-cell counts of a size-k without-replacement sampler over M cells
/// against inclusion probability p = k/M. Cell counts are then marginally
/// Binomial(T, p) with pairwise covariance -T p(1-p)/(M-1), so
///   sum_j (c_j - T p)^2 * (M-1) / (M T p (1-p))
/// is approximately chi-square with M-1 degrees of freedom. When k >= M every
/// cell must equal T; the p-value is then 1 or 0.
UniformityReport uniformity_test(const std::vector<std::uint64_t>& counts, std::uint64_t trials, std::size_t k);

/// Same scaling for the difference of two independent count vectors that
/// should share the uniform distribution (variance doubles).
UniformityReport homogeneity_test(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                                  std::uint64_t trials, std::size_t k);

}  // namespace joinsample
