#include "joinsample/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

namespace joinsample {

double chi2_survival(double stat, double df) {
  if (df <= 0.0) return stat > 0.0 ? 0.0 : 1.0;
  if (stat <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, stat / 2.0);
}

UniformityReport uniformity_test(const std::vector<std::uint64_t>& counts, std::uint64_t trials, std::size_t k) {
  UniformityReport r;
  r.cells = counts.size();
  r.trials = trials;
  const double m = static_cast<double>(counts.size());
  const double t = static_cast<double>(trials);
  if (counts.empty() || trials == 0) return r;
  if (k >= counts.size()) {
    r.expected = t;
    for (auto c : counts) {
      r.max_deviation = std::max(r.max_deviation, std::abs(static_cast<double>(c) / t - 1.0));
    }
    r.p_value = r.max_deviation == 0.0 ? 1.0 : 0.0;
    return r;
  }
  const double p = static_cast<double>(k) / m;
  r.expected = t * p;
  const double var = t * p * (1.0 - p);
  const double sd = std::sqrt(var);
  double sum = 0.0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - r.expected;
    sum += d * d;
    r.max_sigma = std::max(r.max_sigma, std::abs(d) / sd);
    r.max_deviation = std::max(r.max_deviation, std::abs(static_cast<double>(c) / t - p));
  }
  r.df = m - 1.0;
  r.chi2 = sum * (m - 1.0) / (m * var);
  r.p_value = chi2_survival(r.chi2, r.df);
  return r;
}

UniformityReport homogeneity_test(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                                  std::uint64_t trials, std::size_t k) {
  UniformityReport r;
  r.cells = a.size();
  r.trials = trials;
  if (a.empty() || trials == 0 || k >= a.size()) {
    r.p_value = a == b ? 1.0 : 0.0;
    return r;
  }
  const double m = static_cast<double>(a.size());
  const double t = static_cast<double>(trials);
  const double p = static_cast<double>(k) / m;
  const double var = 2.0 * t * p * (1.0 - p);
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    sum += d * d;
    r.max_sigma = std::max(r.max_sigma, std::abs(d) / std::sqrt(var));
    r.max_deviation = std::max(r.max_deviation, std::abs(d) / t);
  }
  r.df = m - 1.0;
  r.chi2 = sum * (m - 1.0) / (m * var);
  r.p_value = chi2_survival(r.chi2, r.df);
  return r;
}

}  // namespace joinsample
