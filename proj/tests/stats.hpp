#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <vector>

namespace dovetail::testing {

/// Pearson goodness-of-fit p-value of `counts` against `expected_p`
/// (bins with zero expected probability must have zero counts).
inline double chi_square_p(const std::vector<double>& counts, const std::vector<double>& expected_p) {
  double n = 0;
  for (double c : counts) n += c;
  double stat = 0;
  int bins = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (expected_p[i] <= 0) {
      if (counts[i] > 0) return 0.0;
      continue;
    }
    const double e = n * expected_p[i];
    stat += (counts[i] - e) * (counts[i] - e) / e;
    ++bins;
  }
  if (bins < 2) return 1.0;
  boost::math::chi_squared dist(bins - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Total-variation distance between two distributions keyed alike.
template <class K>
double total_variation(const std::map<K, double>& a, const std::map<K, double>& b) {
  double d = 0;
  for (const auto& [k, p] : a) {
    const auto it = b.find(k);
    d += std::abs(p - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [k, p] : b)
    if (!a.count(k)) d += p;
  return d / 2;
}

}  // namespace dovetail::testing
