#pragma once

#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dovetail/routing.hpp"

namespace dovetail {

using Rng = std::mt19937_64;

enum class AlgorithmKind { Shortest, Uniform, Exponential, Exponential4, Exponential6 };

inline constexpr double kDefaultDecay = 0.5;

struct SelectionAlgorithm {
  AlgorithmKind kind = AlgorithmKind::Shortest;
  double k = kDefaultDecay;

  SelectionAlgorithm() = default;
  SelectionAlgorithm(AlgorithmKind kind, double k = kDefaultDecay);

  /// Smallest admissible cost (0 when unrestricted).
  int floor() const;
  std::string name() const;
  /// Accepts shortest|uniform|exponential|exponential4|exponential6 (case-insensitive).
  static SelectionAlgorithm parse(std::string_view name, double k = kDefaultDecay);
};

struct CostDistribution {
  std::vector<std::pair<int, double>> support;  ///< ascending cost

  double probability(int cost) const;
};

/// P(cost) over the available costs. Exponential kinds weight k^cost; the
/// floored kinds drop costs under their floor and, if nothing is left, put all
/// mass on the largest available cost.
CostDistribution cost_distribution(const SelectionAlgorithm& alg, std::span<const int> costs);

int sample_cost(const CostDistribution& dist, Rng& rng);

/// Draws a cost from cost_distribution, then a route uniformly at that cost.
const Route& select_route(const SelectionAlgorithm& alg, const RouteCatalog& catalog, Rng& rng);

}  // namespace dovetail
