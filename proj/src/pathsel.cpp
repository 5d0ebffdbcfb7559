#include "dovetail/pathsel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace dovetail {

SelectionAlgorithm::SelectionAlgorithm(AlgorithmKind kind, double k) : kind(kind), k(k) {
  if (!(k > 0.0 && k < 1.0)) throw ArgumentError("decay constant k must lie in (0,1)");
}

int SelectionAlgorithm::floor() const {
  switch (kind) {
    case AlgorithmKind::Exponential4: return 4;
    case AlgorithmKind::Exponential6: return 6;
    default: return 0;
  }
}

std::string SelectionAlgorithm::name() const {
  switch (kind) {
    case AlgorithmKind::Shortest: return "shortest";
    case AlgorithmKind::Uniform: return "uniform";
    case AlgorithmKind::Exponential: return "exponential";
    case AlgorithmKind::Exponential4: return "exponential4";
    case AlgorithmKind::Exponential6: return "exponential6";
  }
  return "?";
}

SelectionAlgorithm SelectionAlgorithm::parse(std::string_view name, double k) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "shortest") return {AlgorithmKind::Shortest, k};
  if (s == "uniform") return {AlgorithmKind::Uniform, k};
  if (s == "exponential") return {AlgorithmKind::Exponential, k};
  if (s == "exponential4" || s == "exp4") return {AlgorithmKind::Exponential4, k};
  if (s == "exponential6" || s == "exp6") return {AlgorithmKind::Exponential6, k};
  throw ArgumentError("unknown selection algorithm '" + std::string(name) + "'");
}

double CostDistribution::probability(int cost) const {
  for (const auto& [c, p] : support)
    if (c == cost) return p;
  return 0.0;
}

CostDistribution cost_distribution(const SelectionAlgorithm& alg, std::span<const int> costs) {
  if (costs.empty()) throw SelectionError("no available costs");
  std::vector<int> sorted(costs.begin(), costs.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  CostDistribution d;
  switch (alg.kind) {
    case AlgorithmKind::Shortest:
      d.support = {{sorted.front(), 1.0}};
      return d;
    case AlgorithmKind::Uniform:
      for (int c : sorted) d.support.emplace_back(c, 1.0 / double(sorted.size()));
      return d;
    default: break;
  }
  std::vector<int> admissible;
  for (int c : sorted)
    if (c >= alg.floor()) admissible.push_back(c);
  if (admissible.empty()) {
    d.support = {{sorted.back(), 1.0}};
    return d;
  }
  // Weights relative to the cheapest admissible cost keep k^cost in range.
  double total = 0;
  for (int c : admissible) {
    const double w = std::pow(alg.k, c - admissible.front());
    d.support.emplace_back(c, w);
    total += w;
  }
  for (auto& [c, p] : d.support) p /= total;
  return d;
}

int sample_cost(const CostDistribution& dist, Rng& rng) {
  if (dist.support.empty()) throw SelectionError("empty cost distribution");
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0;
  for (const auto& [c, p] : dist.support) {
    acc += p;
    if (u < acc) return c;
  }
  return dist.support.back().first;
}

const Route& select_route(const SelectionAlgorithm& alg, const RouteCatalog& catalog, Rng& rng) {
  const auto costs = available_costs(catalog);
  if (costs.empty()) throw SelectionError("empty route catalog");
  const int cost = sample_cost(cost_distribution(alg, costs), rng);
  const auto& bucket = catalog.by_cost.at(cost);
  const auto i = std::uniform_int_distribution<std::size_t>(0, bucket.size() - 1)(rng);
  return bucket[i];
}

}  // namespace dovetail
