#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dovetail/pathsel.hpp"
#include "dovetail/protocol.hpp"
#include "dovetail/routing.hpp"
#include "dovetail/topology.hpp"

namespace dovetail {

/// Minimum policy-compliant cost (AS changes) from every host AS to every
/// AS, by 0-1 BFS over the vnode graph. Row per host AS.
class ShortestCostTable {
 public:
  static constexpr int kUnreachable = -1;

  ShortestCostTable() = default;
  explicit ShortestCostTable(const AsGraph& g);

  const std::vector<AsId>& host_ases() const { return host_ases_; }
  std::size_t host_count() const { return host_ases_.size(); }
  /// kUnreachable when x cannot be reached from host AS h.
  int cost(AsId h, AsId x) const;
  /// S_y^{x}: host ASes whose shortest cost to x is y.
  std::vector<AsId> set(int y, AsId x) const;

 private:
  std::vector<AsId> host_ases_;
  std::unordered_map<AsId, std::size_t> row_;
  std::unordered_map<AsId, std::size_t> col_;
  std::vector<std::int16_t> dist_;
};

enum class SegmentRole : std::uint8_t { Head, Tail };

/// What an on-path AS sees: its predecessor, its cost from the segment
/// start, and the rest of the segment.
struct VantageObservation {
  AsId attacker = 0;
  AsId predecessor = 0;
  int source_cost = 1;                  ///< i: attacker's position
  int total_cost = 1;                   ///< n: segment cost
  std::vector<AsId> suffix;             ///< AS_i..AS_n
  std::vector<VnodeId> suffix_vnodes;   ///< vnodes from entering AS_i to the end
  SegmentRole role = SegmentRole::Head;
};

/// Observation at position `pos` (1 <= pos <= cost) of a route.
VantageObservation observe(const AsGraph& g, const Route& route, int pos,
                           SegmentRole role = SegmentRole::Head);

/// Index into route.vnodes of the first vnode of the AS at position `pos`.
std::size_t vnode_index_of_position(const AsGraph& g, const Route& route, int pos);

/// Host ASes consistent with shortest-path routing: cost(h, AS_j) = j for
/// every j from i-1 to n.
std::vector<AsId> source_set_shortest(const ShortestCostTable& s, const VantageObservation& obs);
/// Host ASes within i-1 of the predecessor.
std::vector<AsId> source_set_costwindow(const ShortestCostTable& s, const VantageObservation& obs);

struct Posterior {
  std::map<AsId, double> p;  ///< host AS -> posterior probability
  double bits = 0;           ///< Shannon entropy of p

  double effective_size() const;
};

/// Bayes posterior over host ASes in the cost-window set: likelihood =
/// P_alg(n | available costs of R(t,d)) x (fraction of cost-n routes whose
/// AS at i-1 is the predecessor and whose vnodes from AS_i match the
/// observed suffix); uniform prior. Candidates without routes contribute 0.
Posterior effective_source_entropy(const VantageObservation& obs, const SelectionAlgorithm& alg,
                                   RoutingCache& cache, const ShortestCostTable& s);

/// Whether route `r` places `obs.predecessor` at i-1 and then follows the
/// observed vnode suffix exactly.
bool matches_observation(const AsGraph& g, const Route& r, const VantageObservation& obs);

enum class Location : std::uint8_t {
  SourceIsp,
  MidHead,
  BeforeDovetail,
  Dovetail,
  MidTail,
  DestinationIsp,
  Matchmaker,
};

std::string_view to_string(Location loc);
inline constexpr Location kAllLocations[] = {Location::SourceIsp,     Location::MidHead,
                                             Location::BeforeDovetail, Location::Dovetail,
                                             Location::MidTail,        Location::DestinationIsp,
                                             Location::Matchmaker};

struct LocationReport {
  Location location = Location::SourceIsp;
  AsId as = 0;
  std::size_t source_set = 0;
  std::size_t dest_set = 0;
  double effective_bits = 0;
  double unlinkability = 0;  ///< source_set x dest_set
  bool duplicated = false;   ///< a head AS that also carries the tail
};

struct AnonymityReport {
  std::vector<LocationReport> locations;  ///< only locations present on this path
  bool reuse = false;
  int total_cost = 0;
};

struct ReportOptions {
  /// Replace log2(set) by the Bayes entropy for head observations.
  bool exact_entropy = false;
  /// Pre-dovetail ASes bound the destination by the return-path cost.
  bool return_cost_attacker = false;
  SelectionAlgorithm head_alg{AlgorithmKind::Exponential6};
};

/// `cache` is needed only with exact_entropy.
AnonymityReport complete_path_report(const Connection& conn, const AsGraph& g,
                                     const ShortestCostTable& s, const ReportOptions& opts = {},
                                     RoutingCache* cache = nullptr);

}  // namespace dovetail
