#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dovetail/topology.hpp"

namespace dovetail {

struct Pathlet {
  VnodeId from = kNoVnode;
  Fid fid = 0;
  VnodeId to = kNoVnode;

  friend auto operator<=>(const Pathlet&, const Pathlet&) = default;
};

/// The pathlets one host knows: its shortest-path tree plus the nearest
/// non-tree pathlets. Every routing vnode is known.
class RoutingPerspective {
 public:
  RoutingPerspective() = default;
  RoutingPerspective(VnodeId owner, std::size_t vnode_count, std::vector<Pathlet> pathlets,
                     std::size_t spt_size);

  /// Perspective holding every single-hop pathlet of the graph.
  static RoutingPerspective full(const AsGraph& graph, VnodeId owner);

  VnodeId owner() const { return owner_; }
  const std::vector<Pathlet>& known_pathlets() const { return pathlets_; }
  std::size_t spt_size() const { return spt_size_; }
  std::size_t vnode_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  bool knows(const Pathlet& p) const;
  /// Known pathlets leaving `v`, ordered by fid.
  std::span<const Pathlet> out(VnodeId v) const;

 private:
  VnodeId owner_ = kNoVnode;
  std::vector<Pathlet> pathlets_;  // sorted by (from, fid)
  std::vector<std::size_t> offsets_;
  std::size_t spt_size_ = 0;
};

inline constexpr double kDefaultExtraPathletFraction = 0.5;

/// SPT of `owner` (BFS over vnode hops) plus ceil(fraction * |SPT|) extra
/// pathlets ordered by (hop distance of their tail vnode, AS id, vnode id, fid).
RoutingPerspective compute_perspective(const AsGraph& graph, VnodeId owner,
                                       double extra_fraction = kDefaultExtraPathletFraction);

struct Route {
  std::vector<Fid> fids;           ///< one FID per vnode except the last
  std::vector<VnodeId> vnodes;     ///< from owner to destination, inclusive
  std::vector<AsId> as_sequence;   ///< consecutive duplicates collapsed
  int cost = 0;                    ///< AS changes

  friend bool operator==(const Route&, const Route&) = default;
};

/// Builds a Route from a vnode walk following forwarding entries.
Route route_from_vnodes(const AsGraph& graph, std::vector<VnodeId> vnodes, std::vector<Fid> fids);

struct EnumerationLimits {
  int max_cost = 13;
  std::size_t per_cost_cap = 20000;
  /// Upper bound on DFS edge expansions; enumeration stops when spent.
  std::uint64_t expansion_budget = 20'000'000;
};

/// Requires the route to reach `as` within `max_cost` AS changes.
struct Waypoint {
  AsId as = 0;
  int max_cost = 0;
};

struct RouteCatalog {
  std::map<int, std::vector<Route>> by_cost;
  /// Routes found at each cost before cap sampling.
  std::map<int, std::uint64_t> discovered;
  bool budget_exhausted = false;

  std::size_t total() const;
  bool empty() const { return total() == 0; }
};

/// Simple-path DFS (no AS is entered twice) over the perspective's pathlets,
/// pruned by a reverse-BFS lower bound on the remaining cost. When more than
/// `per_cost_cap` routes exist at one cost the retained list is a reservoir
/// sample seeded by `seed`. An unknown or unreachable destination yields an
/// empty catalog.
RouteCatalog enumerate_routes(const AsGraph& graph, const RoutingPerspective& persp, VnodeId dst,
                              const EnumerationLimits& limits = {}, std::uint64_t seed = 0,
                              std::optional<Waypoint> waypoint = std::nullopt);

/// Costs with at least one route, ascending.
std::vector<int> available_costs(const RouteCatalog& catalog);

/// Caches perspectives and catalogs for one topology. Catalogs are keyed by
/// (owner, dst) and built with seed derive_seed(base_seed, owner, dst), so any
/// party recomputing a catalog gets the same routes. Thread-safe.
class RoutingCache {
 public:
  RoutingCache(const AsGraph& graph, EnumerationLimits limits, std::uint64_t base_seed,
               double extra_fraction = kDefaultExtraPathletFraction);

  const AsGraph& graph() const { return graph_; }
  const EnumerationLimits& limits() const { return limits_; }
  std::uint64_t base_seed() const { return base_seed_; }

  std::shared_ptr<const RoutingPerspective> perspective(VnodeId owner);
  std::shared_ptr<const RouteCatalog> catalog(VnodeId owner, VnodeId dst);
  std::uint64_t catalog_seed(VnodeId owner, VnodeId dst) const {
    return derive_seed(base_seed_, owner, dst);
  }
  /// Routes constrained by a waypoint; never memoized.
  RouteCatalog catalog_via(VnodeId owner, VnodeId dst, const Waypoint& waypoint);

  /// With memoization off, catalog() still returns shared results but
  /// keeps nothing beyond the caller's reference.
  void set_memoize_catalogs(bool on) { memoize_ = on; }

  /// Cache file: topology hash, limits, then each catalog's routes.
  void save(const std::string& path) const;
  /// Loads entries whose header matches this topology and limits; returns
  /// the number of catalogs loaded (0 on a mismatched file).
  std::size_t load(const std::string& path);

 private:
  const AsGraph& graph_;
  EnumerationLimits limits_;
  std::uint64_t base_seed_;
  double extra_fraction_;
  std::atomic<bool> memoize_{true};
  mutable std::mutex mu_;
  std::map<VnodeId, std::shared_ptr<const RoutingPerspective>> perspectives_;
  std::map<std::pair<VnodeId, VnodeId>, std::shared_ptr<const RouteCatalog>> catalogs_;
};

}  // namespace dovetail
