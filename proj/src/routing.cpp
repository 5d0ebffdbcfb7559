#include "dovetail/routing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <random>

#include "dovetail/byte_io.hpp"

namespace dovetail {

RoutingPerspective::RoutingPerspective(VnodeId owner, std::size_t vnode_count,
                                       std::vector<Pathlet> pathlets, std::size_t spt_size)
    : owner_(owner), pathlets_(std::move(pathlets)), spt_size_(spt_size) {
  std::sort(pathlets_.begin(), pathlets_.end());
  pathlets_.erase(std::unique(pathlets_.begin(), pathlets_.end()), pathlets_.end());
  offsets_.assign(vnode_count + 1, 0);
  for (const auto& p : pathlets_) ++offsets_[p.from + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
}

bool RoutingPerspective::knows(const Pathlet& p) const {
  return std::binary_search(pathlets_.begin(), pathlets_.end(), p);
}

std::span<const Pathlet> RoutingPerspective::out(VnodeId v) const {
  if (v + 1 >= offsets_.size()) return {};
  return {pathlets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

namespace {

bool transit_vnode(const AsGraph& g, VnodeId v, VnodeId owner) {
  return v == owner || !g.is_host(v);
}

}  // namespace

RoutingPerspective RoutingPerspective::full(const AsGraph& graph, VnodeId owner) {
  if (!graph.has_vnode(owner)) throw ArgumentError("perspective owner not in graph");
  std::vector<Pathlet> all;
  for (const auto& v : graph.vnodes()) {
    if (!transit_vnode(graph, v.id, owner)) continue;
    for (const auto& e : v.table)
      if (e.expansion.empty() && e.link != owner) all.push_back({v.id, e.fid, e.link});
  }
  return RoutingPerspective(owner, graph.vnodes().size(), std::move(all), 0);
}

RoutingPerspective compute_perspective(const AsGraph& graph, VnodeId owner, double extra_fraction) {
  if (!graph.has_vnode(owner)) throw ArgumentError("perspective owner not in graph");
  if (!graph.is_host(owner)) throw ArgumentError("perspective owner must be a host or matchmaker");
  const std::size_t nv = graph.vnodes().size();
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(nv, kInf);
  std::vector<Pathlet> spt;
  std::deque<VnodeId> q{owner};
  dist[owner] = 0;
  while (!q.empty()) {
    const VnodeId u = q.front();
    q.pop_front();
    if (!transit_vnode(graph, u, owner)) continue;
    for (const auto& e : graph.vnode(u).table) {
      if (!e.expansion.empty() || dist[e.link] != kInf) continue;
      dist[e.link] = dist[u] + 1;
      spt.push_back({u, e.fid, e.link});
      q.push_back(e.link);
    }
  }
  std::vector<Pathlet> sorted_spt = spt;
  std::sort(sorted_spt.begin(), sorted_spt.end());

  struct Candidate {
    std::size_t dist;
    AsId as;
    Pathlet p;
  };
  std::vector<Candidate> extra;
  for (const auto& v : graph.vnodes()) {
    if (dist[v.id] == kInf || !transit_vnode(graph, v.id, owner)) continue;
    for (const auto& e : v.table) {
      if (!e.expansion.empty() || e.link == owner) continue;
      const Pathlet p{v.id, e.fid, e.link};
      if (std::binary_search(sorted_spt.begin(), sorted_spt.end(), p)) continue;
      extra.push_back({dist[v.id], v.owner, p});
    }
  }
  std::sort(extra.begin(), extra.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dist, a.as, a.p) < std::tie(b.dist, b.as, b.p);
  });
  const auto want = static_cast<std::size_t>(std::ceil(extra_fraction * double(spt.size())));
  std::vector<Pathlet> known = std::move(spt);
  const std::size_t spt_size = known.size();
  for (std::size_t i = 0; i < std::min(want, extra.size()); ++i) known.push_back(extra[i].p);
  return RoutingPerspective(owner, nv, std::move(known), spt_size);
}

Route route_from_vnodes(const AsGraph& graph, std::vector<VnodeId> vnodes, std::vector<Fid> fids) {
  Route r;
  r.vnodes = std::move(vnodes);
  r.fids = std::move(fids);
  for (VnodeId v : r.vnodes) {
    const AsId a = graph.owner(v);
    if (r.as_sequence.empty() || r.as_sequence.back() != a) r.as_sequence.push_back(a);
  }
  r.cost = r.as_sequence.empty() ? 0 : static_cast<int>(r.as_sequence.size()) - 1;
  return r;
}

std::size_t RouteCatalog::total() const {
  std::size_t n = 0;
  for (const auto& [c, v] : by_cost) n += v.size();
  return n;
}

std::vector<int> available_costs(const RouteCatalog& catalog) {
  std::vector<int> out;
  for (const auto& [c, v] : catalog.by_cost)
    if (!v.empty()) out.push_back(c);
  return out;
}

RouteCatalog enumerate_routes(const AsGraph& graph, const RoutingPerspective& persp, VnodeId dst,
                              const EnumerationLimits& limits, std::uint64_t seed,
                              std::optional<Waypoint> waypoint) {
  RouteCatalog catalog;
  const VnodeId src = persp.owner();
  if (!graph.has_vnode(dst) || !graph.has_vnode(src) || dst == src) return catalog;
  const std::size_t nv = graph.vnodes().size();

  // Lower bound on remaining AS changes, by 0-1 BFS on reversed known pathlets.
  constexpr int kInf = std::numeric_limits<int>::max() / 2;
  std::vector<std::vector<VnodeId>> rev(nv);
  for (const auto& p : persp.known_pathlets()) rev[p.to].push_back(p.from);
  std::vector<int> lb(nv, kInf);
  std::deque<VnodeId> dq{dst};
  lb[dst] = 0;
  while (!dq.empty()) {
    const VnodeId v = dq.front();
    dq.pop_front();
    for (VnodeId u : rev[v]) {
      if (graph.is_host(u) && u != src) continue;
      const int w = graph.owner(u) != graph.owner(v) ? 1 : 0;
      if (lb[v] + w < lb[u]) {
        lb[u] = lb[v] + w;
        w == 0 ? dq.push_front(u) : dq.push_back(u);
      }
    }
  }
  if (lb[src] > limits.max_cost) return catalog;

  std::vector<std::size_t> as_of(nv);
  for (const auto& v : graph.vnodes()) as_of[v.id] = graph.as_index(v.owner);
  std::vector<char> as_seen(graph.as_count(), 0);
  std::vector<char> vn_seen(nv, 0);
  std::vector<VnodeId> path{src};
  std::vector<Fid> fids;
  std::mt19937_64 rng(seed);
  std::uint64_t budget = limits.expansion_budget;
  as_seen[as_of[src]] = 1;
  vn_seen[src] = 1;

  auto record = [&](int cost) {
    auto& bucket = catalog.by_cost[cost];
    const std::uint64_t seen = ++catalog.discovered[cost];
    if (bucket.size() < limits.per_cost_cap) {
      bucket.push_back(route_from_vnodes(graph, path, fids));
    } else if (limits.per_cost_cap > 0) {
      const std::uint64_t j = std::uniform_int_distribution<std::uint64_t>(0, seen - 1)(rng);
      if (j < limits.per_cost_cap) bucket[j] = route_from_vnodes(graph, path, fids);
    }
  };

  auto dfs = [&](auto&& self, VnodeId u, int cost, bool via_waypoint) -> void {
    for (const auto& p : persp.out(u)) {
      if (budget == 0) {
        catalog.budget_exhausted = true;
        return;
      }
      --budget;
      const VnodeId v = p.to;
      if (vn_seen[v]) continue;
      if (v != dst && graph.is_host(v)) continue;
      const bool changes_as = as_of[v] != as_of[u];
      if (changes_as && as_seen[as_of[v]]) continue;
      const int next_cost = cost + (changes_as ? 1 : 0);
      if (next_cost + lb[v] > limits.max_cost) continue;
      bool reached = via_waypoint;
      if (waypoint && !reached) {
        reached = graph.owner(v) == waypoint->as && next_cost <= waypoint->max_cost;
        if (!reached && (next_cost >= waypoint->max_cost || v == dst)) continue;
      }
      path.push_back(v);
      fids.push_back(p.fid);
      if (v == dst) {
        record(next_cost);
      } else {
        vn_seen[v] = 1;
        if (changes_as) as_seen[as_of[v]] = 1;
        self(self, v, next_cost, reached);
        if (changes_as) as_seen[as_of[v]] = 0;
        vn_seen[v] = 0;
      }
      path.pop_back();
      fids.pop_back();
    }
  };
  bool start_reached = waypoint && graph.owner(src) == waypoint->as;
  dfs(dfs, src, 0, !waypoint || start_reached);
  for (auto it = catalog.by_cost.begin(); it != catalog.by_cost.end();)
    it = it->second.empty() ? catalog.by_cost.erase(it) : std::next(it);
  return catalog;
}

// ---------------------------------------------------------------- cache

RoutingCache::RoutingCache(const AsGraph& graph, EnumerationLimits limits, std::uint64_t base_seed,
                           double extra_fraction)
    : graph_(graph), limits_(limits), base_seed_(base_seed), extra_fraction_(extra_fraction) {}

std::shared_ptr<const RoutingPerspective> RoutingCache::perspective(VnodeId owner) {
  {
    std::lock_guard lock(mu_);
    if (auto it = perspectives_.find(owner); it != perspectives_.end()) return it->second;
  }
  auto p = std::make_shared<const RoutingPerspective>(
      compute_perspective(graph_, owner, extra_fraction_));
  std::lock_guard lock(mu_);
  return perspectives_.emplace(owner, std::move(p)).first->second;
}

std::shared_ptr<const RouteCatalog> RoutingCache::catalog(VnodeId owner, VnodeId dst) {
  {
    std::lock_guard lock(mu_);
    if (auto it = catalogs_.find({owner, dst}); it != catalogs_.end()) return it->second;
  }
  auto persp = perspective(owner);
  auto c = std::make_shared<const RouteCatalog>(
      enumerate_routes(graph_, *persp, dst, limits_, catalog_seed(owner, dst)));
  if (!memoize_) return c;
  std::lock_guard lock(mu_);
  return catalogs_.emplace(std::pair{owner, dst}, std::move(c)).first->second;
}

RouteCatalog RoutingCache::catalog_via(VnodeId owner, VnodeId dst, const Waypoint& waypoint) {
  auto persp = perspective(owner);
  return enumerate_routes(graph_, *persp, dst, limits_,
                          derive_seed(catalog_seed(owner, dst), waypoint.as), waypoint);
}

namespace {
constexpr std::uint32_t kCacheMagic = 0x44565243;  // "DVRC"
constexpr std::uint16_t kCacheVersion = 1;

void write_header(ByteWriter& w, const std::string& hash, const EnumerationLimits& l,
                  std::uint64_t seed) {
  w.u32(kCacheMagic);
  w.u16(kCacheVersion);
  w.u8(static_cast<std::uint8_t>(hash.size()));
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(hash.data()), hash.size()));
  w.u8(static_cast<std::uint8_t>(l.max_cost));
  w.u64(l.per_cost_cap);
  w.u64(l.expansion_budget);
  w.u64(seed);
}
}  // namespace

void RoutingCache::save(const std::string& path) const {
  ByteWriter w;
  write_header(w, graph_.topology_hash(), limits_, base_seed_);
  std::lock_guard lock(mu_);
  w.u32(static_cast<std::uint32_t>(catalogs_.size()));
  for (const auto& [key, cat] : catalogs_) {
    w.u32(key.first);
    w.u32(key.second);
    w.u8(cat->budget_exhausted);
    w.u16(static_cast<std::uint16_t>(cat->by_cost.size()));
    for (const auto& [cost, routes] : cat->by_cost) {
      w.u8(static_cast<std::uint8_t>(cost));
      w.u64(cat->discovered.at(cost));
      w.u32(static_cast<std::uint32_t>(routes.size()));
      for (const auto& r : routes) {
        w.u8(static_cast<std::uint8_t>(r.vnodes.size()));
        for (auto v : r.vnodes) w.u32(v);
        w.raw(r.fids);
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write catalog cache " + path);
  const auto& b = w.bytes();
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::size_t RoutingCache::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return 0;
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteWriter expect;
  write_header(expect, graph_.topology_hash(), limits_, base_seed_);
  const auto& hdr = expect.bytes();
  if (data.size() < hdr.size() || !std::equal(hdr.begin(), hdr.end(), data.begin())) return 0;
  ByteReader r(ByteView(data).subspan(hdr.size()));
  r.segment("catalog cache");
  const std::uint32_t n = r.u32();
  std::lock_guard lock(mu_);
  for (std::uint32_t i = 0; i < n; ++i) {
    const VnodeId owner = r.u32(), dst = r.u32();
    auto cat = std::make_shared<RouteCatalog>();
    cat->budget_exhausted = r.u8() != 0;
    const auto nc = r.u16();
    for (std::uint16_t c = 0; c < nc; ++c) {
      const int cost = r.u8();
      cat->discovered[cost] = r.u64();
      auto& bucket = cat->by_cost[cost];
      const auto nr = r.u32();
      for (std::uint32_t k = 0; k < nr; ++k) {
        const auto len = r.u8();
        std::vector<VnodeId> vs(len);
        for (auto& v : vs) {
          v = r.u32();
          if (!graph_.has_vnode(v)) throw DataError("cache references unknown vnode");
        }
        auto f = r.raw(len ? len - 1u : 0u);
        bucket.push_back(route_from_vnodes(graph_, std::move(vs), std::vector<Fid>(f.begin(), f.end())));
      }
    }
    catalogs_[{owner, dst}] = std::move(cat);
  }
  return n;
}

}  // namespace dovetail
