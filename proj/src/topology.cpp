#include "dovetail/topology.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <set>

#include "dovetail/byte_io.hpp"

namespace dovetail {

namespace {

bool exit_allowed(VnodeRole role, NeighborKind to) {
  switch (role) {
    case VnodeRole::FromCustomer: return true;
    case VnodeRole::FromProviderOrPeer: return to == NeighborKind::Customer;
    case VnodeRole::PeerExchange: return to != NeighborKind::Provider;
    default: return false;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_int(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

SymKey random_key(std::mt19937_64& rng) {
  SymKey k{};
  for (std::size_t i = 0; i < k.size(); i += 8) {
    const std::uint64_t v = rng();
    for (std::size_t j = 0; j < 8; ++j) k[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
  }
  return k;
}

}  // namespace

std::string_view to_string(VnodeRole role) {
  switch (role) {
    case VnodeRole::FromCustomer: return "from-customer";
    case VnodeRole::FromProviderOrPeer: return "from-provider-or-peer";
    case VnodeRole::PeerExchange: return "peer-exchange";
    case VnodeRole::Host: return "host";
    case VnodeRole::Matchmaker: return "matchmaker";
  }
  return "?";
}

std::string_view to_string(Policy policy) {
  return policy == Policy::LooseValleyFree ? "loose" : "strict";
}

// ---------------------------------------------------------------- AsGraph

void AsGraph::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < ases_.size(); ++i) index_[ases_[i].id] = i;
}

const AutonomousSystem* AsGraph::find_as(AsId id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &ases_[it->second];
}

const AutonomousSystem& AsGraph::as(AsId id) const {
  if (auto* a = find_as(id)) return *a;
  throw ArgumentError("unknown AS " + std::to_string(id));
}

std::size_t AsGraph::as_index(AsId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ArgumentError("unknown AS " + std::to_string(id));
  return it->second;
}

const Vnode& AsGraph::vnode(VnodeId id) const {
  if (id >= vnodes_.size()) throw ArgumentError("unknown vnode " + std::to_string(id));
  return vnodes_[id];
}

std::vector<VnodeId> AsGraph::hosts() const {
  std::vector<VnodeId> out;
  for (const auto& v : vnodes_)
    if (v.is_host()) out.push_back(v.id);
  return out;
}

std::vector<VnodeId> AsGraph::eligible_hosts() const {
  std::vector<VnodeId> out;
  for (const auto& v : vnodes_)
    if (v.is_host() && !as(v.owner).excluded) out.push_back(v.id);
  return out;
}

std::vector<VnodeId> AsGraph::matchmakers() const {
  std::vector<VnodeId> out;
  for (const auto& m : matchmakers_) out.push_back(m.vnode);
  return out;
}

const KeyPair* AsGraph::matchmaker_keys(VnodeId id) const {
  for (const auto& m : matchmakers_)
    if (m.vnode == id) return &m.keys;
  return nullptr;
}

std::optional<NeighborKind> AsGraph::relation(AsId at, AsId neighbor) const {
  const int li = link_index(at, neighbor);
  if (li < 0) return std::nullopt;
  return as(at).neighbors[static_cast<std::size_t>(li)].kind;
}

int AsGraph::link_index(AsId at, AsId neighbor) const {
  const auto* a = find_as(at);
  if (!a) return -1;
  auto it = std::lower_bound(a->neighbors.begin(), a->neighbors.end(), neighbor,
                             [](const Neighbor& n, AsId id) { return n.id < id; });
  if (it == a->neighbors.end() || it->id != neighbor) return -1;
  return static_cast<int>(it - a->neighbors.begin());
}

VnodeId AsGraph::ingress_vnode(AsId at, AsId neighbor) const {
  const auto kind = relation(at, neighbor);
  if (!kind) return kNoVnode;
  const auto& a = as(at);
  switch (*kind) {
    case NeighborKind::Customer: return a.vnodes[0];
    case NeighborKind::Provider: return a.vnodes[1];
    case NeighborKind::Peer: return a.policy == Policy::LooseValleyFree ? a.vnodes[2] : a.vnodes[1];
  }
  return kNoVnode;
}

VnodeId AsGraph::uplink(AsId at) const { return as(at).vnodes.at(0); }

std::size_t AsGraph::pathlet_count() const {
  std::size_t n = 0;
  for (const auto& v : vnodes_) n += v.table.size();
  return n;
}

// ---------------------------------------------------------------- snapshot

namespace {
constexpr std::uint32_t kSnapshotMagic = 0x44565453;  // "DVTS"
constexpr std::uint16_t kSnapshotVersion = 1;
}  // namespace

Bytes AsGraph::snapshot() const {
  ByteWriter w;
  w.u32(kSnapshotMagic);
  w.u16(kSnapshotVersion);
  w.u32(static_cast<std::uint32_t>(ases_.size()));
  for (const auto& a : ases_) {
    w.u32(a.id);
    w.u8(static_cast<std::uint8_t>(a.policy));
    w.u8(a.is_stub);
    w.u8(a.excluded);
    w.u8(a.m_a);
    w.raw(a.key);
    w.u16(static_cast<std::uint16_t>(a.neighbors.size()));
    for (const auto& n : a.neighbors) {
      w.u32(n.id);
      w.u8(static_cast<std::uint8_t>(n.kind));
    }
    w.u8(static_cast<std::uint8_t>(a.vnodes.size()));
    for (auto v : a.vnodes) w.u32(v);
    w.u8(static_cast<std::uint8_t>(a.hosts.size()));
    for (auto v : a.hosts) w.u32(v);
  }
  w.u32(static_cast<std::uint32_t>(vnodes_.size()));
  for (const auto& v : vnodes_) {
    w.u32(v.id);
    w.u32(v.owner);
    w.u8(static_cast<std::uint8_t>(v.role));
    w.u16(static_cast<std::uint16_t>(v.table.size()));
    for (const auto& e : v.table) {
      w.u8(e.fid);
      w.u32(e.link);
      w.u8(static_cast<std::uint8_t>(e.expansion.size()));
      w.raw(e.expansion);
    }
  }
  w.u32(static_cast<std::uint32_t>(matchmakers_.size()));
  for (const auto& m : matchmakers_) {
    w.u32(m.vnode);
    w.raw(m.keys.pk);
    w.raw(m.keys.sk);
  }
  return std::move(w).bytes();
}

AsGraph AsGraph::from_snapshot(ByteView bytes) {
  ByteReader r(bytes);
  r.segment("snapshot header");
  if (r.u32() != kSnapshotMagic) throw DataError("not a topology snapshot (bad magic)");
  if (auto v = r.u16(); v != kSnapshotVersion)
    throw DataError("unsupported snapshot version " + std::to_string(v));
  AsGraph g;
  r.segment("snapshot AS table");
  const std::uint32_t n_as = r.u32();
  for (std::uint32_t i = 0; i < n_as; ++i) {
    AutonomousSystem a;
    a.id = r.u32();
    a.policy = static_cast<Policy>(r.u8());
    a.is_stub = r.u8() != 0;
    a.excluded = r.u8() != 0;
    a.m_a = r.u8();
    a.key = r.array<16>();
    const auto nn = r.u16();
    for (std::uint16_t k = 0; k < nn; ++k) {
      Neighbor n;
      n.id = r.u32();
      n.kind = static_cast<NeighborKind>(r.u8());
      a.neighbors.push_back(n);
    }
    const auto nv = r.u8();
    for (std::uint8_t k = 0; k < nv; ++k) a.vnodes.push_back(r.u32());
    const auto nh = r.u8();
    for (std::uint8_t k = 0; k < nh; ++k) a.hosts.push_back(r.u32());
    g.ases_.push_back(std::move(a));
  }
  r.segment("snapshot vnode table");
  const std::uint32_t n_v = r.u32();
  for (std::uint32_t i = 0; i < n_v; ++i) {
    Vnode v;
    v.id = r.u32();
    v.owner = r.u32();
    v.role = static_cast<VnodeRole>(r.u8());
    const auto ne = r.u16();
    for (std::uint16_t k = 0; k < ne; ++k) {
      ForwardingEntry e;
      e.fid = r.u8();
      e.link = r.u32();
      const auto nx = r.u8();
      auto exp = r.raw(nx);
      e.expansion.assign(exp.begin(), exp.end());
      v.table.push_back(std::move(e));
    }
    if (v.id != i) throw DataError("snapshot vnode ids are not dense");
    g.vnodes_.push_back(std::move(v));
  }
  r.segment("snapshot key directory");
  const std::uint32_t n_m = r.u32();
  for (std::uint32_t i = 0; i < n_m; ++i) {
    MatchmakerKeys m;
    m.vnode = r.u32();
    m.keys.pk = r.array<32>();
    m.keys.sk = r.array<32>();
    g.matchmakers_.push_back(m);
  }
  if (r.remaining() != 0) throw DataError("trailing bytes after snapshot");
  g.reindex();
  for (const auto& v : g.vnodes_)
    for (const auto& e : v.table)
      if (e.link >= g.vnodes_.size()) throw DataError("snapshot entry targets unknown vnode");
  return g;
}

std::string AsGraph::topology_hash() const {
  const auto snap = snapshot();
  const auto h = hash128(snap);
  return to_hex(ByteView(h.data(), 8));
}

// ---------------------------------------------------------------- load_caida

std::vector<AsRelationship> load_caida(std::string_view text) {
  std::vector<AsRelationship> out;
  std::map<std::pair<AsId, AsId>, std::size_t> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;

    const auto p1 = line.find('|');
    const auto p2 = p1 == std::string_view::npos ? p1 : line.find('|', p1 + 1);
    if (p2 == std::string_view::npos || line.find('|', p2 + 1) != std::string_view::npos)
      throw ParseError(line_no, "expected a|b|code");
    AsId a = 0, b = 0;
    int code = 0;
    if (!parse_int(line.substr(0, p1), a) || !parse_int(line.substr(p1 + 1, p2 - p1 - 1), b) ||
        !parse_int(line.substr(p2 + 1), code))
      throw ParseError(line_no, "non-numeric field");
    AsRelationship rel{a, b, Relationship::Peer};
    switch (code) {
      case -1: rel.kind = Relationship::ProviderCustomer; break;
      case 0:
      case 2: rel.kind = Relationship::Peer; break;
      default: throw ParseError(line_no, "relationship code must be -1, 0 or 2");
    }
    if (a == b) throw DataError("line " + std::to_string(line_no) + ": self relationship");
    const auto key = std::minmax(a, b);
    if (auto it = seen.find(key); it != seen.end()) {
      const auto& prev = out[it->second];
      const bool same = prev.kind == rel.kind &&
                        (rel.kind == Relationship::Peer || (prev.a == rel.a && prev.b == rel.b));
      if (!same)
        throw DataError("line " + std::to_string(line_no) + ": conflicting relationship for " +
                        std::to_string(a) + "|" + std::to_string(b));
      continue;
    }
    seen.emplace(key, out.size());
    out.push_back(rel);
  }
  return out;
}

// ---------------------------------------------------------------- synthetic

std::vector<AsRelationship> generate_synthetic(std::size_t n_ases, double peer_fraction,
                                               std::uint64_t seed) {
  if (n_ases < 3) throw ArgumentError("synthetic topology needs at least 3 ASes");
  if (!(peer_fraction >= 0.0 && peer_fraction <= 1.0))
    throw ArgumentError("peer_fraction must lie in [0,1]");
  constexpr std::size_t kDegreeCap = 200;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> degree(n_ases, 0);
  std::vector<std::size_t> customers(n_ases, 0);
  std::set<std::pair<std::size_t, std::size_t>> linked;
  std::vector<AsRelationship> out;

  auto add = [&](std::size_t a, std::size_t b, Relationship kind) {
    out.push_back({static_cast<AsId>(a + 1), static_cast<AsId>(b + 1), kind});
    linked.insert(std::minmax(a, b));
    ++degree[a];
    ++degree[b];
    if (kind == Relationship::ProviderCustomer) ++customers[a];
  };
  // Sublinear in the customer count: most late arrivals stay stubs while the
  // hierarchy keeps a few tiers of depth.
  auto weight = [&](std::size_t j) { return std::pow(double(customers[j]), 0.5) + 0.25; };

  for (std::size_t k = 1; k < n_ases; ++k) {
    std::size_t n_providers = 1;
    if (k >= 3 && unit(rng) < 0.6) ++n_providers;
    if (k >= 10 && unit(rng) < 0.25) ++n_providers;
    for (std::size_t p = 0; p < n_providers; ++p) {
      double total = 0;
      for (std::size_t j = 0; j < k; ++j)
        if (degree[j] < kDegreeCap && !linked.count({j, k})) total += weight(j);
      if (total == 0) break;
      double pick = unit(rng) * total;
      std::size_t chosen = k;
      for (std::size_t j = 0; j < k; ++j) {
        if (degree[j] >= kDegreeCap || linked.count({j, k})) continue;
        pick -= weight(j);
        chosen = j;
        if (pick < 0) break;
      }
      if (chosen == k) break;
      add(chosen, k, Relationship::ProviderCustomer);
    }
  }

  const auto n_peers = static_cast<std::size_t>(std::llround(peer_fraction * double(n_ases)));
  // Peering endpoints are drawn in proportion to degree, so peering
  // concentrates among transit providers.
  auto by_degree = [&] {
    std::vector<double> w(n_ases);
    for (std::size_t j = 0; j < n_ases; ++j) w[j] = double(degree[j]);
    return std::discrete_distribution<std::size_t>(w.begin(), w.end());
  };
  auto pick = by_degree();
  std::size_t attempts = 0;
  for (std::size_t made = 0; made < n_peers && attempts < 50 * (n_peers + 1); ++attempts) {
    const std::size_t a = pick(rng), b = pick(rng);
    if (a == b || linked.count(std::minmax(a, b))) continue;
    if (degree[a] >= kDegreeCap || degree[b] >= kDegreeCap) continue;
    add(std::min(a, b), std::max(a, b), Relationship::Peer);
    ++made;
  }
  return out;
}

// ---------------------------------------------------------------- build

AsGraph build_network(const std::vector<AsRelationship>& rels, double loose_fraction,
                      std::uint64_t seed) {
  if (rels.empty()) throw DataError("empty relationship list");
  if (!(loose_fraction >= 0.0 && loose_fraction <= 1.0))
    throw ArgumentError("loose_fraction must lie in [0,1]");

  std::map<AsId, std::vector<Neighbor>> adj;
  std::set<std::pair<AsId, AsId>> pairs;
  for (const auto& r : rels) {
    if (r.a == r.b) throw DataError("self relationship on AS " + std::to_string(r.a));
    if (!pairs.insert(std::minmax(r.a, r.b)).second)
      throw DataError("duplicate relationship " + std::to_string(r.a) + "|" + std::to_string(r.b));
    if (r.kind == Relationship::ProviderCustomer) {
      adj[r.a].push_back({r.b, NeighborKind::Customer});
      adj[r.b].push_back({r.a, NeighborKind::Provider});
    } else {
      adj[r.a].push_back({r.b, NeighborKind::Peer});
      adj[r.b].push_back({r.a, NeighborKind::Peer});
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AsGraph g;
  for (auto& [id, nbrs] : adj) {
    if (nbrs.size() > kMaxNeighbors)
      throw DataError("AS " + std::to_string(id) + " has " + std::to_string(nbrs.size()) +
                      " neighbors; one-byte FIDs allow at most " + std::to_string(kMaxNeighbors));
    std::sort(nbrs.begin(), nbrs.end(), [](const Neighbor& x, const Neighbor& y) { return x.id < y.id; });
    AutonomousSystem a;
    a.id = id;
    a.policy = unit(rng) < loose_fraction ? Policy::LooseValleyFree : Policy::StrictValleyFree;
    a.key = random_key(rng);
    a.neighbors = nbrs;
    a.is_stub = std::none_of(nbrs.begin(), nbrs.end(),
                             [](const Neighbor& n) { return n.kind == NeighborKind::Customer; });
    g.ases_.push_back(std::move(a));
  }
  g.reindex();

  static constexpr VnodeRole kRoles[] = {VnodeRole::FromCustomer, VnodeRole::FromProviderOrPeer,
                                         VnodeRole::PeerExchange};
  for (auto& a : g.ases_) {
    for (std::size_t r = 0; r < AsGraph::routing_vnode_count(a.policy); ++r) {
      Vnode v;
      v.id = static_cast<VnodeId>(g.vnodes_.size());
      v.owner = a.id;
      v.role = kRoles[r];
      a.vnodes.push_back(v.id);
      g.vnodes_.push_back(std::move(v));
    }
  }
  for (const auto& a : g.ases_) {
    for (VnodeId vid : a.vnodes) {
      auto& v = g.vnodes_[vid];
      for (const auto& n : a.neighbors) {
        if (!exit_allowed(v.role, n.kind)) continue;
        const VnodeId target = g.ingress_vnode(n.id, a.id);
        v.table.push_back({static_cast<Fid>(v.table.size()), target, {}});
      }
    }
  }

  // Reachability to and from the best-connected AS decides exclusion.
  std::size_t hub = 0;
  for (std::size_t i = 1; i < g.ases_.size(); ++i)
    if (g.ases_[i].neighbors.size() > g.ases_[hub].neighbors.size()) hub = i;

  const std::size_t nv = g.vnodes_.size();
  std::vector<std::vector<VnodeId>> reverse(nv);
  for (const auto& v : g.vnodes_)
    for (const auto& e : v.table) reverse[e.link].push_back(v.id);

  auto bfs = [&](std::vector<VnodeId> start, bool backwards) {
    std::vector<char> seen(nv, 0);
    std::deque<VnodeId> q;
    for (auto s : start) {
      seen[s] = 1;
      q.push_back(s);
    }
    while (!q.empty()) {
      const VnodeId u = q.front();
      q.pop_front();
      auto visit = [&](VnodeId w) {
        if (!seen[w]) {
          seen[w] = 1;
          q.push_back(w);
        }
      };
      if (backwards)
        for (auto w : reverse[u]) visit(w);
      else
        for (const auto& e : g.vnodes_[u].table) visit(e.link);
    }
    return seen;
  };
  const auto& hub_as = g.ases_[hub];
  const auto from_hub = bfs({hub_as.vnodes[0]}, false);
  const auto to_hub = bfs(hub_as.vnodes, true);
  for (auto& a : g.ases_) {
    const bool reached = std::any_of(a.vnodes.begin(), a.vnodes.end(),
                                     [&](VnodeId v) { return from_hub[v] != 0; });
    a.excluded = !(reached && to_hub[a.vnodes[0]]);
  }
  return g;
}

AsGraph attach_hosts_and_matchmakers(const AsGraph& graph, double matchmaker_fraction,
                                     std::uint64_t seed) {
  if (!(matchmaker_fraction >= 0.0 && matchmaker_fraction <= 1.0))
    throw ArgumentError("matchmaker_fraction must lie in [0,1]");
  if (!graph.hosts().empty()) throw ArgumentError("graph already has hosts attached");
  AsGraph g = graph;
  for (auto& a : g.ases_) {
    if (!a.is_stub) continue;
    Vnode h;
    h.id = static_cast<VnodeId>(g.vnodes_.size());
    h.owner = a.id;
    h.role = VnodeRole::Host;
    h.table.push_back({0, a.vnodes[0], {}});
    for (VnodeId vid : a.vnodes) {
      auto& t = g.vnodes_[vid].table;
      if (t.size() >= 256) throw DataError("forwarding table overflow in AS " + std::to_string(a.id));
      t.push_back({static_cast<Fid>(t.size()), h.id, {}});
    }
    a.hosts.push_back(h.id);
    g.vnodes_.push_back(std::move(h));
  }

  std::vector<VnodeId> eligible = g.eligible_hosts();
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  const auto count =
      static_cast<std::size_t>(std::llround(matchmaker_fraction * double(eligible.size())));
  eligible.resize(std::min(count, eligible.size()));
  std::sort(eligible.begin(), eligible.end());
  for (VnodeId id : eligible) {
    g.vnodes_[id].role = VnodeRole::Matchmaker;
    KeySeed ks{};
    for (std::size_t i = 0; i < ks.size(); i += 8) {
      const std::uint64_t v = rng();
      for (std::size_t j = 0; j < 8; ++j) ks[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
    }
    g.matchmakers_.push_back({id, keypair_from_seed(ks)});
  }
  return g;
}

}  // namespace dovetail
