#include "dovetail/protocol.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

namespace dovetail {

namespace {

Nonce random_nonce(Rng& rng) {
  Nonce n{};
  for (std::size_t i = 0; i < n.size(); i += 8) {
    const std::uint64_t v = rng();
    for (std::size_t j = 0; j < 8; ++j) n[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
  }
  return n;
}

KeySeed random_seed(Rng& rng) {
  KeySeed s{};
  for (std::size_t i = 0; i < s.size(); i += 8) {
    const std::uint64_t v = rng();
    for (std::size_t j = 0; j < 8; ++j) s[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
  }
  return s;
}

ByteView slice(const Bytes& b, std::size_t from, std::size_t to) {
  return ByteView(b).subspan(from, to - from);
}

std::size_t path_capacity(const AutonomousSystem& a) { return a.m_a - 1u; }

}  // namespace

bool entered_new_as(const AsGraph& g, VnodeId from, VnodeId at) {
  if (from == kNoVnode || g.is_host(from)) return true;
  return g.owner(from) != g.owner(at);
}

Action process_plain(const AsGraph& g, VnodeId at, Packet& p) {
  if (p.u.empty()) return Action::deliver();
  const Fid f = p.u.front();
  const auto& table = g.vnode(at).table;
  if (f >= table.size()) return Action::drop("FID " + std::to_string(f) + " outside forwarding table");
  const auto& e = table[f];
  Bytes next(e.expansion.begin(), e.expansion.end());
  next.insert(next.end(), p.u.begin() + 1, p.u.end());
  if (next.size() > kMaxUnencryptedBytes) return Action::drop("unencrypted segment overflow");
  p.u = std::move(next);
  return Action::send(e.link);
}

std::optional<std::vector<Fid>> internal_path(const AsGraph& g, VnodeId start, VnodeId target) {
  if (!g.has_vnode(start) || !g.has_vnode(target)) return std::nullopt;
  const AsId as = g.owner(start);
  std::map<VnodeId, std::pair<VnodeId, Fid>> parent;
  std::deque<VnodeId> q{start};
  parent[start] = {kNoVnode, 0};
  while (!q.empty()) {
    const VnodeId u = q.front();
    q.pop_front();
    for (const auto& e : g.vnode(u).table) {
      if (!e.expansion.empty()) continue;
      if (e.link == target) {
        std::vector<Fid> path{e.fid};
        for (VnodeId w = u; parent[w].first != kNoVnode; w = parent[w].first)
          path.push_back(parent[w].second);
        std::reverse(path.begin(), path.end());
        return path;
      }
      if (g.owner(e.link) == as && !g.is_host(e.link) && !parent.count(e.link)) {
        parent[e.link] = {u, e.fid};
        q.push_back(e.link);
      }
    }
  }
  return std::nullopt;
}

VnodeId reverse_start(const AsGraph& g, AsId as, VnodeId exit_target) {
  if (g.is_host(exit_target)) return g.uplink(as);
  return g.ingress_vnode(as, g.owner(exit_target));
}

VnodeId reverse_target(const AsGraph& g, AsId as, std::uint8_t link) {
  const auto& a = g.as(as);
  if (link == kHostLink) return a.hosts.empty() ? kNoVnode : a.hosts.front();
  if (link >= a.neighbors.size()) return kNoVnode;
  return g.ingress_vnode(a.neighbors[link].id, as);
}

VnodeId forward_ingress(const AsGraph& g, AsId as, std::uint8_t link) {
  const auto& a = g.as(as);
  if (link == kHostLink) return g.uplink(as);
  if (link >= a.neighbors.size()) return kNoVnode;
  return g.ingress_vnode(as, a.neighbors[link].id);
}

std::optional<UnencryptedWalk> walk_unencrypted(const AsGraph& g, VnodeId at, ByteView u) {
  const AsId as = g.owner(at);
  std::deque<std::pair<Fid, bool>> q;
  for (Fid f : u) q.emplace_back(f, true);
  UnencryptedWalk out;
  VnodeId cur = at;
  for (std::size_t guard = 0; guard < 512; ++guard) {
    if (q.empty()) return std::nullopt;
    const auto [f, original] = q.front();
    q.pop_front();
    const auto& table = g.vnode(cur).table;
    if (f >= table.size()) return std::nullopt;
    if (original) out.fids.push_back(f);
    const auto& e = table[f];
    for (auto it = e.expansion.rbegin(); it != e.expansion.rend(); ++it) q.emplace_front(*it, false);
    if (g.owner(e.link) != as || g.is_host(e.link)) {
      out.exit_target = e.link;
      return out;
    }
    cur = e.link;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- per-AS processing

Action process_construction(const AsGraph& g, VnodeId at, VnodeId from, Packet& p) {
  const Vnode& v = g.vnode(at);
  if (p.u.empty()) return v.is_host() ? Action::deliver() : Action::drop("empty U at routing vnode");
  if (v.is_host() || !entered_new_as(g, from, at)) return process_plain(g, at, p);

  const auto& a = g.as(v.owner);
  std::uint8_t li = kHostLink;
  if (from != kNoVnode && !g.is_host(from)) {
    const int idx = g.link_index(a.id, g.owner(from));
    if (idx < 0) return Action::drop("arrival over unknown link");
    li = static_cast<std::uint8_t>(idx);
  }
  const auto walk = walk_unencrypted(g, at, p.u);
  if (!walk) return Action::drop("U does not leave the AS");

  const std::size_t len = a.transit_entry_size();
  const Bytes iv_j = concat(p.n2, p.n1);
  bool joined = false;
  for (std::size_t k = 0; k + kJoinEntrySize <= p.j.size(); k += kJoinEntrySize) {
    const auto je = decode_join_entry(sym_decrypt(a.key, iv_j, slice(p.j, k, k + kJoinEntrySize)));
    if (!je) continue;
    const std::size_t off = je->end_offset;
    if (off < len || off > p.t.size()) continue;
    if (je->link != kHostLink && je->link >= a.neighbors.size()) continue;
    const std::size_t start = off - len;
    const Bytes iv_t = concat(slice(p.t, 0, start), p.n1);
    const auto d = decode_transit_entry(sym_decrypt(a.key, iv_t, slice(p.t, start, off)), a.m_a);
    if (d.entry.id != a.id) continue;

    const auto fwd = internal_path(g, forward_ingress(g, a.id, je->link), walk->exit_target);
    const auto rev = internal_path(g, reverse_start(g, a.id, walk->exit_target),
                                   reverse_target(g, a.id, je->link));
    if (!fwd || !rev || fwd->size() > path_capacity(a) || rev->size() > path_capacity(a))
      return Action::drop("illegal splice at join");
    const Bytes ct = sym_encrypt(a.key, iv_t, encode_transit_entry({a.id, *fwd, *rev}, a.m_a));
    p.t.resize(start);
    p.t.insert(p.t.end(), ct.begin(), ct.end());
    p.j.resize(k + kJoinEntrySize);
    joined = true;
    break;
  }

  if (!joined) {
    if (walk->fids.size() > path_capacity(a)) return Action::drop("internal path exceeds m_A");
    const VnodeId back = li == kHostLink ? (from == kNoVnode ? reverse_target(g, a.id, li) : from)
                                         : reverse_target(g, a.id, li);
    const auto rev = internal_path(g, reverse_start(g, a.id, walk->exit_target), back);
    if (!rev || rev->size() > path_capacity(a)) return Action::drop("no reverse internal path");
    if (p.t.size() + len > 0xffff) return Action::drop("transit segment overflow");
    const Bytes ct = sym_encrypt(a.key, concat(p.t, p.n1),
                                 encode_transit_entry({a.id, walk->fids, *rev}, a.m_a));
    p.t.insert(p.t.end(), ct.begin(), ct.end());
    const Bytes jt = sym_encrypt(
        a.key, iv_j, encode_join_entry({static_cast<std::uint16_t>(p.t.size()), li}));
    p.j.insert(p.j.end(), jt.begin(), jt.end());
  }
  p.n2 = chain_hash(p.n2);
  return process_plain(g, at, p);
}

Action process_construction_return(const AsGraph& g, VnodeId at, VnodeId from, Packet& p) {
  const Vnode& v = g.vnode(at);
  if (v.is_host() || !entered_new_as(g, from, at)) return process_plain(g, at, p);
  const auto& a = g.as(v.owner);
  const std::size_t len = a.transit_entry_size();
  const std::size_t off = p.offset;
  if (off < len || off > p.t.size()) return Action::drop("offset outside transit segment");
  const std::size_t start = off - len;
  const Bytes plain = sym_decrypt(a.key, concat(slice(p.t, 0, start), p.payload), slice(p.t, start, off));
  const auto d = decode_transit_entry(plain, a.m_a);
  if (d.entry.id != a.id || !d.paths_ok) return Action::drop("invalid packet");
  p.u.assign(d.entry.reverse.begin(), d.entry.reverse.end());
  const Bytes ct = sym_encrypt(a.key, concat(slice(p.t, off, p.t.size()), p.n1), plain);
  std::copy(ct.begin(), ct.end(), p.t.begin() + static_cast<std::ptrdiff_t>(start));
  p.offset = static_cast<std::uint16_t>(start);
  return process_plain(g, at, p);
}

Action process_data(const AsGraph& g, VnodeId at, VnodeId from, Packet& p) {
  const Vnode& v = g.vnode(at);
  if (v.is_host() || !entered_new_as(g, from, at)) return process_plain(g, at, p);
  const auto& a = g.as(v.owner);
  const std::size_t len = a.transit_entry_size();
  const std::size_t off = p.offset;
  if (off + len > p.t.size()) return Action::drop("offset outside transit segment");
  const auto d = decode_transit_entry(
      sym_decrypt(a.key, concat(slice(p.t, off + len, p.t.size()), p.n1), slice(p.t, off, off + len)),
      a.m_a);
  if (d.entry.id != a.id || !d.paths_ok) return Action::drop("invalid packet");
  p.u.assign(d.entry.forward.begin(), d.entry.forward.end());
  p.offset = static_cast<std::uint16_t>(off + len);
  return process_plain(g, at, p);
}

Action process_response(const AsGraph& g, VnodeId at, VnodeId from, Packet& p) {
  const Vnode& v = g.vnode(at);
  if (v.is_host() || !entered_new_as(g, from, at)) return process_plain(g, at, p);
  const auto& a = g.as(v.owner);
  const std::size_t len = a.transit_entry_size();
  const std::size_t off = p.offset;
  if (off < len || off > p.t.size()) return Action::drop("offset outside transit segment");
  const std::size_t start = off - len;
  const auto d = decode_transit_entry(
      sym_decrypt(a.key, concat(slice(p.t, off, p.t.size()), p.n1), slice(p.t, start, off)), a.m_a);
  if (d.entry.id != a.id || !d.paths_ok) return Action::drop("invalid packet");
  p.u.assign(d.entry.reverse.begin(), d.entry.reverse.end());
  p.offset = static_cast<std::uint16_t>(start);
  return process_plain(g, at, p);
}

Action process_packet(const AsGraph& g, VnodeId at, VnodeId from, Packet& p) {
  switch (p.type) {
    case PacketType::Plain: return process_plain(g, at, p);
    case PacketType::Construct: return process_construction(g, at, from, p);
    case PacketType::ConstructReturn: return process_construction_return(g, at, from, p);
    case PacketType::Data: return process_data(g, at, from, p);
    case PacketType::Response: return process_response(g, at, from, p);
  }
  return Action::drop("unknown packet type");
}

// ---------------------------------------------------------------- simulator

std::string format_trace_event(const TraceEvent& e) {
  std::ostringstream os;
  os << '(' << e.step << ", " << e.as << ", " << e.vnode << ", " << to_string(e.type) << ", "
     << e.offset << ", " << e.u_len << ", " << e.t_len << ", " << e.j_len << ')';
  return os.str();
}

SimResult simulate(const AsGraph& g, VnodeId start, VnodeId from, Packet packet,
                   std::size_t first_step, std::size_t max_steps) {
  SimResult r;
  VnodeId at = start, prev = from;
  for (std::size_t step = 0; step < max_steps; ++step) {
    if (!g.has_vnode(at)) {
      r.outcome = Action::drop("no such vnode");
      r.at = at;
      r.packet = std::move(packet);
      return r;
    }
    r.trace.push_back({first_step + step, g.owner(at), at, packet.type, packet.offset,
                       packet.u.size(), packet.t.size(), packet.j.size()});
    Action a = process_packet(g, at, prev, packet);
    if (a.kind == Action::Kind::Send) {
      prev = at;
      at = a.next;
      continue;
    }
    if (a.kind == Action::Kind::Deliver && !g.is_host(at)) a = Action::drop("delivered at routing vnode");
    r.outcome = std::move(a);
    r.at = at;
    r.packet = std::move(packet);
    return r;
  }
  r.outcome = Action::drop("step limit reached");
  r.at = at;
  r.packet = std::move(packet);
  return r;
}

std::vector<AsId> as_path(const std::vector<TraceEvent>& trace) {
  std::vector<AsId> out;
  for (const auto& e : trace)
    if (out.empty() || out.back() != e.as) out.push_back(e.as);
  return out;
}

// ---------------------------------------------------------------- end hosts

Packet destination_return(const Packet& construct) {
  if (construct.type != PacketType::Construct) throw ArgumentError("destination_return needs a Construct packet");
  if (!construct.u.empty() || !construct.payload.empty())
    throw ArgumentError("Construct packet has not reached its destination");
  Packet r;
  r.type = PacketType::ConstructReturn;
  r.t = construct.t;
  r.n1 = path_hash(construct.n1, construct.t);
  r.offset = static_cast<std::uint16_t>(construct.t.size());
  r.payload.assign(construct.n1.begin(), construct.n1.end());
  return r;
}

std::vector<TailOption> matchmaker_tail_options(RoutingCache& cache, VnodeId matchmaker,
                                                const ContinuationRequest& req,
                                                const ProtocolParams& params, Rng& rng) {
  const auto& g = cache.graph();
  std::vector<TailOption> out;
  if (!g.has_vnode(req.dest) || !g.is_host(req.dest) || !g.find_as(req.dovetail_as)) return out;
  const int limit = params.mm_cost_limit;
  const RouteCatalog catalog = cache.catalog_via(matchmaker, req.dest, {req.dovetail_as, limit});

  std::vector<TailOption> pool;
  std::map<int, std::vector<std::size_t>> by_post;
  for (const auto& [cost, routes] : catalog.by_cost) {
    for (const auto& r : routes) {
      const auto it = std::find(r.as_sequence.begin(), r.as_sequence.end(), req.dovetail_as);
      const auto pos = static_cast<int>(it - r.as_sequence.begin());
      if (it == r.as_sequence.end() || pos < 1 || pos > limit) continue;
      by_post[cost - pos].push_back(pool.size());
      pool.push_back({r, pos, cost});
    }
  }
  if (pool.empty()) return out;

  std::vector<int> costs;
  for (const auto& [c, v] : by_post) costs.push_back(c);
  const auto dist = cost_distribution(params.tail_alg, costs);
  std::map<int, double> weight;
  for (const auto& [c, pr] : dist.support)
    if (pr > 0) weight[c] = pr;

  while (out.size() < params.n_tail_options && !weight.empty()) {
    std::vector<int> cs;
    std::vector<double> ws;
    for (const auto& [c, w] : weight) {
      cs.push_back(c);
      ws.push_back(w);
    }
    std::discrete_distribution<std::size_t> pick_cost(ws.begin(), ws.end());
    const int c = cs[pick_cost(rng)];
    auto& bucket = by_post[c];
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, bucket.size() - 1)(rng);
    out.push_back(pool[bucket[k]]);
    bucket.erase(bucket.begin() + static_cast<std::ptrdiff_t>(k));
    if (bucket.empty()) weight.erase(c);
  }
  return out;
}

Packet matchmaker_continue(const Packet& arrived, const ContinuationRequest& req,
                           std::span<const TailOption> offered, const TailOption& chosen,
                           int mm_cost_limit) {
  if (std::find(offered.begin(), offered.end(), chosen) == offered.end())
    throw ConstructionError("selected tail was not among the offered options");
  if (chosen.cost_md < 1 || chosen.cost_md > mm_cost_limit)
    throw ConstructionError("tail reaches the dovetail outside the cost limit");
  if (chosen.route.fids.empty()) throw ConstructionError("empty tail route");
  Packet p = arrived;
  p.type = PacketType::Construct;
  p.u.assign(chosen.route.fids.begin() + 1, chosen.route.fids.end());
  p.payload.clear();
  p.n2 = chain_hash(req.prior_n2, mm_cost_limit - chosen.cost_md);
  return p;
}

std::optional<int> choose_dovetail(const AsGraph& g, const Route& head, int mm_cost_limit) {
  const int n = head.cost, limit = mm_cost_limit;
  if (n - limit <= limit) return std::nullopt;
  for (int i = n - limit; i < n; ++i) {
    if (i <= limit) continue;
    const AsId d = head.as_sequence[static_cast<std::size_t>(i)];
    for (VnodeId v : head.vnodes) {
      if (g.owner(v) != d) continue;
      if (g.vnode(v).role == VnodeRole::FromCustomer) return i;
      break;
    }
  }
  return n - limit;
}

bool tail_reuses_head(const TailOption& tail, std::span<const AsId> head_as_set, AsId dovetail_as,
                      AsId matchmaker_as) {
  for (AsId a : tail.route.as_sequence) {
    if (a == dovetail_as || a == matchmaker_as) continue;
    if (std::find(head_as_set.begin(), head_as_set.end(), a) != head_as_set.end()) return true;
  }
  return false;
}

bool tail_is_spliceable(const AsGraph& g, const Route& head, int dovetail_pos,
                        const TailOption& tail) {
  const auto& h = head.as_sequence;
  const auto& t = tail.route.as_sequence;
  const int i = dovetail_pos, c = tail.cost_md;
  if (i < 1 || i >= static_cast<int>(h.size()) || c < 0 || c >= static_cast<int>(t.size())) return false;
  const AsId d = h[static_cast<std::size_t>(i)];
  if (t[static_cast<std::size_t>(c)] != d) return false;
  const auto head_prefix_end = h.begin() + i + 1;
  for (std::size_t k = static_cast<std::size_t>(c) + 1; k < t.size(); ++k)
    if (std::find(h.begin(), head_prefix_end, t[k]) != head_prefix_end) return false;
  for (int k = 1; k < c; ++k) {
    const auto it = std::find(h.begin(), h.end(), t[static_cast<std::size_t>(k)]);
    if (it != h.end() && it - h.begin() == i - c + k) return false;
  }

  const auto& hv = head.vnodes;
  std::size_t first = 0;
  while (first < hv.size() && g.owner(hv[first]) != d) ++first;
  if (first == 0 || first >= hv.size()) return false;
  const auto& tv = tail.route.vnodes;
  std::size_t last = tv.size();
  for (std::size_t k = 0; k < tv.size(); ++k)
    if (g.owner(tv[k]) == d && !g.is_host(tv[k])) last = k;
  if (last + 1 >= tv.size()) return false;
  const VnodeId exit_target = tv[last + 1];
  const AsId prev = h[static_cast<std::size_t>(i - 1)];
  const std::size_t cap = g.as(d).m_a - 1u;
  const auto fwd = internal_path(g, hv[first], exit_target);
  const auto rev = internal_path(g, reverse_start(g, d, exit_target), g.ingress_vnode(prev, d));
  return fwd && rev && fwd->size() <= cap && rev->size() <= cap;
}

TailChoice source_select_tail(std::span<const TailOption> options,
                              std::span<const AsId> head_as_set, AsId dovetail_as,
                              AsId matchmaker_as, Rng& rng) {
  if (options.empty()) throw ArgumentError("no tail options to choose from");
  std::vector<std::size_t> clean;
  for (std::size_t k = 0; k < options.size(); ++k)
    if (!tail_reuses_head(options[k], head_as_set, dovetail_as, matchmaker_as)) clean.push_back(k);
  if (!clean.empty())
    return {clean[std::uniform_int_distribution<std::size_t>(0, clean.size() - 1)(rng)], false};
  return {std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng), true};
}

namespace {

std::optional<Connection> try_construct(RoutingCache& cache, VnodeId src, VnodeId dst, VnodeId mm,
                                        const RouteCatalog& head_catalog,
                                        const ProtocolParams& params, Rng& rng, std::string& reason) {
  const auto& g = cache.graph();
  const int limit = params.mm_cost_limit;
  Connection conn;
  conn.matchmaker = mm;
  conn.head = select_route(params.head_alg, head_catalog, rng);
  const auto split = choose_dovetail(g, conn.head, limit);
  if (!split) {
    reason = "head too short for a dovetail";
    return std::nullopt;
  }
  const int i = *split;
  conn.dovetail_pos = i;
  conn.dovetail_as = conn.head.as_sequence[static_cast<std::size_t>(i)];

  const Nonce n1 = random_nonce(rng);
  const Nonce n2 = random_nonce(rng);
  const ContinuationRequest req{dst, conn.dovetail_as, static_cast<std::uint8_t>(i),
                                chain_hash(n2, i - limit)};
  const KeyPair* mm_keys = g.matchmaker_keys(mm);
  if (!mm_keys) throw ConstructionError("matchmaker has no key pair");

  Packet construct;
  construct.type = PacketType::Construct;
  construct.u.assign(conn.head.fids.begin() + 1, conn.head.fids.end());
  construct.n1 = n1;
  construct.n2 = n2;
  construct.payload = pk_encrypt(mm_keys->pk, req, random_seed(rng));

  auto head_run = simulate(g, conn.head.vnodes.at(1), src, std::move(construct));
  conn.trace = head_run.trace;
  if (!head_run.delivered() || head_run.at != mm) {
    reason = "head construction failed: " + head_run.outcome.reason;
    return std::nullopt;
  }

  const ContinuationRequest got = pk_decrypt(*mm_keys, head_run.packet.payload);
  conn.offered = matchmaker_tail_options(cache, mm, got, params, rng);
  if (conn.offered.empty()) {
    reason = "no tail reaches the dovetail";
    return std::nullopt;
  }
  for (const auto& o : conn.offered)
    if (tail_is_spliceable(g, conn.head, i, o)) conn.valid.push_back(o);
  if (conn.valid.empty()) {
    reason = "no spliceable tail";
    return std::nullopt;
  }
  const auto choice = source_select_tail(conn.valid, conn.head.as_sequence, conn.dovetail_as,
                                         g.owner(mm), rng);
  conn.tail = conn.valid[choice.index];
  conn.reuse = choice.reuse;

  Packet cont = matchmaker_continue(head_run.packet, got, conn.offered, conn.tail, limit);
  auto tail_run = simulate(g, conn.tail.route.vnodes.at(1), mm, std::move(cont), conn.trace.size());
  conn.trace.insert(conn.trace.end(), tail_run.trace.begin(), tail_run.trace.end());
  if (!tail_run.delivered() || tail_run.at != dst) {
    reason = "tail construction failed: " + tail_run.outcome.reason;
    return std::nullopt;
  }

  const AsId dst_as = g.owner(dst);
  auto ret = simulate(g, g.uplink(dst_as), dst, destination_return(tail_run.packet), conn.trace.size());
  conn.trace.insert(conn.trace.end(), ret.trace.begin(), ret.trace.end());
  if (!ret.delivered() || ret.at != src) {
    reason = "return failed: " + ret.outcome.reason;
    return std::nullopt;
  }
  auto& h = conn.handle;
  if (ret.packet.payload.size() != h.original_n1.size()) {
    reason = "return payload malformed";
    return std::nullopt;
  }
  h.source = src;
  h.destination = dst;
  h.transit = ret.packet.t;
  h.n1_updated = ret.packet.n1;
  std::copy(ret.packet.payload.begin(), ret.packet.payload.end(), h.original_n1.begin());
  h.path_trace = as_path(ret.trace);
  std::reverse(h.path_trace.begin(), h.path_trace.end());
  return conn;
}

}  // namespace

Connection build_connection(RoutingCache& cache, VnodeId src, VnodeId dst,
                            const ProtocolParams& params, Rng& rng) {
  const auto& g = cache.graph();
  if (!g.has_vnode(src) || !g.has_vnode(dst) || !g.is_host(src) || !g.is_host(dst))
    throw ArgumentError("source and destination must be hosts");
  const AsId src_as = g.owner(src), dst_as = g.owner(dst);
  if (src_as == dst_as) throw ArgumentError("source and destination share an AS");
  if (g.as(src_as).excluded || g.as(dst_as).excluded)
    throw ArgumentError("source or destination lies in an excluded AS");
  const int limit = params.mm_cost_limit;
  if (limit < 1) throw ArgumentError("matchmaker cost limit must be at least 1");

  std::vector<VnodeId> candidates;
  for (VnodeId m : g.matchmakers()) {
    const AsId a = g.owner(m);
    if (a != src_as && a != dst_as && !g.as(a).excluded) candidates.push_back(m);
  }
  if (candidates.empty()) throw ConstructionError("no usable matchmaker");

  std::string reason = "no attempt made";
  int draws = 0;
  for (int attempt = 1; attempt <= params.max_attempts && !candidates.empty(); ++attempt) {
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng);
    const VnodeId mm = candidates[pick];
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    const auto head_catalog = cache.catalog(src, mm);
    if (head_catalog->empty()) {
      reason = "matchmaker unreachable";
      continue;
    }
    for (int redraw = 0; redraw < std::max(1, params.heads_per_matchmaker); ++redraw) {
      ++draws;
      auto conn = try_construct(cache, src, dst, mm, *head_catalog, params, rng, reason);
      if (conn) {
        conn->attempts = attempt;
        conn->head_draws = draws;
        return std::move(*conn);
      }
    }
  }
  throw ConstructionError("construction failed: " + reason);
}

SimResult send_data(const AsGraph& g, const ConnectionHandle& h, Bytes payload,
                    std::size_t first_step) {
  Packet p;
  p.type = PacketType::Data;
  p.t = h.transit;
  p.n1 = h.n1_updated;
  p.payload = std::move(payload);
  return simulate(g, g.uplink(g.owner(h.source)), h.source, std::move(p), first_step);
}

SimResult send_response(const AsGraph& g, VnodeId dest_host, const Bytes& transit,
                        const Nonce& n1_updated, Bytes payload, std::size_t first_step) {
  Packet p;
  p.type = PacketType::Response;
  p.t = transit;
  p.n1 = n1_updated;
  p.offset = static_cast<std::uint16_t>(transit.size());
  p.payload = std::move(payload);
  return simulate(g, g.uplink(g.owner(dest_host)), dest_host, std::move(p), first_step);
}

}  // namespace dovetail
