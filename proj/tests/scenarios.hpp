#pragma once

#include <algorithm>
#include <string>

#include "dovetail/protocol.hpp"
#include "reference_interpreter.hpp"

namespace dovetail::testing {

struct LockstepResult {
  bool equal = true;
  std::string mismatch;
  std::size_t steps = 0;
  bool delivered = false;
  VnodeId at = kNoVnode;
  Packet packet;
  std::size_t join_truncations = 0;  ///< steps at which J shrank
};

/// Runs the library and the reference interpreter side by side, comparing
/// the action and full packet state after every vnode.
inline LockstepResult run_lockstep(const AsGraph& g, VnodeId start, VnodeId from, Packet packet) {
  LockstepResult r;
  Packet ref = packet;
  VnodeId at = start, prev = from;
  for (std::size_t i = 0; i < 4096; ++i) {
    ++r.steps;
    const std::size_t j_before = packet.j.size();
    const bool new_as = !g.is_host(at) && entered_new_as(g, prev, at) && !packet.u.empty();
    const Action a = process_packet(g, at, prev, packet);
    const reference::Step s = reference::step(g, at, prev, ref);
    const bool same_kind = (a.kind == Action::Kind::Deliver && s.kind == reference::Step::Deliver) ||
                           (a.kind == Action::Kind::Drop && s.kind == reference::Step::Drop) ||
                           (a.kind == Action::Kind::Send && s.kind == reference::Step::Send && a.next == s.next);
    if (!same_kind || !(packet == ref)) {
      r.equal = false;
      r.mismatch = "step " + std::to_string(i) + " at vnode " + std::to_string(at) +
                   (same_kind ? ": packet state differs" : ": action differs (" + a.reason + ")");
      return r;
    }
    if (packet.type == PacketType::Construct && new_as && a.kind == Action::Kind::Send &&
        packet.j.size() <= j_before)
      ++r.join_truncations;
    if (a.kind != Action::Kind::Send) {
      r.delivered = a.kind == Action::Kind::Deliver;
      r.at = at;
      r.packet = packet;
      return r;
    }
    prev = at;
    at = a.next;
  }
  r.equal = false;
  r.mismatch = "step limit";
  return r;
}

struct ScenarioOutcome {
  bool built = false;          ///< a scenario with the requested join was set up
  bool equal = true;
  std::string mismatch;
  int join_position = 0;
  bool join_expected = false;
  std::size_t truncations = 0;
  std::size_t phases = 0;      ///< phases compared
  bool round_trip = false;     ///< data and response delivered
};

inline Nonce nonce_from(Rng& rng) {
  Nonce n{};
  for (auto& b : n) b = static_cast<std::uint8_t>(rng());
  return n;
}

/// One randomized lifecycle: head Construct from a host to a matchmaker, a
/// tail that revisits the head AS at `join_pos`, the return, then Data and
/// Response. Each phase is compared in lockstep and feeds the next.
inline ScenarioOutcome run_scenario(RoutingCache& cache, int join_pos, bool matching_n2, Rng& rng) {
  const AsGraph& g = cache.graph();
  ScenarioOutcome out;
  out.join_position = join_pos;
  const auto hosts = g.eligible_hosts();
  const auto mms = g.matchmakers();
  for (int attempt = 0; attempt < 200 && !out.built; ++attempt) {
    const VnodeId s = hosts[rng() % hosts.size()];
    const VnodeId m = mms[rng() % mms.size()];
    const VnodeId d = hosts[rng() % hosts.size()];
    if (g.owner(s) == g.owner(m) || g.owner(d) == g.owner(m) || g.owner(s) == g.owner(d)) continue;
    const auto head_cat = cache.catalog(s, m);
    std::vector<const Route*> heads;
    for (const auto& [cost, routes] : head_cat->by_cost)
      if (cost > join_pos)
        for (const auto& r : routes) heads.push_back(&r);
    if (heads.empty()) continue;
    const Route& head = *heads[rng() % heads.size()];
    const AsId x = head.as_sequence[static_cast<std::size_t>(join_pos)];
    if (x == g.owner(d)) continue;
    const RouteCatalog tails = cache.catalog_via(m, d, {x, join_pos});
    std::vector<const Route*> opts;
    for (const auto& [cost, routes] : tails.by_cost)
      for (const auto& r : routes) opts.push_back(&r);
    if (opts.empty()) continue;
    const Route& tail = *opts[rng() % opts.size()];
    const int c = static_cast<int>(std::find(tail.as_sequence.begin(), tail.as_sequence.end(), x) -
                                   tail.as_sequence.begin());
    out.built = true;
    out.join_expected = matching_n2;

    const Nonce n1 = nonce_from(rng), n2 = nonce_from(rng);
    Packet p;
    p.type = PacketType::Construct;
    p.u.assign(head.fids.begin() + 1, head.fids.end());
    p.n1 = n1;
    p.n2 = n2;
    p.payload = Bytes(kContinuationBlobSize, 0x5a);
    auto phase = run_lockstep(g, head.vnodes[1], s, p);
    ++out.phases;
    if (!phase.equal) {
      out.equal = false;
      out.mismatch = "head: " + phase.mismatch;
      return out;
    }
    if (!phase.delivered) return out;

    Packet cont = phase.packet;
    cont.u.assign(tail.fids.begin() + 1, tail.fids.end());
    cont.payload.clear();
    cont.n2 = matching_n2 ? chain_hash(n2, join_pos - c) : nonce_from(rng);
    phase = run_lockstep(g, tail.vnodes[1], m, cont);
    ++out.phases;
    out.truncations = phase.join_truncations;
    if (!phase.equal) {
      out.equal = false;
      out.mismatch = "tail: " + phase.mismatch;
      return out;
    }
    if (!phase.delivered || phase.at != d) return out;

    const Packet ret = destination_return(phase.packet);
    phase = run_lockstep(g, g.uplink(g.owner(d)), d, ret);
    ++out.phases;
    if (!phase.equal) {
      out.equal = false;
      out.mismatch = "return: " + phase.mismatch;
      return out;
    }
    if (!phase.delivered || phase.at != s) return out;

    Packet data;
    data.type = PacketType::Data;
    data.t = phase.packet.t;
    data.n1 = phase.packet.n1;
    data.payload = {1, 2, 3};
    const auto dr = run_lockstep(g, g.uplink(g.owner(s)), s, data);
    ++out.phases;
    if (!dr.equal) {
      out.equal = false;
      out.mismatch = "data: " + dr.mismatch;
      return out;
    }
    Packet resp;
    resp.type = PacketType::Response;
    resp.t = phase.packet.t;
    resp.n1 = phase.packet.n1;
    resp.offset = static_cast<std::uint16_t>(resp.t.size());
    resp.payload = {4, 5};
    const auto rr = run_lockstep(g, g.uplink(g.owner(d)), d, resp);
    ++out.phases;
    if (!rr.equal) {
      out.equal = false;
      out.mismatch = "response: " + rr.mismatch;
      return out;
    }
    out.round_trip = dr.delivered && dr.at == d && rr.delivered && rr.at == s;
  }
  return out;
}

}  // namespace dovetail::testing
