#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "dovetail/topology.hpp"
#include "toy_graphs.hpp"

using namespace dovetail;
using namespace dovetail::testing;

TEST_CASE("load_caida parses, merges duplicates and maps siblings to peers") {
  const auto rels = load_caida("# comment\n1|2|-1\n\n2|3|0\n3|4|2\n1|2|-1\n3|2|0\n  5|1|-1  \n");
  REQUIRE(rels.size() == 4);
  CHECK(rels[0] == AsRelationship{1, 2, Relationship::ProviderCustomer});
  CHECK(rels[1] == AsRelationship{2, 3, Relationship::Peer});
  CHECK(rels[2] == AsRelationship{3, 4, Relationship::Peer});
  CHECK(rels[3] == AsRelationship{5, 1, Relationship::ProviderCustomer});
}

TEST_CASE("load_caida errors") {
  CHECK_THROWS_AS(load_caida("1|2\n"), ParseError);
  CHECK_THROWS_AS(load_caida("1|2|5\n"), ParseError);
  CHECK_THROWS_AS(load_caida("1|x|0\n"), ParseError);
  CHECK_THROWS_AS(load_caida("1|2|-1\n2|1|-1\n"), DataError);
  CHECK_THROWS_AS(load_caida("1|2|-1\n1|2|0\n"), DataError);
  CHECK_THROWS_AS(load_caida("7|7|0\n"), DataError);
  try {
    load_caida("1|2|0\n# c\n1|2|9\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("vnode roles and exits on the diamond") {
  const AsGraph g = build_network(diamond_relationships(), 0.0, 1);
  const auto& a2 = g.as(2);
  REQUIRE(a2.vnodes.size() == 2);
  CHECK(g.vnode(a2.vnodes[0]).role == VnodeRole::FromCustomer);
  CHECK(g.vnode(a2.vnodes[1]).role == VnodeRole::FromProviderOrPeer);
  // neighbors of 2 sorted: 1 (provider), 3 (peer), 4, 6 (customers)
  REQUIRE(a2.neighbors.size() == 4);
  CHECK(g.link_index(2, 1) == 0);
  CHECK(g.link_index(2, 6) == 3);
  CHECK(g.link_index(2, 5) == -1);
  CHECK(g.vnode(a2.vnodes[0]).table.size() == 4);  // FC exits anywhere
  CHECK(g.vnode(a2.vnodes[1]).table.size() == 2);  // FPP to customers only
  for (const auto& e : g.vnode(a2.vnodes[1]).table) CHECK(g.owner(e.link) != 1);
  CHECK(g.ingress_vnode(2, 4) == a2.vnodes[0]);
  CHECK(g.ingress_vnode(2, 1) == a2.vnodes[1]);
  CHECK(g.ingress_vnode(2, 3) == a2.vnodes[1]);
  CHECK(g.ingress_vnode(2, 5) == kNoVnode);
  CHECK(g.as(4).is_stub);
  CHECK_FALSE(g.as(2).is_stub);
  // FIDs are table indices.
  for (const auto& v : g.vnodes())
    for (std::size_t i = 0; i < v.table.size(); ++i) CHECK(v.table[i].fid == i);
}

TEST_CASE("loose ASes get a peer-exchange vnode") {
  const AsGraph g = build_network(diamond_relationships(), 1.0, 1);
  const auto& a2 = g.as(2);
  REQUIRE(a2.vnodes.size() == 3);
  const auto& px = g.vnode(a2.vnodes[2]);
  CHECK(px.role == VnodeRole::PeerExchange);
  CHECK(g.ingress_vnode(2, 3) == a2.vnodes[2]);
  std::set<AsId> exits;
  for (const auto& e : px.table) exits.insert(g.owner(e.link));
  CHECK(exits == std::set<AsId>{3, 4, 6});
}

TEST_CASE("hosts attach to stubs") {
  const AsGraph g = diamond(0.0, 0.5);
  const auto hosts = g.hosts();
  CHECK(hosts.size() == 3);
  for (VnodeId h : hosts) {
    const auto& v = g.vnode(h);
    const auto& a = g.as(v.owner);
    CHECK(a.is_stub);
    REQUIRE(v.table.size() == 1);
    CHECK(v.table[0].link == g.uplink(a.id));
    for (VnodeId r : a.vnodes) CHECK(g.vnode(r).table.back().link == h);
  }
  CHECK(g.matchmakers().size() == 2);  // round(0.5 * 3)
  for (VnodeId m : g.matchmakers()) {
    CHECK(g.vnode(m).role == VnodeRole::Matchmaker);
    CHECK(g.matchmaker_keys(m) != nullptr);
  }
  CHECK_THROWS_AS(attach_hosts_and_matchmakers(g, 0.5, 1), ArgumentError);
}

TEST_CASE("unreachable components are excluded") {
  auto rels = diamond_relationships();
  rels.push_back({20, 21, Relationship::ProviderCustomer});
  const AsGraph g = build_network(rels, 0.0, 1);
  CHECK(g.as(20).excluded);
  CHECK(g.as(21).excluded);
  CHECK_FALSE(g.as(4).excluded);
  const AsGraph h = attach_hosts_and_matchmakers(g, 1.0, 1);
  CHECK(h.hosts().size() == 4);
  CHECK(h.eligible_hosts().size() == 3);
}

TEST_CASE("degree above the FID limit is a data error") {
  std::vector<AsRelationship> rels;
  for (AsId c = 2; c < 2 + kMaxNeighbors + 1; ++c) rels.push_back({1, c, Relationship::ProviderCustomer});
  CHECK_THROWS_AS(build_network(rels), DataError);
  rels.pop_back();
  CHECK_NOTHROW(build_network(rels));
  CHECK_THROWS_AS(build_network({}), DataError);
  CHECK_THROWS_AS(build_network(diamond_relationships(), 1.5), ArgumentError);
}

TEST_CASE("synthetic generator") {
  const auto rels = generate_synthetic(300, 0.5, 9);
  CHECK(rels == generate_synthetic(300, 0.5, 9));
  CHECK(rels != generate_synthetic(300, 0.5, 10));
  std::set<AsId> ids;
  std::size_t peers = 0;
  std::set<std::pair<AsId, AsId>> pairs;
  for (const auto& r : rels) {
    ids.insert(r.a);
    ids.insert(r.b);
    CHECK(r.a != r.b);
    CHECK(pairs.insert(std::minmax(r.a, r.b)).second);
    if (r.kind == Relationship::ProviderCustomer) CHECK(r.a < r.b);
    else ++peers;
  }
  CHECK(ids.size() == 300);
  CHECK(*ids.begin() == 1);
  CHECK(*ids.rbegin() == 300);
  CHECK(peers == 150);
  CHECK_THROWS_AS(generate_synthetic(2, 0.5, 1), ArgumentError);
  CHECK_THROWS_AS(generate_synthetic(10, 1.5, 1), ArgumentError);
}

// Property: every walk along forwarding entries is valley-free. Strict ASes
// accept at most one peer hop; consecutive peer hops need a loose AS between.
TEST_CASE("forwarding walks are valley-free") {
  const AsGraph g =
      attach_hosts_and_matchmakers(build_network(generate_synthetic(400, 0.6, 3), 0.3, 4), 0.1, 5);
  std::mt19937_64 rng(8);
  const auto& vs = g.vnodes();
  for (int walk = 0; walk < 3000; ++walk) {
    VnodeId at = static_cast<VnodeId>(rng() % vs.size());
    if (g.is_host(at)) continue;
    enum Phase { Up, Peered, Down } phase = Up;
    for (int step = 0; step < 30; ++step) {
      const auto& t = g.vnode(at).table;
      std::vector<const ForwardingEntry*> out;
      for (const auto& e : t)
        if (!g.is_host(e.link)) out.push_back(&e);
      if (out.empty()) break;
      const auto* e = out[rng() % out.size()];
      const AsId from = g.owner(at), to = g.owner(e->link);
      const NeighborKind k = *g.relation(from, to);
      if (k == NeighborKind::Provider) {
        CHECK(phase == Up);
      } else if (k == NeighborKind::Peer) {
        CHECK(phase != Down);
        if (phase == Peered) CHECK(g.as(from).policy == Policy::LooseValleyFree);
        phase = Peered;
      } else {
        phase = Down;
      }
      CHECK(e->link == g.ingress_vnode(to, from));
      at = e->link;
    }
  }
}

TEST_CASE("snapshot round trip and topology hash") {
  const AsGraph g =
      attach_hosts_and_matchmakers(build_network(generate_synthetic(120, 0.6, 1), 0.2, 2), 0.2, 3);
  const Bytes snap = g.snapshot();
  const AsGraph h = AsGraph::from_snapshot(snap);
  CHECK(h.ases() == g.ases());
  CHECK(h.vnodes() == g.vnodes());
  REQUIRE(h.matchmaker_directory().size() == g.matchmaker_directory().size());
  for (std::size_t i = 0; i < h.matchmaker_directory().size(); ++i) {
    CHECK(h.matchmaker_directory()[i].vnode == g.matchmaker_directory()[i].vnode);
    CHECK(h.matchmaker_directory()[i].keys.pk == g.matchmaker_directory()[i].keys.pk);
  }
  CHECK(h.snapshot() == snap);
  CHECK(h.topology_hash() == g.topology_hash());
  const AsGraph other =
      attach_hosts_and_matchmakers(build_network(generate_synthetic(120, 0.6, 1), 0.2, 7), 0.2, 3);
  CHECK(other.topology_hash() != g.topology_hash());
  Bytes bad = snap;
  bad[0] ^= 1;
  CHECK_THROWS(AsGraph::from_snapshot(bad));
  CHECK_THROWS(AsGraph::from_snapshot(Bytes(snap.begin(), snap.begin() + snap.size() / 2)));
}
