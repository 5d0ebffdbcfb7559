#pragma once

#include <string>
#include <vector>

#include "dovetail/topology.hpp"

namespace dovetail::testing {

//        1
//       / \
//      2 - 3      (2 and 3 peer)
//     / \   \
//    4   6   5    stubs 4, 5, 6
inline std::vector<AsRelationship> diamond_relationships() {
  using R = Relationship;
  return {{1, 2, R::ProviderCustomer}, {1, 3, R::ProviderCustomer}, {2, 3, R::Peer},
          {2, 4, R::ProviderCustomer}, {3, 5, R::ProviderCustomer}, {2, 6, R::ProviderCustomer}};
}

inline AsGraph diamond(double loose_fraction = 0.0, double mm_fraction = 1.0) {
  return attach_hosts_and_matchmakers(build_network(diamond_relationships(), loose_fraction, 1),
                                      mm_fraction, 2);
}

}  // namespace dovetail::testing

namespace dovetail::testing {

// Diamond plus stub 7 homed on both 2 and 3.
inline std::vector<AsRelationship> diamond7_relationships() {
  auto rels = diamond_relationships();
  rels.push_back({2, 7, Relationship::ProviderCustomer});
  rels.push_back({3, 7, Relationship::ProviderCustomer});
  return rels;
}

//    1 ===== 2        (1 and 2 peer)
//   / \     / \
//  3   4   5   6      3 and 5 peer
//   \ /    |
//    7     8          7 homed on 3 and 4
inline std::vector<AsRelationship> twin_core_relationships() {
  using R = Relationship;
  return {{1, 2, R::Peer},
          {1, 3, R::ProviderCustomer},
          {1, 4, R::ProviderCustomer},
          {2, 5, R::ProviderCustomer},
          {2, 6, R::ProviderCustomer},
          {3, 5, R::Peer},
          {3, 7, R::ProviderCustomer},
          {4, 7, R::ProviderCustomer},
          {5, 8, R::ProviderCustomer}};
}

struct NamedToy {
  std::string name;
  AsGraph graph;
};

/// Every toy of at most eight ASes used by the anonymity oracles.
inline std::vector<NamedToy> small_toys() {
  std::vector<NamedToy> out;
  auto add = [&](std::string name, const std::vector<AsRelationship>& rels, double loose) {
    out.push_back({std::move(name),
                   attach_hosts_and_matchmakers(build_network(rels, loose, 1), 0.0, 2)});
  };
  add("diamond", diamond_relationships(), 0.0);
  add("diamond-loose", diamond_relationships(), 1.0);
  add("diamond7", diamond7_relationships(), 0.0);
  add("diamond7-loose", diamond7_relationships(), 1.0);
  add("twin-core", twin_core_relationships(), 0.0);
  add("twin-core-loose", twin_core_relationships(), 1.0);
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
    add("synthetic8-" + std::to_string(seed), generate_synthetic(8, 0.5, seed), 0.5);
  return out;
}

}  // namespace dovetail::testing
