#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dovetail/common.hpp"
#include "dovetail/crypto.hpp"

namespace dovetail {

enum class Relationship : std::uint8_t {
  ProviderCustomer,  ///< a provides transit for b
  Peer,
};

struct AsRelationship {
  AsId a = 0;
  AsId b = 0;
  Relationship kind = Relationship::Peer;

  friend bool operator==(const AsRelationship&, const AsRelationship&) = default;
};

enum class Policy : std::uint8_t { StrictValleyFree, LooseValleyFree };

enum class VnodeRole : std::uint8_t { FromCustomer, FromProviderOrPeer, PeerExchange, Host, Matchmaker };

/// How a neighbor relates to the AS holding the neighbor entry.
enum class NeighborKind : std::uint8_t { Customer, Provider, Peer };

struct ForwardingEntry {
  Fid fid = 0;
  VnodeId link = kNoVnode;
  /// FIDs prepended to U when this composite entry is used; empty for
  /// single-hop pathlets.
  std::vector<Fid> expansion;

  friend bool operator==(const ForwardingEntry&, const ForwardingEntry&) = default;
};

struct Vnode {
  VnodeId id = kNoVnode;
  AsId owner = 0;
  VnodeRole role = VnodeRole::FromCustomer;
  std::vector<ForwardingEntry> table;

  bool is_host() const { return role == VnodeRole::Host || role == VnodeRole::Matchmaker; }

  friend bool operator==(const Vnode&, const Vnode&) = default;
};

struct Neighbor {
  AsId id = 0;
  NeighborKind kind = NeighborKind::Peer;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Maximum number of FIDs in a padded internal path record.
inline constexpr std::size_t kInternalPathCapacity = 3;
/// Link index recorded for traffic that entered an AS from one of its hosts.
inline constexpr std::uint8_t kHostLink = 0xff;
/// Vnodes index at most 256 forwarding entries and links are one byte,
/// so a vnode can face at most 254 neighbor ASes plus the local host.
inline constexpr std::size_t kMaxNeighbors = 254;

struct AutonomousSystem {
  AsId id = 0;
  Policy policy = Policy::StrictValleyFree;
  /// Routing vnodes: [FromCustomer, FromProviderOrPeer(, PeerExchange)].
  std::vector<VnodeId> vnodes;
  std::vector<VnodeId> hosts;
  bool is_stub = false;
  bool excluded = false;
  SymKey key{};
  /// Bytes of one padded internal path record (count byte + FIDs).
  std::uint8_t m_a = 1 + kInternalPathCapacity;
  /// Sorted by neighbor id; the position is the link index li.
  std::vector<Neighbor> neighbors;

  /// Length of this AS's transit entry: len(id_A) + 2 m_A.
  std::size_t transit_entry_size() const { return 4 + 2 * std::size_t{m_a}; }

  friend bool operator==(const AutonomousSystem&, const AutonomousSystem&) = default;
};

struct MatchmakerKeys {
  VnodeId vnode = kNoVnode;
  KeyPair keys;
};

/// Immutable AS-level network: ASes, vnodes with forwarding tables, per-AS
/// keys, and the matchmaker key directory.
class AsGraph {
 public:
  AsGraph() = default;

  const std::vector<AutonomousSystem>& ases() const { return ases_; }
  const std::vector<Vnode>& vnodes() const { return vnodes_; }
  const std::vector<MatchmakerKeys>& matchmaker_directory() const { return matchmakers_; }

  const AutonomousSystem* find_as(AsId id) const;
  const AutonomousSystem& as(AsId id) const;
  std::size_t as_index(AsId id) const;
  std::size_t as_count() const { return ases_.size(); }

  const Vnode& vnode(VnodeId id) const;
  bool has_vnode(VnodeId id) const { return id < vnodes_.size(); }
  bool is_host(VnodeId id) const { return vnode(id).is_host(); }
  AsId owner(VnodeId id) const { return vnode(id).owner; }

  std::vector<VnodeId> hosts() const;
  /// Hosts in non-excluded ASes.
  std::vector<VnodeId> eligible_hosts() const;
  std::vector<VnodeId> matchmakers() const;
  const KeyPair* matchmaker_keys(VnodeId id) const;

  /// Kind of `neighbor` as seen from `at`, if adjacent.
  std::optional<NeighborKind> relation(AsId at, AsId neighbor) const;
  /// Link index li of `neighbor` at `at`, or -1 if not adjacent.
  int link_index(AsId at, AsId neighbor) const;
  /// Vnode of `at` that receives traffic arriving from `neighbor`.
  VnodeId ingress_vnode(AsId at, AsId neighbor) const;
  /// Vnode that receives traffic injected by the AS's own hosts.
  VnodeId uplink(AsId at) const;
  /// Number of routing vnodes per policy.
  static std::size_t routing_vnode_count(Policy p) { return p == Policy::LooseValleyFree ? 3 : 2; }

  std::size_t pathlet_count() const;

  /// Versioned binary snapshot; from_snapshot(snapshot()) reproduces the graph.
  Bytes snapshot() const;
  static AsGraph from_snapshot(ByteView bytes);
  /// Hex digest of the snapshot, used to key caches and label outputs.
  std::string topology_hash() const;

  friend AsGraph build_network(const std::vector<AsRelationship>&, double, std::uint64_t);
  friend AsGraph attach_hosts_and_matchmakers(const AsGraph&, double, std::uint64_t);
  friend class GraphEditor;

 private:
  void reindex();

  std::vector<AutonomousSystem> ases_;
  std::unordered_map<AsId, std::size_t> index_;
  std::vector<Vnode> vnodes_;
  std::vector<MatchmakerKeys> matchmakers_;
};

/// Parses CAIDA serial-1 relationship text (`a|b|code`, `#` comments).
/// Siblings (code 2) become peers; identical duplicates are dropped and
/// conflicting duplicates raise DataError.
std::vector<AsRelationship> load_caida(std::string_view text);

/// Preferential-attachment AS graph: AS ids 1..n, providers always have a
/// smaller id than their customers, plus round(peer_fraction * n) peer links.
std::vector<AsRelationship> generate_synthetic(std::size_t n_ases, double peer_fraction,
                                               std::uint64_t seed);

inline constexpr double kDefaultLooseFraction = 0.1;

AsGraph build_network(const std::vector<AsRelationship>& rels,
                      double loose_fraction = kDefaultLooseFraction, std::uint64_t seed = 1);

AsGraph attach_hosts_and_matchmakers(const AsGraph& graph, double matchmaker_fraction,
                                     std::uint64_t seed);

std::string_view to_string(VnodeRole role);
std::string_view to_string(Policy policy);

/// Test and tool hook for hand-built graphs (toy tables with composite
/// pathlets, relabelled ids).
class GraphEditor {
 public:
  explicit GraphEditor(AsGraph& g) : g_(g) {}
  std::vector<AutonomousSystem>& ases() { return g_.ases_; }
  std::vector<Vnode>& vnodes() { return g_.vnodes_; }
  std::vector<MatchmakerKeys>& matchmakers() { return g_.matchmakers_; }
  void reindex() { g_.reindex(); }

 private:
  AsGraph& g_;
};

}  // namespace dovetail
