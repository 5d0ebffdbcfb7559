#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dovetail/pathsel.hpp"
#include "dovetail/routing.hpp"
#include "dovetail/topology.hpp"
#include "dovetail/wire.hpp"

namespace dovetail {

struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Outcome of handing a packet to one vnode.
struct Action {
  enum class Kind : std::uint8_t { Deliver, Send, Drop };
  Kind kind = Kind::Drop;
  VnodeId next = kNoVnode;
  std::string reason;

  static Action deliver() { return {Kind::Deliver, kNoVnode, {}}; }
  static Action send(VnodeId v) { return {Kind::Send, v, {}}; }
  static Action drop(std::string why) { return {Kind::Drop, kNoVnode, std::move(why)}; }
};

/// True when `at` receives from a vnode of another AS, or from a host
/// (including the host's own uplink handoff). `from == kNoVnode` counts as
/// a host handoff.
bool entered_new_as(const AsGraph& g, VnodeId from, VnodeId at);

// Per-vnode processing. Each mutates `p` in place and reports what to do next.
Action process_plain(const AsGraph& g, VnodeId at, Packet& p);
Action process_construction(const AsGraph& g, VnodeId at, VnodeId from, Packet& p);
Action process_construction_return(const AsGraph& g, VnodeId at, VnodeId from, Packet& p);
Action process_data(const AsGraph& g, VnodeId at, VnodeId from, Packet& p);
Action process_response(const AsGraph& g, VnodeId at, VnodeId from, Packet& p);
/// Dispatches on the packet type.
Action process_packet(const AsGraph& g, VnodeId at, VnodeId from, Packet& p);

/// Shortest FID sequence from `start` to `target` that stays inside
/// start's AS until the last hop. Only single-hop entries are used.
std::optional<std::vector<Fid>> internal_path(const AsGraph& g, VnodeId start, VnodeId target);

/// Vnode of `as` where reverse-direction traffic enters, given the vnode
/// the forward direction exits to.
VnodeId reverse_start(const AsGraph& g, AsId as, VnodeId exit_target);

/// Vnode just outside `as` (or the host) that reverse traffic must reach,
/// given the link index recorded on entry.
VnodeId reverse_target(const AsGraph& g, AsId as, std::uint8_t link);

/// Vnode where forward traffic entered `as` over link index `link`.
VnodeId forward_ingress(const AsGraph& g, AsId as, std::uint8_t link);

struct UnencryptedWalk {
  std::vector<Fid> fids;          ///< FIDs of U consumed inside the AS
  VnodeId exit_target = kNoVnode; ///< first vnode outside the AS, or a host
};

/// Follows U from `at` (expanding composite entries) until it leaves the
/// AS or reaches a host. nullopt when U runs out or names a missing entry.
std::optional<UnencryptedWalk> walk_unencrypted(const AsGraph& g, VnodeId at, ByteView u);

// ---------------------------------------------------------------- simulator

struct TraceEvent {
  std::size_t step = 0;
  AsId as = 0;
  VnodeId vnode = kNoVnode;
  PacketType type = PacketType::Plain;
  std::uint16_t offset = 0;
  std::size_t u_len = 0;
  std::size_t t_len = 0;
  std::size_t j_len = 0;
};

std::string format_trace_event(const TraceEvent& e);

struct SimResult {
  Action outcome;
  VnodeId at = kNoVnode;  ///< vnode that delivered or dropped
  Packet packet;          ///< packet state at that point
  std::vector<TraceEvent> trace;

  bool delivered() const { return outcome.kind == Action::Kind::Deliver; }
};

/// Runs `packet` from `start` (received from `from`) until it is delivered
/// or dropped, or `max_steps` vnodes have processed it.
SimResult simulate(const AsGraph& g, VnodeId start, VnodeId from, Packet packet,
                   std::size_t first_step = 0, std::size_t max_steps = 4096);

/// AS sequence of a trace with consecutive repeats collapsed.
std::vector<AsId> as_path(const std::vector<TraceEvent>& trace);

// ---------------------------------------------------------------- end hosts

struct TailOption {
  Route route;       ///< matchmaker host to destination host
  int cost_md = 0;   ///< AS changes from matchmaker AS to dovetail AS
  int cost_total = 0;

  int post_dovetail_cost() const { return cost_total - cost_md; }
  friend bool operator==(const TailOption&, const TailOption&) = default;
};

struct ProtocolParams {
  SelectionAlgorithm head_alg{AlgorithmKind::Exponential6};
  SelectionAlgorithm tail_alg{AlgorithmKind::Exponential4};
  int mm_cost_limit = 2;           ///< L
  std::size_t n_tail_options = 8;
  int max_attempts = 3;            ///< matchmakers tried before giving up
  int heads_per_matchmaker = 4;    ///< head redraws with one matchmaker
};

/// Builds the Return packet from the Construct packet reaching the destination.
Packet destination_return(const Packet& construct);

/// Up to n_tail_options distinct tails from the matchmaker's view, each
/// reaching the dovetail within the cost limit. Costs are drawn with the
/// tail algorithm over the post-dovetail cost, without replacement.
std::vector<TailOption> matchmaker_tail_options(RoutingCache& cache, VnodeId matchmaker,
                                                const ContinuationRequest& req,
                                                const ProtocolParams& params, Rng& rng);

/// Continues construction over the chosen tail: U = tail FIDs after the
/// matchmaker's uplink hop, empty payload, N2 = H^(L - cost_md)(prior_n2).
/// Throws ConstructionError if `chosen` was not offered.
Packet matchmaker_continue(const Packet& arrived, const ContinuationRequest& req,
                           std::span<const TailOption> offered, const TailOption& chosen,
                           int mm_cost_limit);

/// Dovetail position on the head: among positions i with L < i < n and
/// n - i <= L, the smallest one whose AS the head enters from a customer
/// (so any tail exit is a legal splice); otherwise n - L. nullopt when
/// n - L <= L.
std::optional<int> choose_dovetail(const AsGraph& g, const Route& head, int mm_cost_limit);

/// Whether the tail shares an AS with the head, ignoring the dovetail and
/// matchmaker ASes that every tail shares.
bool tail_reuses_head(const TailOption& tail, std::span<const AsId> head_as_set, AsId dovetail_as,
                      AsId matchmaker_as);

/// Source-side validity: the splice at the dovetail is a legal internal
/// path both ways, the post-dovetail part avoids the head prefix, and no
/// earlier AS on the tail would see an aligned N2 for its own head entry.
bool tail_is_spliceable(const AsGraph& g, const Route& head, int dovetail_pos,
                        const TailOption& tail);

struct TailChoice {
  std::size_t index = 0;
  bool reuse = false;
};

/// Uniform among reuse-free options if any exist, else uniform among all
/// with reuse set. Throws ArgumentError on an empty list.
TailChoice source_select_tail(std::span<const TailOption> options,
                              std::span<const AsId> head_as_set, AsId dovetail_as,
                              AsId matchmaker_as, Rng& rng);

struct ConnectionHandle {
  VnodeId source = kNoVnode;
  VnodeId destination = kNoVnode;
  Bytes transit;
  Nonce n1_updated{};
  Nonce original_n1{};
  /// Ground truth from the simulator; nodes never see it.
  std::vector<AsId> path_trace;
};

struct Connection {
  ConnectionHandle handle;
  VnodeId matchmaker = kNoVnode;
  Route head;
  int dovetail_pos = 0;
  AsId dovetail_as = 0;
  std::vector<TailOption> offered;
  std::vector<TailOption> valid;
  TailOption tail;
  bool reuse = false;
  int attempts = 0;       ///< matchmakers tried
  int head_draws = 0;     ///< heads drawn in total
  std::vector<TraceEvent> trace;  ///< construction then return events
};

/// Full construction: matchmaker, head, continuation request, tail options,
/// selection, join at the dovetail, and return to the source.
/// Throws ConstructionError once max_attempts matchmakers have failed.
Connection build_connection(RoutingCache& cache, VnodeId src, VnodeId dst,
                            const ProtocolParams& params, Rng& rng);

SimResult send_data(const AsGraph& g, const ConnectionHandle& h, Bytes payload,
                    std::size_t first_step = 0);
/// `transit` is the T segment the destination received on Data.
SimResult send_response(const AsGraph& g, VnodeId dest_host, const Bytes& transit,
                        const Nonce& n1_updated, Bytes payload, std::size_t first_step = 0);

}  // namespace dovetail
