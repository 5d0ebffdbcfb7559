#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dovetail/anonymity.hpp"
#include "dovetail/pathsel.hpp"
#include "dovetail/protocol.hpp"
#include "dovetail/routing.hpp"
#include "dovetail/topology.hpp"

namespace dovetail {

struct ExperimentConfig {
  // Topology: a CAIDA file, a saved snapshot, or a synthetic graph.
  std::string caida_file;
  std::string snapshot_file;
  std::size_t synth_ases = 500;
  double synth_peer_fraction = 0.6;
  double sample_fraction = 1.0;
  double loose_fraction = kDefaultLooseFraction;
  double matchmaker_fraction = 0.1;

  std::string head_alg = "exponential6";
  std::string tail_alg = "exponential4";
  double decay = kDefaultDecay;
  int mm_cost_limit = 2;
  std::size_t n_tail_options = 8;
  int max_attempts = 3;
  int heads_per_matchmaker = 4;
  std::vector<std::string> segment_algorithms{"shortest", "uniform", "exponential", "exponential4"};

  int max_cost = 13;
  std::size_t per_cost_cap = 20000;
  std::uint64_t expansion_budget = 20'000'000;
  double extra_pathlets = kDefaultExtraPathletFraction;

  std::size_t pairs = 100;
  std::uint64_t seed = 1;
  std::string out = "out";
  unsigned threads = 0;  ///< 0: hardware concurrency
  bool exact_entropy = false;
  bool return_cost_attacker = false;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
  /// Flat `key = value` text that parses back to the same config.
  std::string to_text() const;

  ProtocolParams protocol() const;
  EnumerationLimits limits() const;
};

/// Applies `key = value` lines (blank lines and `#` comments ignored).
/// Unknown keys and malformed values raise ConfigError.
void apply_config_text(ExperimentConfig& cfg, std::string_view text);
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig load_config_file(const std::string& path);

/// Keeps the ASes found by breadth-first search from the best-connected AS
/// until `fraction` of them are kept, with their induced relationships.
std::vector<AsRelationship> sample_relationships(const std::vector<AsRelationship>& rels,
                                                 double fraction);

/// Network with hosts and matchmakers, per the topology fields.
AsGraph make_topology(const ExperimentConfig& cfg);

/// Runs fn(0..n-1) on `threads` workers; rethrows the first exception.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

struct SegmentRow {
  std::size_t pair = 0;
  AsId src_as = 0, dst_as = 0;
  std::string algorithm;
  int cost = 0;
  int shortest_cost = 0;
  std::size_t source_set = 0;
  double effective_bits = 0;
};

struct SegmentResult {
  std::vector<SegmentRow> rows;
  std::vector<std::pair<std::size_t, std::string>> skipped;
};

struct CompleteTrial {
  std::size_t trial = 0;
  AsId src_as = 0, dst_as = 0;
  bool ok = false;
  std::string failure;
  AsId matchmaker_as = 0, dovetail_as = 0;
  int head_cost = 0, dovetail_pos = 0, total_cost = 0, shortest_cost = 0;
  int attempts = 0;
  bool reuse = false;
  AnonymityReport report;
};

struct CompleteResult {
  std::vector<CompleteTrial> trials;
};

struct ResourceResult {
  double mean_perspective_pathlets = 0;
  double mean_perspective_bytes = 0;
  double mean_header_bytes = 0;
  double mean_closed_form_header = 0;
  double payload_efficiency = 0;  ///< 1 - header / 1500
  std::size_t connections = 0;
  std::size_t failures = 0;
};

/// Topology-wide context shared by experiments.
struct ExperimentContext {
  explicit ExperimentContext(const ExperimentConfig& c);
  ExperimentConfig cfg;
  AsGraph graph;
  RoutingCache cache;
  ShortestCostTable table;
  std::vector<VnodeId> hosts;  ///< eligible hosts, one per AS
};

SegmentResult exp_segment(ExperimentContext& ctx);
CompleteResult exp_complete(ExperimentContext& ctx);
ResourceResult exp_resources(ExperimentContext& ctx);

/// Writes CSV, gnuplot .dat files, config echo and manifest into cfg.out.
void write_segment_outputs(const ExperimentContext& ctx, const SegmentResult& r);
void write_complete_outputs(const ExperimentContext& ctx, const CompleteResult& r);
void write_resource_outputs(const ExperimentContext& ctx, const ResourceResult& r);

/// Single connection walkthrough; src/dst default to a seeded random pair.
/// Returns false when construction fails.
bool run_connect(ExperimentContext& ctx, std::optional<VnodeId> src, std::optional<VnodeId> dst,
                 bool verbose, std::ostream& os);

inline constexpr double kMtu = 1500.0;

}  // namespace dovetail
