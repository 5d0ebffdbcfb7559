#include "dovetail/anonymity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace dovetail {

ShortestCostTable::ShortestCostTable(const AsGraph& g) {
  for (VnodeId h : g.eligible_hosts()) {
    const AsId a = g.owner(h);
    if (row_.emplace(a, host_ases_.size()).second) host_ases_.push_back(a);
  }
  std::sort(host_ases_.begin(), host_ases_.end());
  for (std::size_t k = 0; k < host_ases_.size(); ++k) row_[host_ases_[k]] = k;
  for (std::size_t k = 0; k < g.as_count(); ++k) col_[g.ases()[k].id] = k;

  const std::size_t nv = g.vnodes().size(), na = g.as_count();
  dist_.assign(host_ases_.size() * na, static_cast<std::int16_t>(kUnreachable));
  constexpr int kInf = std::numeric_limits<int>::max() / 2;
  std::vector<int> d(nv);
  std::vector<std::size_t> as_of(nv);
  for (const auto& v : g.vnodes()) as_of[v.id] = g.as_index(v.owner);
  for (std::size_t r = 0; r < host_ases_.size(); ++r) {
    const VnodeId src = g.as(host_ases_[r]).hosts.front();
    std::fill(d.begin(), d.end(), kInf);
    std::deque<VnodeId> q{src};
    d[src] = 0;
    while (!q.empty()) {
      const VnodeId u = q.front();
      q.pop_front();
      if (u != src && g.is_host(u)) continue;
      for (const auto& e : g.vnode(u).table) {
        const int w = as_of[e.link] != as_of[u] ? 1 : 0;
        if (d[u] + w < d[e.link]) {
          d[e.link] = d[u] + w;
          w == 0 ? q.push_front(e.link) : q.push_back(e.link);
        }
      }
    }
    auto* row = &dist_[r * na];
    for (VnodeId v = 0; v < nv; ++v) {
      if (d[v] == kInf) continue;
      auto& cell = row[as_of[v]];
      if (cell == kUnreachable || d[v] < cell) cell = static_cast<std::int16_t>(d[v]);
    }
  }
}

int ShortestCostTable::cost(AsId h, AsId x) const {
  const auto r = row_.find(h);
  const auto c = col_.find(x);
  if (r == row_.end() || c == col_.end()) return kUnreachable;
  return dist_[r->second * col_.size() + c->second];
}

std::vector<AsId> ShortestCostTable::set(int y, AsId x) const {
  std::vector<AsId> out;
  for (AsId h : host_ases_)
    if (cost(h, x) == y) out.push_back(h);
  return out;
}

std::size_t vnode_index_of_position(const AsGraph& g, const Route& route, int pos) {
  int seen = 0;
  for (std::size_t j = 1; j < route.vnodes.size(); ++j) {
    if (g.owner(route.vnodes[j]) != g.owner(route.vnodes[j - 1]) && ++seen == pos) return j;
  }
  return pos == 0 ? 0 : route.vnodes.size();
}

VantageObservation observe(const AsGraph& g, const Route& route, int pos, SegmentRole role) {
  if (pos < 1 || pos > route.cost) throw ArgumentError("observation position outside the route");
  VantageObservation o;
  o.role = role;
  o.source_cost = pos;
  o.total_cost = route.cost;
  o.attacker = route.as_sequence[static_cast<std::size_t>(pos)];
  o.predecessor = route.as_sequence[static_cast<std::size_t>(pos - 1)];
  o.suffix.assign(route.as_sequence.begin() + pos, route.as_sequence.end());
  const std::size_t k = vnode_index_of_position(g, route, pos);
  o.suffix_vnodes.assign(route.vnodes.begin() + static_cast<std::ptrdiff_t>(k), route.vnodes.end());
  return o;
}

std::vector<AsId> source_set_shortest(const ShortestCostTable& s, const VantageObservation& obs) {
  std::vector<AsId> out;
  const int i = obs.source_cost;
  for (AsId h : s.host_ases()) {
    bool ok = s.cost(h, obs.predecessor) == i - 1;
    for (std::size_t k = 0; ok && k < obs.suffix.size(); ++k)
      ok = s.cost(h, obs.suffix[k]) == i + static_cast<int>(k);
    if (ok) out.push_back(h);
  }
  return out;
}

std::vector<AsId> source_set_costwindow(const ShortestCostTable& s, const VantageObservation& obs) {
  std::vector<AsId> out;
  for (AsId h : s.host_ases()) {
    const int c = s.cost(h, obs.predecessor);
    if (c != ShortestCostTable::kUnreachable && c <= obs.source_cost - 1) out.push_back(h);
  }
  return out;
}

double Posterior::effective_size() const { return std::exp2(bits); }

bool matches_observation(const AsGraph& g, const Route& r, const VantageObservation& obs) {
  const int i = obs.source_cost;
  if (r.cost != obs.total_cost || static_cast<int>(r.as_sequence.size()) <= i) return false;
  if (r.as_sequence[static_cast<std::size_t>(i - 1)] != obs.predecessor) return false;
  const std::size_t k = vnode_index_of_position(g, r, i);
  if (r.vnodes.size() - k != obs.suffix_vnodes.size()) return false;
  return std::equal(obs.suffix_vnodes.begin(), obs.suffix_vnodes.end(),
                    r.vnodes.begin() + static_cast<std::ptrdiff_t>(k));
}

Posterior effective_source_entropy(const VantageObservation& obs, const SelectionAlgorithm& alg,
                                   RoutingCache& cache, const ShortestCostTable& s) {
  const auto& g = cache.graph();
  Posterior post;
  if (obs.suffix_vnodes.empty()) return post;
  const VnodeId dst = obs.suffix_vnodes.back();
  double total = 0;
  for (AsId t : source_set_costwindow(s, obs)) {
    const auto& hosts = g.as(t).hosts;
    if (hosts.empty()) continue;
    const auto cat = cache.catalog(hosts.front(), dst);
    const auto it = cat->by_cost.find(obs.total_cost);
    if (it == cat->by_cost.end() || it->second.empty()) continue;
    const auto costs = available_costs(*cat);
    const double p_cost = cost_distribution(alg, costs).probability(obs.total_cost);
    if (p_cost <= 0) continue;
    std::size_t hits = 0;
    for (const auto& r : it->second) hits += matches_observation(g, r, obs);
    if (hits == 0) continue;
    const double like = p_cost * double(hits) / double(it->second.size());
    post.p[t] = like;
    total += like;
  }
  if (total <= 0) {
    post.p.clear();
    return post;
  }
  for (auto& [t, v] : post.p) {
    v /= total;
    if (v > 0) post.bits -= v * std::log2(v);
  }
  return post;
}

std::string_view to_string(Location loc) {
  switch (loc) {
    case Location::SourceIsp: return "source_isp";
    case Location::MidHead: return "mid_head";
    case Location::BeforeDovetail: return "before_dovetail";
    case Location::Dovetail: return "dovetail";
    case Location::MidTail: return "mid_tail";
    case Location::DestinationIsp: return "destination_isp";
    case Location::Matchmaker: return "matchmaker";
  }
  return "?";
}

AnonymityReport complete_path_report(const Connection& conn, const AsGraph& g,
                                     const ShortestCostTable& s, const ReportOptions& opts,
                                     RoutingCache* cache) {
  AnonymityReport rep;
  rep.reuse = conn.reuse;
  const auto& head = conn.head;
  const auto& data = conn.handle.path_trace;
  rep.total_cost = data.empty() ? 0 : static_cast<int>(data.size()) - 1;
  const int i = conn.dovetail_pos, n = head.cost;
  const auto& tail_seq = conn.tail.route.as_sequence;
  const std::size_t everyone = s.host_count();

  auto on_tail = [&](AsId a) { return std::find(tail_seq.begin(), tail_seq.end(), a) != tail_seq.end(); };
  auto finish = [&](LocationReport r, std::optional<VantageObservation> obs, bool exact_ok) {
    r.effective_bits = r.source_set > 0 ? std::log2(double(r.source_set)) : 0.0;
    if (opts.exact_entropy && exact_ok && obs && cache)
      r.effective_bits = effective_source_entropy(*obs, opts.head_alg, *cache, s).bits;
    r.unlinkability = double(r.source_set) * double(r.dest_set);
    rep.locations.push_back(r);
  };
  // Destination knowledge of a head AS before the dovetail.
  auto head_dest = [&](AsId a, int pos, LocationReport& r) {
    r.duplicated = on_tail(a);
    if (r.duplicated) {
      r.dest_set = 1;
    } else if (opts.return_cost_attacker && !data.empty()) {
      const int remaining = rep.total_cost - pos;
      std::size_t cnt = 0;
      for (AsId h : s.host_ases()) {
        const int c = s.cost(h, a);
        if (c != ShortestCostTable::kUnreachable && c <= remaining) ++cnt;
      }
      r.dest_set = cnt;
    } else {
      r.dest_set = everyone;
    }
  };
  auto head_location = [&](Location loc, int pos) {
    LocationReport r;
    r.location = loc;
    r.as = head.as_sequence[static_cast<std::size_t>(pos)];
    std::optional<VantageObservation> obs;
    if (pos == 0) {
      r.source_set = 1;
    } else {
      obs = observe(g, head, pos);
      r.source_set = source_set_costwindow(s, *obs).size();
    }
    if (pos < i) head_dest(r.as, pos, r);
    else r.dest_set = 1;
    finish(r, obs, pos > 0);
  };

  head_location(Location::SourceIsp, 0);
  if (i >= 2) head_location(Location::MidHead, std::max(1, i / 2));
  head_location(Location::BeforeDovetail, i - 1);
  head_location(Location::Dovetail, i);

  // Post-dovetail ASes observe the data path.
  auto data_location = [&](Location loc, int pos) {
    LocationReport r;
    r.location = loc;
    r.as = data[static_cast<std::size_t>(pos)];
    std::size_t cnt = 0;
    for (AsId h : s.host_ases()) {
      const int c = s.cost(h, data[static_cast<std::size_t>(pos - 1)]);
      if (c != ShortestCostTable::kUnreachable && c <= pos - 1) ++cnt;
    }
    r.source_set = cnt;
    r.dest_set = 1;
    finish(r, std::nullopt, false);
  };
  const int last = rep.total_cost;
  if (last - i >= 2) data_location(Location::MidTail, (i + last) / 2);
  if (last > i) data_location(Location::DestinationIsp, last);
  head_location(Location::Matchmaker, n);
  return rep;
}

}  // namespace dovetail
