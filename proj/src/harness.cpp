#include "dovetail/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "dovetail/wire.hpp"

namespace dovetail {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto r = std::from_chars(first, last, out);
  if (value.empty() || r.ec != std::errc{} || r.ptr != last)
    throw ConfigError("config key '" + key + "': invalid number '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::filesystem::path prepare_out(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + cfg.out + "': " + ec.message());
  return dir;
}

void write_echo(const ExperimentContext& ctx, const std::filesystem::path& dir,
                const std::string& experiment, const std::vector<std::string>& files) {
  std::string echo = ctx.cfg.to_text();
  echo += "topology_hash = " + ctx.graph.topology_hash() + "\n";
  write_text(dir / (experiment + "_config.txt"), echo);
  std::ostringstream m;
  m << "experiment " << experiment << "\n";
  m << "topology_hash " << ctx.graph.topology_hash() << "\n";
  m << "ases " << ctx.graph.as_count() << "\n";
  m << "hosts " << ctx.hosts.size() << "\n";
  for (const auto& f : files) m << "file " << f << "\n";
  write_text(dir / (experiment + "_manifest.txt"), m.str());
}

/// gnuplot blocks (index per series) of empirical CDF points.
std::string cdf_blocks(const std::string& hash, const std::string& what,
                       const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  std::ostringstream os;
  os << "# topology " << hash << "\n# " << what << " CDF: value fraction\n";
  bool first = true;
  for (const auto& [name, values] : series) {
    if (!first) os << "\n\n";
    first = false;
    os << "# " << name << "\n";
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i)
      os << fixed(v[i]) << " " << fixed(double(i + 1) / double(v.size())) << "\n";
  }
  return os.str();
}

std::pair<VnodeId, VnodeId> draw_pair(const std::vector<VnodeId>& hosts, const AsGraph& g,
                                      Rng& rng) {
  if (hosts.size() < 2) throw DataError("topology has fewer than two eligible hosts");
  std::uniform_int_distribution<std::size_t> pick(0, hosts.size() - 1);
  const VnodeId src = hosts[pick(rng)];
  for (;;) {
    const VnodeId dst = hosts[pick(rng)];
    if (g.owner(dst) != g.owner(src)) return {src, dst};
  }
}

}  // namespace

// ------------------------------------------------------------------ config

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!caida_file.empty() && !snapshot_file.empty())
    fail("caida_file and snapshot_file are mutually exclusive");
  if (synth_ases < 3) fail("synth_ases must be at least 3");
  if (!(synth_peer_fraction >= 0) || synth_peer_fraction > 1)
    fail("synth_peer_fraction must be in [0, 1]");
  if (!(sample_fraction > 0) || sample_fraction > 1) fail("sample_fraction must be in (0, 1]");
  if (!(loose_fraction >= 0) || loose_fraction > 1) fail("loose_fraction must be in [0, 1]");
  if (!(matchmaker_fraction > 0) || matchmaker_fraction > 1)
    fail("matchmaker_fraction must be in (0, 1]");
  if (!(decay > 0) || decay >= 1) fail("decay must be in (0, 1)");
  if (mm_cost_limit < 1) fail("mm_cost_limit must be at least 1");
  if (n_tail_options < 1) fail("n_tail_options must be at least 1");
  if (max_attempts < 1) fail("max_attempts must be at least 1");
  if (heads_per_matchmaker < 1) fail("heads_per_matchmaker must be at least 1");
  if (max_cost < 1 || max_cost > 64) fail("max_cost must be in [1, 64]");
  if (per_cost_cap < 1) fail("per_cost_cap must be at least 1");
  if (expansion_budget < 1) fail("expansion_budget must be at least 1");
  if (!(extra_pathlets >= 0) || extra_pathlets > 100) fail("extra_pathlets must be in [0, 100]");
  if (pairs < 1) fail("pairs must be at least 1");
  if (out.empty()) fail("out must not be empty");
  if (segment_algorithms.empty()) fail("segment_algorithms must not be empty");
  try {
    SelectionAlgorithm::parse(head_alg, decay);
    SelectionAlgorithm::parse(tail_alg, decay);
    for (const auto& a : segment_algorithms) SelectionAlgorithm::parse(a, decay);
  } catch (const std::exception& e) {
    fail(std::string("unknown algorithm: ") + e.what());
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "caida_file = " << caida_file << "\n";
  os << "snapshot_file = " << snapshot_file << "\n";
  os << "synth_ases = " << synth_ases << "\n";
  os << "synth_peer_fraction = " << format_double(synth_peer_fraction) << "\n";
  os << "sample_fraction = " << format_double(sample_fraction) << "\n";
  os << "loose_fraction = " << format_double(loose_fraction) << "\n";
  os << "matchmaker_fraction = " << format_double(matchmaker_fraction) << "\n";
  os << "head_alg = " << head_alg << "\n";
  os << "tail_alg = " << tail_alg << "\n";
  os << "decay = " << format_double(decay) << "\n";
  os << "mm_cost_limit = " << mm_cost_limit << "\n";
  os << "n_tail_options = " << n_tail_options << "\n";
  os << "max_attempts = " << max_attempts << "\n";
  os << "heads_per_matchmaker = " << heads_per_matchmaker << "\n";
  os << "segment_algorithms = ";
  for (std::size_t i = 0; i < segment_algorithms.size(); ++i)
    os << (i ? "," : "") << segment_algorithms[i];
  os << "\n";
  os << "max_cost = " << max_cost << "\n";
  os << "per_cost_cap = " << per_cost_cap << "\n";
  os << "expansion_budget = " << expansion_budget << "\n";
  os << "extra_pathlets = " << format_double(extra_pathlets) << "\n";
  os << "pairs = " << pairs << "\n";
  os << "seed = " << seed << "\n";
  os << "out = " << out << "\n";
  os << "threads = " << threads << "\n";
  os << "exact_entropy = " << (exact_entropy ? "true" : "false") << "\n";
  os << "return_cost_attacker = " << (return_cost_attacker ? "true" : "false") << "\n";
  return os.str();
}

ProtocolParams ExperimentConfig::protocol() const {
  ProtocolParams p;
  p.head_alg = SelectionAlgorithm::parse(head_alg, decay);
  p.tail_alg = SelectionAlgorithm::parse(tail_alg, decay);
  p.mm_cost_limit = mm_cost_limit;
  p.n_tail_options = n_tail_options;
  p.max_attempts = max_attempts;
  p.heads_per_matchmaker = heads_per_matchmaker;
  return p;
}

EnumerationLimits ExperimentConfig::limits() const {
  return EnumerationLimits{max_cost, per_cost_cap, expansion_budget};
}

void apply_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "caida_file") c.caida_file = value;
  else if (key == "snapshot_file") c.snapshot_file = value;
  else if (key == "synth_ases") c.synth_ases = parse_number<std::size_t>(key, value);
  else if (key == "synth_peer_fraction") c.synth_peer_fraction = parse_number<double>(key, value);
  else if (key == "sample_fraction") c.sample_fraction = parse_number<double>(key, value);
  else if (key == "loose_fraction") c.loose_fraction = parse_number<double>(key, value);
  else if (key == "matchmaker_fraction") c.matchmaker_fraction = parse_number<double>(key, value);
  else if (key == "head_alg") c.head_alg = value;
  else if (key == "tail_alg") c.tail_alg = value;
  else if (key == "decay") c.decay = parse_number<double>(key, value);
  else if (key == "mm_cost_limit") c.mm_cost_limit = parse_number<int>(key, value);
  else if (key == "n_tail_options") c.n_tail_options = parse_number<std::size_t>(key, value);
  else if (key == "max_attempts") c.max_attempts = parse_number<int>(key, value);
  else if (key == "heads_per_matchmaker") c.heads_per_matchmaker = parse_number<int>(key, value);
  else if (key == "segment_algorithms") c.segment_algorithms = split_list(value);
  else if (key == "max_cost") c.max_cost = parse_number<int>(key, value);
  else if (key == "per_cost_cap") c.per_cost_cap = parse_number<std::size_t>(key, value);
  else if (key == "expansion_budget") c.expansion_budget = parse_number<std::uint64_t>(key, value);
  else if (key == "extra_pathlets") c.extra_pathlets = parse_number<double>(key, value);
  else if (key == "pairs") c.pairs = parse_number<std::size_t>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "out") c.out = value;
  else if (key == "threads") c.threads = parse_number<unsigned>(key, value);
  else if (key == "exact_entropy") c.exact_entropy = parse_bool(key, value);
  else if (key == "return_cost_attacker") c.return_cost_attacker = parse_bool(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(ExperimentConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg;
  apply_config_text(cfg, ss.str());
  return cfg;
}

// ---------------------------------------------------------------- topology

std::vector<AsRelationship> sample_relationships(const std::vector<AsRelationship>& rels,
                                                 double fraction) {
  if (!(fraction > 0) || fraction > 1) throw ArgumentError("sample fraction must be in (0, 1]");
  std::map<AsId, std::vector<AsId>> adj;
  for (const auto& r : rels) {
    adj[r.a].push_back(r.b);
    adj[r.b].push_back(r.a);
  }
  if (adj.empty() || fraction == 1) return rels;
  for (auto& [_, v] : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  AsId hub = adj.begin()->first;
  for (const auto& [id, v] : adj)
    if (v.size() > adj[hub].size()) hub = id;
  const auto target =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(fraction * double(adj.size()))));
  std::unordered_set<AsId> kept{hub};
  std::deque<AsId> queue{hub};
  while (!queue.empty() && kept.size() < target) {
    const AsId x = queue.front();
    queue.pop_front();
    for (AsId y : adj[x]) {
      if (kept.size() >= target) break;
      if (kept.insert(y).second) queue.push_back(y);
    }
  }
  std::vector<AsRelationship> out;
  for (const auto& r : rels)
    if (kept.count(r.a) && kept.count(r.b)) out.push_back(r);
  return out;
}

AsGraph make_topology(const ExperimentConfig& cfg) {
  if (!cfg.snapshot_file.empty()) {
    const Bytes bytes = read_file(cfg.snapshot_file);
    return AsGraph::from_snapshot(bytes);
  }
  std::vector<AsRelationship> rels;
  if (!cfg.caida_file.empty()) {
    const Bytes bytes = read_file(cfg.caida_file);
    rels = load_caida(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } else {
    rels = generate_synthetic(cfg.synth_ases, cfg.synth_peer_fraction, derive_seed(cfg.seed, 1));
  }
  rels = sample_relationships(rels, cfg.sample_fraction);
  if (rels.empty()) throw DataError("topology has no relationships");
  const AsGraph net = build_network(rels, cfg.loose_fraction, derive_seed(cfg.seed, 2));
  return attach_hosts_and_matchmakers(net, cfg.matchmaker_fraction, derive_seed(cfg.seed, 3));
}

// ------------------------------------------------------------------ workers

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// -------------------------------------------------------------- experiments

ExperimentContext::ExperimentContext(const ExperimentConfig& c)
    : cfg((c.validate(), c)),
      graph(make_topology(cfg)),
      cache(graph, cfg.limits(), derive_seed(cfg.seed, 4), cfg.extra_pathlets),
      table(graph),
      hosts(graph.eligible_hosts()) {
  if (hosts.size() < 2) throw DataError("topology has fewer than two eligible hosts");
}

SegmentResult exp_segment(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  std::vector<SelectionAlgorithm> algs;
  for (const auto& a : cfg.segment_algorithms) algs.push_back(SelectionAlgorithm::parse(a, cfg.decay));

  std::vector<std::vector<SegmentRow>> rows(cfg.pairs);
  std::vector<std::string> skipped(cfg.pairs);
  parallel_for(cfg.pairs, cfg.threads, [&](std::size_t pair) {
    Rng rng(derive_seed(cfg.seed, 10, pair));
    const auto [src, dst] = draw_pair(ctx.hosts, ctx.graph, rng);
    const AsId sa = ctx.graph.owner(src), da = ctx.graph.owner(dst);
    const auto catalog = ctx.cache.catalog(src, dst);
    if (catalog->empty()) {
      skipped[pair] = "unreachable pair " + std::to_string(sa) + "->" + std::to_string(da);
      return;
    }
    for (std::size_t a = 0; a < algs.size(); ++a) {
      Rng arng(derive_seed(derive_seed(cfg.seed, 11, pair), a));
      const Route& r = select_route(algs[a], *catalog, arng);
      const VantageObservation obs = observe(ctx.graph, r, r.cost);
      SegmentRow row;
      row.pair = pair;
      row.src_as = sa;
      row.dst_as = da;
      row.algorithm = algs[a].name();
      row.cost = r.cost;
      row.shortest_cost = ctx.table.cost(sa, da);
      const auto set = algs[a].kind == AlgorithmKind::Shortest
                           ? source_set_shortest(ctx.table, obs)
                           : source_set_costwindow(ctx.table, obs);
      row.source_set = set.size();
      if (cfg.exact_entropy) {
        row.effective_bits = effective_source_entropy(obs, algs[a], ctx.cache, ctx.table).bits;
      } else {
        row.effective_bits = set.empty() ? 0.0 : std::log2(double(set.size()));
      }
      rows[pair].push_back(std::move(row));
    }
  });
  SegmentResult out;
  for (std::size_t i = 0; i < cfg.pairs; ++i) {
    for (auto& r : rows[i]) out.rows.push_back(std::move(r));
    if (!skipped[i].empty()) out.skipped.emplace_back(i, skipped[i]);
  }
  return out;
}

CompleteResult exp_complete(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const ProtocolParams params = cfg.protocol();
  ReportOptions opts;
  opts.exact_entropy = cfg.exact_entropy;
  opts.return_cost_attacker = cfg.return_cost_attacker;
  opts.head_alg = params.head_alg;
  ctx.cache.set_memoize_catalogs(cfg.exact_entropy);

  CompleteResult out;
  out.trials.resize(cfg.pairs);
  parallel_for(cfg.pairs, cfg.threads, [&](std::size_t trial) {
    Rng rng(derive_seed(cfg.seed, 20, trial));
    const auto [src, dst] = draw_pair(ctx.hosts, ctx.graph, rng);
    CompleteTrial& t = out.trials[trial];
    t.trial = trial;
    t.src_as = ctx.graph.owner(src);
    t.dst_as = ctx.graph.owner(dst);
    t.shortest_cost = ctx.table.cost(t.src_as, t.dst_as);
    try {
      const Connection conn = build_connection(ctx.cache, src, dst, params, rng);
      t.ok = true;
      t.matchmaker_as = ctx.graph.owner(conn.matchmaker);
      t.dovetail_as = conn.dovetail_as;
      t.head_cost = conn.head.cost;
      t.dovetail_pos = conn.dovetail_pos;
      t.attempts = conn.attempts;
      t.reuse = conn.reuse;
      t.report = complete_path_report(conn, ctx.graph, ctx.table, opts, &ctx.cache);
      t.total_cost = t.report.total_cost;
    } catch (const ConstructionError& e) {
      t.failure = e.what();
    }
  });
  ctx.cache.set_memoize_catalogs(true);
  return out;
}

ResourceResult exp_resources(ExperimentContext& ctx) {
  const auto& cfg = ctx.cfg;
  const ProtocolParams params = cfg.protocol();
  ctx.cache.set_memoize_catalogs(false);
  const std::size_t n = cfg.pairs;
  std::vector<double> pathlets(n, 0), header(n, -1), closed(n, -1);
  parallel_for(n, cfg.threads, [&](std::size_t trial) {
    Rng rng(derive_seed(cfg.seed, 30, trial));
    const auto [src, dst] = draw_pair(ctx.hosts, ctx.graph, rng);
    pathlets[trial] = double(ctx.cache.perspective(src)->known_pathlets().size());
    try {
      const Connection conn = build_connection(ctx.cache, src, dst, params, rng);
      Packet p;
      p.type = PacketType::Data;
      p.t = conn.handle.transit;
      p.n1 = conn.handle.n1_updated;
      header[trial] = double(header_length(p));
      std::size_t sum = preamble_length(PacketType::Data);
      for (AsId a : conn.handle.path_trace) sum += ctx.graph.as(a).transit_entry_size();
      closed[trial] = double(sum);
    } catch (const ConstructionError&) {
    }
  });
  ctx.cache.set_memoize_catalogs(true);
  ResourceResult r;
  double psum = 0, hsum = 0, csum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    psum += pathlets[i];
    if (header[i] < 0) {
      ++r.failures;
      continue;
    }
    ++r.connections;
    hsum += header[i];
    csum += closed[i];
  }
  r.mean_perspective_pathlets = psum / double(n);
  // A pathlet is stored as (from vnode, fid, to vnode).
  r.mean_perspective_bytes = r.mean_perspective_pathlets * 9.0;
  if (r.connections) {
    r.mean_header_bytes = hsum / double(r.connections);
    r.mean_closed_form_header = csum / double(r.connections);
    r.payload_efficiency = 1.0 - r.mean_header_bytes / kMtu;
  }
  return r;
}

// ------------------------------------------------------------------ outputs

void write_segment_outputs(const ExperimentContext& ctx, const SegmentResult& r) {
  const auto dir = prepare_out(ctx.cfg);
  std::ostringstream csv;
  csv << "pair,src_as,dst_as,algorithm,cost,shortest_cost,source_set,effective_bits\n";
  std::map<std::string, std::vector<double>> cost, set, bits;
  for (const auto& row : r.rows) {
    csv << row.pair << ',' << row.src_as << ',' << row.dst_as << ',' << row.algorithm << ','
        << row.cost << ',' << row.shortest_cost << ',' << row.source_set << ','
        << fixed(row.effective_bits) << "\n";
    cost[row.algorithm].push_back(row.cost);
    set[row.algorithm].push_back(double(row.source_set));
    bits[row.algorithm].push_back(row.effective_bits);
  }
  write_text(dir / "segment.csv", csv.str());
  std::ostringstream sk;
  sk << "pair,reason\n";
  for (const auto& [p, reason] : r.skipped) sk << p << ',' << reason << "\n";
  write_text(dir / "segment_skipped.csv", sk.str());

  std::vector<std::pair<std::string, std::vector<double>>> c, s, b;
  for (const auto& name : ctx.cfg.segment_algorithms) {
    const std::string n = SelectionAlgorithm::parse(name, ctx.cfg.decay).name();
    c.emplace_back(n, cost[n]);
    s.emplace_back(n, set[n]);
    b.emplace_back(n, bits[n]);
  }
  const auto hash = ctx.graph.topology_hash();
  write_text(dir / "segment_cost.dat", cdf_blocks(hash, "segment cost", c));
  write_text(dir / "segment_source_set.dat", cdf_blocks(hash, "source set size", s));
  write_text(dir / "segment_bits.dat", cdf_blocks(hash, "effective bits", b));
  write_echo(ctx, dir, "segment",
             {"segment.csv", "segment_skipped.csv", "segment_cost.dat", "segment_source_set.dat",
              "segment_bits.dat"});
}

void write_complete_outputs(const ExperimentContext& ctx, const CompleteResult& r) {
  const auto dir = prepare_out(ctx.cfg);
  std::ostringstream loc, cost, fail;
  loc << "trial,location,as,source_set,dest_set,effective_bits,effective_size,unlinkability,"
         "duplicated\n";
  cost << "trial,src_as,dst_as,matchmaker_as,dovetail_as,head_cost,dovetail_pos,total_cost,"
          "shortest_cost,cost_ratio,reuse,attempts\n";
  fail << "trial,src_as,dst_as,reason\n";
  std::map<Location, std::vector<double>> bits;
  std::vector<double> total, ratio;
  for (const auto& t : r.trials) {
    if (!t.ok) {
      fail << t.trial << ',' << t.src_as << ',' << t.dst_as << ',' << t.failure << "\n";
      continue;
    }
    for (const auto& l : t.report.locations) {
      loc << t.trial << ',' << to_string(l.location) << ',' << l.as << ',' << l.source_set << ','
          << l.dest_set << ',' << fixed(l.effective_bits) << ','
          << fixed(std::exp2(l.effective_bits)) << ',' << fixed(l.unlinkability, 1) << ','
          << (l.duplicated ? 1 : 0) << "\n";
      bits[l.location].push_back(l.effective_bits);
    }
    const double rt = t.shortest_cost > 0 ? double(t.total_cost) / t.shortest_cost : 0.0;
    cost << t.trial << ',' << t.src_as << ',' << t.dst_as << ',' << t.matchmaker_as << ','
         << t.dovetail_as << ',' << t.head_cost << ',' << t.dovetail_pos << ',' << t.total_cost
         << ',' << t.shortest_cost << ',' << fixed(rt) << ',' << (t.reuse ? 1 : 0) << ','
         << t.attempts << "\n";
    total.push_back(t.total_cost);
    ratio.push_back(rt);
  }
  write_text(dir / "complete_locations.csv", loc.str());
  write_text(dir / "complete_cost.csv", cost.str());
  write_text(dir / "complete_failures.csv", fail.str());
  std::vector<std::pair<std::string, std::vector<double>>> b;
  for (Location l : kAllLocations) b.emplace_back(std::string(to_string(l)), bits[l]);
  const auto hash = ctx.graph.topology_hash();
  write_text(dir / "complete_bits.dat", cdf_blocks(hash, "effective bits by location", b));
  write_text(dir / "complete_cost.dat",
             cdf_blocks(hash, "path cost", {{"total_cost", total}, {"cost_ratio", ratio}}));
  write_echo(ctx, dir, "complete",
             {"complete_locations.csv", "complete_cost.csv", "complete_failures.csv",
              "complete_bits.dat", "complete_cost.dat"});
}

void write_resource_outputs(const ExperimentContext& ctx, const ResourceResult& r) {
  const auto dir = prepare_out(ctx.cfg);
  std::ostringstream csv;
  csv << "metric,value\n";
  csv << "mean_perspective_pathlets," << fixed(r.mean_perspective_pathlets) << "\n";
  csv << "mean_perspective_bytes," << fixed(r.mean_perspective_bytes) << "\n";
  csv << "mean_data_header_bytes," << fixed(r.mean_header_bytes) << "\n";
  csv << "mean_closed_form_header_bytes," << fixed(r.mean_closed_form_header) << "\n";
  csv << "payload_efficiency," << fixed(r.payload_efficiency) << "\n";
  csv << "connections," << r.connections << "\n";
  csv << "failures," << r.failures << "\n";
  write_text(dir / "resources.csv", csv.str());
  write_echo(ctx, dir, "resources", {"resources.csv"});
}

bool run_connect(ExperimentContext& ctx, std::optional<VnodeId> src, std::optional<VnodeId> dst,
                 bool verbose, std::ostream& os) {
  const auto& g = ctx.graph;
  Rng rng(derive_seed(ctx.cfg.seed, 40));
  if (!src || !dst) {
    const auto [s, d] = draw_pair(ctx.hosts, g, rng);
    if (!src) src = s;
    if (!dst) dst = d;
  }
  for (VnodeId v : {*src, *dst})
    if (!g.has_vnode(v) || !g.is_host(v))
      throw ConfigError("vnode " + std::to_string(v) + " is not a host");
  if (g.owner(*src) == g.owner(*dst)) throw ConfigError("source and destination share an AS");

  os << "topology " << g.topology_hash() << "\n";
  os << "source vnode " << *src << " (AS " << g.owner(*src) << "), destination vnode " << *dst
     << " (AS " << g.owner(*dst) << ")\n";
  Connection conn;
  try {
    conn = build_connection(ctx.cache, *src, *dst, ctx.cfg.protocol(), rng);
  } catch (const ConstructionError& e) {
    os << "construction failed: " << e.what() << "\n";
    return false;
  }
  auto print_path = [&](const char* label, const std::vector<AsId>& p) {
    os << label;
    for (AsId a : p) os << ' ' << a;
    os << "\n";
  };
  os << "matchmaker vnode " << conn.matchmaker << " (AS " << g.owner(conn.matchmaker) << ")\n";
  print_path("head ASes:", conn.head.as_sequence);
  print_path("tail ASes:", conn.tail.route.as_sequence);
  os << "dovetail AS " << conn.dovetail_as << " at head position " << conn.dovetail_pos
     << (conn.reuse ? " (tail reuses head)" : "") << "\n";
  os << "attempts " << conn.attempts << ", head draws " << conn.head_draws << ", tail options "
     << conn.offered.size() << " offered / " << conn.valid.size() << " valid\n";
  print_path("data path:", conn.handle.path_trace);
  if (verbose) {
    os << "construction trace:\n";
    for (const auto& e : conn.trace) os << "  " << format_trace_event(e) << "\n";
  }
  const Bytes payload{'p', 'i', 'n', 'g'};
  const SimResult data = send_data(g, conn.handle, payload);
  os << "data: " << (data.delivered() && data.at == *dst ? "delivered" : "FAILED") << " after "
     << data.trace.size() << " vnodes\n";
  if (verbose)
    for (const auto& e : data.trace) os << "  " << format_trace_event(e) << "\n";
  bool ok = data.delivered() && data.at == *dst && data.packet.payload == payload;
  if (ok) {
    const Bytes reply{'p', 'o', 'n', 'g'};
    const SimResult resp = send_response(g, *dst, data.packet.t, data.packet.n1, reply);
    const bool rok = resp.delivered() && resp.at == *src && resp.packet.payload == reply;
    os << "response: " << (rok ? "delivered" : "FAILED") << " after " << resp.trace.size()
       << " vnodes\n";
    if (verbose)
      for (const auto& e : resp.trace) os << "  " << format_trace_event(e) << "\n";
    ok = rok;
  }
  ReportOptions opts;
  opts.exact_entropy = ctx.cfg.exact_entropy;
  opts.return_cost_attacker = ctx.cfg.return_cost_attacker;
  opts.head_alg = ctx.cfg.protocol().head_alg;
  const AnonymityReport rep = complete_path_report(conn, g, ctx.table, opts, &ctx.cache);
  os << "total cost " << rep.total_cost << " (shortest " << ctx.table.cost(g.owner(*src), g.owner(*dst))
     << ")\n";
  os << std::left << std::setw(16) << "location" << std::setw(8) << "as" << std::setw(12)
     << "source_set" << std::setw(10) << "dest_set" << "bits\n";
  for (const auto& l : rep.locations)
    os << std::setw(16) << to_string(l.location) << std::setw(8) << l.as << std::setw(12)
       << l.source_set << std::setw(10) << l.dest_set << fixed(l.effective_bits, 3)
       << (l.duplicated ? " dup" : "") << "\n";
  return ok;
}

}  // namespace dovetail
