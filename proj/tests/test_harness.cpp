#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dovetail/harness.hpp"

using namespace dovetail;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const std::string& out, std::size_t ases = 100) {
  ExperimentConfig c;
  c.synth_ases = ases;
  c.pairs = 12;
  c.seed = 3;
  c.threads = 1;
  c.max_cost = 10;
  c.out = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dovetail_harness_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config text round-trips and rejects bad input") {
  ExperimentConfig c;
  apply_config_text(c, "# comment\n\npairs = 42\nhead_alg = exponential\n seed=9 \n"
                       "segment_algorithms = shortest,uniform\nexact_entropy = true\n");
  CHECK(c.pairs == 42);
  CHECK(c.seed == 9);
  CHECK(c.head_alg == "exponential");
  CHECK(c.exact_entropy);
  CHECK(c.segment_algorithms == std::vector<std::string>{"shortest", "uniform"});
  ExperimentConfig back;
  apply_config_text(back, c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK_NOTHROW(c.validate());

  ExperimentConfig d;
  CHECK_THROWS_AS(apply_config_text(d, "no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(d, "pairs = many\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(d, "pairs\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(d, "exact_entropy", "perhaps"), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/dovetail.cfg"), ConfigError);

  auto invalid = [](auto mutate) {
    ExperimentConfig e;
    mutate(e);
    return e;
  };
  CHECK_THROWS_AS(invalid([](auto& e) { e.pairs = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(invalid([](auto& e) { e.head_alg = "fastest"; }).validate(), ConfigError);
  CHECK_THROWS_AS(invalid([](auto& e) { e.sample_fraction = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(invalid([](auto& e) { e.synth_peer_fraction = 1.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(invalid([](auto& e) { e.decay = 1.0; }).validate(), ConfigError);

  const auto path = fs::temp_directory_path() / "dovetail_harness_cfg.txt";
  std::ofstream(path) << "pairs = 7\n";
  CHECK(load_config_file(path.string()).pairs == 7);
  fs::remove(path);
}

TEST_CASE("protocol and limits follow the config") {
  ExperimentConfig c;
  c.head_alg = "uniform";
  c.mm_cost_limit = 3;
  c.max_cost = 9;
  c.per_cost_cap = 50;
  const auto p = c.protocol();
  CHECK(p.head_alg.kind == AlgorithmKind::Uniform);
  CHECK(p.tail_alg.kind == AlgorithmKind::Exponential4);
  CHECK(p.mm_cost_limit == 3);
  CHECK(c.limits().max_cost == 9);
  CHECK(c.limits().per_cost_cap == 50);
}

TEST_CASE("sampling keeps a connected fraction") {
  const auto rels = generate_synthetic(300, 0.6, 4);
  std::set<AsId> all;
  for (const auto& r : rels) all.insert(r.a), all.insert(r.b);
  const auto half = sample_relationships(rels, 0.25);
  std::set<AsId> kept;
  for (const auto& r : half) kept.insert(r.a), kept.insert(r.b);
  CHECK(kept.size() == std::size_t(std::llround(0.25 * double(all.size()))));
  // Every kept link was an original link between kept ASes.
  std::set<std::tuple<AsId, AsId, Relationship>> orig;
  for (const auto& r : rels) orig.emplace(r.a, r.b, r.kind);
  for (const auto& r : half) CHECK(orig.count({r.a, r.b, r.kind}));
  std::size_t induced = 0;
  for (const auto& r : rels) induced += kept.count(r.a) && kept.count(r.b);
  CHECK(induced == half.size());
  // Connected as an undirected graph.
  std::map<AsId, std::vector<AsId>> adj;
  for (const auto& r : half) adj[r.a].push_back(r.b), adj[r.b].push_back(r.a);
  std::set<AsId> seen{*kept.begin()};
  std::vector<AsId> stack{*kept.begin()};
  while (!stack.empty()) {
    const AsId u = stack.back();
    stack.pop_back();
    for (AsId v : adj[u])
      if (seen.insert(v).second) stack.push_back(v);
  }
  CHECK(seen == kept);
  CHECK(sample_relationships(rels, 1.0).size() == rels.size());
}

TEST_CASE("parallel_for covers every index and rethrows") {
  for (unsigned threads : {1u, 3u}) {
    std::vector<std::atomic<int>> hit(500);
    parallel_for(hit.size(), threads, [&](std::size_t i) { hit[i]++; });
    for (auto& h : hit) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(50, threads,
                                 [](std::size_t i) {
                                   if (i == 17) throw DataError("boom");
                                 }),
                    DataError);
  }
}

TEST_CASE("topology from missing inputs") {
  ExperimentConfig c;
  c.caida_file = "/nonexistent/rels.txt";
  CHECK_THROWS_AS(make_topology(c), DataError);
  ExperimentConfig s;
  s.snapshot_file = "/nonexistent/snap.txt";
  CHECK_THROWS_AS(make_topology(s), DataError);
}

TEST_CASE("segment experiment rows") {
  const auto out = scratch("segment");
  ExperimentContext ctx(small_config(out.string()));
  const auto res = exp_segment(ctx);
  CHECK(res.rows.size() + res.skipped.size() * ctx.cfg.segment_algorithms.size() ==
        ctx.cfg.pairs * ctx.cfg.segment_algorithms.size());
  REQUIRE(!res.rows.empty());
  for (const auto& row : res.rows) {
    CHECK(row.shortest_cost == ctx.table.cost(row.src_as, row.dst_as));
    CHECK(row.cost >= row.shortest_cost);
    if (row.algorithm == "shortest") CHECK(row.cost == row.shortest_cost);
    if (row.algorithm == "exponential4") {
      // Below the floor only when no route reaches it.
      const auto cat = ctx.cache.catalog(ctx.graph.as(row.src_as).hosts.front(),
                                         ctx.graph.as(row.dst_as).hosts.front());
      const auto costs = available_costs(*cat);
      if (costs.back() >= 4) CHECK(row.cost >= 4);
      else CHECK(row.cost == costs.back());
    }
    CHECK(row.source_set >= 1);
    CHECK(row.effective_bits == doctest::Approx(std::log2(double(row.source_set))));
  }
  write_segment_outputs(ctx, res);
  for (const char* f : {"segment.csv", "segment_skipped.csv", "segment_cost.dat", "segment_source_set.dat",
                        "segment_bits.dat", "segment_config.txt", "segment_manifest.txt"})
    CHECK(fs::exists(out / f));
  const auto echo = slurp(out / "segment_config.txt");
  CHECK(echo.find(ctx.graph.topology_hash()) != std::string::npos);
  CHECK(echo.find("pairs = 12") != std::string::npos);

  // Reruns give byte-identical output, also with more threads.
  const std::string first = slurp(out / "segment.csv");
  auto cfg = small_config(out.string());
  cfg.threads = 3;
  ExperimentContext again(cfg);
  write_segment_outputs(again, exp_segment(again));
  CHECK(slurp(out / "segment.csv") == first);
  fs::remove_all(out);
}

TEST_CASE("complete experiment and its outputs") {
  const auto out = scratch("complete");
  auto cfg = small_config(out.string(), 150);
  cfg.pairs = 8;
  ExperimentContext ctx(cfg);
  const auto res = exp_complete(ctx);
  REQUIRE(res.trials.size() == 8);
  int ok = 0;
  for (const auto& t : res.trials) {
    if (!t.ok) {
      CHECK(!t.failure.empty());
      continue;
    }
    ++ok;
    CHECK(t.total_cost >= t.shortest_cost);
    CHECK(t.dovetail_pos > cfg.mm_cost_limit);
    CHECK(t.attempts >= 1);
    CHECK(!t.report.locations.empty());
  }
  CHECK(ok >= 3);
  write_complete_outputs(ctx, res);
  for (const char* f : {"complete_locations.csv", "complete_cost.csv", "complete_failures.csv",
                        "complete_bits.dat", "complete_cost.dat", "complete_config.txt"})
    CHECK(fs::exists(out / f));
  const std::string first = slurp(out / "complete_cost.csv");
  ExperimentContext again(cfg);
  write_complete_outputs(again, exp_complete(again));
  CHECK(slurp(out / "complete_cost.csv") == first);
  fs::remove_all(out);
}

TEST_CASE("resource accounting") {
  auto cfg = small_config(scratch("resources").string(), 150);
  cfg.pairs = 8;
  ExperimentContext ctx(cfg);
  const auto r = exp_resources(ctx);
  CHECK(r.connections + r.failures == 8);
  REQUIRE(r.connections > 0);
  CHECK(r.mean_header_bytes == doctest::Approx(r.mean_closed_form_header));
  CHECK(r.payload_efficiency == doctest::Approx(1.0 - r.mean_header_bytes / 1500.0));
  CHECK(r.mean_perspective_bytes == doctest::Approx(9.0 * r.mean_perspective_pathlets));
  CHECK(r.mean_perspective_pathlets > 0);
}

TEST_CASE("connect walkthrough is deterministic") {
  auto cfg = small_config(scratch("connect").string(), 150);
  ExperimentContext a(cfg), b(cfg);
  std::ostringstream oa, ob;
  const bool ra = run_connect(a, std::nullopt, std::nullopt, true, oa);
  const bool rb = run_connect(b, std::nullopt, std::nullopt, true, ob);
  CHECK(ra == rb);
  CHECK(oa.str() == ob.str());
  CHECK(!oa.str().empty());
  if (ra) CHECK(oa.str().find("data") != std::string::npos);
}
