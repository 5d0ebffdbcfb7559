#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dovetail/harness.hpp"

using namespace dovetail;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> pairs;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "key = value config file");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--pairs", o.pairs, "number of source/destination pairs");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--threads", o.threads, "worker threads (0: all cores)");
  app->add_option("--set", o.overrides, "override a config key (key=value)");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config_file(o.config);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.pairs) cfg.pairs = *o.pairs;
  if (o.out) cfg.out = *o.out;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << bytes;
}

void print_summary(const AsGraph& g) {
  std::size_t stubs = 0, loose = 0;
  for (const auto& a : g.ases()) {
    stubs += a.is_stub;
    loose += a.policy == Policy::LooseValleyFree;
  }
  std::cout << "ases " << g.as_count() << ", stubs " << stubs << ", loose " << loose
            << ", vnodes " << g.vnodes().size() << ", hosts " << g.hosts().size()
            << ", matchmakers " << g.matchmakers().size() << ", pathlets " << g.pathlet_count()
            << "\ntopology " << g.topology_hash() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dovetail routing simulator"};
  app.require_subcommand(1);

  auto* topo = app.add_subcommand("topo", "topology tools");
  topo->require_subcommand(1);

  std::size_t synth_ases = 500;
  double synth_pf = 0.6;
  std::uint64_t topo_seed = 1;
  std::string topo_out;
  auto* synth = topo->add_subcommand("synth", "write a synthetic CAIDA-format relationship file");
  synth->add_option("--ases", synth_ases, "number of ASes")->check(CLI::Range(3, 1000000));
  synth->add_option("--peer-fraction", synth_pf, "peer links per AS")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", topo_seed, "generator seed");
  synth->add_option("--out", topo_out, "output file")->required();

  std::string build_input;
  ExperimentConfig build_cfg;
  auto* build = topo->add_subcommand("build", "build a network snapshot from a relationship file");
  build->add_option("--input", build_input, "CAIDA relationship file")->required();
  build->add_option("--loose-fraction", build_cfg.loose_fraction);
  build->add_option("--matchmaker-fraction", build_cfg.matchmaker_fraction);
  build->add_option("--sample-fraction", build_cfg.sample_fraction);
  build->add_option("--seed", topo_seed, "build seed");
  build->add_option("--out", topo_out, "snapshot file")->required();

  auto* exp = app.add_subcommand("exp", "run an experiment");
  exp->require_subcommand(1);
  CommonOptions seg_o, comp_o, res_o, conn_o;
  auto* seg = exp->add_subcommand("segment", "single-segment anonymity per selection algorithm");
  add_common(seg, seg_o);
  auto* comp = exp->add_subcommand("complete", "complete-path anonymity and cost");
  add_common(comp, comp_o);
  auto* res = exp->add_subcommand("resources", "perspective size and header overhead");
  add_common(res, res_o);

  auto* conn = app.add_subcommand("connect", "build one connection and print its trace");
  add_common(conn, conn_o);
  std::optional<VnodeId> src, dst;
  bool verbose = false;
  conn->add_option("--src", src, "source host vnode");
  conn->add_option("--dst", dst, "destination host vnode");
  conn->add_flag("--verbose,-v", verbose, "print per-vnode trace events");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      const auto rels = generate_synthetic(synth_ases, synth_pf, topo_seed);
      std::string text = "# synthetic AS relationships: a|b|-1 provider-customer, a|b|0 peer\n";
      for (const auto& r : rels)
        text += std::to_string(r.a) + "|" + std::to_string(r.b) + "|" +
                (r.kind == Relationship::ProviderCustomer ? "-1" : "0") + "\n";
      write_file(topo_out, text);
      std::cout << "wrote " << rels.size() << " relationships to " << topo_out << "\n";
      return 0;
    }
    if (*build) {
      build_cfg.caida_file = build_input;
      build_cfg.seed = topo_seed;
      build_cfg.validate();
      const AsGraph g = make_topology(build_cfg);
      const Bytes snap = g.snapshot();
      write_file(topo_out, std::string(snap.begin(), snap.end()));
      print_summary(g);
      return 0;
    }
    if (*seg) {
      ExperimentContext ctx(resolve(seg_o));
      const auto r = exp_segment(ctx);
      write_segment_outputs(ctx, r);
      std::cout << "segment: " << r.rows.size() << " rows, " << r.skipped.size()
                << " pairs skipped, output in " << ctx.cfg.out << "\n";
      return 0;
    }
    if (*comp) {
      ExperimentContext ctx(resolve(comp_o));
      const auto r = exp_complete(ctx);
      write_complete_outputs(ctx, r);
      std::size_t ok = 0;
      for (const auto& t : r.trials) ok += t.ok;
      std::cout << "complete: " << ok << "/" << r.trials.size()
                << " connections built, output in " << ctx.cfg.out << "\n";
      return 0;
    }
    if (*res) {
      ExperimentContext ctx(resolve(res_o));
      const auto r = exp_resources(ctx);
      write_resource_outputs(ctx, r);
      std::cout << "resources: perspective " << r.mean_perspective_bytes << " bytes, header "
                << r.mean_header_bytes << " bytes, efficiency " << r.payload_efficiency
                << ", output in " << ctx.cfg.out << "\n";
      return 0;
    }
    if (*conn) {
      ExperimentContext ctx(resolve(conn_o));
      return run_connect(ctx, src, dst, verbose, std::cout) ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const CodecError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
