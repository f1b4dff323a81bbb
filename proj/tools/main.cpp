#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "corefine/errors.hpp"
#include "corefine/oracle.hpp"
#include "corefine/run.hpp"
#include "corefine/wta_gen.hpp"

using namespace corefine;

namespace {

void write_or_die(const std::string& path, const std::string& data) {
  std::ofstream os(path, std::ios::binary);
  os.write(data.data(), static_cast<std::streamsize>(data.size()));
  os.flush();
  if (!os) throw std::invalid_argument("cannot write " + path);
}

int cmd_minimize(const RunConfig& cfg, const std::string& part_out,
                 const std::string& stats_out) {
  RunOutcome out = run_minimize(cfg);
  std::ostringstream part;
  write_partition(part, out.names, out.result.partition.block_of);
  if (part_out.empty())
    std::cout << part.str();
  else
    write_or_die(part_out, part.str());
  if (!stats_out.empty()) {
    std::ostringstream st;
    write_stats(st, out.stats);
    write_or_die(stats_out, st.str());
  }
  return 0;
}

int cmd_generate(const WtaSpec& spec, const std::string& out_path) {
  NestedCoalgebra nc = generate_wta(spec);
  std::ostringstream os;
  write_coalgebra(os, nc);
  if (out_path.empty())
    std::cout << os.str();
  else
    write_or_die(out_path, os.str());
  return 0;
}

int cmd_oracle_check(const std::string& input) {
  NestedCoalgebra nc = parse_coalgebra(read_file(input));
  if (nc.names.size() > 6)
    throw std::invalid_argument("oracle-check handles at most 6 states");
  Partition oracle = brute_force_coarsest(nc);
  EncodedCoalgebra enc = desort(nc);
  RefineResult exact = refine_sequential(enc, RefineMode::Exact);
  RefineResult hashed = refine_sequential(enc, RefineMode::Hashed);
  auto line = [&](const char* tag, const std::vector<uint64_t>& b) {
    std::cout << tag << "=";
    for (size_t i = 0; i < b.size(); i++) std::cout << (i ? "," : "") << b[i];
    std::cout << "\n";
  };
  if (oracle.block_of == exact.partition.block_of &&
      oracle.block_of == hashed.partition.block_of) {
    std::cout << "blocks=" << oracle.num_blocks << "\nagree\n";
    return 0;
  }
  std::cout << "mismatch\n";
  line("oracle", oracle.block_of);
  line("seq-exact", exact.partition.block_of);
  line("seq-hashed", hashed.partition.block_of);
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"signature-based partition refinement for coalgebras"};
  app.require_subcommand(1);

  std::string min_input, min_engine = "seq-exact", min_part, min_stats, min_worker_bin;
  uint32_t min_workers = 1;
  uint64_t min_seed = 0;
  CLI::App* min = app.add_subcommand("minimize", "compute the coarsest behavioural partition");
  min->add_option("-i,--input", min_input, "coalgebra file")->required();
  min->add_option("-e,--engine", min_engine, "seq-exact | seq-hashed | dist-inproc | dist-tcp")
      ->check(CLI::IsMember({"seq-exact", "seq-hashed", "dist-inproc", "dist-tcp"}));
  min->add_option("-w,--workers", min_workers, "worker count for dist engines");
  min->add_option("--seed", min_seed, "scheduler seed (dist-inproc)");
  min->add_option("-o,--partition-out", min_part, "partition file (default stdout)");
  min->add_option("-s,--stats-out", min_stats, "stats file");
  min->add_option("--worker-binary", min_worker_bin,
                  "binary to exec for dist-tcp workers (default: this one)");

  uint64_t gen_n = 0, gen_seed = 0;
  uint32_t gen_r = 1;
  std::string gen_monoid = "nat-max", gen_out;
  CLI::App* gen = app.add_subcommand("generate-wta", "emit a random weighted tree automaton");
  gen->add_option("-n,--states", gen_n, "state count")->required();
  gen->add_option("-r,--rank", gen_r, "source tuple rank (1..5)");
  gen->add_option("-m,--monoid", gen_monoid, "nat-max | word-or | bool-or")
      ->check(CLI::IsMember({"nat-max", "word-or", "bool-or"}));
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("-o,--out", gen_out, "output file (default stdout)");

  std::string split_input, split_prefix;
  uint32_t split_w = 1;
  CLI::App* split = app.add_subcommand("split", "write per-worker slice files plus a manifest");
  split->add_option("-i,--input", split_input, "coalgebra file")->required();
  split->add_option("-w,--workers", split_w, "worker count")->required();
  split->add_option("-p,--out-prefix", split_prefix, "slice path prefix")->required();

  WorkerConfig wcfg;
  CLI::App* worker = app.add_subcommand("worker", "run one distributed worker over TCP");
  worker->add_option("--id", wcfg.id, "worker id")->required();
  worker->add_option("--roster", wcfg.roster_path, "roster file (lines: id host:port)")
      ->required();
  worker->add_option("--slice", wcfg.slice_path, "slice file for this worker")->required();
  worker->add_option("--listen-fd", wcfg.listen_fd,
                     "inherited listening socket (default: bind the roster address)");
  worker->add_option("--partition-out", wcfg.partition_out, "partition file (worker 0)");
  worker->add_option("--stats-out", wcfg.stats_out, "stats fragment file");

  std::string oc_input;
  CLI::App* oc = app.add_subcommand("oracle-check",
                                    "compare both engines against the brute-force oracle");
  oc->add_option("-i,--input", oc_input, "coalgebra file, at most 6 states")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (min->parsed()) {
      RunConfig cfg;
      cfg.input = min_input;
      engine_from_name(min_engine, cfg.engine);
      cfg.workers = min_workers;
      cfg.seed = min_seed;
      cfg.worker_binary = min_worker_bin;
      return cmd_minimize(cfg, min_part, min_stats);
    }
    if (gen->parsed()) {
      WtaSpec spec;
      spec.n = gen_n;
      spec.r = gen_r;
      spec.seed = gen_seed;
      spec.monoid = gen_monoid == "nat-max"   ? WtaMonoid::NatMax
                    : gen_monoid == "word-or" ? WtaMonoid::Word64Or
                                              : WtaMonoid::BoolOr;
      return cmd_generate(spec, gen_out);
    }
    if (split->parsed()) {
      split_coalgebra(split_input, split_w, split_prefix);
      return 0;
    }
    if (worker->parsed()) return run_tcp_worker(wcfg);
    if (oc->parsed()) return cmd_oracle_check(oc_input);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ProtocolError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const OverflowError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
