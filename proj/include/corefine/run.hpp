#pragma once

// Drives one minimization end to end for the CLI: parse, desort, run the
// selected engine, collect stats. The TCP engine forks one worker process
// per rank (re-executing this binary's `worker` subcommand over pre-bound
// localhost listeners), so per-worker peak RSS in the stats file is a real,
// separately measured per-process number rather than a share of one heap.

#include <cstdint>
#include <string>
#include <vector>

#include "corefine/coalgebra.hpp"
#include "corefine/seq_refine.hpp"

namespace corefine {

enum class Engine { SeqExact, SeqHashed, DistInproc, DistTcp };

// "seq-exact" | "seq-hashed" | "dist-inproc" | "dist-tcp"
bool engine_from_name(const std::string& s, Engine& out);
const char* engine_name(Engine e);

struct RunConfig {
  std::string input;
  Engine engine = Engine::SeqExact;
  uint32_t workers = 1;
  uint64_t seed = 0;          // adversarial scheduler seed (dist-inproc only)
  std::string worker_binary;  // dist-tcp child image; empty = /proc/self/exe
};

struct RunOutcome {
  RefineResult result;
  std::vector<std::string> names;
  Stats stats;
};

RunOutcome run_minimize(const RunConfig& cfg);

// what the `worker` subcommand runs; returns a process exit code
struct WorkerConfig {
  uint32_t id = 0;
  std::string roster_path;
  std::string slice_path;
  int listen_fd = -1;         // pre-bound listening socket; -1 = bind roster[id]
  std::string partition_out;  // written by worker 0
  std::string stats_out;      // per-worker stats fragment
};
int run_tcp_worker(const WorkerConfig& cfg);

// writes <prefix>.<i>.slice per worker plus <prefix>.manifest
void split_coalgebra(const std::string& input_path, uint32_t w, const std::string& prefix);

// whole file as a string; ParseError when unreadable
std::string read_file(const std::string& path);

// peak resident set of this process so far, in bytes
uint64_t peak_rss_bytes();

}  // namespace corefine
