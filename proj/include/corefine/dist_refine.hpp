#pragma once

// Distributed signature refinement over W workers. States are split into
// contiguous ranges; each worker keeps its slice of the flat encoding, a
// cache of block ids for the remote states its edges point at, and the set
// In_s of workers that have edges into each owned state s.
//
// One round: compute every owned signature under the previous partition,
// hash it to a 128-bit block id, push UPD(s, id) to In_s and COUNT(id) to
// the id's counter worker, broadcast DONE, drain until W DONEs arrived,
// then all-to-all SUMPART the local distinct-id counts. The summed count
// drives the same "stop when the block count repeats" loop as the
// sequential engine; the SUMPART exchange doubles as the round barrier.
// Messages from a peer that is already past the barrier are stashed and
// replayed in the next round's drain.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "corefine/coalgebra.hpp"
#include "corefine/seq_refine.hpp"
#include "corefine/transport.hpp"

namespace corefine {

using WorkerId = uint32_t;

// ceiling split into contiguous ranges: n'=10, w=4 gives 3,3,2,2; ranges may
// be empty when w > n'
std::pair<StateId, StateId> worker_range(uint64_t n_prime, uint32_t w, WorkerId i);
WorkerId owner_of(StateId s, uint64_t n_prime, uint32_t w);

// Static per-worker data. Slice files carry the functor term so a worker
// process can rebuild the sort system on its own; names travel only in
// worker 0's slice (it assembles the final partition).
struct WorkerSlice {
  std::string term;
  uint64_t n = 0;        // original states (global)
  uint64_t n_prime = 0;  // desorted states (global)
  uint32_t world = 1;
  WorkerId self = 0;
  StateId lo = 0, hi = 0;           // owned range [lo, hi)
  std::vector<uint32_t> sort_of;    // hi-lo entries
  std::vector<F1Node> f1;           // hi-lo entries
  std::vector<uint64_t> edge_off;   // (hi-lo)+1 entries, rebased to 0
  std::vector<EncEdge> edges;
  std::vector<std::string> names;   // worker 0 only
};

WorkerSlice make_slice(const EncodedCoalgebra& enc, uint32_t w, WorkerId i);

// binary slice files: magic, version, payload, trailing 128-bit checksum
void write_slice(std::ostream& os, const WorkerSlice& slice);
WorkerSlice read_slice(std::istream& is);

// per-round protocol counters, for invariant checks in tests
struct WorkerTrace {
  std::vector<uint64_t> blocks;      // global block count after each round
  std::vector<uint64_t> h_size;      // |H| on this worker per round
  std::vector<uint64_t> upd_sent;    // UPD messages sent per round
  std::vector<uint64_t> count_sent;  // COUNT messages sent per round
  uint64_t sum_in = 0;               // sum of |In_s| over owned s
};

struct DistTrace {
  std::vector<WorkerTrace> workers;
};

struct DistResult {
  Partition partition;  // original states only, dense first-occurrence ids
  uint64_t iterations = 0;
  std::vector<uint64_t> history;
};

// Runs one worker to completion. Returns the result on worker 0, nullopt on
// the rest. Throws ProtocolError on any message the protocol does not allow
// at the current position.
std::optional<DistResult> run_worker(const WorkerSlice& slice, Transport& net,
                                     WorkerTrace* trace = nullptr);

// All W workers as threads over an InProcNet with the given scheduler seed.
DistResult refine_distributed_inproc(const EncodedCoalgebra& enc, uint32_t w, uint64_t seed,
                                     DistTrace* trace = nullptr);

}  // namespace corefine
