#pragma once

// Sequential signature refinement: start from the trivial partition, replace
// it each round by the partition induced by the states' signatures, stop as
// soon as the block count repeats (same size + refinement implies equality).

#include <cstdint>
#include <vector>

#include "corefine/signature.hpp"

namespace corefine {

struct Partition {
  std::vector<uint64_t> block_of;
  uint64_t num_blocks = 0;
};

// Exact: per-round dictionary canonical_bytes -> dense fresh ids, collision
// free. Hashed: the 128-bit digest is the block identity, as the distributed
// engine uses.
enum class RefineMode { Exact, Hashed };

struct RefineResult {
  // original states only, block ids dense in first-occurrence order
  Partition partition;
  uint64_t iterations = 0;        // rounds executed = stabilization round
  std::vector<uint64_t> history;  // block count after each round; strictly
                                  // increasing, then repeats once at the end
};

RefineResult refine_sequential(const EncodedCoalgebra& c, RefineMode mode);

// true iff one refinement step from pi (given over all n' states) does not
// increase the block count
bool stabilize_check(const EncodedCoalgebra& c, const Partition& pi);

struct BlockIdHash {
  size_t operator()(const BlockId& b) const {
    return static_cast<size_t>(b.lo ^ (b.hi * 0x9e3779b97f4a7c15ull));
  }
};

}  // namespace corefine
