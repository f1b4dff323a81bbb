#pragma once

// Brute-force ground truth on tiny instances: enumerate every partition of
// the original states and keep the coarsest one whose blocks have equal
// one-step images. Images are computed by mapping the parsed nested values
// through the partition directly — deliberately not via the flat encoding or
// the signature combinators, so agreement with the engines checks both.

#include <cstdint>
#include <vector>

#include "corefine/coalgebra.hpp"
#include "corefine/seq_refine.hpp"

namespace corefine {

// all partitions of {0..n-1} as restricted growth strings (first-occurrence
// dense numbering); n <= 6 in anger, Bell(6) = 203
std::vector<std::vector<uint64_t>> all_partitions(size_t n);

// the image of one nested value under a partition of the original states:
// refs relabelled, sets deduplicated, map entries merged by the monoid
Value canon_image(const FunctorTerm& t, const Value& v, const std::vector<uint64_t>& pi);

Partition brute_force_coarsest(const NestedCoalgebra& nc);

}  // namespace corefine
