#pragma once

// Random weighted tree automata over ranked alphabets with four symbols:
// F X = M x M^(4 x X^r) for a weight monoid M, or 2 x P(4 x X^r) for the
// boolean or-monoid (transition present or absent). k = 50n transitions are
// drawn uniformly without replacement from the universe of all
// (symbol, target, source r-tuple) triples in lexicographic order, using
// Vitter's sequential-skip sampling, so generation is O(k) in memory and
// deterministic for a given seed. Weights come from an alphabet of at most
// 50 distinct non-unit monoid elements; every state also gets an output
// weight from the same alphabet.

#include <cstdint>
#include <random>
#include <vector>

#include "corefine/coalgebra.hpp"

namespace corefine {

enum class WtaMonoid { NatMax, Word64Or, BoolOr };

struct WtaSpec {
  uint64_t n = 0;
  uint32_t r = 1;  // source tuple rank, 1..5
  WtaMonoid monoid = WtaMonoid::NatMax;
  uint64_t seed = 0;
  // optional override, <= 50 distinct non-unit elements; empty picks the
  // default (1..50 for (N,max), 50 random nonzero words for (P64,or))
  std::vector<uint64_t> weight_alphabet;

  static constexpr uint32_t kSymbols = 4;
  static constexpr uint64_t kTransitionsPerState = 50;
};

// k ascending distinct indices uniformly from [0, universe); O(k) memory,
// expected O(k) time (sequential-skip with a linear-scan tail)
std::vector<uint64_t> sample_without_replacement(uint64_t universe, uint64_t k,
                                                 std::mt19937_64& g);

// throws std::invalid_argument when the rank is out of range, k exceeds the
// universe, or the universe does not fit the sampler's 53-bit index range
NestedCoalgebra generate_wta(const WtaSpec& spec);

}  // namespace corefine
