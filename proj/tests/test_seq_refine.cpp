#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "corefine/seq_refine.hpp"

using namespace corefine;

namespace {

const char* kMarkov =
    "DX\n"
    "q: {p: 0.5, r: 0.5}\n"
    "p: {q: 0.4, r: 0.6}\n"
    "r: {r: 1}\n";

const char* kDfa =
    "{f,n} x X^{a,b}\n"
    "q: (n, {a: p, b: r})\n"
    "p: (n, {a: q, b: r})\n"
    "r: (f, {a: q, b: p})\n";

void check_history_shape(const RefineResult& r, uint64_t n_prime) {
  REQUIRE(r.iterations == r.history.size());
  REQUIRE(r.iterations >= 1);
  CHECK(r.iterations <= n_prime + 1);
  for (size_t i = 0; i + 2 < r.history.size(); i++) CHECK(r.history[i] < r.history[i + 1]);
  if (r.history.size() >= 2)
    CHECK(r.history[r.history.size() - 2] == r.history.back());
}

// random transition systems over P X
std::string random_ts(std::mt19937_64& g, size_t n) {
  std::ostringstream os;
  os << "P X\n";
  for (size_t i = 0; i < n; i++) {
    os << "s" << i << ": {";
    bool first = true;
    for (size_t j = 0; j < n; j++) {
      if ((g() & 3) != 0) continue;
      os << (first ? "" : ", ") << "s" << j;
      first = false;
    }
    os << "}\n";
  }
  return os.str();
}

// random two-letter DFAs
std::string random_dfa(std::mt19937_64& g, size_t n) {
  std::ostringstream os;
  os << "{f,n} x X^{a,b}\n";
  for (size_t i = 0; i < n; i++)
    os << "s" << i << ": (" << (g() % 2 ? "f" : "n") << ", {a: s" << g() % n << ", b: s"
       << g() % n << "})\n";
  return os.str();
}

// random weighted tree automata with nested sorts
std::string random_wta(std::mt19937_64& g, size_t n) {
  std::ostringstream os;
  os << "N x (N,max)^(3 x X^2)\n";
  for (size_t i = 0; i < n; i++) {
    os << "s" << i << ": (" << g() % 3 << ", {";
    size_t k = g() % 3;
    std::set<std::string> keys;
    while (keys.size() < k) {
      std::ostringstream key;
      key << "(" << g() % 3 << ", {0: s" << g() % n << ", 1: s" << g() % n << "})";
      keys.insert(key.str());
    }
    bool first = true;
    for (const std::string& key : keys) {
      os << (first ? "" : ", ") << key << ": " << 1 + g() % 5;
      first = false;
    }
    os << "})\n";
  }
  return os.str();
}

// the partition over all n' states: treat every state as original
Partition full_partition(const EncodedCoalgebra& c, RefineMode mode) {
  EncodedCoalgebra wide = c;
  wide.n = c.n_prime();
  wide.names.clear();
  return refine_sequential(wide, mode).partition;
}

}  // namespace

TEST_CASE("dfa refines in two rounds to two blocks") {
  EncodedCoalgebra c = desort(parse_coalgebra(kDfa));
  for (RefineMode mode : {RefineMode::Exact, RefineMode::Hashed}) {
    RefineResult r = refine_sequential(c, mode);
    CHECK(r.iterations == 2);
    CHECK(r.history == std::vector<uint64_t>{2, 2});
    CHECK(r.partition.block_of == std::vector<uint64_t>{0, 0, 1});
    CHECK(r.partition.num_blocks == 2);
  }
}

TEST_CASE("markov chain collapses to one block in one round") {
  EncodedCoalgebra c = desort(parse_coalgebra(kMarkov));
  for (RefineMode mode : {RefineMode::Exact, RefineMode::Hashed}) {
    RefineResult r = refine_sequential(c, mode);
    CHECK(r.iterations == 1);
    CHECK(r.history == std::vector<uint64_t>{1});
    CHECK(r.partition.block_of == std::vector<uint64_t>{0, 0, 0});
    CHECK(r.partition.num_blocks == 1);
  }
}

TEST_CASE("pure constant coalgebras key states by their constant") {
  EncodedCoalgebra two = desort(parse_coalgebra("{f,n}\na: f\nb: n\nc: f\n"));
  RefineResult r = refine_sequential(two, RefineMode::Exact);
  CHECK(r.partition.block_of == std::vector<uint64_t>{0, 1, 0});
  // the partition is final after round one; one more round detects that
  CHECK(r.iterations == 2);
  CHECK(r.history == std::vector<uint64_t>{2, 2});

  EncodedCoalgebra same = desort(parse_coalgebra("{f,n}\na: f\nb: f\n"));
  RefineResult rs = refine_sequential(same, RefineMode::Exact);
  CHECK(rs.iterations == 1);
  CHECK(rs.partition.num_blocks == 1);
}

TEST_CASE("empty coalgebra refines trivially") {
  EncodedCoalgebra c = desort(parse_coalgebra("P X\n"));
  RefineResult r = refine_sequential(c, RefineMode::Exact);
  CHECK(r.partition.block_of.empty());
  CHECK(r.partition.num_blocks == 0);
  CHECK(r.iterations == 1);
  CHECK(r.history == std::vector<uint64_t>{0});
}

TEST_CASE("stabilize check distinguishes stable from refinable partitions") {
  EncodedCoalgebra c = desort(parse_coalgebra(kDfa));
  CHECK(stabilize_check(c, Partition{{0, 0, 1}, 2}));
  CHECK_FALSE(stabilize_check(c, Partition{{0, 0, 0}, 1}));
  CHECK(stabilize_check(c, Partition{{0, 1, 2}, 3}));  // identity is always stable
  CHECK_THROWS_AS(stabilize_check(c, Partition{{0, 0}, 1}), std::invalid_argument);

  // identity stays stable even when states are behaviourally equal
  EncodedCoalgebra dup = desort(parse_coalgebra("P X\na: {c}\nb: {c}\nc: {}\n"));
  CHECK(stabilize_check(dup, Partition{{0, 1, 2}, 3}));
  CHECK(stabilize_check(dup, Partition{{0, 0, 1}, 2}));
}

TEST_CASE("deterministic across modes and monotone on random instances") {
  std::mt19937_64 g(20260814);
  for (int trial = 0; trial < 60; trial++) {
    std::string src;
    switch (trial % 3) {
      case 0: src = random_ts(g, 2 + g() % 7); break;
      case 1: src = random_dfa(g, 2 + g() % 7); break;
      default: src = random_wta(g, 2 + g() % 5); break;
    }
    CAPTURE(src);
    EncodedCoalgebra c = desort(parse_coalgebra(src));
    RefineResult exact = refine_sequential(c, RefineMode::Exact);
    RefineResult hashed = refine_sequential(c, RefineMode::Hashed);
    check_history_shape(exact, c.n_prime());
    CHECK(exact.history == hashed.history);
    CHECK(exact.partition.block_of == hashed.partition.block_of);
    CHECK(exact.partition.num_blocks == hashed.partition.num_blocks);

    Partition full = full_partition(c, RefineMode::Exact);
    CHECK(stabilize_check(c, full));
    // the result partition agrees with the full one on original states
    std::unordered_map<uint64_t, uint64_t> match;
    for (StateId s = 0; s < c.n; s++) {
      auto [it, fresh] = match.emplace(exact.partition.block_of[s], full.block_of[s]);
      CHECK(it->second == full.block_of[s]);
      (void)fresh;
    }
  }
}

TEST_CASE("nested sorts refine without mixing intermediates into state blocks") {
  EncodedCoalgebra c = desort(parse_coalgebra(
      "N x (N,max)^(3 x X^2)\n"
      "s0: (1, {(0, {0: s0, 1: s1}): 2})\n"
      "s1: (1, {})\n"));
  RefineResult r = refine_sequential(c, RefineMode::Exact);
  CHECK(r.partition.block_of == std::vector<uint64_t>{0, 1});
  check_history_shape(r, c.n_prime());
}
