#pragma once

// Coalgebra input format:
//
//   line 1: functor term
//   blank lines ignored
//   one line per state:  <name>: <value>
//
// Value syntax follows the term: state names for X, element names/naturals
// for constants, {v, ...} for powerset, {key: weight, ...} for bag /
// distribution / monoid-valued maps, (v1, ..., vk) for right-nested products,
// {pos: v, ...} for exponents, and inl/inr prefixes for sums. Rational
// weights accept decimal ("0.5") and fraction ("1/2") literals; (P64,or)
// weights accept 0x hex. Complex weights are written "(re, im)".
//
// Parsed values are canonicalized: set elements and map keys are sorted by
// their canonical byte encodings (duplicates rejected), unit-weight map
// entries are dropped, distribution weights must be nonnegative and sum to
// exactly 1.
//
// Desorting flattens the nested system: every value sitting under a basic
// functor whose child is not X becomes a fresh intermediate state of the
// child's sort, per occurrence. States are numbered with the original states
// first (input order), then intermediates in discovery order. Each state
// carries an F1 shape (constants, summand tags, totals) and a bag of labelled
// edges (slot, payload, target).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "corefine/bytes.hpp"
#include "corefine/functor_term.hpp"
#include "corefine/weights.hpp"

namespace corefine {

using StateId = uint64_t;

struct Value {
  enum class K : uint8_t { Ref, Elem, Set, Map, Sum, Tuple };
  K k{};
  uint64_t num = 0;              // Ref: state id; Elem: element index or natural; Sum: side
  std::vector<Value> items;      // Set / Tuple / Exponent components / Sum: single child / Map keys
  std::vector<Payload> weights;  // Map only, parallel to items
};

struct NestedCoalgebra {
  TermPtr term;
  std::vector<std::string> names;
  std::vector<Value> values;
};

NestedCoalgebra parse_coalgebra(const std::string& text);

// payload kind carried by a Bag/Dist/MonoidValued node's entries
WKind map_weight_kind(const FunctorTerm& t);

// canonical value encoding (sorting, equality, duplicate detection)
void value_bytes(const FunctorTerm& t, const Value& v, ByteWriter& w);
std::vector<uint8_t> value_bytes(const FunctorTerm& t, const Value& v);

std::string print_value(const FunctorTerm& t, const Value& v,
                        const std::vector<std::string>& names);
void write_coalgebra(std::ostream& os, const NestedCoalgebra& nc);

// ---- flat encoding ----------------------------------------------------------

struct F1Node {
  enum class K : uint8_t { Unit, Elem, Flag, Total, Sum, Tuple };
  K k{};
  uint64_t num = 0;           // Elem: value; Flag: 0/1; Sum: side
  Payload total;              // Total only
  std::vector<F1Node> kids;   // Sum: 1; Tuple: component count
};

bool f1_equal(const F1Node& a, const F1Node& b);
void f1_bytes(const F1Node& f, ByteWriter& w);  // self-describing, for slice files
F1Node f1_read(ByteReader& r);

struct EncEdge {
  uint32_t slot = 0;
  Payload payload;
  StateId tgt = 0;
};

struct EncodedCoalgebra {
  TermSystem sys;
  uint64_t n = 0;  // original states
  std::vector<std::string> names;
  std::vector<uint32_t> sort_of;   // n' entries
  std::vector<F1Node> out;         // n' entries
  std::vector<uint64_t> edge_off;  // n'+1 entries
  std::vector<EncEdge> edges;      // m entries, grouped by ascending source

  uint64_t n_prime() const { return sort_of.size(); }
  uint64_t m() const { return edges.size(); }
  std::span<const EncEdge> edges_of(StateId s) const {
    return {edges.data() + edge_off[s], edges.data() + edge_off[s + 1]};
  }
};

EncodedCoalgebra desort(const NestedCoalgebra& nc);

// Encodes one value at one sort. alloc is called once per inner occurrence
// that must become an intermediate state and returns its id; edges are
// emitted in canonical value order.
using AllocFn =
    std::function<StateId(uint32_t child_sort, const Value& inner)>;
std::pair<F1Node, std::vector<EncEdge>> encode_flat(const TermSystem& sys, uint32_t sort,
                                                    const Value& v, const AllocFn& alloc);

// ---- outputs ----------------------------------------------------------------

// "name: block" lines, input order, blocks renumbered by first occurrence
void write_partition(std::ostream& os, const std::vector<std::string>& names,
                     const std::vector<uint64_t>& block_of);

struct Stats {
  uint64_t n = 0;
  uint64_t m = 0;
  uint64_t n_prime = 0;
  uint64_t iterations = 0;
  uint64_t blocks = 0;
  uint64_t wall_ms = 0;
  uint64_t peak_rss_bytes_per_worker = 0;
  uint64_t splitting_rounds = 0;
};

void write_stats(std::ostream& os, const Stats& st);

}  // namespace corefine
