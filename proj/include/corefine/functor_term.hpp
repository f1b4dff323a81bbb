#pragma once

// Functor grammar over one variable X:
//
//   T ::= X | P T | B T | D T | M^(T) | C | T + T | T x T | T^A
//   C ::= N | A
//   A ::= {s1,...,sk} | k          (a numeral k denotes {0..k-1})
//   M ::= (Z,+) | (R,+) | (C,+) | (P64,or) | (N,max)
//
// ^ binds tighter than x binds tighter than +; + and x are right-associative;
// the prefix functors P, B, D and monoid applications bind tightest. Prefix
// chains may be juxtaposed without spaces ("DX", "PBX").
//
// A term is stratified into sorts for the flat encoding: the root is sort 0,
// and every child of a basic functor (P/B/D/M^) that is not literally X roots
// a further sort. Values of cut children become intermediate states; edges of
// the outer layer point at them. Within one sort the polynomial structure
// (+, x, ^A, constants) is flattened into a tagged label alphabet: every
// edge-producing leaf (an X in polynomial position, or a basic functor node)
// gets a dense slot index, and an edge label is (slot, payload).

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "corefine/weights.hpp"

namespace corefine {

enum class TermKind : uint8_t {
  Var,       // X
  ConstNat,  // N
  ConstSet,  // {a,b,...} or numeral
  Powerset,
  Bag,
  Dist,
  MonoidValued,
  Sum,
  Product,
  Exponent,
};

struct FunctorTerm;
using TermPtr = std::shared_ptr<const FunctorTerm>;

struct FunctorTerm {
  TermKind kind{};
  std::vector<std::string> elems;  // ConstSet elements / Exponent position names
  MonoidId monoid{};               // MonoidValued only
  TermPtr a;                       // unary child / left child / exponent base
  TermPtr b;                       // right child (Sum, Product)
};

bool term_equal(const FunctorTerm& x, const FunctorTerm& y);
bool is_basic(TermKind k);  // Powerset/Bag/Dist/MonoidValued

// line_no is reported in parse errors (the term is line 1 of a standalone
// string but may sit further down inside a coalgebra file)
TermPtr parse_functor(const std::string& text, size_t line_no = 1);
std::string pretty_print(const FunctorTerm& t);

// ---- label layout ----------------------------------------------------------

struct LayoutNode {
  const FunctorTerm* term = nullptr;
  int32_t slot = -1;        // >= 0 on edge-producing leaves (Var and basic nodes)
  uint32_t slot_lo = 0;     // slot range covered by this subtree: [slot_lo, slot_hi)
  uint32_t slot_hi = 0;
  std::vector<LayoutNode> kids;  // Sum/Product: 2; Exponent: one copy per position
};

struct SlotInfo {
  WKind payload = WKind::Unit;
  std::string path;  // human-readable tag path, e.g. "pr2.exp[a].P"
};

struct LabelLayout {
  LayoutNode root;
  std::vector<SlotInfo> slots;  // indexed by slot
};

// One sort of the desorted system: the subterm tree plus its flattened layout.
struct Sort {
  TermPtr tree;
  LabelLayout layout;
};

// Sort 0 is the root term; discovery order of cut children assigns the rest.
// cut_sort_of maps a basic node (by term-node identity) to the sort of its
// child, or to kDirect when the child is X and edges target states directly.
inline constexpr uint32_t kDirectSort = UINT32_MAX;

struct TermSystem {
  TermPtr root;
  std::vector<Sort> sorts;
  uint32_t child_sort(const FunctorTerm* basic_node) const;

  // internal: parallel arrays (node pointer -> sort id of its cut child)
  std::vector<const FunctorTerm*> cut_nodes;
  std::vector<uint32_t> cut_sorts;
};

TermSystem build_term_system(TermPtr root);

// Layout of a single sort tree (exposed for tests; build_term_system uses it).
LabelLayout label_layout(const FunctorTerm& sort_tree);

}  // namespace corefine
