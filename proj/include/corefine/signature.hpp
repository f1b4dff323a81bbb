#pragma once

// Signatures: the image of one state's flat-encoded behaviour under a
// partition. A signature mirrors the sort's term with block ids at the
// leaves; sets/maps are canonically sorted by block id, map entries are
// monoid-merged per block with unit results dropped. Equal behaviour under
// the partition yields byte-identical canonical encodings, so block
// identities can be dense dictionary ids (exact mode) or 128-bit digests of
// the bytes (hashed mode).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "corefine/coalgebra.hpp"
#include "corefine/hash128.hpp"

namespace corefine {

// Exact mode uses {0, dense id}; hashed mode uses the full digest.
struct BlockId {
  uint64_t hi = 0;
  uint64_t lo = 0;
  friend auto operator<=>(const BlockId&, const BlockId&) = default;
};
using SigId = BlockId;

inline BlockId dense_block(uint64_t id) { return BlockId{0, id}; }

struct SigNode {
  enum class K : uint8_t { Const, Block, Set, Map, Sum, Tuple };
  K k{};
  uint64_t num = 0;              // Const: element; Sum: side
  BlockId blk{};                 // Block leaf
  WKind wk = WKind::Unit;        // Map
  std::vector<BlockId> blocks;   // Set elements / Map keys (strictly ascending)
  std::vector<Payload> weights;  // Map, parallel to blocks, no units
  std::vector<SigNode> kids;     // Sum: 1; Tuple: component count
};

struct SigValue {
  uint32_t sort = 0;
  SigNode root;
};

// an edge already mapped through the partition
struct TaggedEdge {
  uint32_t slot = 0;
  Payload payload;
  BlockId blk{};
};

// Basic/constant leaves: P -> sorted distinct blocks, B/D/M^ -> per-block
// monoid sums (units dropped), constants -> the stored element. Throws
// OverflowError from checked 64-bit monoid sums.
SigNode sig_basic(const FunctorTerm& t, const F1Node& f1,
                  std::vector<std::pair<Payload, BlockId>> edges);

// Polynomial combinators over the flattened layout: components receive the
// slot-range-filtered sub-bags. sig_coproduct throws ProtocolError when an
// edge's slot falls outside the summand picked by f1.
SigNode sig_product(const LayoutNode& nd, const F1Node& f1, std::span<const TaggedEdge> edges);
SigNode sig_coproduct(const LayoutNode& nd, const F1Node& f1, std::span<const TaggedEdge> edges);

// Full recursion along the sort's layout; edges must be grouped by ascending
// slot (encode_flat emits them that way).
SigValue compute_signature(const TermSystem& sys, uint32_t sort, const F1Node& f1,
                           std::span<const EncEdge> edges,
                           const std::function<BlockId(StateId)>& block_of);
SigValue compute_signature(const EncodedCoalgebra& c, StateId s,
                           const std::function<BlockId(StateId)>& block_of);

// Versioned injective encoding: version byte 0x01, u32 sort, then one tag
// byte per node (Const=1 Block=2 Set=3 Map=4 Sum=5 Tuple=6) with fixed-width
// little-endian integers, length-prefixed magnitudes for rationals.
void canonical_bytes(const SigValue& v, ByteWriter& w);
std::vector<uint8_t> canonical_bytes(const SigValue& v);

SigId hash_id(std::span<const uint8_t> bytes);

}  // namespace corefine
