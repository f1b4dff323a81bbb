#include "corefine/signature.hpp"

#include <algorithm>
#include <cassert>

namespace corefine {

namespace {

SigNode set_sig(std::vector<BlockId> blocks) {
  std::sort(blocks.begin(), blocks.end());
  blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
  SigNode n;
  n.k = SigNode::K::Set;
  n.blocks = std::move(blocks);
  return n;
}

SigNode map_sig(WKind wk, std::vector<std::pair<BlockId, Payload>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SigNode n;
  n.k = SigNode::K::Map;
  n.wk = wk;
  size_t i = 0;
  while (i < entries.size()) {
    BlockId blk = entries[i].first;
    Payload sum = std::move(entries[i].second);
    for (i++; i < entries.size() && entries[i].first == blk; i++)
      sum = w_add(wk, sum, entries[i].second);
    // merged weights can cancel to the unit ((Z,+), (C,+)); such entries
    // are absent from a finitely supported map
    if (w_is_unit(wk, sum)) continue;
    n.blocks.push_back(blk);
    n.weights.push_back(std::move(sum));
  }
  return n;
}

// recursion over the layout; edges are slot-ascending so every subtree owns
// a contiguous subspan
SigNode sig_at(const LayoutNode& nd, const F1Node& f1, std::span<const TaggedEdge> edges) {
  const FunctorTerm* t = nd.term;
  switch (t->kind) {
    case TermKind::Var: {
      if (edges.size() != 1 || edges[0].slot != static_cast<uint32_t>(nd.slot))
        throw ProtocolError("malformed encoding: a next-state component needs exactly one edge");
      SigNode n;
      n.k = SigNode::K::Block;
      n.blk = edges[0].blk;
      return n;
    }
    case TermKind::ConstNat:
    case TermKind::ConstSet: {
      if (!edges.empty()) throw ProtocolError("malformed encoding: edges under a constant");
      SigNode n;
      n.k = SigNode::K::Const;
      n.num = f1.num;
      return n;
    }
    case TermKind::Powerset: {
      std::vector<BlockId> blocks;
      blocks.reserve(edges.size());
      for (const TaggedEdge& e : edges) blocks.push_back(e.blk);
      return set_sig(std::move(blocks));
    }
    case TermKind::Bag:
    case TermKind::Dist:
    case TermKind::MonoidValued: {
      WKind wk = t->kind == TermKind::Bag    ? WKind::BagCount
                 : t->kind == TermKind::Dist ? WKind::Rat
                                             : wkind_of(t->monoid);
      std::vector<std::pair<BlockId, Payload>> entries;
      entries.reserve(edges.size());
      for (const TaggedEdge& e : edges) entries.emplace_back(e.blk, e.payload);
      return map_sig(wk, std::move(entries));
    }
    case TermKind::Sum: return sig_coproduct(nd, f1, edges);
    case TermKind::Product:
    case TermKind::Exponent: return sig_product(nd, f1, edges);
  }
  assert(false);
  return {};
}

std::span<const TaggedEdge> sub_range(std::span<const TaggedEdge> edges, const LayoutNode& kid) {
  auto lo = std::partition_point(edges.begin(), edges.end(),
                                 [&](const TaggedEdge& e) { return e.slot < kid.slot_lo; });
  auto hi = std::partition_point(lo, edges.end(),
                                 [&](const TaggedEdge& e) { return e.slot < kid.slot_hi; });
  return {lo, hi};
}

}  // namespace

SigNode sig_basic(const FunctorTerm& t, const F1Node& f1,
                  std::vector<std::pair<Payload, BlockId>> edges) {
  switch (t.kind) {
    case TermKind::ConstNat:
    case TermKind::ConstSet: {
      if (!edges.empty()) throw ProtocolError("malformed encoding: edges under a constant");
      SigNode n;
      n.k = SigNode::K::Const;
      n.num = f1.num;
      return n;
    }
    case TermKind::Powerset: {
      std::vector<BlockId> blocks;
      blocks.reserve(edges.size());
      for (const auto& e : edges) blocks.push_back(e.second);
      return set_sig(std::move(blocks));
    }
    case TermKind::Bag:
    case TermKind::Dist:
    case TermKind::MonoidValued: {
      WKind wk = t.kind == TermKind::Bag    ? WKind::BagCount
                 : t.kind == TermKind::Dist ? WKind::Rat
                                            : wkind_of(t.monoid);
      std::vector<std::pair<BlockId, Payload>> entries;
      entries.reserve(edges.size());
      for (auto& e : edges) entries.emplace_back(e.second, std::move(e.first));
      return map_sig(wk, std::move(entries));
    }
    default: throw ProtocolError("sig_basic called on a polynomial node");
  }
}

SigNode sig_product(const LayoutNode& nd, const F1Node& f1, std::span<const TaggedEdge> edges) {
  if (f1.k != F1Node::K::Tuple || f1.kids.size() != nd.kids.size())
    throw ProtocolError("malformed encoding: tuple state shape mismatch");
  SigNode n;
  n.k = SigNode::K::Tuple;
  n.kids.reserve(nd.kids.size());
  for (size_t i = 0; i < nd.kids.size(); i++)
    n.kids.push_back(sig_at(nd.kids[i], f1.kids[i], sub_range(edges, nd.kids[i])));
  return n;
}

SigNode sig_coproduct(const LayoutNode& nd, const F1Node& f1, std::span<const TaggedEdge> edges) {
  if (f1.k != F1Node::K::Sum || f1.num >= nd.kids.size())
    throw ProtocolError("malformed encoding: summand state shape mismatch");
  const LayoutNode& kid = nd.kids[f1.num];
  for (const TaggedEdge& e : edges)
    if (e.slot < kid.slot_lo || e.slot >= kid.slot_hi)
      throw ProtocolError("edge tagged outside the summand taken by its state");
  SigNode n;
  n.k = SigNode::K::Sum;
  n.num = f1.num;
  n.kids.push_back(sig_at(kid, f1.kids[0], edges));
  return n;
}

SigValue compute_signature(const TermSystem& sys, uint32_t sort, const F1Node& f1,
                           std::span<const EncEdge> edges,
                           const std::function<BlockId(StateId)>& block_of) {
  std::vector<TaggedEdge> tagged;
  tagged.reserve(edges.size());
  for (const EncEdge& e : edges) tagged.push_back({e.slot, e.payload, block_of(e.tgt)});
  SigValue v;
  v.sort = sort;
  v.root = sig_at(sys.sorts[sort].layout.root, f1, tagged);
  return v;
}

SigValue compute_signature(const EncodedCoalgebra& c, StateId s,
                           const std::function<BlockId(StateId)>& block_of) {
  return compute_signature(c.sys, c.sort_of[s], c.out[s], c.edges_of(s), block_of);
}

namespace {

void sig_bytes(const SigNode& n, ByteWriter& w) {
  switch (n.k) {
    case SigNode::K::Const:
      w.u8(1);
      w.u64(n.num);
      break;
    case SigNode::K::Block:
      w.u8(2);
      w.u64(n.blk.hi);
      w.u64(n.blk.lo);
      break;
    case SigNode::K::Set:
      w.u8(3);
      w.u32(static_cast<uint32_t>(n.blocks.size()));
      for (const BlockId& b : n.blocks) {
        w.u64(b.hi);
        w.u64(b.lo);
      }
      break;
    case SigNode::K::Map:
      w.u8(4);
      w.u8(static_cast<uint8_t>(n.wk));
      w.u32(static_cast<uint32_t>(n.blocks.size()));
      for (size_t i = 0; i < n.blocks.size(); i++) {
        w.u64(n.blocks[i].hi);
        w.u64(n.blocks[i].lo);
        w_bytes(n.wk, n.weights[i], w);
      }
      break;
    case SigNode::K::Sum:
      w.u8(5);
      w.u8(static_cast<uint8_t>(n.num));
      sig_bytes(n.kids[0], w);
      break;
    case SigNode::K::Tuple:
      w.u8(6);
      w.u32(static_cast<uint32_t>(n.kids.size()));
      for (const SigNode& kid : n.kids) sig_bytes(kid, w);
      break;
  }
}

}  // namespace

void canonical_bytes(const SigValue& v, ByteWriter& w) {
  w.u8(0x01);
  w.u32(v.sort);
  sig_bytes(v.root, w);
}

std::vector<uint8_t> canonical_bytes(const SigValue& v) {
  std::vector<uint8_t> buf;
  ByteWriter w(buf);
  canonical_bytes(v, w);
  return buf;
}

SigId hash_id(std::span<const uint8_t> bytes) {
  Hash128 h = murmur3_x64_128(bytes.data(), bytes.size(), kSigSeed);
  return SigId{h.hi, h.lo};
}

}  // namespace corefine
