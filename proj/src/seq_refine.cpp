#include "corefine/seq_refine.hpp"

#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace corefine {

namespace {

// one full round; fills out[] with the new block ids and returns the number
// of distinct signatures
uint64_t refine_round(const EncodedCoalgebra& c, const std::vector<BlockId>& pi, RefineMode mode,
                      std::vector<BlockId>& out) {
  const uint64_t np = c.n_prime();
  out.resize(np);
  std::function<BlockId(StateId)> block_of = [&pi](StateId t) { return pi[t]; };

  std::vector<uint8_t> buf;
  if (mode == RefineMode::Exact) {
    std::unordered_map<std::string, uint64_t> dict;
    for (StateId s = 0; s < np; s++) {
      buf.clear();
      ByteWriter w(buf);
      canonical_bytes(compute_signature(c, s, block_of), w);
      auto [it, fresh] = dict.emplace(std::string(buf.begin(), buf.end()), dict.size());
      (void)fresh;
      out[s] = dense_block(it->second);
    }
    return dict.size();
  }

  std::unordered_set<BlockId, BlockIdHash> seen;
  for (StateId s = 0; s < np; s++) {
    buf.clear();
    ByteWriter w(buf);
    canonical_bytes(compute_signature(c, s, block_of), w);
    out[s] = hash_id(buf);
    seen.insert(out[s]);
  }
  return seen.size();
}

// new must refine old: every new block maps into one old block
void assert_refines(const std::vector<BlockId>& old_pi, const std::vector<BlockId>& new_pi) {
  std::unordered_map<BlockId, BlockId, BlockIdHash> into;
  for (size_t s = 0; s < new_pi.size(); s++) {
    auto [it, fresh] = into.emplace(new_pi[s], old_pi[s]);
    if (!fresh && it->second != old_pi[s])
      throw std::logic_error("refinement round merged blocks (hash collision?)");
  }
}

uint64_t distinct_blocks(const std::vector<BlockId>& pi) {
  std::unordered_set<BlockId, BlockIdHash> seen(pi.begin(), pi.end());
  return seen.size();
}

}  // namespace

RefineResult refine_sequential(const EncodedCoalgebra& c, RefineMode mode) {
  const uint64_t np = c.n_prime();
  std::vector<BlockId> pi(np, dense_block(0));

  RefineResult res;
  int64_t l = -1;
  int64_t l_new = np > 0 ? 1 : 0;
  std::vector<BlockId> next;
  while (l != l_new) {
    l = l_new;
    uint64_t z = refine_round(c, pi, mode, next);
    assert_refines(pi, next);
    pi.swap(next);
    l_new = static_cast<int64_t>(z);
    res.history.push_back(z);
    if (res.history.size() > np + 1)
      throw std::logic_error("refinement exceeded the n'+1 round bound");
  }
  res.iterations = res.history.size();

  std::unordered_map<BlockId, uint64_t, BlockIdHash> remap;
  res.partition.block_of.reserve(c.n);
  for (StateId s = 0; s < c.n; s++) {
    auto [it, fresh] = remap.emplace(pi[s], remap.size());
    (void)fresh;
    res.partition.block_of.push_back(it->second);
  }
  res.partition.num_blocks = remap.size();
  return res;
}

bool stabilize_check(const EncodedCoalgebra& c, const Partition& pi) {
  if (pi.block_of.size() != c.n_prime())
    throw std::invalid_argument("stabilize_check: partition must cover all encoded states");
  std::vector<BlockId> cur(pi.block_of.size());
  for (size_t s = 0; s < cur.size(); s++) cur[s] = dense_block(pi.block_of[s]);
  std::vector<BlockId> next;
  uint64_t z = refine_round(c, cur, RefineMode::Exact, next);
  // arbitrary partitions can induce fewer signature classes than they have
  // blocks (states split for no behavioural reason), so stability is "no
  // increase", not "equal"
  return z <= distinct_blocks(cur);
}

}  // namespace corefine
