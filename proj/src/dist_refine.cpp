#include "corefine/dist_refine.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "corefine/hash128.hpp"
#include "corefine/signature.hpp"

namespace corefine {

std::pair<StateId, StateId> worker_range(uint64_t n_prime, uint32_t w, WorkerId i) {
  uint64_t q = n_prime / w, r = n_prime % w;
  uint64_t lo = i * q + std::min<uint64_t>(i, r);
  uint64_t len = q + (i < r ? 1 : 0);
  return {lo, lo + len};
}

WorkerId owner_of(StateId s, uint64_t n_prime, uint32_t w) {
  uint64_t q = n_prime / w, r = n_prime % w;
  uint64_t boundary = r * (q + 1);
  if (s < boundary) return static_cast<WorkerId>(s / (q + 1));
  return static_cast<WorkerId>(r + (s - boundary) / q);
}

// ---- slices ------------------------------------------------------------------

WorkerSlice make_slice(const EncodedCoalgebra& enc, uint32_t w, WorkerId i) {
  WorkerSlice sl;
  sl.term = pretty_print(*enc.sys.root);
  sl.n = enc.n;
  sl.n_prime = enc.n_prime();
  sl.world = w;
  sl.self = i;
  auto [lo, hi] = worker_range(sl.n_prime, w, i);
  sl.lo = lo;
  sl.hi = hi;
  sl.sort_of.assign(enc.sort_of.begin() + lo, enc.sort_of.begin() + hi);
  sl.f1.assign(enc.out.begin() + lo, enc.out.begin() + hi);
  uint64_t base = enc.edge_off[lo];
  sl.edge_off.reserve(hi - lo + 1);
  for (StateId s = lo; s <= hi; ++s) sl.edge_off.push_back(enc.edge_off[s] - base);
  sl.edges.assign(enc.edges.begin() + base, enc.edges.begin() + enc.edge_off[hi]);
  if (i == 0) sl.names = enc.names;
  return sl;
}

namespace {

constexpr uint32_t kSliceMagic = 0x4c535243u;  // "CRSL"
constexpr uint8_t kSliceVersion = 1;

WKind slot_kind(const TermSystem& sys, uint32_t sort, uint32_t slot) {
  if (sort >= sys.sorts.size()) throw ProtocolError("slice references an unknown sort");
  const auto& slots = sys.sorts[sort].layout.slots;
  if (slot >= slots.size()) throw ProtocolError("slice references an unknown slot");
  return slots[slot].payload;
}

}  // namespace

void write_slice(std::ostream& os, const WorkerSlice& sl) {
  TermSystem sys = build_term_system(parse_functor(sl.term));
  std::vector<uint8_t> buf;
  ByteWriter w(buf);
  w.u32(kSliceMagic);
  w.u8(kSliceVersion);
  w.str(sl.term);
  w.u64(sl.n);
  w.u64(sl.n_prime);
  w.u32(sl.world);
  w.u32(sl.self);
  w.u64(sl.lo);
  w.u64(sl.hi);
  uint64_t local = sl.hi - sl.lo;
  for (uint64_t k = 0; k < local; ++k) w.u32(sl.sort_of[k]);
  for (uint64_t k = 0; k < local; ++k) f1_bytes(sl.f1[k], w);
  for (uint64_t k = 0; k <= local; ++k) w.u64(sl.edge_off[k]);
  for (uint64_t k = 0; k < local; ++k) {
    for (uint64_t e = sl.edge_off[k]; e < sl.edge_off[k + 1]; ++e) {
      const EncEdge& ed = sl.edges[e];
      w.u32(ed.slot);
      w_bytes(slot_kind(sys, sl.sort_of[k], ed.slot), ed.payload, w);
      w.u64(ed.tgt);
    }
  }
  w.u32(static_cast<uint32_t>(sl.names.size()));
  for (const auto& nm : sl.names) w.str(nm);
  Hash128 h = murmur3_x64_128(buf.data(), buf.size(), kSigSeed);
  w.u64(h.lo);
  w.u64(h.hi);
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw ProtocolError("cannot write slice file");
}

WorkerSlice read_slice(std::istream& is) {
  std::vector<uint8_t> buf(std::istreambuf_iterator<char>(is), {});
  if (buf.size() < 16) throw ProtocolError("slice file truncated");
  Hash128 h = murmur3_x64_128(buf.data(), buf.size() - 16, kSigSeed);
  ByteReader tail(buf.data() + buf.size() - 16, 16);
  if (tail.u64() != h.lo || tail.u64() != h.hi)
    throw ProtocolError("slice file checksum mismatch");
  ByteReader r(buf.data(), buf.size() - 16);

  if (r.u32() != kSliceMagic) throw ProtocolError("not a slice file");
  uint8_t ver = r.u8();
  if (ver != kSliceVersion)
    throw ProtocolError("slice file version mismatch: got " + std::to_string(ver));
  WorkerSlice sl;
  sl.term = r.str();
  TermSystem sys = build_term_system(parse_functor(sl.term));
  sl.n = r.u64();
  sl.n_prime = r.u64();
  sl.world = r.u32();
  sl.self = r.u32();
  sl.lo = r.u64();
  sl.hi = r.u64();
  if (sl.world == 0 || sl.self >= sl.world || sl.lo > sl.hi || sl.hi > sl.n_prime)
    throw ProtocolError("slice header out of range");
  uint64_t local = sl.hi - sl.lo;
  sl.sort_of.resize(local);
  for (uint64_t k = 0; k < local; ++k) sl.sort_of[k] = r.u32();
  sl.f1.reserve(local);
  for (uint64_t k = 0; k < local; ++k) sl.f1.push_back(f1_read(r));
  sl.edge_off.resize(local + 1);
  for (uint64_t k = 0; k <= local; ++k) sl.edge_off[k] = r.u64();
  if (sl.edge_off[0] != 0) throw ProtocolError("slice edge offsets must start at 0");
  for (uint64_t k = 0; k < local; ++k)
    if (sl.edge_off[k + 1] < sl.edge_off[k]) throw ProtocolError("slice edge offsets not monotone");
  sl.edges.reserve(sl.edge_off[local]);
  for (uint64_t k = 0; k < local; ++k) {
    for (uint64_t e = sl.edge_off[k]; e < sl.edge_off[k + 1]; ++e) {
      EncEdge ed;
      ed.slot = r.u32();
      ed.payload = w_read(slot_kind(sys, sl.sort_of[k], ed.slot), r);
      ed.tgt = r.u64();
      if (ed.tgt >= sl.n_prime) throw ProtocolError("slice edge target out of range");
      sl.edges.push_back(std::move(ed));
    }
  }
  uint32_t names = r.u32();
  sl.names.reserve(names);
  for (uint32_t k = 0; k < names; ++k) sl.names.push_back(r.str());
  if (!r.done()) throw ProtocolError("trailing bytes in slice file");
  return sl;
}

// ---- worker ------------------------------------------------------------------

std::optional<DistResult> run_worker(const WorkerSlice& sl, Transport& net, WorkerTrace* tr) {
  const uint32_t w = sl.world;
  const WorkerId me = sl.self;
  if (net.world() != w || net.self() != me)
    throw ProtocolError("transport endpoint does not match the slice");
  TermSystem sys = build_term_system(parse_functor(sl.term));
  const uint64_t local = sl.hi - sl.lo;
  auto owned = [&](StateId s) { return s >= sl.lo && s < sl.hi; };

  // init: advertise which states this worker has edges into; the replies
  // fix In_s for owned s and the key set of the remote block cache
  std::vector<std::vector<WorkerId>> in_of(local);
  std::unordered_map<StateId, SigId> remote_block;
  {
    std::set<StateId> targets;
    for (const EncEdge& e : sl.edges) targets.insert(e.tgt);
    for (StateId t : targets) {
      if (!owned(t)) remote_block.emplace(t, SigId{});  // trivial block, round 1
      Message m;
      m.tag = Message::Inedge;
      m.state = t;
      net.send(owner_of(t, sl.n_prime, w), m);
    }
    Message d;
    d.tag = Message::Done;
    d.phase = Phase::Init;
    for (WorkerId to = 0; to < w; ++to) net.send(to, d);
    net.flush();
  }

  std::vector<Message> stash;  // traffic from peers already past the barrier
  uint32_t done_ahead = 0;
  uint32_t dones = 0;
  while (dones < w) {
    Message m = net.recv();
    switch (m.tag) {
      case Message::Inedge:
        if (!owned(m.state)) throw ProtocolError("INEDGE for a state this worker does not own");
        in_of[m.state - sl.lo].push_back(m.from);
        break;
      case Message::Done:
        if (m.phase == Phase::Init) ++dones;
        else if (m.phase == Phase::Refine && m.round == 1) ++done_ahead;
        else throw ProtocolError("DONE with an unexpected phase during init");
        break;
      case Message::Upd:
      case Message::Count:
        stash.push_back(std::move(m));
        break;
      default:
        throw ProtocolError("unexpected message during init");
    }
  }
  for (auto& v : in_of) {
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end())
      throw ProtocolError("duplicate INEDGE for one state from one worker");
    if (tr) tr->sum_in += v.size();
  }

  // refinement: pi holds the previous round's ids (all-trivial before round 1)
  std::vector<SigId> pi(local), pi_new(local);
  std::unordered_set<SigId, BlockIdHash> h;
  std::vector<uint64_t> history;
  int64_t l = -1, l_new = 0;
  uint64_t round = 0;
  std::vector<uint8_t> sig_buf;

  // worker 0 can see RESULT fragments already in the last sum exchange, when
  // a fast peer has all the parts and moves on before we collected ours
  std::vector<std::vector<std::pair<uint64_t, SigId>>> frags(me == 0 ? w : 0);
  std::vector<char> frag_seen(me == 0 ? w : 0, 0);
  uint32_t frags_got = 0;
  auto take_fragment = [&](Message&& m) {
    if (me != 0) throw ProtocolError("RESULT sent to a worker other than worker 0");
    if (frag_seen[m.from]) throw ProtocolError("duplicate RESULT fragment");
    frag_seen[m.from] = 1;
    frags[m.from] = std::move(m.fragment);
    ++frags_got;
  };

  const std::function<BlockId(StateId)> block_of = [&](StateId t) -> BlockId {
    if (owned(t)) return pi[t - sl.lo];
    auto it = remote_block.find(t);
    if (it == remote_block.end())
      throw ProtocolError("edge target missing from the remote block cache");
    return it->second;
  };

  while (l != l_new) {
    l = l_new;
    ++round;
    h.clear();
    uint64_t upd_sent = 0;

    for (uint64_t k = 0; k < local; ++k) {
      SigValue sv = compute_signature(
          sys, sl.sort_of[k], sl.f1[k],
          {sl.edges.data() + sl.edge_off[k], sl.edges.data() + sl.edge_off[k + 1]}, block_of);
      sig_buf.clear();
      ByteWriter bw(sig_buf);
      canonical_bytes(sv, bw);
      SigId id = hash_id(sig_buf);
      pi_new[k] = id;
      Message u;
      u.tag = Message::Upd;
      u.state = sl.lo + k;
      u.id = id;
      for (WorkerId to : in_of[k]) {
        net.send(to, u);
        ++upd_sent;
      }
      Message c;
      c.tag = Message::Count;
      c.id = id;
      net.send(static_cast<WorkerId>(id.lo % w), c);
    }
    Message d;
    d.tag = Message::Done;
    d.phase = Phase::Refine;
    d.round = round;
    for (WorkerId to = 0; to < w; ++to) net.send(to, d);
    net.flush();

    // drain this round: replay the stash first, then live traffic until all
    // DONEs are in; UPDs rewrite the remote cache (or cross-check an owned
    // state's freshly computed id), COUNTs feed the distinct-id set
    uint32_t sum_parts = 0;
    uint64_t sum_val = 0;
    dones = done_ahead;
    done_ahead = 0;
    auto apply = [&](const Message& m) {
      if (m.tag == Message::Upd) {
        if (owned(m.state)) {
          if (m.from != me) throw ProtocolError("UPD for an owned state from a foreign worker");
          if (!(pi_new[m.state - sl.lo] == m.id))
            throw ProtocolError("self UPD disagrees with the locally computed id");
        } else {
          auto it = remote_block.find(m.state);
          if (it == remote_block.end())
            throw ProtocolError("UPD for a state outside the remote block cache");
          it->second = m.id;
        }
      } else {
        h.insert(m.id);
      }
    };
    for (const Message& m : stash) apply(m);
    stash.clear();
    while (dones < w) {
      Message m = net.recv();
      switch (m.tag) {
        case Message::Upd:
        case Message::Count:
          apply(m);
          break;
        case Message::Done:
          if (m.phase != Phase::Refine || m.round != round)
            throw ProtocolError("DONE for an unexpected round");
          ++dones;
          break;
        case Message::SumPart:
          if (m.round != round) throw ProtocolError("SUMPART for an unexpected round");
          ++sum_parts;
          sum_val += m.value;
          break;
        default:
          throw ProtocolError("unexpected message during the refinement drain");
      }
    }

    // all-to-all |H| exchange; finishing it is the round barrier, so anything
    // else arriving here belongs to the next round and is stashed
    Message sp;
    sp.tag = Message::SumPart;
    sp.round = round;
    sp.value = h.size();
    for (WorkerId to = 0; to < w; ++to) net.send(to, sp);
    net.flush();
    while (sum_parts < w) {
      Message m = net.recv();
      switch (m.tag) {
        case Message::SumPart:
          if (m.round != round) throw ProtocolError("SUMPART for an unexpected round");
          ++sum_parts;
          sum_val += m.value;
          break;
        case Message::Upd:
        case Message::Count:
          stash.push_back(std::move(m));
          break;
        case Message::Done:
          if (m.phase != Phase::Refine || m.round != round + 1)
            throw ProtocolError("DONE for an unexpected round");
          ++done_ahead;
          break;
        case Message::Result:
          take_fragment(std::move(m));
          break;
        default:
          throw ProtocolError("unexpected message during the sum exchange");
      }
    }
    l_new = static_cast<int64_t>(sum_val);
    history.push_back(sum_val);
    if (round > sl.n_prime + 1)
      throw std::logic_error("refinement failed to stabilize within the round bound");
    if (tr) {
      tr->blocks.push_back(sum_val);
      tr->h_size.push_back(h.size());
      tr->upd_sent.push_back(upd_sent);
      tr->count_sent.push_back(local);
    }
    std::swap(pi, pi_new);
  }
  if (!stash.empty() || done_ahead != 0)
    throw ProtocolError("messages left over after stabilization");

  // gather: every worker ships its original states' final ids to worker 0,
  // which renumbers them dense in first-occurrence order over ascending ids
  Message res;
  res.tag = Message::Result;
  for (StateId s = sl.lo; s < std::min<uint64_t>(sl.hi, sl.n); ++s)
    res.fragment.emplace_back(s, pi[s - sl.lo]);
  net.send(0, res);
  net.flush();

  std::optional<DistResult> out;
  if (me == 0) {
    while (frags_got < w) {
      Message m = net.recv();
      if (m.tag != Message::Result) throw ProtocolError("expected a RESULT fragment");
      take_fragment(std::move(m));
    }
    DistResult r;
    r.partition.block_of.resize(sl.n);
    std::unordered_map<SigId, uint64_t, BlockIdHash> dense;
    uint64_t expect = 0;
    for (uint32_t from = 0; from < w; ++from) {
      for (const auto& [s, id] : frags[from]) {
        if (s != expect++) throw ProtocolError("RESULT fragments do not cover the states in order");
        auto [it, fresh] = dense.emplace(id, dense.size());
        (void)fresh;
        r.partition.block_of[s] = it->second;
      }
    }
    if (expect != sl.n) throw ProtocolError("RESULT fragments do not cover all states");
    r.partition.num_blocks = dense.size();

    // reported iterations: the first round whose count repeats the previous
    // one (1 state or more starts as one block, so z0 = 1; empty input z0 = 0)
    uint64_t z_prev = sl.n_prime > 0 ? 1 : 0;
    uint64_t its = history.size();
    for (uint64_t i = 0; i < history.size(); ++i) {
      if (history[i] == z_prev) {
        its = i + 1;
        break;
      }
      z_prev = history[i];
    }
    r.iterations = its;
    r.history.assign(history.begin(), history.begin() + its);

    Message fin;
    fin.tag = Message::Done;
    fin.phase = Phase::Result;
    for (WorkerId to = 0; to < w; ++to) net.send(to, fin);
    net.flush();
    out = std::move(r);
  }
  Message fin = net.recv();
  if (fin.tag != Message::Done || fin.phase != Phase::Result)
    throw ProtocolError("expected the final release");
  return out;
}

// ---- in-process orchestration -------------------------------------------------

DistResult refine_distributed_inproc(const EncodedCoalgebra& enc, uint32_t w, uint64_t seed,
                                     DistTrace* trace) {
  if (w == 0) throw std::invalid_argument("need at least one worker");
  InProcNet net(w, seed);
  std::vector<WorkerSlice> slices;
  slices.reserve(w);
  for (WorkerId i = 0; i < w; ++i) slices.push_back(make_slice(enc, w, i));
  if (trace) trace->workers.assign(w, WorkerTrace{});

  std::optional<DistResult> result;
  std::vector<std::exception_ptr> errs(w);
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (WorkerId i = 0; i < w; ++i) {
    threads.emplace_back([&, i] {
      try {
        auto r = run_worker(slices[i], net.endpoint(i),
                            trace ? &trace->workers[i] : nullptr);
        if (i == 0) result = std::move(r);
      } catch (...) {
        errs[i] = std::current_exception();
        // wake peers blocked in recv; the bogus DONE makes them fail loudly
        // (or, if they were only waiting for the final release, exit cleanly)
        Message poison;
        poison.tag = Message::Done;
        poison.phase = Phase::Result;
        for (WorkerId to = 0; to < w; ++to)
          if (to != i) net.endpoint(i).send(to, poison);
      }
    });
  }
  for (auto& t : threads) t.join();
  for (WorkerId i = 0; i < w; ++i)
    if (errs[i]) std::rethrow_exception(errs[i]);
  if (!result) throw std::logic_error("worker 0 produced no result");
  return std::move(*result);
}

}  // namespace corefine
