#include "corefine/oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace corefine {

std::vector<std::vector<uint64_t>> all_partitions(size_t n) {
  std::vector<std::vector<uint64_t>> out;
  std::vector<uint64_t> rgs(n, 0);
  // restricted growth: rgs[0]=0, rgs[i] <= 1 + max(prefix)
  auto emit = [&](auto&& self, size_t i, uint64_t mx) -> void {
    if (i == n) {
      out.push_back(rgs);
      return;
    }
    for (uint64_t v = 0; v <= mx + 1; v++) {
      rgs[i] = v;
      self(self, i + 1, std::max(mx, v));
    }
  };
  if (n == 0) {
    out.push_back({});
    return out;
  }
  rgs[0] = 0;
  emit(emit, 1, 0);
  return out;
}

Value canon_image(const FunctorTerm& t, const Value& v, const std::vector<uint64_t>& pi) {
  switch (t.kind) {
    case TermKind::Var: return Value{Value::K::Ref, pi[v.num], {}, {}};
    case TermKind::ConstNat:
    case TermKind::ConstSet: return v;
    case TermKind::Powerset: {
      Value out{Value::K::Set, 0, {}, {}};
      out.items.reserve(v.items.size());
      for (const Value& it : v.items) out.items.push_back(canon_image(*t.a, it, pi));
      std::vector<std::pair<std::vector<uint8_t>, size_t>> keyed(out.items.size());
      for (size_t i = 0; i < out.items.size(); i++)
        keyed[i] = {value_bytes(*t.a, out.items[i]), i};
      std::sort(keyed.begin(), keyed.end());
      Value dedup{Value::K::Set, 0, {}, {}};
      for (size_t i = 0; i < keyed.size(); i++) {
        if (i > 0 && keyed[i].first == keyed[i - 1].first) continue;
        dedup.items.push_back(std::move(out.items[keyed[i].second]));
      }
      return dedup;
    }
    case TermKind::Bag:
    case TermKind::Dist:
    case TermKind::MonoidValued: {
      WKind wk = map_weight_kind(t);
      std::vector<Value> keys;
      keys.reserve(v.items.size());
      for (const Value& it : v.items) keys.push_back(canon_image(*t.a, it, pi));
      std::vector<std::pair<std::vector<uint8_t>, size_t>> keyed(keys.size());
      for (size_t i = 0; i < keys.size(); i++) keyed[i] = {value_bytes(*t.a, keys[i]), i};
      std::sort(keyed.begin(), keyed.end());
      Value out{Value::K::Map, 0, {}, {}};
      size_t i = 0;
      while (i < keyed.size()) {
        Payload sum = v.weights[keyed[i].second];
        size_t j = i + 1;
        while (j < keyed.size() && keyed[j].first == keyed[i].first) {
          sum = w_add(wk, sum, v.weights[keyed[j].second]);
          j++;
        }
        if (!w_is_unit(wk, sum)) {
          out.items.push_back(std::move(keys[keyed[i].second]));
          out.weights.push_back(std::move(sum));
        }
        i = j;
      }
      return out;
    }
    case TermKind::Sum: {
      Value out{Value::K::Sum, v.num, {}, {}};
      out.items.push_back(canon_image(v.num == 0 ? *t.a : *t.b, v.items[0], pi));
      return out;
    }
    case TermKind::Product: {
      Value out{Value::K::Tuple, 0, {}, {}};
      out.items.push_back(canon_image(*t.a, v.items[0], pi));
      out.items.push_back(canon_image(*t.b, v.items[1], pi));
      return out;
    }
    case TermKind::Exponent: {
      Value out{Value::K::Tuple, 0, {}, {}};
      out.items.reserve(v.items.size());
      for (const Value& it : v.items) out.items.push_back(canon_image(*t.a, it, pi));
      return out;
    }
  }
  return {};
}

namespace {

bool stable(const NestedCoalgebra& nc, const std::vector<uint64_t>& pi) {
  size_t n = nc.values.size();
  // representative image per block
  std::vector<std::vector<uint8_t>> rep;
  for (size_t s = 0; s < n; s++) {
    std::vector<uint8_t> img = value_bytes(*nc.term, canon_image(*nc.term, nc.values[s], pi));
    uint64_t b = pi[s];
    if (b >= rep.size()) rep.resize(b + 1);
    if (rep[b].empty())
      rep[b] = std::move(img);
    else if (rep[b] != img)
      return false;
  }
  return true;
}

}  // namespace

Partition brute_force_coarsest(const NestedCoalgebra& nc) {
  size_t n = nc.values.size();
  if (n > 6) throw std::invalid_argument("brute-force oracle is limited to 6 states");
  const std::vector<uint64_t>* best = nullptr;
  uint64_t best_blocks = 0;
  size_t ties = 0;
  std::vector<std::vector<uint64_t>> parts = all_partitions(n);
  for (const auto& pi : parts) {
    if (!stable(nc, pi)) continue;
    uint64_t blocks = pi.empty() ? 0 : *std::max_element(pi.begin(), pi.end()) + 1;
    if (!best || blocks < best_blocks) {
      best = &pi;
      best_blocks = blocks;
      ties = 1;
    } else if (blocks == best_blocks) {
      ties++;
    }
  }
  if (!best) throw std::logic_error("no stable partition found, but identity is always stable");
  if (ties > 1) throw std::logic_error("coarsest stable partition is not unique");
  return Partition{*best, best_blocks};
}

}  // namespace corefine
