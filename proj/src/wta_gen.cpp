#include "corefine/wta_gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>

namespace corefine {

namespace {

// indices must stay exactly representable as doubles inside the skip sampler
constexpr uint64_t kMaxUniverse = 1ull << 53;

// (0, 1]: 53 uniform bits shifted up by one ulp so logs stay finite
double unit_open(std::mt19937_64& g) {
  return (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53;
}

// uniform index in [0, n)
uint64_t below(uint64_t n, std::mt19937_64& g) {
  auto s = static_cast<uint64_t>(static_cast<double>(n) *
                                 (static_cast<double>(g() >> 11) * 0x1.0p-53));
  return s >= n ? n - 1 : s;
}

// Vitter's Method A: linear scan, one uniform per selection. Used for the
// dense tail where skips are short.
void method_a(uint64_t N, uint64_t k, uint64_t base, std::mt19937_64& g,
              std::vector<uint64_t>& out) {
  while (k >= 2) {
    double v = unit_open(g);
    uint64_t s = 0;
    double top = static_cast<double>(N - k);
    double rem = static_cast<double>(N);
    double quot = top / rem;
    while (quot > v) {
      ++s;
      top -= 1.0;
      rem -= 1.0;
      quot *= top / rem;
    }
    out.push_back(base + s);
    base += s + 1;
    N -= s + 1;
    --k;
  }
  if (k == 1) out.push_back(base + below(N, g));
}

// Vitter's Method D: skip lengths drawn by rejection from a beta-like
// envelope, O(k) draws regardless of N. Falls back to Method A once the
// remaining density n/N passes ~1/13.
void method_d(uint64_t N, uint64_t n, uint64_t base, std::mt19937_64& g,
              std::vector<uint64_t>& out) {
  double vprime = std::exp(std::log(unit_open(g)) / static_cast<double>(n));
  while (n > 1 && 13 * n < N) {
    double dN = static_cast<double>(N);
    double dn = static_cast<double>(n);
    double qu1 = static_cast<double>(N - n + 1);
    uint64_t s;
    for (;;) {
      double x;
      for (;;) {
        x = dN * (1.0 - vprime);
        if (x < qu1) break;
        vprime = std::exp(std::log(unit_open(g)) / dn);
      }
      s = static_cast<uint64_t>(x);
      double ds = static_cast<double>(s);
      double u = unit_open(g);
      double y1 = std::exp(std::log(u * dN / qu1) / (dn - 1.0));
      vprime = y1 * (1.0 - x / dN) * (qu1 / (qu1 - ds));
      if (vprime <= 1.0) break;  // accepted; vprime doubles as the next draw
      double y2 = 1.0;
      double top = dN - 1.0;
      double bottom;
      double limit;
      if (dn - 1.0 > ds) {
        bottom = dN - dn;
        limit = dN - ds;
      } else {
        bottom = dN - ds - 1.0;
        limit = qu1;
      }
      for (double t = dN - 1.0; t >= limit; t -= 1.0) {
        y2 *= top / bottom;
        top -= 1.0;
        bottom -= 1.0;
      }
      if (dN / (dN - x) >= y1 * std::exp(std::log(y2) / (dn - 1.0))) {
        vprime = std::exp(std::log(unit_open(g)) / (dn - 1.0));
        break;  // accepted the hard way; fresh draw for n-1
      }
      vprime = std::exp(std::log(unit_open(g)) / dn);
    }
    out.push_back(base + s);
    base += s + 1;
    N -= s + 1;
    --n;
  }
  if (n > 1) {
    method_a(N, n, base, g, out);
  } else if (n == 1) {
    uint64_t s = static_cast<uint64_t>(static_cast<double>(N) * vprime);
    if (s >= N) s = N - 1;
    out.push_back(base + s);
  }
}

std::string term_text(const WtaSpec& spec) {
  std::string xr = "X^" + std::to_string(spec.r);
  switch (spec.monoid) {
    case WtaMonoid::NatMax:
      return "N x (N,max)^(4 x " + xr + ")";
    case WtaMonoid::Word64Or:
      return "N x (P64,or)^(4 x " + xr + ")";
    case WtaMonoid::BoolOr:
      return "2 x P(4 x " + xr + ")";
  }
  throw std::invalid_argument("unknown monoid");
}

}  // namespace

std::vector<uint64_t> sample_without_replacement(uint64_t universe, uint64_t k,
                                                 std::mt19937_64& g) {
  if (k > universe) throw std::invalid_argument("sample size exceeds the universe");
  if (universe > kMaxUniverse)
    throw std::invalid_argument("universe too large for the sequential sampler");
  std::vector<uint64_t> out;
  out.reserve(k);
  if (k > 0) method_d(universe, k, 0, g, out);
  return out;
}

NestedCoalgebra generate_wta(const WtaSpec& spec) {
  if (spec.n == 0) throw std::invalid_argument("state count must be positive");
  if (spec.r < 1 || spec.r > 5)
    throw std::invalid_argument("rank must be between 1 and 5");

  // universe of (symbol, target, source r-tuple) triples in lexicographic order
  uint64_t universe = WtaSpec::kSymbols;
  for (uint32_t i = 0; i <= spec.r; ++i) {
    if (universe > kMaxUniverse / spec.n)
      throw std::invalid_argument("transition universe exceeds the sampler's index range");
    universe *= spec.n;
  }
  const uint64_t k = spec.n * WtaSpec::kTransitionsPerState;
  if (k > universe)
    throw std::invalid_argument(
        "requested transitions exceed the universe (50n > 4n^(r+1))");

  std::mt19937_64 g(spec.seed);

  const bool boolean = spec.monoid == WtaMonoid::BoolOr;
  std::vector<uint64_t> alphabet = spec.weight_alphabet;
  if (boolean) {
    alphabet.clear();  // presence/absence only; outputs are the bit
  } else if (alphabet.empty()) {
    if (spec.monoid == WtaMonoid::NatMax) {
      for (uint64_t w = 1; w <= 50; ++w) alphabet.push_back(w);
    } else {
      std::unordered_set<uint64_t> seen;
      while (alphabet.size() < 50) {
        uint64_t w = g();
        if (w != 0 && seen.insert(w).second) alphabet.push_back(w);
      }
    }
  } else {
    if (alphabet.size() > 50)
      throw std::invalid_argument("weight alphabet larger than 50 elements");
    std::unordered_set<uint64_t> seen;
    for (uint64_t w : alphabet) {
      if (w == 0) throw std::invalid_argument("weight alphabet contains the monoid unit");
      if (!seen.insert(w).second)
        throw std::invalid_argument("weight alphabet contains duplicates");
    }
  }

  auto samples = sample_without_replacement(universe, k, g);

  // decode ascending, drawing weights in universe order, bucket by target
  struct Tr {
    uint64_t sym;
    std::vector<uint64_t> src;
    uint64_t w;
  };
  std::vector<std::vector<Tr>> by_target(spec.n);
  const uint64_t per_sym = universe / WtaSpec::kSymbols;  // n^(r+1)
  const uint64_t per_tgt = per_sym / spec.n;              // n^r
  for (uint64_t idx : samples) {
    Tr t;
    t.sym = idx / per_sym;
    uint64_t rem = idx % per_sym;
    uint64_t tgt = rem / per_tgt;
    uint64_t code = rem % per_tgt;
    t.src.resize(spec.r);
    for (uint32_t p = spec.r; p-- > 0;) {
      t.src[p] = code % spec.n;
      code /= spec.n;
    }
    t.w = boolean ? 0 : alphabet[g() % alphabet.size()];
    by_target[tgt].push_back(std::move(t));
  }

  NestedCoalgebra nc;
  nc.term = parse_functor(term_text(spec));
  const TermPtr key_term = nc.term->b->a;  // 4 x X^r

  nc.names.reserve(spec.n);
  for (uint64_t s = 0; s < spec.n; ++s) nc.names.push_back("s" + std::to_string(s));

  nc.values.reserve(spec.n);
  for (uint64_t s = 0; s < spec.n; ++s) {
    // pre-sort keys canonically so emitted files are already in canonical form
    struct Entry {
      std::vector<uint8_t> bytes;
      Value key;
      uint64_t w;
    };
    std::vector<Entry> entries;
    entries.reserve(by_target[s].size());
    for (Tr& t : by_target[s]) {
      Value exp;
      exp.k = Value::K::Tuple;
      exp.items.resize(spec.r);
      for (uint32_t p = 0; p < spec.r; ++p)
        exp.items[p] = Value{Value::K::Ref, t.src[p], {}, {}};
      Value key;
      key.k = Value::K::Tuple;
      key.items.push_back(Value{Value::K::Elem, t.sym, {}, {}});
      key.items.push_back(std::move(exp));
      entries.push_back({value_bytes(*key_term, key), std::move(key), t.w});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.bytes < b.bytes; });

    Value coll;
    coll.k = boolean ? Value::K::Set : Value::K::Map;
    for (Entry& e : entries) {
      coll.items.push_back(std::move(e.key));
      if (!boolean) coll.weights.push_back(Payload{e.w});
    }

    const uint64_t outw = boolean ? g() % 2 : alphabet[g() % alphabet.size()];
    Value root;
    root.k = Value::K::Tuple;
    root.items.push_back(Value{Value::K::Elem, outw, {}, {}});
    root.items.push_back(std::move(coll));
    nc.values.push_back(std::move(root));
  }
  return nc;
}

}  // namespace corefine
