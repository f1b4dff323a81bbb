#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corefine/coalgebra.hpp"
#include "corefine/seq_refine.hpp"
#include "corefine/wta_gen.hpp"

using namespace corefine;

namespace {

std::string render(const NestedCoalgebra& nc) {
  std::ostringstream os;
  write_coalgebra(os, nc);
  return os.str();
}

uint64_t transition_count(const NestedCoalgebra& nc) {
  uint64_t k = 0;
  for (const Value& v : nc.values) k += v.items.at(1).items.size();
  return k;
}

}  // namespace

TEST_CASE("generated sizes follow the 50-transitions-per-state contract") {
  struct Row {
    uint64_t n;
    uint32_t r;
    WtaMonoid m;
  };
  for (Row row : {Row{20, 1, WtaMonoid::NatMax}, Row{20, 3, WtaMonoid::Word64Or},
                  Row{13, 1, WtaMonoid::BoolOr}, Row{100, 2, WtaMonoid::NatMax},
                  Row{200, 3, WtaMonoid::Word64Or}}) {
    CAPTURE(row.n);
    CAPTURE(row.r);
    WtaSpec spec;
    spec.n = row.n;
    spec.r = row.r;
    spec.monoid = row.m;
    spec.seed = 7 * row.n + row.r;
    NestedCoalgebra nc = generate_wta(spec);
    REQUIRE(nc.values.size() == row.n);
    CHECK(nc.names.front() == "s0");
    CHECK(nc.names.back() == "s" + std::to_string(row.n - 1));
    const uint64_t k = 50 * row.n;
    CHECK(transition_count(nc) == k);

    EncodedCoalgebra enc = desort(nc);
    CHECK(enc.n == row.n);
    // one intermediate per sampled transition, r successor edges each
    CHECK(enc.n_prime() == row.n + k);
    CHECK(enc.m() == k + k * row.r);
  }
}

TEST_CASE("same seed gives byte-identical output, different seeds differ") {
  WtaSpec spec;
  spec.n = 30;
  spec.r = 2;
  spec.monoid = WtaMonoid::Word64Or;
  spec.seed = 99;
  std::string a = render(generate_wta(spec));
  std::string b = render(generate_wta(spec));
  CHECK(a == b);
  spec.seed = 100;
  CHECK(render(generate_wta(spec)) != a);
}

TEST_CASE("emitted text is canonical: parse and re-emit is the identity") {
  for (WtaMonoid m : {WtaMonoid::NatMax, WtaMonoid::Word64Or, WtaMonoid::BoolOr}) {
    WtaSpec spec;
    spec.n = 25;
    spec.r = 2;
    spec.monoid = m;
    spec.seed = 5;
    std::string once = render(generate_wta(spec));
    NestedCoalgebra back = parse_coalgebra(once);
    CHECK(render(back) == once);
  }
}

TEST_CASE("weights come from the alphabet") {
  WtaSpec spec;
  spec.n = 40;
  spec.r = 1;
  spec.monoid = WtaMonoid::NatMax;
  spec.seed = 11;
  spec.weight_alphabet = {3, 9};
  NestedCoalgebra nc = generate_wta(spec);
  for (const Value& v : nc.values) {
    uint64_t outw = v.items.at(0).num;
    CHECK((outw == 3 || outw == 9));
    for (const Payload& p : v.items.at(1).weights) {
      uint64_t w = std::get<uint64_t>(p);
      CHECK((w == 3 || w == 9));
    }
  }

  spec.weight_alphabet.clear();
  spec.monoid = WtaMonoid::BoolOr;
  nc = generate_wta(spec);
  for (const Value& v : nc.values) {
    CHECK(v.items.at(0).num <= 1);  // output bit
    CHECK(v.items.at(1).k == Value::K::Set);
    CHECK(v.items.at(1).weights.empty());
  }

  spec.monoid = WtaMonoid::Word64Or;
  nc = generate_wta(spec);
  std::set<uint64_t> words;
  for (const Value& v : nc.values)
    for (const Payload& p : v.items.at(1).weights) words.insert(std::get<uint64_t>(p));
  CHECK(words.size() <= 50);
  CHECK(words.count(0) == 0);
}

TEST_CASE("sampler: exact count, distinct, ascending, in range") {
  std::mt19937_64 g(42);
  struct Case {
    uint64_t u;
    uint64_t k;
  };
  for (Case c : {Case{1, 1}, Case{10, 10}, Case{1000, 900}, Case{1000, 7},
                 Case{1ull << 40, 200}, Case{4000000000000ull, 1000}}) {
    CAPTURE(c.u);
    CAPTURE(c.k);
    auto s = sample_without_replacement(c.u, c.k, g);
    REQUIRE(s.size() == c.k);
    for (size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i] < c.u);
      if (i) CHECK(s[i] > s[i - 1]);
    }
  }
  CHECK(sample_without_replacement(50, 0, g).empty());
  auto all = sample_without_replacement(17, 17, g);
  for (uint64_t i = 0; i < 17; ++i) CHECK(all[i] == i);
}

TEST_CASE("sampler hits every index uniformly (5 sigma)") {
  const uint64_t u = 36, k = 9, trials = 4000;
  std::vector<uint64_t> hits(u, 0);
  for (uint64_t t = 0; t < trials; ++t) {
    std::mt19937_64 g(t * 2654435761u + 1);
    for (uint64_t idx : sample_without_replacement(u, k, g)) ++hits[idx];
  }
  const double p = double(k) / double(u);
  const double mean = trials * p;
  const double sigma = std::sqrt(trials * p * (1.0 - p));
  for (uint64_t i = 0; i < u; ++i) {
    CAPTURE(i);
    CHECK(double(hits[i]) > mean - 5.0 * sigma);
    CHECK(double(hits[i]) < mean + 5.0 * sigma);
  }
}

TEST_CASE("impossible requests are rejected") {
  std::mt19937_64 g(1);
  CHECK_THROWS_AS(sample_without_replacement(10, 11, g), std::invalid_argument);
  CHECK_THROWS_AS(sample_without_replacement((1ull << 53) + 1, 1, g),
                  std::invalid_argument);

  WtaSpec spec;
  spec.n = 10;  // universe 4*10^2 = 400 < 500 transitions
  spec.r = 1;
  CHECK_THROWS_WITH_AS(generate_wta(spec),
                       "requested transitions exceed the universe (50n > 4n^(r+1))",
                       std::invalid_argument);
  spec.n = 20;
  spec.r = 0;
  CHECK_THROWS_AS(generate_wta(spec), std::invalid_argument);
  spec.r = 6;
  CHECK_THROWS_AS(generate_wta(spec), std::invalid_argument);
  spec.r = 3;
  spec.n = 1ull << 20;  // (2^20)^4 blows past 2^53
  CHECK_THROWS_AS(generate_wta(spec), std::invalid_argument);
  spec.n = 0;
  CHECK_THROWS_AS(generate_wta(spec), std::invalid_argument);

  spec.n = 20;
  spec.r = 1;
  spec.weight_alphabet = {1, 1};
  CHECK_THROWS_AS(generate_wta(spec), std::invalid_argument);
  spec.weight_alphabet = {0};
  CHECK_THROWS_AS(generate_wta(spec), std::invalid_argument);
  spec.weight_alphabet.assign(51, 0);
  for (uint64_t i = 0; i < 51; ++i) spec.weight_alphabet[i] = i + 1;
  CHECK_THROWS_AS(generate_wta(spec), std::invalid_argument);
}

TEST_CASE("generated automata run through refinement") {
  WtaSpec spec;
  spec.n = 20;
  spec.r = 1;
  spec.monoid = WtaMonoid::NatMax;
  spec.seed = 3;
  EncodedCoalgebra enc = desort(generate_wta(spec));
  RefineResult res = refine_sequential(enc, RefineMode::Exact);
  CHECK(res.partition.num_blocks >= 1);
  CHECK(res.partition.num_blocks <= enc.n_prime());
  for (size_t i = 1; i < res.history.size(); ++i)
    CHECK(res.history[i] >= res.history[i - 1]);
}
