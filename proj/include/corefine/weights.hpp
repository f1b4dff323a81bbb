#pragma once

// Edge payloads: bag multiplicities and elements of the five supported
// commutative monoids. One compact variant is used everywhere (parsed values,
// encoded edges, signature maps); rationals are boxed and immutable so copies
// stay cheap.

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "corefine/bytes.hpp"
#include "corefine/errors.hpp"

namespace corefine {

using BigRat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

struct ComplexRat {
  BigRat re;
  BigRat im;
  bool operator==(const ComplexRat& o) const { return re == o.re && im == o.im; }
};

using RatPtr = std::shared_ptr<const BigRat>;
using ComplexPtr = std::shared_ptr<const ComplexRat>;

// monostate = unit payload (powerset / identity edges carry no data)
using Payload = std::variant<std::monostate, uint64_t, int64_t, RatPtr, ComplexPtr>;

enum class MonoidId : uint8_t {
  IntAdd,         // (Z, +, 0)
  RatAdd,         // (R, +, 0) realized as exact rationals
  ComplexRatAdd,  // (C, +, 0) realized as pairs of exact rationals
  Word64Or,       // (P_w(64), union, empty) realized as bitwise-or on 64-bit words
  NatMax,         // (N, max, 0)
};

// What a given label slot carries. BagCount is the (N,+,0) instance used by
// the bag functor; Rat doubles for the distribution functor.
enum class WKind : uint8_t {
  Unit = 0,
  BagCount = 1,
  Int = 2,
  Rat = 3,
  Complex = 4,
  Word = 5,
  NatM = 6,
};

WKind wkind_of(MonoidId m);
const char* monoid_name(MonoidId m);  // "(Z,+)" etc.

Payload make_rat(BigRat r);
Payload make_complex(BigRat re, BigRat im);

Payload w_unit(WKind k);
bool w_is_unit(WKind k, const Payload& p);
bool w_eq(WKind k, const Payload& a, const Payload& b);
// monoid sum; throws OverflowError on checked 64-bit overflow (BagCount, Int)
Payload w_add(WKind k, const Payload& a, const Payload& b);
void w_bytes(WKind k, const Payload& p, ByteWriter& w);
Payload w_read(WKind k, ByteReader& r);
std::string w_print(WKind k, const Payload& p);

std::string rat_print(const BigRat& r);

}  // namespace corefine
