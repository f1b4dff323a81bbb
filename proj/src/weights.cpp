#include "corefine/weights.hpp"

#include <algorithm>

namespace corefine {

namespace {

const BigRat& zero_rat() {
  static const BigRat z(0);
  return z;
}

RatPtr zero_rat_ptr() {
  static const RatPtr z = std::make_shared<const BigRat>(0);
  return z;
}

ComplexPtr zero_complex_ptr() {
  static const ComplexPtr z = std::make_shared<const ComplexRat>();
  return z;
}

const BigRat& as_rat(const Payload& p) {
  const auto* r = std::get_if<RatPtr>(&p);
  if (!r || !*r) return zero_rat();
  return **r;
}

const ComplexRat& as_complex(const Payload& p) {
  static const ComplexRat z{};
  const auto* c = std::get_if<ComplexPtr>(&p);
  if (!c || !*c) return z;
  return **c;
}

void rat_bytes(const BigRat& r, ByteWriter& w) {
  const BigInt num = boost::multiprecision::numerator(r);    // lowest terms by type
  const BigInt den = boost::multiprecision::denominator(r);  // > 0
  int8_t sign = num < 0 ? -1 : (num == 0 ? 0 : 1);
  w.u8(static_cast<uint8_t>(sign));
  std::vector<uint8_t> buf;
  if (num != 0) {
    BigInt mag = num < 0 ? BigInt(-num) : num;
    boost::multiprecision::export_bits(mag, std::back_inserter(buf), 8, /*msv_first=*/false);
  }
  w.blob(buf.data(), buf.size());
  buf.clear();
  boost::multiprecision::export_bits(den, std::back_inserter(buf), 8, /*msv_first=*/false);
  w.blob(buf.data(), buf.size());
}

BigRat rat_read(ByteReader& r) {
  int8_t sign = static_cast<int8_t>(r.u8());
  std::vector<uint8_t> numb = r.blob();
  std::vector<uint8_t> denb = r.blob();
  BigInt num = 0;
  if (!numb.empty())
    boost::multiprecision::import_bits(num, numb.begin(), numb.end(), 8, /*msv_first=*/false);
  BigInt den = 1;
  if (!denb.empty())
    boost::multiprecision::import_bits(den, denb.begin(), denb.end(), 8, /*msv_first=*/false);
  if (sign == 0) return BigRat(0);
  BigRat v(num, den);
  return sign < 0 ? BigRat(-v) : v;
}

}  // namespace

WKind wkind_of(MonoidId m) {
  switch (m) {
    case MonoidId::IntAdd: return WKind::Int;
    case MonoidId::RatAdd: return WKind::Rat;
    case MonoidId::ComplexRatAdd: return WKind::Complex;
    case MonoidId::Word64Or: return WKind::Word;
    case MonoidId::NatMax: return WKind::NatM;
  }
  return WKind::Unit;
}

const char* monoid_name(MonoidId m) {
  switch (m) {
    case MonoidId::IntAdd: return "(Z,+)";
    case MonoidId::RatAdd: return "(R,+)";
    case MonoidId::ComplexRatAdd: return "(C,+)";
    case MonoidId::Word64Or: return "(P64,or)";
    case MonoidId::NatMax: return "(N,max)";
  }
  return "?";
}

Payload make_rat(BigRat r) { return RatPtr(std::make_shared<const BigRat>(std::move(r))); }

Payload make_complex(BigRat re, BigRat im) {
  return ComplexPtr(std::make_shared<const ComplexRat>(ComplexRat{std::move(re), std::move(im)}));
}

Payload w_unit(WKind k) {
  switch (k) {
    case WKind::Unit: return std::monostate{};
    case WKind::BagCount:
    case WKind::Word:
    case WKind::NatM: return uint64_t{0};
    case WKind::Int: return int64_t{0};
    case WKind::Rat: return zero_rat_ptr();
    case WKind::Complex: return zero_complex_ptr();
  }
  return std::monostate{};
}

bool w_is_unit(WKind k, const Payload& p) {
  switch (k) {
    case WKind::Unit: return true;
    case WKind::BagCount:
    case WKind::Word:
    case WKind::NatM: return std::get<uint64_t>(p) == 0;
    case WKind::Int: return std::get<int64_t>(p) == 0;
    case WKind::Rat: return as_rat(p) == 0;
    case WKind::Complex: {
      const ComplexRat& c = as_complex(p);
      return c.re == 0 && c.im == 0;
    }
  }
  return false;
}

bool w_eq(WKind k, const Payload& a, const Payload& b) {
  switch (k) {
    case WKind::Unit: return true;
    case WKind::BagCount:
    case WKind::Word:
    case WKind::NatM: return std::get<uint64_t>(a) == std::get<uint64_t>(b);
    case WKind::Int: return std::get<int64_t>(a) == std::get<int64_t>(b);
    case WKind::Rat: return as_rat(a) == as_rat(b);
    case WKind::Complex: return as_complex(a) == as_complex(b);
  }
  return false;
}

Payload w_add(WKind k, const Payload& a, const Payload& b) {
  switch (k) {
    case WKind::Unit: return std::monostate{};
    case WKind::BagCount: {
      uint64_t r;
      if (__builtin_add_overflow(std::get<uint64_t>(a), std::get<uint64_t>(b), &r))
        throw OverflowError("bag multiplicity sum overflows 64 bits");
      return r;
    }
    case WKind::Int: {
      int64_t r;
      if (__builtin_add_overflow(std::get<int64_t>(a), std::get<int64_t>(b), &r))
        throw OverflowError("(Z,+) sum overflows 64 bits");
      return r;
    }
    case WKind::Rat: return make_rat(as_rat(a) + as_rat(b));
    case WKind::Complex: {
      const ComplexRat& x = as_complex(a);
      const ComplexRat& y = as_complex(b);
      return make_complex(x.re + y.re, x.im + y.im);
    }
    case WKind::Word: return std::get<uint64_t>(a) | std::get<uint64_t>(b);
    case WKind::NatM: return std::max(std::get<uint64_t>(a), std::get<uint64_t>(b));
  }
  return std::monostate{};
}

void w_bytes(WKind k, const Payload& p, ByteWriter& w) {
  switch (k) {
    case WKind::Unit: return;
    case WKind::BagCount:
    case WKind::Word:
    case WKind::NatM: w.u64(std::get<uint64_t>(p)); return;
    case WKind::Int: w.i64(std::get<int64_t>(p)); return;
    case WKind::Rat: rat_bytes(as_rat(p), w); return;
    case WKind::Complex: {
      const ComplexRat& c = as_complex(p);
      rat_bytes(c.re, w);
      rat_bytes(c.im, w);
      return;
    }
  }
}

Payload w_read(WKind k, ByteReader& r) {
  switch (k) {
    case WKind::Unit: return std::monostate{};
    case WKind::BagCount:
    case WKind::Word:
    case WKind::NatM: return r.u64();
    case WKind::Int: return r.i64();
    case WKind::Rat: return make_rat(rat_read(r));
    case WKind::Complex: {
      BigRat re = rat_read(r);
      BigRat im = rat_read(r);
      return make_complex(std::move(re), std::move(im));
    }
  }
  return std::monostate{};
}

std::string rat_print(const BigRat& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string w_print(WKind k, const Payload& p) {
  switch (k) {
    case WKind::Unit: return "*";
    case WKind::BagCount:
    case WKind::Word:
    case WKind::NatM: return std::to_string(std::get<uint64_t>(p));
    case WKind::Int: return std::to_string(std::get<int64_t>(p));
    case WKind::Rat: return rat_print(as_rat(p));
    case WKind::Complex: {
      const ComplexRat& c = as_complex(p);
      return "(" + rat_print(c.re) + ", " + rat_print(c.im) + ")";
    }
  }
  return "?";
}

}  // namespace corefine
