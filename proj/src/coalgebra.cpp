#include "corefine/coalgebra.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "lexer.hpp"

namespace corefine {

namespace {

uint64_t parse_nat_tok(const Tok& t, size_t line) {
  uint64_t v = 0;
  for (char c : t.text) {
    uint64_t d = static_cast<uint64_t>(c - '0');
    if (v > (std::numeric_limits<uint64_t>::max() - d) / 10)
      throw ParseError("number " + t.text + " does not fit in 64 bits", line);
    v = v * 10 + d;
  }
  return v;
}

uint64_t parse_hex_tok(const Tok& t, size_t line) {
  // text is "0x" + hex digits
  if (t.text.size() > 2 + 16)
    throw ParseError("hex literal " + t.text + " does not fit in 64 bits", line);
  uint64_t v = 0;
  for (size_t i = 2; i < t.text.size(); i++) {
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(t.text[i])));
    uint64_t d = c <= '9' ? static_cast<uint64_t>(c - '0') : static_cast<uint64_t>(c - 'a' + 10);
    v = (v << 4) | d;
  }
  return v;
}

// not BigInt's string constructor: that one reads a leading 0 as octal
BigInt bigint_from_digits(const std::string& s) {
  BigInt v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

WKind map_weight_kind(const FunctorTerm& t) {
  switch (t.kind) {
    case TermKind::Bag: return WKind::BagCount;
    case TermKind::Dist: return WKind::Rat;
    case TermKind::MonoidValued: return wkind_of(t.monoid);
    default: assert(false); return WKind::Unit;
  }
}

namespace {

WKind map_wkind(const FunctorTerm& t) { return map_weight_kind(t); }

class ValueParser {
 public:
  ValueParser(const std::vector<Tok>& toks, size_t line,
              const std::unordered_map<std::string, uint64_t>& states)
      : toks_(toks), line_(line), states_(states) {}

  // callers position pos past "name:"
  Value parse_rest(const FunctorTerm& t, size_t start) {
    pos_ = start;
    Value v = parse(t);
    if (!at(Tok::End)) err("trailing input after value");
    return v;
  }

 private:
  const Tok& peek(size_t ahead = 0) const {
    size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at(Tok::Kind k) const { return peek().kind == k; }
  const Tok& advance() { return toks_[pos_++]; }
  bool accept(Tok::Kind k) {
    if (!at(k)) return false;
    advance();
    return true;
  }
  void expect(Tok::Kind k, const char* what) {
    if (!at(k)) err(what);
    advance();
  }
  [[noreturn]] void err(const std::string& what) const {
    throw ParseError(what + " at column " + std::to_string(peek().col + 1), line_);
  }

  Value parse(const FunctorTerm& t) {
    switch (t.kind) {
      case TermKind::Var: {
        if (!at(Tok::Ident)) err("expected a state name");
        const std::string& name = advance().text;
        auto it = states_.find(name);
        if (it == states_.end()) err("unknown state '" + name + "'");
        return Value{Value::K::Ref, it->second, {}, {}};
      }
      case TermKind::ConstNat: {
        if (!at(Tok::Nat)) err("expected a natural number");
        return Value{Value::K::Elem, parse_nat_tok(advance(), line_), {}, {}};
      }
      case TermKind::ConstSet: {
        if (!at(Tok::Ident) && !at(Tok::Nat)) err("expected a set element");
        const std::string& name = advance().text;
        auto it = std::find(t.elems.begin(), t.elems.end(), name);
        if (it == t.elems.end()) err("'" + name + "' is not an element of the constant set");
        return Value{Value::K::Elem, static_cast<uint64_t>(it - t.elems.begin()), {}, {}};
      }
      case TermKind::Powerset: return parse_set(t);
      case TermKind::Bag:
      case TermKind::Dist:
      case TermKind::MonoidValued: return parse_map(t);
      case TermKind::Sum: {
        if (at(Tok::Ident) && peek().text == "inl") {
          advance();
          return Value{Value::K::Sum, 0, {parse(*t.a)}, {}};
        }
        if (at(Tok::Ident) && peek().text == "inr") {
          advance();
          return Value{Value::K::Sum, 1, {parse(*t.b)}, {}};
        }
        err("expected 'inl' or 'inr'");
      }
      case TermKind::Product: {
        expect(Tok::LParen, "expected '('");
        Value v = parse_product_tail(t);
        expect(Tok::RParen, "expected ')'");
        return v;
      }
      case TermKind::Exponent: return parse_exponent(t);
    }
    err("internal: unhandled term kind");
  }

  // right-nested products print and parse as one flat tuple
  Value parse_product_tail(const FunctorTerm& t) {
    Value v{Value::K::Tuple, 0, {}, {}};
    v.items.push_back(parse(*t.a));
    expect(Tok::Comma, "expected ','");
    if (t.b->kind == TermKind::Product)
      v.items.push_back(parse_product_tail(*t.b));
    else
      v.items.push_back(parse(*t.b));
    return v;
  }

  Value parse_set(const FunctorTerm& t) {
    expect(Tok::LBrace, "expected '{'");
    Value v{Value::K::Set, 0, {}, {}};
    if (accept(Tok::RBrace)) return v;
    while (true) {
      v.items.push_back(parse(*t.a));
      if (accept(Tok::Comma)) continue;
      expect(Tok::RBrace, "expected ',' or '}'");
      break;
    }
    canon_entries(*t.a, v, nullptr);
    return v;
  }

  Value parse_map(const FunctorTerm& t) {
    WKind wk = map_wkind(t);
    expect(Tok::LBrace, "expected '{'");
    Value v{Value::K::Map, 0, {}, {}};
    if (!accept(Tok::RBrace)) {
      while (true) {
        v.items.push_back(parse(*t.a));
        expect(Tok::Colon, "expected ':'");
        v.weights.push_back(parse_weight(t, wk));
        if (accept(Tok::Comma)) continue;
        expect(Tok::RBrace, "expected ',' or '}'");
        break;
      }
    }
    canon_entries(*t.a, v, &wk);
    if (t.kind == TermKind::Dist) {
      BigRat sum = 0;
      for (const Payload& p : v.weights) sum += *std::get<RatPtr>(p);
      if (sum != 1)
        throw ParseError("distribution weights sum to " + rat_print(sum) + ", expected 1", line_);
    }
    // unit-weight entries are absent from the finitely supported map
    size_t keep = 0;
    for (size_t i = 0; i < v.items.size(); i++) {
      if (w_is_unit(wk, v.weights[i])) continue;
      if (keep != i) {
        v.items[keep] = std::move(v.items[i]);
        v.weights[keep] = std::move(v.weights[i]);
      }
      keep++;
    }
    v.items.resize(keep);
    v.weights.resize(keep);
    return v;
  }

  // sort entries by canonical key bytes, reject duplicates; wk null for sets
  void canon_entries(const FunctorTerm& key_t, Value& v, const WKind* wk) {
    size_t k = v.items.size();
    if (k < 2) return;
    std::vector<std::pair<std::vector<uint8_t>, size_t>> keyed(k);
    for (size_t i = 0; i < k; i++) keyed[i] = {value_bytes(key_t, v.items[i]), i};
    std::sort(keyed.begin(), keyed.end());
    for (size_t i = 1; i < k; i++)
      if (keyed[i].first == keyed[i - 1].first)
        throw ParseError(std::string("duplicate ") + (wk ? "map key" : "set element") +
                             " at column " + std::to_string(peek().col + 1),
                         line_);
    std::vector<Value> items(k);
    std::vector<Payload> weights(wk ? k : 0);
    for (size_t i = 0; i < k; i++) {
      items[i] = std::move(v.items[keyed[i].second]);
      if (wk) weights[i] = std::move(v.weights[keyed[i].second]);
    }
    v.items = std::move(items);
    v.weights = std::move(weights);
  }

  Value parse_exponent(const FunctorTerm& t) {
    expect(Tok::LBrace, "expected '{'");
    Value v{Value::K::Tuple, 0, {}, {}};
    v.items.resize(t.elems.size());
    std::vector<bool> seen(t.elems.size(), false);
    if (!accept(Tok::RBrace)) {
      while (true) {
        if (!at(Tok::Ident) && !at(Tok::Nat)) err("expected an exponent position name");
        const std::string& name = advance().text;
        auto it = std::find(t.elems.begin(), t.elems.end(), name);
        if (it == t.elems.end()) err("'" + name + "' is not an exponent position");
        size_t idx = static_cast<size_t>(it - t.elems.begin());
        if (seen[idx]) err("duplicate exponent position '" + name + "'");
        seen[idx] = true;
        expect(Tok::Colon, "expected ':'");
        v.items[idx] = parse(*t.a);
        if (accept(Tok::Comma)) continue;
        expect(Tok::RBrace, "expected ',' or '}'");
        break;
      }
    }
    for (size_t i = 0; i < seen.size(); i++)
      if (!seen[i]) err("missing exponent position '" + t.elems[i] + "'");
    return v;
  }

  Payload parse_weight(const FunctorTerm& t, WKind wk) {
    switch (wk) {
      case WKind::BagCount:
      case WKind::NatM: {
        if (!at(Tok::Nat)) err("expected a natural number weight");
        return Payload{parse_nat_tok(advance(), line_)};
      }
      case WKind::Word: {
        if (at(Tok::Hex)) return Payload{parse_hex_tok(advance(), line_)};
        if (at(Tok::Nat)) return Payload{parse_nat_tok(advance(), line_)};
        err("expected a 64-bit word weight");
      }
      case WKind::Int: {
        bool neg = accept(Tok::Minus);
        if (!at(Tok::Nat)) err("expected an integer weight");
        uint64_t mag = parse_nat_tok(advance(), line_);
        uint64_t lim = neg ? (1ull << 63) : (1ull << 63) - 1;
        if (mag > lim) throw ParseError("integer weight does not fit in 64 bits", line_);
        return Payload{neg ? -static_cast<int64_t>(mag) : static_cast<int64_t>(mag)};
      }
      case WKind::Rat: {
        BigRat r = parse_rat();
        if (t.kind == TermKind::Dist && r < 0)
          throw ParseError("negative distribution weight " + rat_print(r), line_);
        return make_rat(std::move(r));
      }
      case WKind::Complex: {
        expect(Tok::LParen, "expected '(' starting a complex weight");
        BigRat re = parse_rat();
        expect(Tok::Comma, "expected ',' in complex weight");
        BigRat im = parse_rat();
        expect(Tok::RParen, "expected ')' closing complex weight");
        return make_complex(std::move(re), std::move(im));
      }
      case WKind::Unit: break;
    }
    err("internal: weightless slot");
  }

  BigRat parse_rat() {
    bool neg = accept(Tok::Minus);
    BigRat r;
    if (at(Tok::Decimal)) {
      const std::string& s = advance().text;
      size_t dot = s.find('.');
      std::string digits = s.substr(0, dot) + s.substr(dot + 1);
      BigInt den = 1;
      for (size_t i = dot + 1; i < s.size(); i++) den *= 10;
      r = BigRat(bigint_from_digits(digits), den);
    } else if (at(Tok::Nat)) {
      BigInt num = bigint_from_digits(advance().text);
      if (accept(Tok::Slash)) {
        if (!at(Tok::Nat)) err("expected a denominator");
        BigInt den = bigint_from_digits(advance().text);
        if (den == 0) throw ParseError("zero denominator", line_);
        r = BigRat(num, den);
      } else {
        r = BigRat(num);
      }
    } else {
      err("expected a rational weight");
    }
    if (neg) r = -r;
    return r;
  }

  const std::vector<Tok>& toks_;
  size_t line_;
  const std::unordered_map<std::string, uint64_t>& states_;
  size_t pos_ = 0;
};

bool is_blank(const std::string& s) {
  for (char c : s)
    if (c != ' ' && c != '\t' && c != '\r') return false;
  return true;
}

bool valid_state_name(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void pv(const FunctorTerm& t, const Value& v, const std::vector<std::string>& names,
        std::string& out);

void pv_product_tail(const FunctorTerm& t, const Value& v, const std::vector<std::string>& names,
                     std::string& out) {
  pv(*t.a, v.items[0], names, out);
  out += ", ";
  if (t.b->kind == TermKind::Product)
    pv_product_tail(*t.b, v.items[1], names, out);
  else
    pv(*t.b, v.items[1], names, out);
}

void pv(const FunctorTerm& t, const Value& v, const std::vector<std::string>& names,
        std::string& out) {
  switch (t.kind) {
    case TermKind::Var: out += names[v.num]; break;
    case TermKind::ConstNat: out += std::to_string(v.num); break;
    case TermKind::ConstSet: out += t.elems[v.num]; break;
    case TermKind::Powerset: {
      out += '{';
      for (size_t i = 0; i < v.items.size(); i++) {
        if (i) out += ", ";
        pv(*t.a, v.items[i], names, out);
      }
      out += '}';
      break;
    }
    case TermKind::Bag:
    case TermKind::Dist:
    case TermKind::MonoidValued: {
      WKind wk = map_wkind(t);
      out += '{';
      for (size_t i = 0; i < v.items.size(); i++) {
        if (i) out += ", ";
        pv(*t.a, v.items[i], names, out);
        out += ": ";
        out += w_print(wk, v.weights[i]);
      }
      out += '}';
      break;
    }
    case TermKind::Sum:
      out += v.num == 0 ? "inl " : "inr ";
      pv(v.num == 0 ? *t.a : *t.b, v.items[0], names, out);
      break;
    case TermKind::Product:
      out += '(';
      pv_product_tail(t, v, names, out);
      out += ')';
      break;
    case TermKind::Exponent: {
      out += '{';
      for (size_t i = 0; i < t.elems.size(); i++) {
        if (i) out += ", ";
        out += t.elems[i];
        out += ": ";
        pv(*t.a, v.items[i], names, out);
      }
      out += '}';
      break;
    }
  }
}

}  // namespace

void value_bytes(const FunctorTerm& t, const Value& v, ByteWriter& w) {
  switch (t.kind) {
    case TermKind::Var:
    case TermKind::ConstNat:
    case TermKind::ConstSet:
      w.u8(v.k == Value::K::Ref ? 1 : 2);
      w.u64(v.num);
      break;
    case TermKind::Powerset:
      w.u8(3);
      w.u32(static_cast<uint32_t>(v.items.size()));
      for (const Value& it : v.items) value_bytes(*t.a, it, w);
      break;
    case TermKind::Bag:
    case TermKind::Dist:
    case TermKind::MonoidValued: {
      WKind wk = map_wkind(t);
      w.u8(4);
      w.u8(static_cast<uint8_t>(wk));
      w.u32(static_cast<uint32_t>(v.items.size()));
      for (size_t i = 0; i < v.items.size(); i++) {
        value_bytes(*t.a, v.items[i], w);
        w_bytes(wk, v.weights[i], w);
      }
      break;
    }
    case TermKind::Sum:
      w.u8(5);
      w.u8(static_cast<uint8_t>(v.num));
      value_bytes(v.num == 0 ? *t.a : *t.b, v.items[0], w);
      break;
    case TermKind::Product:
      w.u8(6);
      w.u32(2);
      value_bytes(*t.a, v.items[0], w);
      value_bytes(*t.b, v.items[1], w);
      break;
    case TermKind::Exponent:
      w.u8(6);
      w.u32(static_cast<uint32_t>(v.items.size()));
      for (const Value& it : v.items) value_bytes(*t.a, it, w);
      break;
  }
}

std::vector<uint8_t> value_bytes(const FunctorTerm& t, const Value& v) {
  std::vector<uint8_t> buf;
  ByteWriter w(buf);
  value_bytes(t, v, w);
  return buf;
}

NestedCoalgebra parse_coalgebra(const std::string& text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }

  NestedCoalgebra nc;
  size_t li = 0;
  while (li < lines.size() && is_blank(lines[li])) li++;
  if (li == lines.size()) throw ParseError("empty input: expected a functor term");
  nc.term = parse_functor(lines[li], li + 1);
  li++;

  // first pass: state names in file order
  std::unordered_map<std::string, uint64_t> ids;
  std::vector<size_t> state_lines;
  for (size_t j = li; j < lines.size(); j++) {
    if (is_blank(lines[j])) continue;
    size_t colon = lines[j].find(':');
    if (colon == std::string::npos)
      throw ParseError("expected '<state>: <value>'", j + 1);
    std::string name = trim(lines[j].substr(0, colon));
    if (!valid_state_name(name)) throw ParseError("invalid state name '" + name + "'", j + 1);
    if (!ids.emplace(name, nc.names.size()).second)
      throw ParseError("duplicate state '" + name + "'", j + 1);
    nc.names.push_back(name);
    state_lines.push_back(j);
  }

  // second pass: values, now that every name resolves
  nc.values.reserve(state_lines.size());
  for (size_t j : state_lines) {
    std::vector<Tok> toks = lex_line(lines[j], j + 1);
    // toks[0]=name, toks[1]=':' by the first pass
    ValueParser vp(toks, j + 1, ids);
    nc.values.push_back(vp.parse_rest(*nc.term, 2));
  }
  return nc;
}

std::string print_value(const FunctorTerm& t, const Value& v,
                        const std::vector<std::string>& names) {
  std::string out;
  pv(t, v, names, out);
  return out;
}

void write_coalgebra(std::ostream& os, const NestedCoalgebra& nc) {
  os << pretty_print(*nc.term) << "\n\n";
  std::string buf;
  for (size_t i = 0; i < nc.values.size(); i++) {
    buf.clear();
    pv(*nc.term, nc.values[i], nc.names, buf);
    os << nc.names[i] << ": " << buf << "\n";
  }
}

// ---- flat encoding ----------------------------------------------------------

bool f1_equal(const F1Node& a, const F1Node& b) {
  if (a.k != b.k || a.num != b.num || a.kids.size() != b.kids.size()) return false;
  if (a.k == F1Node::K::Total) {
    // totals of one slot always share a WKind; compare via the stored alternative
    if (a.total.index() != b.total.index()) return false;
    bool eq = true;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          const auto& y = std::get<T>(b.total);
          if constexpr (std::is_same_v<T, RatPtr> || std::is_same_v<T, ComplexPtr>)
            eq = *x == *y;
          else if constexpr (!std::is_same_v<T, std::monostate>)
            eq = x == y;
        },
        a.total);
    if (!eq) return false;
  }
  for (size_t i = 0; i < a.kids.size(); i++)
    if (!f1_equal(a.kids[i], b.kids[i])) return false;
  return true;
}

void f1_bytes(const F1Node& f, ByteWriter& w) {
  w.u8(static_cast<uint8_t>(f.k));
  switch (f.k) {
    case F1Node::K::Unit: break;
    case F1Node::K::Elem:
    case F1Node::K::Flag: w.u64(f.num); break;
    case F1Node::K::Total: {
      WKind wk = f.total.index() == 1   ? WKind::BagCount
                 : f.total.index() == 2 ? WKind::Int
                 : f.total.index() == 3 ? WKind::Rat
                                        : WKind::Complex;
      // BagCount doubles for NatM / Word here: the byte encodings coincide
      w.u8(static_cast<uint8_t>(wk));
      w_bytes(wk, f.total, w);
      break;
    }
    case F1Node::K::Sum:
      w.u8(static_cast<uint8_t>(f.num));
      f1_bytes(f.kids[0], w);
      break;
    case F1Node::K::Tuple:
      w.u32(static_cast<uint32_t>(f.kids.size()));
      for (const F1Node& kid : f.kids) f1_bytes(kid, w);
      break;
  }
}

F1Node f1_read(ByteReader& r) {
  F1Node f;
  uint8_t k = r.u8();
  if (k > static_cast<uint8_t>(F1Node::K::Tuple)) throw ProtocolError("bad F1 tag");
  f.k = static_cast<F1Node::K>(k);
  switch (f.k) {
    case F1Node::K::Unit: break;
    case F1Node::K::Elem:
    case F1Node::K::Flag: f.num = r.u64(); break;
    case F1Node::K::Total: {
      uint8_t wk = r.u8();
      if (wk > static_cast<uint8_t>(WKind::NatM)) throw ProtocolError("bad F1 weight kind");
      f.total = w_read(static_cast<WKind>(wk), r);
      break;
    }
    case F1Node::K::Sum:
      f.num = r.u8();
      f.kids.push_back(f1_read(r));
      break;
    case F1Node::K::Tuple: {
      uint32_t k2 = r.u32();
      f.kids.reserve(k2);
      for (uint32_t i = 0; i < k2; i++) f.kids.push_back(f1_read(r));
      break;
    }
  }
  return f;
}

namespace {

struct FlatEncoder {
  const TermSystem& sys;
  const AllocFn& alloc;
  std::vector<EncEdge> edges;

  StateId target_of(const FunctorTerm* basic, const Value& inner) {
    uint32_t cs = sys.child_sort(basic);
    if (cs == kDirectSort) return inner.num;
    return alloc(cs, inner);
  }

  static uint32_t slot(const LayoutNode& nd) {
    assert(nd.slot >= 0);
    return static_cast<uint32_t>(nd.slot);
  }

  F1Node enc(const LayoutNode& nd, const Value& v) {
    const FunctorTerm* t = nd.term;
    switch (t->kind) {
      case TermKind::Var:
        edges.push_back({slot(nd), Payload{}, v.num});
        return F1Node{F1Node::K::Unit, 0, {}, {}};
      case TermKind::ConstNat:
      case TermKind::ConstSet: return F1Node{F1Node::K::Elem, v.num, {}, {}};
      case TermKind::Powerset: {
        for (const Value& it : v.items) edges.push_back({slot(nd), Payload{}, target_of(t, it)});
        return F1Node{F1Node::K::Flag, v.items.empty() ? 0ull : 1ull, {}, {}};
      }
      case TermKind::Dist: {
        // D1 is a point: totals are always 1, only the edges matter
        for (size_t i = 0; i < v.items.size(); i++)
          edges.push_back({slot(nd), v.weights[i], target_of(t, v.items[i])});
        return F1Node{F1Node::K::Unit, 0, {}, {}};
      }
      case TermKind::Bag:
      case TermKind::MonoidValued: {
        WKind wk = map_wkind(*t);
        Payload tot = w_unit(wk);
        for (size_t i = 0; i < v.items.size(); i++) {
          edges.push_back({slot(nd), v.weights[i], target_of(t, v.items[i])});
          tot = w_add(wk, tot, v.weights[i]);
        }
        F1Node f{F1Node::K::Total, 0, {}, {}};
        f.total = std::move(tot);
        return f;
      }
      case TermKind::Sum: {
        F1Node f{F1Node::K::Sum, v.num, {}, {}};
        f.kids.push_back(enc(nd.kids[v.num], v.items[0]));
        return f;
      }
      case TermKind::Product: {
        F1Node f{F1Node::K::Tuple, 0, {}, {}};
        f.kids.push_back(enc(nd.kids[0], v.items[0]));
        f.kids.push_back(enc(nd.kids[1], v.items[1]));
        return f;
      }
      case TermKind::Exponent: {
        F1Node f{F1Node::K::Tuple, 0, {}, {}};
        for (size_t i = 0; i < nd.kids.size(); i++) f.kids.push_back(enc(nd.kids[i], v.items[i]));
        return f;
      }
    }
    assert(false);
    return {};
  }
};

}  // namespace

std::pair<F1Node, std::vector<EncEdge>> encode_flat(const TermSystem& sys, uint32_t sort,
                                                    const Value& v, const AllocFn& alloc) {
  FlatEncoder fe{sys, alloc, {}};
  F1Node f1 = fe.enc(sys.sorts[sort].layout.root, v);
  return {std::move(f1), std::move(fe.edges)};
}

EncodedCoalgebra desort(const NestedCoalgebra& nc) {
  EncodedCoalgebra c;
  c.sys = build_term_system(nc.term);
  c.n = nc.values.size();
  c.names = nc.names;
  c.edge_off.push_back(0);

  struct Pending {
    uint32_t sort;
    Value v;
  };
  std::vector<Pending> pending;
  AllocFn alloc = [&](uint32_t sort, const Value& inner) -> StateId {
    StateId id = c.n + pending.size();
    pending.push_back({sort, inner});
    return id;
  };

  auto step = [&](uint32_t sort, const Value& v) {
    auto [f1, es] = encode_flat(c.sys, sort, v, alloc);
    c.sort_of.push_back(sort);
    c.out.push_back(std::move(f1));
    c.edges.insert(c.edges.end(), std::make_move_iterator(es.begin()),
                   std::make_move_iterator(es.end()));
    c.edge_off.push_back(c.edges.size());
  };

  for (const Value& v : nc.values) step(0, v);
  for (size_t qi = 0; qi < pending.size(); qi++) {
    // take by value: step() may grow pending and invalidate references
    uint32_t sort = pending[qi].sort;
    Value v = std::move(pending[qi].v);
    step(sort, v);
  }
  return c;
}

// ---- outputs ----------------------------------------------------------------

void write_partition(std::ostream& os, const std::vector<std::string>& names,
                     const std::vector<uint64_t>& block_of) {
  std::unordered_map<uint64_t, uint64_t> remap;
  for (size_t i = 0; i < names.size(); i++) {
    auto [it, fresh] = remap.emplace(block_of[i], remap.size());
    os << names[i] << ": " << it->second << "\n";
    (void)fresh;
  }
}

void write_stats(std::ostream& os, const Stats& st) {
  os << "n=" << st.n << "\n";
  os << "m=" << st.m << "\n";
  os << "n_prime=" << st.n_prime << "\n";
  os << "iterations=" << st.iterations << "\n";
  os << "blocks=" << st.blocks << "\n";
  os << "wall_ms=" << st.wall_ms << "\n";
  os << "peak_rss_bytes_per_worker=" << st.peak_rss_bytes_per_worker << "\n";
  os << "splitting_rounds=" << st.splitting_rounds << "\n";
}

}  // namespace corefine
