#include "corefine/functor_term.hpp"

#include <algorithm>
#include <set>

#include "lexer.hpp"

namespace corefine {

bool is_basic(TermKind k) {
  return k == TermKind::Powerset || k == TermKind::Bag || k == TermKind::Dist ||
         k == TermKind::MonoidValued;
}

bool term_equal(const FunctorTerm& x, const FunctorTerm& y) {
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case TermKind::Var:
    case TermKind::ConstNat: return true;
    case TermKind::ConstSet: return x.elems == y.elems;
    case TermKind::Powerset:
    case TermKind::Bag:
    case TermKind::Dist: return term_equal(*x.a, *y.a);
    case TermKind::MonoidValued: return x.monoid == y.monoid && term_equal(*x.a, *y.a);
    case TermKind::Sum:
    case TermKind::Product: return term_equal(*x.a, *y.a) && term_equal(*x.b, *y.b);
    case TermKind::Exponent: return x.elems == y.elems && term_equal(*x.a, *y.a);
  }
  return false;
}

namespace {

constexpr size_t kMaxConstNumeral = 1000000;
constexpr size_t kMaxExponentNumeral = 4096;

TermPtr mk(FunctorTerm t) { return std::make_shared<const FunctorTerm>(std::move(t)); }

std::vector<std::string> numeral_names(size_t k) {
  std::vector<std::string> names;
  names.reserve(k);
  for (size_t i = 0; i < k; i++) names.push_back(std::to_string(i));
  return names;
}

bool is_numeral_range(const std::vector<std::string>& names) {
  for (size_t i = 0; i < names.size(); i++)
    if (names[i] != std::to_string(i)) return false;
  return !names.empty();
}

class TermParser {
 public:
  TermParser(const std::string& text, size_t line_no)
      : toks_(lex_line(text, line_no)), line_(line_no) {}

  TermPtr parse() {
    TermPtr t = parse_sum();
    expect(Tok::End, "trailing input after functor term");
    return t;
  }

 private:
  const Tok& peek(size_t ahead = 0) const {
    size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at(Tok::Kind k) const { return peek().kind == k; }
  const Tok& advance() { return toks_[pos_++]; }
  void expect(Tok::Kind k, const char* what) {
    if (!at(k)) err(what);
    advance();
  }
  [[noreturn]] void err(const std::string& what) const {
    throw ParseError(what + " at column " + std::to_string(peek().col + 1), line_);
  }

  TermPtr parse_sum() {
    TermPtr a = parse_prod();
    if (at(Tok::Plus)) {
      advance();
      TermPtr b = parse_sum();  // right-associative
      return mk({TermKind::Sum, {}, {}, a, b});
    }
    return a;
  }

  TermPtr parse_prod() {
    TermPtr a = parse_exp();
    if (at(Tok::Ident) && peek().text == "x") {
      advance();
      TermPtr b = parse_prod();  // right-associative
      return mk({TermKind::Product, {}, {}, a, b});
    }
    return a;
  }

  TermPtr parse_exp() {
    TermPtr t = parse_prefix();
    while (at(Tok::Caret)) {
      advance();
      t = mk({TermKind::Exponent, parse_exponent_arg(), {}, t, nullptr});
    }
    return t;
  }

  std::vector<std::string> parse_exponent_arg() {
    if (at(Tok::Nat)) {
      size_t k = parse_numeral(kMaxExponentNumeral);
      if (k == 0) err("exponent set must be nonempty");
      return numeral_names(k);
    }
    if (at(Tok::LBrace)) return parse_name_set("exponent");
    err("expected a finite set or numeral after '^'");
  }

  size_t parse_numeral(size_t cap) {
    const Tok& t = advance();
    unsigned long long v = 0;
    for (char c : t.text) {
      v = v * 10 + static_cast<unsigned long long>(c - '0');
      if (v > cap) throw ParseError("numeral " + t.text + " too large", line_);
    }
    return static_cast<size_t>(v);
  }

  std::vector<std::string> parse_name_set(const char* what) {
    expect(Tok::LBrace, "expected '{'");
    std::vector<std::string> names;
    std::set<std::string> seen;
    while (true) {
      if (!at(Tok::Ident)) err(std::string(what) + " element name expected");
      const std::string& name = advance().text;
      if (!seen.insert(name).second)
        throw ParseError(std::string("duplicate ") + what + " element '" + name + "'", line_);
      names.push_back(name);
      if (at(Tok::Comma)) {
        advance();
        continue;
      }
      expect(Tok::RBrace, "expected ',' or '}'");
      break;
    }
    return names;
  }

  // Monoid names are committed on the lookahead '(' Ident ','; no valid
  // parenthesized term starts that way.
  bool at_monoid_name() const {
    return at(Tok::LParen) && peek(1).kind == Tok::Ident && peek(2).kind == Tok::Comma;
  }

  MonoidId parse_monoid_name() {
    advance();  // (
    const std::string head = advance().text;
    advance();  // ,
    MonoidId m;
    if (head == "Z" && at(Tok::Plus)) {
      advance();
      m = MonoidId::IntAdd;
    } else if (head == "R" && at(Tok::Plus)) {
      advance();
      m = MonoidId::RatAdd;
    } else if (head == "C" && at(Tok::Plus)) {
      advance();
      m = MonoidId::ComplexRatAdd;
    } else if (head == "P64" && at(Tok::Ident) && peek().text == "or") {
      advance();
      m = MonoidId::Word64Or;
    } else if (head == "N" && at(Tok::Ident) && peek().text == "max") {
      advance();
      m = MonoidId::NatMax;
    } else {
      throw ParseError("unknown monoid '(" + head + "," + peek().text + ")'", line_);
    }
    expect(Tok::RParen, "expected ')' after monoid name");
    return m;
  }

  TermPtr parse_prefix() {
    if (at_monoid_name()) {
      MonoidId m = parse_monoid_name();
      expect(Tok::Caret, "monoid name must be applied as M^( T )");
      expect(Tok::LParen, "monoid name must be applied as M^( T )");
      TermPtr sub = parse_sum();
      expect(Tok::RParen, "expected ')' closing monoid argument");
      return mk({TermKind::MonoidValued, {}, m, sub, nullptr});
    }
    if (at(Tok::Ident)) return parse_ident_chain();
    if (at(Tok::Nat)) {
      size_t k = parse_numeral(kMaxConstNumeral);
      if (k == 0) err("finite set must be nonempty");
      return mk({TermKind::ConstSet, numeral_names(k), {}, nullptr, nullptr});
    }
    if (at(Tok::LBrace))
      return mk({TermKind::ConstSet, parse_name_set("finite set"), {}, nullptr, nullptr});
    if (at(Tok::LParen)) {
      advance();
      TermPtr t = parse_sum();
      expect(Tok::RParen, "expected ')'");
      return t;
    }
    err("expected a functor");
  }

  // An identifier in functor position is a juxtaposed chain of single-letter
  // symbols: P/B/D prefixes ending in X or N ("DX", "PBX"), or a lone symbol
  // whose argument follows as its own token ("P (X x X)").
  TermPtr parse_ident_chain() {
    const Tok& t = peek();
    return parse_chain_at(t.text, 0);
  }

  TermPtr parse_chain_at(const std::string& s, size_t off) {
    char c = s[off];
    bool last = off + 1 == s.size();
    switch (c) {
      case 'X':
        if (!last) err("unexpected name '" + s + "'");
        advance();
        return mk({TermKind::Var, {}, {}, nullptr, nullptr});
      case 'N':
        if (!last) err("unexpected name '" + s + "'");
        advance();
        return mk({TermKind::ConstNat, {}, {}, nullptr, nullptr});
      case 'P':
      case 'B':
      case 'D': {
        TermKind k = c == 'P' ? TermKind::Powerset : (c == 'B' ? TermKind::Bag : TermKind::Dist);
        TermPtr sub;
        if (last) {
          advance();
          sub = parse_prefix();
        } else {
          sub = parse_chain_at(s, off + 1);
        }
        return mk({k, {}, {}, sub, nullptr});
      }
      default:
        err("unexpected name '" + s + "' in functor position");
    }
  }

  std::vector<Tok> toks_;
  size_t line_ = 1;
  size_t pos_ = 0;
};

// precedence levels: Sum 0, Product 1, Exponent 2, prefix/monoid 3, atoms 4
int prec(const FunctorTerm& t) {
  switch (t.kind) {
    case TermKind::Sum: return 0;
    case TermKind::Product: return 1;
    case TermKind::Exponent: return 2;
    case TermKind::Powerset:
    case TermKind::Bag:
    case TermKind::Dist:
    case TermKind::MonoidValued: return 3;
    default: return 4;
  }
}

void print_set(const std::vector<std::string>& names, std::string& out) {
  if (is_numeral_range(names)) {
    out += std::to_string(names.size());
    return;
  }
  out += '{';
  for (size_t i = 0; i < names.size(); i++) {
    if (i) out += ',';
    out += names[i];
  }
  out += '}';
}

void pp(const FunctorTerm& t, int min_prec, std::string& out) {
  bool paren = prec(t) < min_prec;
  if (paren) out += '(';
  switch (t.kind) {
    case TermKind::Var: out += 'X'; break;
    case TermKind::ConstNat: out += 'N'; break;
    case TermKind::ConstSet: print_set(t.elems, out); break;
    case TermKind::Powerset:
    case TermKind::Bag:
    case TermKind::Dist:
      out += t.kind == TermKind::Powerset ? 'P' : (t.kind == TermKind::Bag ? 'B' : 'D');
      out += ' ';
      pp(*t.a, 3, out);
      break;
    case TermKind::MonoidValued:
      out += monoid_name(t.monoid);
      out += "^(";
      pp(*t.a, 0, out);
      out += ')';
      break;
    case TermKind::Sum:
      pp(*t.a, 1, out);
      out += " + ";
      pp(*t.b, 0, out);
      break;
    case TermKind::Product:
      pp(*t.a, 2, out);
      out += " x ";
      pp(*t.b, 1, out);
      break;
    case TermKind::Exponent:
      pp(*t.a, 2, out);
      out += '^';
      print_set(t.elems, out);
      break;
  }
  if (paren) out += ')';
}

class LayoutBuilder {
 public:
  LayoutNode build(const FunctorTerm* t, const std::string& path) {
    LayoutNode nd;
    nd.term = t;
    nd.slot_lo = static_cast<uint32_t>(slots.size());
    switch (t->kind) {
      case TermKind::Var: nd.slot = add(WKind::Unit, path + "X"); break;
      case TermKind::ConstNat:
      case TermKind::ConstSet: break;
      case TermKind::Powerset: nd.slot = add(WKind::Unit, path + "P"); break;
      case TermKind::Bag: nd.slot = add(WKind::BagCount, path + "B"); break;
      case TermKind::Dist: nd.slot = add(WKind::Rat, path + "D"); break;
      case TermKind::MonoidValued:
        nd.slot = add(wkind_of(t->monoid), path + monoid_name(t->monoid));
        break;
      case TermKind::Sum:
        nd.kids.push_back(build(t->a.get(), path + "inl."));
        nd.kids.push_back(build(t->b.get(), path + "inr."));
        break;
      case TermKind::Product:
        nd.kids.push_back(build(t->a.get(), path + "pr1."));
        nd.kids.push_back(build(t->b.get(), path + "pr2."));
        break;
      case TermKind::Exponent:
        for (const std::string& name : t->elems)
          nd.kids.push_back(build(t->a.get(), path + "exp[" + name + "]."));
        break;
    }
    nd.slot_hi = static_cast<uint32_t>(slots.size());
    return nd;
  }

  std::vector<SlotInfo> slots;

 private:
  int32_t add(WKind k, std::string path) {
    slots.push_back(SlotInfo{k, std::move(path)});
    return static_cast<int32_t>(slots.size()) - 1;
  }
};

// Collect the cut points (basic nodes) of one sort's top layer: recursion
// stays within the polynomial structure and stops at basic nodes.
void collect_cuts(const FunctorTerm* t, std::vector<const FunctorTerm*>& out) {
  switch (t->kind) {
    case TermKind::Var:
    case TermKind::ConstNat:
    case TermKind::ConstSet: return;
    case TermKind::Powerset:
    case TermKind::Bag:
    case TermKind::Dist:
    case TermKind::MonoidValued: out.push_back(t); return;
    case TermKind::Sum:
    case TermKind::Product:
      collect_cuts(t->a.get(), out);
      collect_cuts(t->b.get(), out);
      return;
    case TermKind::Exponent: collect_cuts(t->a.get(), out); return;
  }
}

}  // namespace

TermPtr parse_functor(const std::string& text, size_t line_no) {
  return TermParser(text, line_no).parse();
}

std::string pretty_print(const FunctorTerm& t) {
  std::string out;
  pp(t, 0, out);
  return out;
}

LabelLayout label_layout(const FunctorTerm& sort_tree) {
  LayoutBuilder b;
  LabelLayout layout;
  layout.root = b.build(&sort_tree, "");
  layout.slots = std::move(b.slots);
  return layout;
}

uint32_t TermSystem::child_sort(const FunctorTerm* basic_node) const {
  for (size_t i = 0; i < cut_nodes.size(); i++)
    if (cut_nodes[i] == basic_node) return cut_sorts[i];
  throw std::logic_error("child_sort: node is not a basic node of this system");
}

TermSystem build_term_system(TermPtr root) {
  TermSystem sys;
  sys.root = root;
  std::vector<TermPtr> pending{root};
  size_t qi = 0;
  while (qi < pending.size()) {
    TermPtr tree = pending[qi++];
    Sort s;
    s.tree = tree;
    s.layout = label_layout(*tree);
    sys.sorts.push_back(std::move(s));
    std::vector<const FunctorTerm*> cuts;
    collect_cuts(tree.get(), cuts);
    for (const FunctorTerm* nd : cuts) {
      sys.cut_nodes.push_back(nd);
      if (nd->a->kind == TermKind::Var) {
        sys.cut_sorts.push_back(kDirectSort);
      } else {
        sys.cut_sorts.push_back(static_cast<uint32_t>(pending.size()));
        pending.push_back(nd->a);
      }
    }
  }
  return sys;
}

}  // namespace corefine
