#pragma once

#include <cctype>
#include <string>

#include "msow/formula.hpp"

namespace msow {

// Grammar (whitespace-insensitive):
//   formula := iff
//   iff     := impl ("<->" iff)?
//   impl    := or ("->" impl)?
//   or      := and ("|" or)?
//   and     := unary ("&" and)?
//   unary   := "!" unary | quant | atom | "(" formula ")" | "true" | "false"
//   quant   := ("exists"|"forall") name sort? "." formula
//   sort    := ":" ("elem"|"set"|"subsetV"|"subsetE"|"subset" "(" name ")"
//             | name)           -- a bare relation name relativizes an
//                                  element quantifier to that unary relation
//   atom    := "eq(" name "," name ")" | "member(" name "," name ")"
//            | "rel(" name "," name ("," name)? ")"
// A quantifier without sort binds an element variable.
class FormulaParser {
public:
  explicit FormulaParser(std::string text) : t_(std::move(text)) {}

  FormulaPtr parse() {
    auto f = formula();
    skip();
    if (p_ != t_.size()) fail("trailing input");
    return f;
  }

private:
  std::string t_;
  size_t p_ = 0;

  [[noreturn]] void fail(const std::string& m) {
    throw Error("formula syntax error at offset " + std::to_string(p_) + ": " + m);
  }
  void skip() {
    while (p_ < t_.size() && isspace((unsigned char)t_[p_])) ++p_;
  }
  bool lit(const std::string& s) {
    skip();
    if (t_.compare(p_, s.size(), s) == 0) {
      p_ += s.size();
      return true;
    }
    return false;
  }
  bool keyword(const std::string& s) {
    skip();
    size_t q = p_;
    if (t_.compare(q, s.size(), s) != 0) return false;
    q += s.size();
    if (q < t_.size() && (isalnum((unsigned char)t_[q]) || t_[q] == '_'))
      return false;
    p_ = q;
    return true;
  }
  void expect(const std::string& s) {
    if (!lit(s)) fail("expected '" + s + "'");
  }
  std::string name() {
    skip();
    size_t start = p_;
    while (p_ < t_.size() && (isalnum((unsigned char)t_[p_]) || t_[p_] == '_'))
      ++p_;
    if (p_ == start) fail("expected a name");
    return t_.substr(start, p_ - start);
  }

  FormulaPtr formula() { return iff(); }
  FormulaPtr iff() {
    auto a = impl();
    if (lit("<->")) return F::iff(a, iff());
    return a;
  }
  FormulaPtr impl() {
    auto a = disj();
    if (lit("->")) return F::impl(a, impl());
    return a;
  }
  FormulaPtr disj() {
    auto a = conj();
    skip();
    if (p_ < t_.size() && t_[p_] == '|') {
      ++p_;
      return F::disj(a, disj());
    }
    return a;
  }
  FormulaPtr conj() {
    auto a = unary();
    if (lit("&")) return F::conj(a, conj());
    return a;
  }

  FormulaPtr unary() {
    skip();
    if (lit("!")) return F::neg(unary());
    if (keyword("true")) return F::tru();
    if (keyword("false")) return F::fls();
    if (keyword("exists")) return quant(true);
    if (keyword("forall")) return quant(false);
    if (lit("(")) {
      auto f = formula();
      expect(")");
      return f;
    }
    return atom();
  }

  FormulaPtr quant(bool ex) {
    std::string v = name();
    skip();
    bool isSet = false, relativized = false;
    SetSort sort = SetSort::Any;
    std::string sortVar, guardRel;
    if (keyword("subset")) {
      // "exists X subset V." style
      isSet = true;
      std::string b = name();
      if (b == "V") sort = SetSort::SubV;
      else if (b == "E") sort = SetSort::SubE;
      else {
        sort = SetSort::SubVar;
        sortVar = b;
      }
    } else if (lit(":")) {
      std::string s = name();
      if (s == "elem") {
      } else if (s == "set") {
        isSet = true;
      } else if (s == "subsetV") {
        isSet = true;
        sort = SetSort::SubV;
      } else if (s == "subsetE") {
        isSet = true;
        sort = SetSort::SubE;
      } else if (s == "subset") {
        isSet = true;
        sort = SetSort::SubVar;
        expect("(");
        sortVar = name();
        expect(")");
      } else {
        relativized = true;  // element variable ranging over a unary relation
        guardRel = s;
      }
    }
    expect(".");
    auto body = formula();
    if (isSet)
      return ex ? F::exS(v, body, sort, sortVar)
                : F::allS(v, body, sort, sortVar);
    if (relativized)
      body = ex ? F::conj(F::rel(guardRel, v), body)
                : F::impl(F::rel(guardRel, v), body);
    return ex ? F::ex(v, body) : F::all(v, body);
  }

  FormulaPtr atom() {
    skip();
    if (keyword("eq")) {
      expect("(");
      auto a = name();
      expect(",");
      auto b = name();
      expect(")");
      return F::eq(a, b);
    }
    if (keyword("member")) {
      expect("(");
      auto a = name();
      expect(",");
      auto b = name();
      expect(")");
      return F::member(a, b);
    }
    if (keyword("rel")) {
      expect("(");
      auto r = name();
      expect(",");
      auto a = name();
      skip();
      if (lit(",")) {
        auto b = name();
        expect(")");
        return F::rel(r, a, b);
      }
      expect(")");
      return F::rel(r, a);
    }
    fail("expected an atom");
  }
};

inline FormulaPtr parse_formula(const std::string& text) {
  return FormulaParser(text).parse();
}

}  // namespace msow
