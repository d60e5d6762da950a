#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "msow/structure.hpp"

namespace msow {

enum class Kind {
  True,
  False,
  Eq,       // v1 = v2 (elements)
  Rel1,     // rel(v1)
  Rel2,     // rel(v1, v2)
  Member,   // v1 in set v2
  Not,
  And,
  Or,
  Implies,
  Iff,
  Exists,   // element quantifier
  Forall,
  ExistsSet,
  ForallSet
};

// Domain restriction of a set quantifier. Keeping the restriction on the
// quantifier (rather than as a desugared guard) is what makes naive subset
// enumeration affordable; the semantics is the guarded one.
enum class SetSort { Any, SubV, SubE, SubVar };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct FreeVars {
  std::set<std::string> elems, sets;
};

struct Formula {
  Kind kind;
  std::string rel;       // Rel1/Rel2
  std::string v1, v2;    // atom arguments (Member: v1 element, v2 set)
  std::string var;       // quantified variable
  SetSort sort = SetSort::Any;
  std::string sortVar;   // for SetSort::SubVar
  std::vector<FormulaPtr> kids;

  // lazily computed caches
  mutable std::shared_ptr<FreeVars> fv;
  mutable uint64_t shape = 0;
  mutable int flags = -1;  // bit0: contains set quantifier
};

namespace F {

inline FormulaPtr mk(Formula f) { return std::make_shared<Formula>(std::move(f)); }

inline FormulaPtr tru() { return mk({Kind::True}); }
inline FormulaPtr fls() { return mk({Kind::False}); }
inline FormulaPtr eq(std::string x, std::string y) {
  Formula f{Kind::Eq};
  f.v1 = std::move(x);
  f.v2 = std::move(y);
  return mk(std::move(f));
}
inline FormulaPtr rel(std::string r, std::string x) {
  Formula f{Kind::Rel1};
  f.rel = std::move(r);
  f.v1 = std::move(x);
  return mk(std::move(f));
}
inline FormulaPtr rel(std::string r, std::string x, std::string y) {
  Formula f{Kind::Rel2};
  f.rel = std::move(r);
  f.v1 = std::move(x);
  f.v2 = std::move(y);
  return mk(std::move(f));
}
inline FormulaPtr member(std::string x, std::string X) {
  Formula f{Kind::Member};
  f.v1 = std::move(x);
  f.v2 = std::move(X);
  return mk(std::move(f));
}
inline FormulaPtr neg(FormulaPtr a) {
  Formula f{Kind::Not};
  f.kids = {std::move(a)};
  return mk(std::move(f));
}
inline FormulaPtr conj(FormulaPtr a, FormulaPtr b) {
  Formula f{Kind::And};
  f.kids = {std::move(a), std::move(b)};
  return mk(std::move(f));
}
inline FormulaPtr disj(FormulaPtr a, FormulaPtr b) {
  Formula f{Kind::Or};
  f.kids = {std::move(a), std::move(b)};
  return mk(std::move(f));
}
inline FormulaPtr impl(FormulaPtr a, FormulaPtr b) {
  Formula f{Kind::Implies};
  f.kids = {std::move(a), std::move(b)};
  return mk(std::move(f));
}
inline FormulaPtr iff(FormulaPtr a, FormulaPtr b) {
  Formula f{Kind::Iff};
  f.kids = {std::move(a), std::move(b)};
  return mk(std::move(f));
}
inline FormulaPtr conj(std::vector<FormulaPtr> xs) {
  if (xs.empty()) return tru();
  FormulaPtr r = xs.back();
  for (int i = (int)xs.size() - 2; i >= 0; --i) r = conj(xs[i], r);
  return r;
}
inline FormulaPtr disj(std::vector<FormulaPtr> xs) {
  if (xs.empty()) return fls();
  FormulaPtr r = xs.back();
  for (int i = (int)xs.size() - 2; i >= 0; --i) r = disj(xs[i], r);
  return r;
}
inline FormulaPtr ex(std::string x, FormulaPtr body) {
  Formula f{Kind::Exists};
  f.var = std::move(x);
  f.kids = {std::move(body)};
  return mk(std::move(f));
}
inline FormulaPtr all(std::string x, FormulaPtr body) {
  Formula f{Kind::Forall};
  f.var = std::move(x);
  f.kids = {std::move(body)};
  return mk(std::move(f));
}
inline FormulaPtr exS(std::string X, FormulaPtr body, SetSort s = SetSort::Any,
                      std::string sortVar = "") {
  Formula f{Kind::ExistsSet};
  f.var = std::move(X);
  f.sort = s;
  f.sortVar = std::move(sortVar);
  f.kids = {std::move(body)};
  return mk(std::move(f));
}
inline FormulaPtr allS(std::string X, FormulaPtr body, SetSort s = SetSort::Any,
                       std::string sortVar = "") {
  Formula f{Kind::ForallSet};
  f.var = std::move(X);
  f.sort = s;
  f.sortVar = std::move(sortVar);
  f.kids = {std::move(body)};
  return mk(std::move(f));
}

inline std::string gensym(const std::string& base) {
  static std::atomic<uint64_t> ctr{0};
  return base + "_" + std::to_string(++ctr);
}

}  // namespace F

// ---------------------------------------------------------------------------
// Free variables

inline const FreeVars& free_vars(const FormulaPtr& f) {
  if (f->fv) return *f->fv;
  FreeVars r;
  switch (f->kind) {
    case Kind::True:
    case Kind::False:
      break;
    case Kind::Eq:
    case Kind::Rel2:
      r.elems.insert(f->v1);
      r.elems.insert(f->v2);
      break;
    case Kind::Rel1:
      r.elems.insert(f->v1);
      break;
    case Kind::Member:
      r.elems.insert(f->v1);
      r.sets.insert(f->v2);
      break;
    default:
      for (auto& k : f->kids) {
        auto& s = free_vars(k);
        r.elems.insert(s.elems.begin(), s.elems.end());
        r.sets.insert(s.sets.begin(), s.sets.end());
      }
      if (f->kind == Kind::Exists || f->kind == Kind::Forall)
        r.elems.erase(f->var);
      if (f->kind == Kind::ExistsSet || f->kind == Kind::ForallSet) {
        r.sets.erase(f->var);
        if (f->sort == SetSort::SubVar) r.sets.insert(f->sortVar);
      }
  }
  f->fv = std::make_shared<FreeVars>(std::move(r));
  return *f->fv;
}

inline bool contains_set_quant(const FormulaPtr& f) {
  if (f->flags >= 0) return f->flags & 1;
  bool b = f->kind == Kind::ExistsSet || f->kind == Kind::ForallSet;
  for (auto& k : f->kids) b = b || contains_set_quant(k);
  f->flags = b ? 1 : 0;
  return b;
}

// ---------------------------------------------------------------------------
// Structural equality and shape hashing (names ignored in the shape)

inline bool equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind || a->rel != b->rel || a->v1 != b->v1 ||
      a->v2 != b->v2 || a->var != b->var || a->sort != b->sort ||
      a->sortVar != b->sortVar || a->kids.size() != b->kids.size())
    return false;
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (!equal(a->kids[i], b->kids[i])) return false;
  return true;
}

inline uint64_t shape_hash(const FormulaPtr& f) {
  if (f->shape) return f->shape;
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](uint64_t v) { h = (h ^ v) * 1099511628211ull; };
  mix((uint64_t)f->kind);
  mix((uint64_t)f->sort);
  for (char c : f->rel) mix((uint64_t)(unsigned char)c);
  for (auto& k : f->kids) mix(shape_hash(k));
  if (!h) h = 1;
  f->shape = h;
  return h;
}

// Alpha-invariant match of `node` against `pat`. Pattern bound variables are
// matched positionally; pattern free variables become macro arguments and may
// bind to any node-side variable not bound inside the matched region.
namespace detail {
inline bool alpha_match(const FormulaPtr& pat, const FormulaPtr& node,
                        std::map<std::string, std::string>& bound,
                        std::set<std::string>& nodeBound,
                        std::map<std::string, std::string>& args) {
  auto var_ok = [&](const std::string& pv, const std::string& nv) {
    auto it = bound.find(pv);
    if (it != bound.end()) return it->second == nv;
    if (nodeBound.count(nv)) return false;
    auto [ait, fresh] = args.emplace(pv, nv);
    return fresh || ait->second == nv;
  };
  if (pat->kind != node->kind || pat->rel != node->rel ||
      pat->sort != node->sort || pat->kids.size() != node->kids.size())
    return false;
  switch (pat->kind) {
    case Kind::True:
    case Kind::False:
      return true;
    case Kind::Eq:
    case Kind::Rel2:
    case Kind::Member:
      return var_ok(pat->v1, node->v1) && var_ok(pat->v2, node->v2);
    case Kind::Rel1:
      return var_ok(pat->v1, node->v1);
    default: {
      if (pat->sort == SetSort::SubVar && !var_ok(pat->sortVar, node->sortVar))
        return false;
      bool quant = pat->kind == Kind::Exists || pat->kind == Kind::Forall ||
                   pat->kind == Kind::ExistsSet || pat->kind == Kind::ForallSet;
      if (quant) {
        auto savedB = bound.find(pat->var) != bound.end()
                          ? std::optional<std::string>(bound[pat->var])
                          : std::nullopt;
        bool savedN = nodeBound.count(node->var) != 0;
        bound[pat->var] = node->var;
        nodeBound.insert(node->var);
        bool ok = alpha_match(pat->kids[0], node->kids[0], bound, nodeBound, args);
        if (savedB) bound[pat->var] = *savedB;
        else bound.erase(pat->var);
        if (!savedN) nodeBound.erase(node->var);
        return ok;
      }
      for (size_t i = 0; i < pat->kids.size(); ++i)
        if (!alpha_match(pat->kids[i], node->kids[i], bound, nodeBound, args))
          return false;
      return true;
    }
  }
}
}  // namespace detail

// On success returns pattern-free-var -> node variable name.
inline std::optional<std::map<std::string, std::string>> match_macro(
    const FormulaPtr& pat, const FormulaPtr& node) {
  if (shape_hash(pat) != shape_hash(node)) return std::nullopt;
  std::map<std::string, std::string> bound, args;
  std::set<std::string> nodeBound;
  if (!detail::alpha_match(pat, node, bound, nodeBound, args)) return std::nullopt;
  return args;
}

// ---------------------------------------------------------------------------
// Substitution

// Renames every bound variable to a fresh name; used before splicing one
// formula into another to rule out capture.
inline FormulaPtr freshen(const FormulaPtr& f,
                          std::map<std::string, std::string> ren = {}) {
  Formula g = *f;
  g.fv.reset();
  g.shape = 0;
  g.flags = -1;
  auto sub = [&](std::string& v) {
    auto it = ren.find(v);
    if (it != ren.end()) v = it->second;
  };
  sub(g.v1);
  sub(g.v2);
  if (g.sort == SetSort::SubVar) sub(g.sortVar);
  if (g.kind == Kind::Exists || g.kind == Kind::Forall ||
      g.kind == Kind::ExistsSet || g.kind == Kind::ForallSet) {
    std::string fresh = F::gensym(g.var);
    ren[g.var] = fresh;
    g.var = fresh;
  }
  for (auto& k : g.kids) k = freshen(k, ren);
  return F::mk(std::move(g));
}

// Renames free variable occurrences (element and set alike). The caller must
// ensure no capture; pair with freshen() when substituting into quantified
// contexts.
inline FormulaPtr rename_free(const FormulaPtr& f,
                              const std::map<std::string, std::string>& ren) {
  if (ren.empty()) return f;
  Formula g = *f;
  g.fv.reset();
  g.shape = 0;
  g.flags = -1;
  std::map<std::string, std::string> inner;
  bool drop = false;
  if (g.kind == Kind::Exists || g.kind == Kind::Forall ||
      g.kind == Kind::ExistsSet || g.kind == Kind::ForallSet)
    drop = ren.count(g.var) != 0;
  auto sub = [&](std::string& v) {
    auto it = ren.find(v);
    if (it != ren.end()) v = it->second;
  };
  sub(g.v1);
  sub(g.v2);
  if (g.sort == SetSort::SubVar) sub(g.sortVar);
  if (drop) {
    auto r2 = ren;
    r2.erase(g.var);
    for (auto& k : g.kids) k = rename_free(k, r2);
  } else {
    for (auto& k : g.kids) k = rename_free(k, ren);
  }
  return F::mk(std::move(g));
}

// ---------------------------------------------------------------------------
// Rendering (concrete syntax; see parse.hpp for the grammar)

namespace detail {
// precedence: atoms/! 5, & 4, | 3, -> 2, <-> 1, quantifiers 0
inline int prec_of(Kind k) {
  switch (k) {
    case Kind::And: return 4;
    case Kind::Or: return 3;
    case Kind::Implies: return 2;
    case Kind::Iff: return 1;
    case Kind::Exists:
    case Kind::Forall:
    case Kind::ExistsSet:
    case Kind::ForallSet: return 0;
    default: return 5;
  }
}

inline void render_rec(const FormulaPtr& f, std::ostream& o);

inline void render_child(const FormulaPtr& f, std::ostream& o, int need) {
  if (prec_of(f->kind) < need) {
    o << "(";
    render_rec(f, o);
    o << ")";
  } else {
    render_rec(f, o);
  }
}

inline void render_rec(const FormulaPtr& f, std::ostream& o) {
  switch (f->kind) {
    case Kind::True: o << "true"; break;
    case Kind::False: o << "false"; break;
    case Kind::Eq: o << "eq(" << f->v1 << "," << f->v2 << ")"; break;
    case Kind::Rel1: o << "rel(" << f->rel << "," << f->v1 << ")"; break;
    case Kind::Rel2:
      o << "rel(" << f->rel << "," << f->v1 << "," << f->v2 << ")";
      break;
    case Kind::Member: o << "member(" << f->v1 << "," << f->v2 << ")"; break;
    case Kind::Not:
      o << "!";
      render_child(f->kids[0], o, 5);
      break;
    case Kind::And:
      render_child(f->kids[0], o, 5);
      o << " & ";
      render_child(f->kids[1], o, 4);
      break;
    case Kind::Or:
      render_child(f->kids[0], o, 4);
      o << " | ";
      render_child(f->kids[1], o, 3);
      break;
    case Kind::Implies:
      render_child(f->kids[0], o, 3);
      o << " -> ";
      render_child(f->kids[1], o, 2);
      break;
    case Kind::Iff:
      render_child(f->kids[0], o, 2);
      o << " <-> ";
      render_child(f->kids[1], o, 1);
      break;
    case Kind::Exists:
    case Kind::Forall:
    case Kind::ExistsSet:
    case Kind::ForallSet: {
      bool ex = f->kind == Kind::Exists || f->kind == Kind::ExistsSet;
      o << (ex ? "exists " : "forall ") << f->var;
      if (f->kind == Kind::ExistsSet || f->kind == Kind::ForallSet) {
        switch (f->sort) {
          case SetSort::Any: o << ":set"; break;
          case SetSort::SubV: o << ":subsetV"; break;
          case SetSort::SubE: o << ":subsetE"; break;
          case SetSort::SubVar: o << ":subset(" << f->sortVar << ")"; break;
        }
      }
      o << ". ";
      render_rec(f->kids[0], o);
      break;
    }
  }
}
}  // namespace detail

inline std::string render(const FormulaPtr& f) {
  std::ostringstream o;
  detail::render_rec(f, o);
  return o.str();
}

}  // namespace msow
