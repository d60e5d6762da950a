#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "msow/eval.hpp"
#include "msow/parse.hpp"

namespace msow {

// An MSO transduction: set parameters, a validity sentence, a universe
// formula (free variable x), an equivalence formula (free variables x, y)
// and one defining formula per output relation (free variables x1..xr).
struct Transduction {
  std::vector<std::string> params;
  FormulaPtr phiValid;
  FormulaPtr phiUniv;
  FormulaPtr phiSim;
  std::map<std::string, FormulaPtr> relFormulas;
  Signature outputSig;
};

// Quotient structure plus the equivalence classes that produced it. Output
// element names are the lexicographically least member of their class.
struct TransductionOutput {
  Structure structure;
  std::map<std::string, std::vector<std::string>> classes;
  Assignment params;
};

namespace detail {

inline int rel_arity(const Signature& sig, const std::string& r) {
  for (auto& [name, ar] : sig.relations)
    if (name == r) return ar;
  return -1;
}

}  // namespace detail

inline TransductionOutput apply(const Transduction& th, const Structure& A,
                                const Assignment& Y, EvalOptions opt = {}) {
  Assignment base;
  for (auto& p : th.params) {
    auto it = Y.find(p);
    if (it == Y.end() || !it->second.isSet)
      throw Error("missing set parameter: " + p);
    base[p] = it->second;
  }
  EvalSession S(A, opt);
  if (!S.eval(th.phiValid, base))
    throw Error("parameters do not satisfy phi_valid");

  std::vector<int> univ;
  for (int i = 0; i < A.size(); ++i) {
    Assignment a = base;
    a["x"] = Value::of_elem(i);
    if (S.eval(th.phiUniv, a)) univ.push_back(i);
  }
  auto sim = [&](int a, int b) {
    Assignment s = base;
    s["x"] = Value::of_elem(a);
    s["y"] = Value::of_elem(b);
    return S.eval(th.phiSim, s);
  };
  size_t n = univ.size();
  std::vector<std::vector<char>> m(n, std::vector<char>(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) m[i][j] = sim(univ[i], univ[j]);
  for (size_t i = 0; i < n; ++i) {
    if (!m[i][i])
      throw Error("phi_sim is not an equivalence on phi_univ: not reflexive");
    for (size_t j = 0; j < n; ++j)
      if (m[i][j] != m[j][i])
        throw Error("phi_sim is not an equivalence on phi_univ: "
                    "not symmetric");
  }
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      for (size_t k = 0; k < n; ++k)
        if (m[i][j] && m[j][k] && !m[i][k])
          throw Error("phi_sim is not an equivalence on phi_univ: "
                      "not transitive");

  // classes in order of their least member (universe order = lexicographic)
  std::vector<int> classOf(n, -1);
  std::vector<std::vector<int>> classMembers;  // indices into univ
  for (size_t i = 0; i < n; ++i) {
    if (classOf[i] != -1) continue;
    classOf[i] = (int)classMembers.size();
    classMembers.push_back({(int)i});
    for (size_t j = i + 1; j < n; ++j)
      if (m[i][j]) {
        classOf[j] = classOf[i];
        classMembers.back().push_back((int)j);
      }
  }

  TransductionOutput out;
  out.params = base;
  std::vector<std::string> elems;
  for (auto& mem : classMembers) {
    std::string rep = A.name_of(univ[mem[0]]);
    elems.push_back(rep);
    auto& cls = out.classes[rep];
    for (int i : mem) cls.push_back(A.name_of(univ[i]));
  }

  // every class member participates in the congruence cross-check; the cost
  // is bounded by the sim matrix already computed above
  std::vector<std::vector<int>> probes;
  for (auto& mem : classMembers) {
    std::vector<int> p;
    for (int i : mem) p.push_back(univ[i]);
    probes.push_back(p);
  }

  std::map<std::string, std::set<std::string>> un;
  std::map<std::string, std::set<std::pair<std::string, std::string>>> bin;
  for (auto& [R, ar] : th.outputSig.relations) {
    auto it = th.relFormulas.find(R);
    if (it == th.relFormulas.end())
      throw Error("transduction has no formula for relation " + R);
    if (ar == 1) {
      un[R];
      for (size_t c = 0; c < probes.size(); ++c) {
        int agree = -1;
        for (int a : probes[c]) {
          Assignment s = base;
          s["x1"] = Value::of_elem(a);
          int r = S.eval(it->second, s) ? 1 : 0;
          if (agree == -1) agree = r;
          else if (agree != r)
            throw Error("relation " + R + " is not a congruence");
        }
        if (agree == 1) un[R].insert(elems[c]);
      }
    } else if (ar == 2) {
      bin[R];
      for (size_t c = 0; c < probes.size(); ++c)
        for (size_t d = 0; d < probes.size(); ++d) {
          int agree = -1;
          for (int a : probes[c])
            for (int b : probes[d]) {
              Assignment s = base;
              s["x1"] = Value::of_elem(a);
              s["x2"] = Value::of_elem(b);
              int r = S.eval(it->second, s) ? 1 : 0;
              if (agree == -1) agree = r;
              else if (agree != r)
                throw Error("relation " + R + " is not a congruence");
            }
          if (agree == 1) bin[R].insert({elems[c], elems[d]});
        }
    } else {
      throw Error("unsupported arity for relation " + R);
    }
  }
  if (!th.outputSig.constants.empty())
    throw Error("transduction output constants unsupported");
  out.structure = Structure::make(th.outputSig, elems, un, bin);
  return out;
}

// Backward formula translation: Theta(phi) = phi_valid & phi', where phi'
// relativizes element quantifiers to phi_univ, replaces equality by phi_sim,
// replaces relation atoms by their defining formulas, and restricts set
// quantifiers to sim-closed subsets of phi_univ.
inline FormulaPtr translate(const Transduction& th, const FormulaPtr& phi0) {
  using namespace F;
  std::function<void(const FormulaPtr&)> check = [&](const FormulaPtr& f) {
    if (f->kind == Kind::Rel1 || f->kind == Kind::Rel2) {
      int ar = detail::rel_arity(th.outputSig, f->rel);
      int want = f->kind == Kind::Rel1 ? 1 : 2;
      if (ar == -1)
        throw Error("symbol not in output signature: " + f->rel);
      if (ar != want)
        throw Error("arity mismatch for output relation " + f->rel);
    }
    for (auto& k : f->kids) check(k);
  };
  check(phi0);
  FormulaPtr phi = freshen(phi0);

  auto univ_of = [&](const std::string& x) {
    return instantiate(th.phiUniv, {{"x", x}});
  };
  auto closed_set = [&](const std::string& X, SetSort sort) {
    auto u = gensym("u"), v = gensym("v");
    std::vector<FormulaPtr> inU{univ_of(u)};
    if (sort == SetSort::SubV || sort == SetSort::SubE) {
      auto it = th.relFormulas.find(sort == SetSort::SubV ? "V" : "E");
      if (it == th.relFormulas.end())
        throw Error("sorted set quantifier needs an output V/E relation");
      inU.push_back(instantiate(it->second, {{"x1", u}}));
    }
    auto dom = all(u, impl(member(u, X), conj(inU)));
    auto sim = instantiate(th.phiSim, {{"x", u}, {"y", v}});
    auto closure =
        all(u, all(v, impl(conj(member(u, X), sim), member(v, X))));
    return conj(dom, closure);
  };

  std::function<FormulaPtr(const FormulaPtr&)> tr =
      [&](const FormulaPtr& f) -> FormulaPtr {
    switch (f->kind) {
      case Kind::True:
      case Kind::False:
      case Kind::Member:
        return f;
      case Kind::Eq:
        return instantiate(th.phiSim, {{"x", f->v1}, {"y", f->v2}});
      case Kind::Rel1:
        return instantiate(th.relFormulas.at(f->rel), {{"x1", f->v1}});
      case Kind::Rel2:
        return instantiate(th.relFormulas.at(f->rel),
                           {{"x1", f->v1}, {"x2", f->v2}});
      case Kind::Exists:
        return ex(f->var, conj(univ_of(f->var), tr(f->kids[0])));
      case Kind::Forall:
        return all(f->var, impl(univ_of(f->var), tr(f->kids[0])));
      case Kind::ExistsSet: {
        auto g = closed_set(f->var, f->sort);
        SetSort s = f->sort == SetSort::SubVar ? SetSort::SubVar
                                               : SetSort::Any;
        return exS(f->var, conj(g, tr(f->kids[0])), s, f->sortVar);
      }
      case Kind::ForallSet: {
        auto g = closed_set(f->var, f->sort);
        SetSort s = f->sort == SetSort::SubVar ? SetSort::SubVar
                                               : SetSort::Any;
        return allS(f->var, impl(g, tr(f->kids[0])), s, f->sortVar);
      }
      default: {
        Formula g = *f;
        g.fv.reset();
        g.shape = 0;
        g.flags = -1;
        for (auto& k : g.kids) k = tr(k);
        return mk(std::move(g));
      }
    }
  };
  return conj(th.phiValid, tr(phi));
}

inline std::vector<TransductionOutput> enumerate_outputs(
    const Transduction& th, const Structure& A, uint64_t cap,
    EvalOptions opt = {}) {
  int n = A.size();
  int p = (int)th.params.size();
  int bits = n * p;
  if (bits >= 63 || (uint64_t(1) << bits) > cap)
    throw Error("parameter enumeration cap exceeded: 2^" +
                std::to_string(bits) + " assignments");
  std::vector<TransductionOutput> out;
  EvalSession S(A, opt);
  for (uint64_t mask = 0; mask < (uint64_t(1) << bits); ++mask) {
    Assignment Y;
    for (int j = 0; j < p; ++j) {
      Bitset b(n);
      for (int i = 0; i < n; ++i)
        if (mask >> (j * n + i) & 1) b.set(i);
      Y[th.params[j]] = Value::of_set(std::move(b));
    }
    if (!S.eval(th.phiValid, Y)) continue;
    out.push_back(apply(th, A, Y, opt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Builtins

namespace builtins {

using namespace F;
using namespace sugar;
using namespace libdef;

inline Transduction identity() {
  Transduction t;
  t.phiValid = tru();
  t.phiUniv = eq("x", "x");
  t.phiSim = eq("x", "y");
  t.relFormulas["V"] = rel("V", "x1");
  t.relFormulas["E"] = rel("E", "x1");
  t.relFormulas["in"] = rel("in", "x1", "x2");
  t.outputSig = sig_inc();
  return t;
}

// x is an edge of P occurring in no other maximal path of PP or QQ
inline FormulaPtr uni_edge(const std::string& x, const std::string& P,
                           const std::string& PP, const std::string& QQ) {
  auto not_other = [&](const std::string& fam) {
    return forall_path(fam, [&](const std::string& Q) {
      auto z = gensym("z");
      auto differ = ex(z, conj(vP(z, P), neg(vP(z, Q))));
      return impl(differ, neg(member(x, Q)));
    });
  };
  return conj({member(x, P), not_other(PP), not_other(QQ)});
}

// intersection graph of two families of disjoint paths: path vertices are
// represented by their private edges, crossing vertices by the shared
// vertex of the two paths
inline Transduction intersection_graph() {
  std::string PP = "PP", QQ = "QQ";
  Transduction t;
  t.params = {PP, QQ};
  t.phiValid = conj(instantiate(library("set-o-dis-path"), {{"P", PP}}),
                    instantiate(library("set-o-dis-path"), {{"P", QQ}}));

  auto univV = [&](const std::string& x) {
    return disj(exists_path(PP,
                            [&](const std::string& P) {
                              return uni_edge(x, P, PP, QQ);
                            }),
                exists_path(QQ, [&](const std::string& Q) {
                  return uni_edge(x, Q, PP, QQ);
                }));
  };
  auto simV = [&](const std::string& x, const std::string& y) {
    auto both = [&](const std::string& fam) {
      return exists_path(fam, [&](const std::string& P) {
        return conj(uni_edge(x, P, PP, QQ), uni_edge(y, P, PP, QQ));
      });
    };
    return disj(both(PP), both(QQ));
  };
  auto univE = [&](const std::string& x) {
    return conj(rel("V", x), exists_path(PP, [&](const std::string& P) {
                  return exists_path(QQ, [&](const std::string& Q) {
                    return conj(vP(x, P), vP(x, Q));
                  });
                }));
  };
  auto simE = [&](const std::string& x, const std::string& y) {
    return exists_path(PP, [&](const std::string& P) {
      return exists_path(QQ, [&](const std::string& Q) {
        return conj({vP(x, P), vP(x, Q), vP(y, P), vP(y, Q)});
      });
    });
  };

  t.phiUniv = disj(univV("x"), univE("x"));
  t.phiSim = disj(simV("x", "y"), simE("x", "y"));
  t.relFormulas["V"] = univV("x1");
  t.relFormulas["E"] = univE("x1");
  auto priv_with = [&](const std::string& fam) {
    return exists_path(fam, [&](const std::string& P) {
      return conj(uni_edge("x1", P, PP, QQ), vP("x2", P));
    });
  };
  t.relFormulas["in"] = conj({univV("x1"), univE("x2"),
                              disj(priv_with(PP), priv_with(QQ))});
  t.outputSig = sig_inc();
  return t;
}

}  // namespace builtins

inline Transduction builtin_transduction(const std::string& name) {
  if (name == "identity") return builtins::identity();
  if (name == "intersection-graph") return builtins::intersection_graph();
  throw Error("unknown builtin transduction: " + name);
}

// ---------------------------------------------------------------------------
// Text format: blocks `params:`, `valid:`, `univ(x):`, `sim(x,y):`,
// `rel R(x,...):`, one per line, '#' comments.

inline std::string write_transduction(const Transduction& t) {
  std::ostringstream o;
  if (!t.params.empty()) {
    o << "params:";
    for (auto& p : t.params) o << " " << p;
    o << "\n";
  }
  o << "valid: " << render(t.phiValid) << "\n";
  o << "univ(x): " << render(t.phiUniv) << "\n";
  o << "sim(x,y): " << render(t.phiSim) << "\n";
  for (auto& [R, f] : t.relFormulas) {
    int ar = detail::rel_arity(t.outputSig, R);
    o << "rel " << R << "(x1";
    for (int i = 2; i <= ar; ++i) o << ",x" << i;
    o << "): " << render(f) << "\n";
  }
  return o.str();
}

inline Transduction read_transduction(const std::string& text) {
  Transduction t;
  bool haveValid = false, haveUniv = false, haveSim = false;
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  auto fail = [&](const std::string& m) -> void {
    throw Error("transduction parse error line " + std::to_string(ln) +
                ": " + m);
  };
  std::vector<std::pair<std::string, int>> rels;
  auto canon = [](const FormulaPtr& f,
                  const std::map<std::string, std::string>& ren) {
    for (auto& [a, b] : ren)
      if (a != b) return instantiate(f, ren);
    return f;
  };
  while (std::getline(in, line)) {
    ++ln;
    size_t h = line.find_first_not_of(" \t");
    if (h == std::string::npos || line[h] == '#') continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos) fail("expected 'name: ...'");
    std::string head = line.substr(h, colon - h);
    std::string rest = line.substr(colon + 1);
    auto parse_args = [&](std::string& name) {
      std::vector<std::string> args;
      size_t par = name.find('(');
      if (par == std::string::npos) return args;
      std::string inner = name.substr(par + 1);
      name = name.substr(0, par);
      if (inner.empty() || inner.back() != ')') fail("expected ')'");
      inner.pop_back();
      std::string cur;
      for (char c : inner + ",") {
        if (c == ',') {
          if (cur.empty()) fail("empty argument name");
          args.push_back(cur);
          cur.clear();
        } else if (!isspace((unsigned char)c)) {
          cur += c;
        }
      }
      return args;
    };
    try {
      if (head == "params") {
        std::istringstream ps(rest);
        std::string p;
        while (ps >> p) t.params.push_back(p);
      } else if (head == "valid") {
        t.phiValid = parse_formula(rest);
        haveValid = true;
      } else if (head.rfind("univ", 0) == 0) {
        auto args = parse_args(head);
        if (head != "univ" || args.size() != 1) fail("expected univ(x)");
        t.phiUniv = canon(parse_formula(rest), {{args[0], "x"}});
        haveUniv = true;
      } else if (head.rfind("sim", 0) == 0) {
        auto args = parse_args(head);
        if (head != "sim" || args.size() != 2) fail("expected sim(x,y)");
        t.phiSim = canon(parse_formula(rest),
                         {{args[0], "x"}, {args[1], "y"}});
        haveSim = true;
      } else if (head.rfind("rel ", 0) == 0) {
        std::string name = head.substr(4);
        size_t s = name.find_first_not_of(" \t");
        name = name.substr(s == std::string::npos ? 0 : s);
        auto args = parse_args(name);
        if (args.empty() || args.size() > 2)
          fail("relation arity must be 1 or 2");
        std::map<std::string, std::string> ren;
        for (size_t i = 0; i < args.size(); ++i)
          ren[args[i]] = "x" + std::to_string(i + 1);
        t.relFormulas[name] = canon(parse_formula(rest), ren);
        rels.push_back({name, (int)args.size()});
      } else {
        fail("unknown block '" + head + "'");
      }
    } catch (const Error& e) {
      if (std::string(e.what()).rfind("transduction parse", 0) == 0) throw;
      fail(e.what());
    }
  }
  if (!haveValid) throw Error("transduction parse error: missing valid:");
  if (!haveUniv) throw Error("transduction parse error: missing univ(x):");
  if (!haveSim) throw Error("transduction parse error: missing sim(x,y):");
  std::sort(rels.begin(), rels.end());
  t.outputSig.relations = rels;
  return t;
}

}  // namespace msow
