#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <string>

#include "msow/formula.hpp"

namespace msow {

// Splice a library definition into a context: fresh bound variables, then
// free parameters renamed to the caller's variables.
inline FormulaPtr instantiate(const FormulaPtr& def,
                              const std::map<std::string, std::string>& args) {
  return rename_free(freshen(def), args);
}

namespace sugar {

using namespace F;
using Mk1 = std::function<FormulaPtr(const std::string&)>;

inline FormulaPtr vmem(const std::string& x) { return rel("V", x); }
inline FormulaPtr emem(const std::string& x) { return rel("E", x); }
inline FormulaPtr inc(const std::string& x, const std::string& e) {
  return rel("in", x, e);
}

// x in V(P): x is an endpoint of some edge in P
inline FormulaPtr vP(const std::string& x, const std::string& P) {
  auto e = gensym("e");
  return ex(e, conj(member(e, P), inc(x, e)));
}
// {x,y} in P
inline FormulaPtr edge_in(const std::string& x, const std::string& y,
                          const std::string& P) {
  auto e = gensym("e");
  return conj(neg(eq(x, y)),
              ex(e, conj(member(e, P), conj(inc(x, e), inc(y, e)))));
}
// e cap X != empty
inline FormulaPtr edge_meets(const std::string& e, const std::string& X) {
  auto u = gensym("u");
  return ex(u, conj(vmem(u), conj(inc(u, e), member(u, X))));
}
// e subseteq X
inline FormulaPtr edge_inside(const std::string& e, const std::string& X) {
  auto u = gensym("u");
  return all(u, impl(inc(u, e), member(u, X)));
}
inline FormulaPtr subset_eq(const std::string& X, const std::string& Y) {
  auto z = gensym("z");
  return all(z, impl(member(z, X), member(z, Y)));
}
inline FormulaPtr set_eq(const std::string& X, const std::string& Y) {
  return conj(subset_eq(X, Y), subset_eq(Y, X));
}
inline FormulaPtr set_disjoint(const std::string& X, const std::string& Y) {
  auto z = gensym("z");
  return all(z, impl(member(z, X), neg(member(z, Y))));
}

inline FormulaPtr at_least_elems(int k, const Mk1& mk) {
  std::vector<std::string> xs;
  for (int i = 0; i < k; ++i) xs.push_back(gensym("x"));
  std::vector<FormulaPtr> body;
  for (int i = 0; i < k; ++i) body.push_back(mk(xs[i]));
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) body.push_back(neg(eq(xs[i], xs[j])));
  auto f = conj(body);
  for (int i = k - 1; i >= 0; --i) f = ex(xs[i], f);
  return f;
}
// at most k elements satisfy mk (no k+1 pairwise distinct witnesses)
inline FormulaPtr at_most_elems(int k, const Mk1& mk) {
  return neg(at_least_elems(k + 1, mk));
}
inline FormulaPtr exactly_one_elem(const Mk1& mk) {
  auto x = gensym("x"), y = gensym("y");
  return ex(x, conj(mk(x), all(y, impl(mk(y), eq(y, x)))));
}

}  // namespace sugar

// ---------------------------------------------------------------------------
// Library formulas. Bodies are built once and cached; callers splice copies
// via instantiate().

FormulaPtr library(const std::string& name);

namespace libdef {

using namespace F;
using namespace sugar;

inline FormulaPtr maxpath_app(const std::string& P, const std::string& PP) {
  return instantiate(library("maxpath"), {{"P", P}, {"PP", PP}});
}

// "exists P in PP" / "forall P in PP": quantification over the maximal paths
// of PP. The maxpath guard leads in the body so fused evaluation can
// enumerate paths directly.
inline FormulaPtr exists_path(const std::string& PP, const Mk1& mk) {
  auto P = gensym("P");
  return exS(P, conj(maxpath_app(P, PP), mk(P)), SetSort::SubVar, PP);
}
inline FormulaPtr forall_path(const std::string& PP, const Mk1& mk) {
  auto P = gensym("P");
  return allS(P, impl(maxpath_app(P, PP), mk(P)), SetSort::SubVar, PP);
}
inline FormulaPtr exactly_one_path(const std::string& PP, const Mk1& mk) {
  auto P = gensym("P"), Q = gensym("P");
  return exS(P,
             conj(maxpath_app(P, PP),
                  conj(mk(P), allS(Q,
                                   impl(conj(maxpath_app(Q, PP), mk(Q)),
                                        set_eq(Q, P)),
                                   SetSort::SubVar, PP))),
             SetSort::SubVar, PP);
}

inline FormulaPtr mk_conn() {
  // conn(P): every vertex set X meeting V(P) and closed under the edges of P
  // contains all of V(P)
  std::string P = "P", X = "X", x = "x", e = "e", y = "y";
  auto meets = ex(x, conj(vP(x, P), member(x, X)));
  auto closed = all(e, impl(member(e, P),
                            impl(edge_meets(e, X), edge_inside(e, X))));
  auto covers = all(y, impl(vP(y, P), member(y, X)));
  return allS(X, impl(conj(meets, closed), covers), SetSort::SubV);
}

inline FormulaPtr mk_ac() {
  // ac(P): no two distinct vertices joined by two edge-disjoint connected
  // sub-sets of P meeting exactly in those two vertices
  std::string P = "P", s = "s", t = "t", Pa = "Pa", Pb = "Pb", x = "x";
  auto connPa = instantiate(library("conn"), {{"P", Pa}});
  auto connPb = instantiate(library("conn"), {{"P", Pb}});
  auto meetExactly =
      all(x, iff(conj(vP(x, Pa), vP(x, Pb)), disj(eq(x, s), eq(x, t))));
  auto inner = conj({set_disjoint(Pa, Pb), connPa, connPb, meetExactly});
  auto body = conj(
      {vmem(s), vmem(t), neg(eq(s, t)),
       exS(Pa, exS(Pb, inner, SetSort::SubVar, P), SetSort::SubVar, P)});
  return neg(ex(s, ex(t, body)));
}

inline FormulaPtr mk_path() {
  std::string P = "P", x = "x";
  auto deg = all(x, impl(vmem(x), at_most_elems(2, [&](const std::string& e) {
                           return conj(member(e, P), inc(x, e));
                         })));
  return conj({instantiate(library("ac"), {{"P", P}}),
               instantiate(library("conn"), {{"P", P}}), deg});
}

inline FormulaPtr mk_sodp() {
  std::string P = "P", z = "z", x = "x";
  auto allEdges = all(z, impl(member(z, P), emem(z)));
  auto deg = all(x, at_most_elems(2, [&](const std::string& e) {
                  return conj(member(e, P), inc(x, e));
                }));
  return conj({allEdges, instantiate(library("ac"), {{"P", P}}), deg});
}

inline FormulaPtr mk_maxpath() {
  std::string P = "P", PP = "PP", z = "z", Pp = "Pq", w = "w";
  auto ppEdges = all(z, impl(member(z, PP), emem(z)));
  // proper superset of P inside PP is never a path
  auto maximal =
      allS(Pp,
           impl(conj(subset_eq(P, Pp),
                     ex(w, conj(member(w, Pp), neg(member(w, P))))),
                neg(instantiate(library("path"), {{"P", Pp}}))),
           SetSort::SubVar, PP);
  return conj({ppEdges, subset_eq(P, PP),
               instantiate(library("path"), {{"P", P}}), maximal});
}

inline FormulaPtr mk_ep() {
  std::string x = "x", P = "P";
  return conj(instantiate(library("path"), {{"P", P}}),
              exactly_one_elem([&](const std::string& e) {
                return conj(member(e, P), inc(x, e));
              }));
}

inline FormulaPtr mk_3col() {
  std::string C1 = "C1", C2 = "C2", C3 = "C3", x = "x", e = "e";
  auto covered = all(x, impl(vmem(x), disj({member(x, C1), member(x, C2),
                                            member(x, C3)})));
  auto proper =
      all(e, impl(emem(e), conj({neg(edge_inside(e, C1)),
                                 neg(edge_inside(e, C2)),
                                 neg(edge_inside(e, C3))})));
  return exS(C1,
             exS(C2, exS(C3, conj(covered, proper), SetSort::SubV),
                 SetSort::SubV),
             SetSort::SubV);
}

inline FormulaPtr mk_ham() {
  std::string P = "P", x = "x";
  return exS(P,
             conj(instantiate(library("path"), {{"P", P}}),
                  all(x, impl(vmem(x), vP(x, P)))),
             SetSort::SubE);
}

// ordering along a vertical path P, seen from its endpoint on T
inline FormulaPtr phi_ord(const std::string& x, const std::string& y,
                          const std::string& P, const std::string& T) {
  auto p = gensym("p"), Pp = gensym("Pp");
  auto sub = allS(Pp,
                  impl(conj(instantiate(library("path"), {{"P", Pp}}),
                            conj(vP(p, Pp), vP(y, Pp))),
                       vP(x, Pp)),
                  SetSort::SubVar, P);
  return ex(p, conj(vP(p, P), conj(vP(p, T), sub)));
}

inline FormulaPtr mk_grid_border() {
  std::string L = "L", R = "R", T = "T", B = "B", VV = "VV", HH = "HH";
  auto phi0 = conj(instantiate(library("set-o-dis-path"), {{"P", VV}}),
                   instantiate(library("set-o-dis-path"), {{"P", HH}}));

  auto cross_once = forall_path(VV, [&](const std::string& P) {
    return forall_path(HH, [&](const std::string& Q) {
      return exactly_one_elem([&](const std::string& x) {
        return conj({vmem(x), vP(x, P), vP(x, Q)});
      });
    });
  });
  std::string x0 = "x0";
  auto covered =
      all(x0, impl(vmem(x0),
                   conj(exactly_one_path(VV,
                                         [&](const std::string& P) {
                                           return vP(x0, P);
                                         }),
                        exactly_one_path(HH, [&](const std::string& Q) {
                          return vP(x0, Q);
                        }))));
  auto phi1 = conj(cross_once, covered);

  auto ends_on = [&](const std::string& PP, const std::string& Top,
                     const std::string& Bot) {
    return forall_path(PP, [&](const std::string& P) {
      auto x1 = gensym("x1"), x2 = gensym("x2");
      auto epx1 = instantiate(library("ep"), {{"x", x1}, {"P", P}});
      auto epx2 = instantiate(library("ep"), {{"x", x2}, {"P", P}});
      return ex(x1, ex(x2, conj({epx1, epx2, vP(x1, Top), vP(x2, Bot)})));
    });
  };
  auto phi2 = conj({maxpath_app(L, VV), maxpath_app(R, VV),
                    maxpath_app(T, HH), maxpath_app(B, HH),
                    ends_on(VV, T, B), ends_on(HH, L, R)});

  auto phi3 = forall_path(VV, [&](const std::string& P) {
    return forall_path(VV, [&](const std::string& Pp) {
      return forall_path(HH, [&](const std::string& Q) {
        return forall_path(HH, [&](const std::string& Qp) {
          std::string x = gensym("x"), xp = gensym("x"), y = gensym("y"),
                      yp = gensym("y");
          auto at = [&](const std::string& v, const std::string& A,
                        const std::string& Bb) {
            return conj(vP(v, A), vP(v, Bb));
          };
          auto body = conj(
              {at(x, P, Q), at(xp, Pp, Q), at(y, P, Qp), at(yp, Pp, Qp),
               iff(phi_ord(x, y, P, T), phi_ord(xp, yp, Pp, T)),
               iff(phi_ord(x, xp, Q, L), phi_ord(y, yp, Qp, L))});
          return ex(x, ex(xp, ex(y, ex(yp, body))));
        });
      });
    });
  });

  return conj({phi0, phi1, phi2, phi3});
}

inline FormulaPtr mk_grid() {
  std::string VV = "VV", HH = "HH", L = "L", T = "T", R = "R", B = "B",
              e = "e";
  auto border = instantiate(
      library("grid-border"),
      {{"L", L}, {"R", R}, {"T", T}, {"B", B}, {"VV", VV}, {"HH", HH}});
  // all edges of the graph lie on the path families
  auto covers =
      all(e, impl(emem(e), disj(member(e, VV), member(e, HH))));
  auto f = conj(border, covers);
  for (auto& v : {B, R, T, L}) f = exS(v, f, SetSort::SubE);
  return f;
}

// the closed sentence: some pair of path families realizes a grid
inline FormulaPtr mk_grid_sentence() {
  return exS("VV",
             exS("HH",
                 instantiate(library("grid"), {{"VV", "VV"}, {"HH", "HH"}}),
                 SetSort::SubE),
             SetSort::SubE);
}

// --- helpers for the pseudo-wall transductions (not exposed via library()) --

// F-path: a path inside FF joining x and y, two members of XX, with no
// inner vertex in XX
inline FormulaPtr mk_fpath() {
  std::string P = "P", x = "x", y = "y", FF = "FF", XX = "XX", z = "z";
  auto inner = all(z, impl(conj(vP(z, P), member(z, XX)),
                           disj(eq(z, x), eq(z, y))));
  return conj({subset_eq(P, FF), instantiate(library("path"), {{"P", P}}),
               neg(eq(x, y)), member(x, XX), member(y, XX),
               instantiate(library("ep"), {{"x", x}, {"P", P}}),
               instantiate(library("ep"), {{"x", y}, {"P", P}}), inner});
}

// mp(P): P is an F-path between some pair of XX
inline FormulaPtr mk_mp() {
  std::string P = "P", FF = "FF", XX = "XX", x = "x", y = "y";
  auto fp = instantiate(library("F-path"),
                        {{"P", P}, {"x", x}, {"y", y}, {"FF", FF}, {"XX", XX}});
  return ex(x, ex(y, fp));
}

// branch-set reachability: y reachable from x along FF-edges avoiding TT
inline FormulaPtr mk_reach_avoid() {
  std::string x = "x", y = "y", FF = "FF", TT = "TT", X = "X", u = "u",
              v = "v", e = "e";
  auto step = all(
      u, all(v, impl(conj(member(u, X),
                          ex(e, conj({member(e, FF), neg(member(e, TT)),
                                      inc(u, e), inc(v, e)}))),
                     member(v, X))));
  return allS(X, impl(conj(member(x, X), step), member(y, X)), SetSort::SubV);
}

inline std::map<std::string, FormulaPtr>& cache() {
  static std::map<std::string, FormulaPtr> c;
  return c;
}

}  // namespace libdef

inline FormulaPtr library(const std::string& name) {
  auto& c = libdef::cache();
  auto it = c.find(name);
  if (it != c.end()) return it->second;
  FormulaPtr f;
  if (name == "conn") f = libdef::mk_conn();
  else if (name == "ac") f = libdef::mk_ac();
  else if (name == "path") f = libdef::mk_path();
  else if (name == "set-o-dis-path") f = libdef::mk_sodp();
  else if (name == "maxpath") f = libdef::mk_maxpath();
  else if (name == "ep") f = libdef::mk_ep();
  else if (name == "3col") f = libdef::mk_3col();
  else if (name == "ham") f = libdef::mk_ham();
  else if (name == "grid-border") f = libdef::mk_grid_border();
  else if (name == "grid") f = libdef::mk_grid();
  else if (name == "grid-sentence") f = libdef::mk_grid_sentence();
  else if (name == "F-path") f = libdef::mk_fpath();
  else if (name == "mp") f = libdef::mk_mp();
  else if (name == "reach-avoid") f = libdef::mk_reach_avoid();
  else throw Error("unknown library formula: " + name);
  c[name] = f;
  return f;
}

// names accepted from user-facing entry points
inline bool library_public(const std::string& name) {
  for (auto n : {"conn", "ac", "path", "set-o-dis-path", "maxpath", "ep",
                 "3col", "ham", "grid", "grid-border"})
    if (name == n) return true;
  return false;
}

}  // namespace msow
