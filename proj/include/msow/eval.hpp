#pragma once

#include <atomic>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <thread>
#include <unordered_map>

#include "msow/graph.hpp"
#include "msow/library.hpp"

namespace msow {

enum class EvalMode { Pure, Fused };

struct EvalOptions {
  EvalMode mode = EvalMode::Fused;
  int capBits = 20;  // largest set-quantifier domain enumerated naively
  int jobs = 1;
};

struct Value {
  bool isSet = false;
  int elem = -1;
  Bitset set;

  static Value of_elem(int i) {
    Value v;
    v.elem = i;
    return v;
  }
  static Value of_set(Bitset b) {
    Value v;
    v.isSet = true;
    v.set = std::move(b);
    return v;
  }
  bool operator==(const Value& o) const {
    return isSet == o.isSet && elem == o.elem && set == o.set;
  }
  size_t hash() const {
    return isSet ? set.hash() : std::hash<int>()(elem) * 2654435761u;
  }
};

using Assignment = std::map<std::string, Value>;

inline Value elem_value(const Structure& A, const std::string& name) {
  return Value::of_elem(A.index_of(name));
}
inline Value set_value(const Structure& A,
                       const std::vector<std::string>& names) {
  Bitset b(A.size());
  for (auto& n : names) b.set(A.index_of(n));
  return Value::of_set(std::move(b));
}

// ---------------------------------------------------------------------------
// Native checkers. Each mirrors the semantics of the corresponding library
// formula exactly, including degenerate cases (empty sets, junk elements).

namespace native {

struct DSU {
  std::vector<int> p;
  explicit DSU(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[a] = b;
    return true;
  }
};

// edge elements of a set value
inline std::vector<int> set_edges(const Structure& A, const Bitset& P) {
  std::vector<int> r;
  for (int i = P.next(0); i != -1; i = P.next(i + 1))
    if (A.is_edge(i)) r.push_back(i);
  return r;
}

inline Bitset verts_of(const Structure& A, const Bitset& P) {
  Bitset r(A.size());
  for (int e : set_edges(A, P)) {
    auto [a, b] = A.endpoints(e);
    if (a >= 0) r.set(a);
    if (b >= 0) r.set(b);
  }
  return r;
}

inline bool conn(const Structure& A, const Bitset& P) {
  auto es = set_edges(A, P);
  if (es.empty()) return true;
  DSU d(A.size());
  for (int e : es) {
    auto [a, b] = A.endpoints(e);
    if (a >= 0 && b >= 0) d.unite(a, b);
  }
  int root = -1;
  for (int e : es) {
    auto [a, b] = A.endpoints(e);
    for (int v : {a, b}) {
      if (v < 0) continue;
      if (root == -1) root = d.find(v);
      else if (d.find(v) != root) return false;
    }
  }
  return true;
}

// no cycle (in the multigraph sense) among the edges of P
inline bool acyclic(const Structure& A, const Bitset& P) {
  DSU d(A.size());
  for (int e : set_edges(A, P)) {
    auto [a, b] = A.endpoints(e);
    if (a >= 0 && b >= 0 && a != b && !d.unite(a, b)) return false;
  }
  return true;
}

inline bool deg_le2(const Structure& A, const Bitset& P) {
  std::unordered_map<int, int> deg;
  for (int e : set_edges(A, P)) {
    auto [a, b] = A.endpoints(e);
    if (a >= 0 && ++deg[a] > 2) return false;
    if (b >= 0 && ++deg[b] > 2) return false;
  }
  return true;
}

inline bool all_edges(const Structure& A, const Bitset& P) {
  for (int i = P.next(0); i != -1; i = P.next(i + 1))
    if (!A.is_edge(i)) return false;
  return true;
}

inline bool path(const Structure& A, const Bitset& P) {
  return acyclic(A, P) && conn(A, P) && deg_le2(A, P);
}

inline bool sodp(const Structure& A, const Bitset& P) {
  return all_edges(A, P) && acyclic(A, P) && deg_le2(A, P);
}

inline bool maxpath(const Structure& A, const Bitset& P, const Bitset& PP) {
  if (!all_edges(A, PP) || !P.subset_of(PP) || !path(A, P)) return false;
  for (int e = PP.next(0); e != -1; e = PP.next(e + 1)) {
    if (P.test(e)) continue;
    Bitset q(P);
    q.set(e);
    if (path(A, q)) return false;
  }
  return true;
}

inline int degree_in(const Structure& A, int x, const Bitset& P) {
  int d = 0;
  for (int e : A.incident_edges(x))
    if (P.test(e)) ++d;
  return d;
}

inline bool ep(const Structure& A, int x, const Bitset& P) {
  if (!path(A, P)) return false;
  if (!A.is_vertex(x)) return false;
  return degree_in(A, x, P) == 1;
}

// connected components of an edge set, ordered by smallest edge index
inline std::vector<Bitset> edge_components(const Structure& A,
                                           const Bitset& P) {
  auto es = set_edges(A, P);
  DSU d(A.size());
  for (int e : es) {
    auto [a, b] = A.endpoints(e);
    if (a >= 0 && b >= 0) d.unite(a, b);
  }
  std::map<int, Bitset> comp;  // root -> edges; remapped to min edge below
  std::map<int, int> minEdge;
  for (int e : es) {
    auto [a, b] = A.endpoints(e);
    int r = a >= 0 ? d.find(a) : (b >= 0 ? d.find(b) : -e - 2);
    auto it = comp.find(r);
    if (it == comp.end()) {
      comp.emplace(r, Bitset(A.size())).first->second.set(e);
      minEdge[r] = e;
    } else {
      it->second.set(e);
    }
  }
  std::map<int, Bitset> ordered;
  for (auto& [r, b] : comp) ordered[minEdge[r]] = b;
  std::vector<Bitset> out;
  for (auto& [_, b] : ordered) out.push_back(b);
  return out;
}

// vertex sequence along a path-shaped edge set (>=1 edge)
inline std::vector<int> path_sequence(const Structure& A, const Bitset& P) {
  std::unordered_map<int, std::vector<int>> adj;  // vertex -> edges of P
  for (int e : set_edges(A, P)) {
    auto [a, b] = A.endpoints(e);
    adj[a].push_back(e);
    adj[b].push_back(e);
  }
  int start = -1;
  for (auto& [v, es] : adj)
    if (es.size() == 1 && (start == -1 || v < start)) start = v;
  std::vector<int> seq;
  if (start == -1) return seq;
  int cur = start, prevEdge = -1;
  for (;;) {
    seq.push_back(cur);
    int nextE = -1;
    for (int e : adj[cur])
      if (e != prevEdge) nextE = e;
    if (nextE == -1) break;
    auto [a, b] = A.endpoints(nextE);
    cur = a == cur ? b : a;
    prevEdge = nextE;
  }
  return seq;
}

// maximal paths of PP: the components when PP is a set of disjoint paths,
// {empty} when PP is empty, subset filtering otherwise
inline std::vector<Bitset> enumerate_maxpaths(const Structure& A,
                                              const Bitset& PP, int capBits) {
  std::vector<Bitset> out;
  if (!all_edges(A, PP)) return out;
  if (PP.none()) {
    out.push_back(Bitset(A.size()));
    return out;
  }
  if (sodp(A, PP)) return edge_components(A, PP);
  auto es = set_edges(A, PP);
  if ((int)es.size() > capBits)
    throw Error("maximal-path enumeration over " + std::to_string(es.size()) +
                " edges exceeds cap of " + std::to_string(capBits));
  for (uint64_t m = 0; m < (uint64_t(1) << es.size()); ++m) {
    Bitset P(A.size());
    for (size_t i = 0; i < es.size(); ++i)
      if (m >> i & 1) P.set(es[i]);
    if (maxpath(A, P, PP)) out.push_back(P);
  }
  return out;
}

// simple paths inside FF from x to y whose inner vertices avoid XX
inline std::vector<Bitset> enumerate_fpaths(const Structure& A, int x, int y,
                                            const Bitset& FF,
                                            const Bitset& XX) {
  std::vector<Bitset> out;
  if (x == y || !XX.test(x) || !XX.test(y)) return out;
  if (!A.is_vertex(x) || !A.is_vertex(y)) return out;
  Bitset visited(A.size());
  Bitset cur(A.size());
  long steps = 0;
  std::function<void(int)> dfs = [&](int u) {
    if (++steps > 2000000)
      throw Error("F-path enumeration exceeded step budget");
    for (int e : A.incident_edges(u)) {
      if (!FF.test(e) || !A.is_edge(e) || cur.test(e)) continue;
      auto [a, b] = A.endpoints(e);
      int w = a == u ? b : a;
      if (w < 0) continue;
      if (w == y) {
        cur.set(e);
        out.push_back(cur);
        cur.reset(e);
        continue;
      }
      if (visited.test(w) || XX.test(w)) continue;
      visited.set(w);
      cur.set(e);
      dfs(w);
      cur.reset(e);
      visited.reset(w);
    }
  };
  visited.set(x);
  dfs(x);
  std::sort(out.begin(), out.end());
  return out;
}

inline bool fpath(const Structure& A, const Bitset& P, int x, int y,
                  const Bitset& FF, const Bitset& XX) {
  if (x == y || !XX.test(x) || !XX.test(y)) return false;
  if (!P.subset_of(FF) || !path(A, P)) return false;
  if (!ep(A, x, P) || !ep(A, y, P)) return false;
  Bitset vs = verts_of(A, P);
  for (int v = vs.next(0); v != -1; v = vs.next(v + 1))
    if (XX.test(v) && v != x && v != y) return false;
  return true;
}

inline std::vector<Bitset> enumerate_all_fpaths(const Structure& A,
                                                const Bitset& FF,
                                                const Bitset& XX) {
  std::set<Bitset> seen;
  auto xs = XX.members();
  for (size_t i = 0; i < xs.size(); ++i)
    for (size_t j = i + 1; j < xs.size(); ++j)
      for (auto& p : enumerate_fpaths(A, xs[i], xs[j], FF, XX)) seen.insert(p);
  return std::vector<Bitset>(seen.begin(), seen.end());
}

inline bool mp(const Structure& A, const Bitset& P, const Bitset& FF,
               const Bitset& XX) {
  auto xs = XX.members();
  for (size_t i = 0; i < xs.size(); ++i)
    for (size_t j = i + 1; j < xs.size(); ++j)
      if (fpath(A, P, xs[i], xs[j], FF, XX) ||
          fpath(A, P, xs[j], xs[i], FF, XX))
        return true;
  return false;
}

inline bool reach_avoid(const Structure& A, int x, int y, const Bitset& FF,
                        const Bitset& TT) {
  if (x == y) return true;
  Bitset vis(A.size());
  vis.set(x);
  std::vector<int> stack{x};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (!A.is_vertex(u)) continue;
    for (int e : A.incident_edges(u)) {
      if (!FF.test(e) || TT.test(e)) continue;
      auto [a, b] = A.endpoints(e);
      for (int w : {a, b}) {
        if (w < 0 || vis.test(w)) continue;
        if (w == y) return true;
        vis.set(w);
        stack.push_back(w);
      }
    }
  }
  return false;
}

// --- grid-border / grid ----------------------------------------------------

struct GridData {
  std::vector<Bitset> Vs, Hs;                 // maximal paths of each family
  std::vector<std::vector<int>> Vseq, Hseq;   // vertex order along each path
  std::vector<std::vector<int>> cross;        // cross[i][j], unique by phi1
  std::vector<std::unordered_map<int, int>> Vpos, Hpos;
};

// checks phi0 and phi1; returns crossing data for phi2/phi3
inline std::optional<GridData> grid_core(const Structure& A, const Bitset& VV,
                                         const Bitset& HH) {
  if (!sodp(A, VV) || !sodp(A, HH)) return std::nullopt;
  GridData d;
  d.Vs = edge_components(A, VV);
  d.Hs = edge_components(A, HH);
  std::vector<Bitset> Vvs, Hvs;
  for (auto& P : d.Vs) {
    d.Vseq.push_back(path_sequence(A, P));
    Vvs.push_back(verts_of(A, P));
  }
  for (auto& Q : d.Hs) {
    d.Hseq.push_back(path_sequence(A, Q));
    Hvs.push_back(verts_of(A, Q));
  }
  // each vertical path meets each horizontal path in exactly one vertex
  d.cross.assign(d.Vs.size(), std::vector<int>(d.Hs.size(), -1));
  for (size_t i = 0; i < d.Vs.size(); ++i)
    for (size_t j = 0; j < d.Hs.size(); ++j) {
      Bitset c = Vvs[i] & Hvs[j];
      if (c.count() != 1) return std::nullopt;
      d.cross[i][j] = c.next(0);
    }
  // each vertex lies on exactly one path of each family
  std::vector<int> vcnt(A.size(), 0), hcnt(A.size(), 0);
  for (auto& b : Vvs)
    for (int v = b.next(0); v != -1; v = b.next(v + 1)) ++vcnt[v];
  for (auto& b : Hvs)
    for (int v = b.next(0); v != -1; v = b.next(v + 1)) ++hcnt[v];
  for (int v = 0; v < A.size(); ++v)
    if (A.is_vertex(v) && (vcnt[v] != 1 || hcnt[v] != 1)) return std::nullopt;
  for (auto& s : d.Vseq) {
    d.Vpos.emplace_back();
    for (size_t i = 0; i < s.size(); ++i) d.Vpos.back()[s[i]] = (int)i;
  }
  for (auto& s : d.Hseq) {
    d.Hpos.emplace_back();
    for (size_t i = 0; i < s.size(); ++i) d.Hpos.back()[s[i]] = (int)i;
  }
  return d;
}

// phi2 and phi3 for border choice (iL,iR index Vs; iT,iB index Hs; -1 = empty
// set, legal only when the family itself is empty)
inline bool border_ok(const Structure& A, const GridData& d, int iL, int iR,
                      int iT, int iB) {
  if ((iL == -1 || iR == -1) && !d.Vs.empty()) return false;
  if ((iT == -1 || iB == -1) && !d.Hs.empty()) return false;
  auto vset = [&](const std::vector<Bitset>& fam, int i) {
    return i == -1 ? Bitset(A.size()) : verts_of(A, fam[i]);
  };
  Bitset VT = vset(d.Hs, iT), VB = vset(d.Hs, iB);
  Bitset VL = vset(d.Vs, iL), VR = vset(d.Vs, iR);
  auto endpoints_meet = [&](const std::vector<int>& seq, const Bitset& S1,
                            const Bitset& S2) {
    int u = seq.front(), v = seq.back();
    return (S1.test(u) || S1.test(v)) && (S2.test(u) || S2.test(v));
  };
  for (auto& seq : d.Vseq)
    if (!endpoints_meet(seq, VT, VB)) return false;
  for (auto& seq : d.Hseq)
    if (!endpoints_meet(seq, VL, VR)) return false;

  // phi3: orderings agree, measured from the T and L crossings
  auto between = [](int ref, int end, int x) {
    return x >= std::min(ref, end) && x <= std::max(ref, end);
  };
  size_t nv = d.Vs.size(), nh = d.Hs.size();
  for (size_t p = 0; p < nv; ++p)
    for (size_t pp = 0; pp < nv; ++pp)
      for (size_t q = 0; q < nh; ++q)
        for (size_t qp = 0; qp < nh; ++qp) {
          int x = d.cross[p][q], xp = d.cross[pp][q];
          int y = d.cross[p][qp], yp = d.cross[pp][qp];
          auto& posP = d.Vpos[p];
          auto& posPp = d.Vpos[pp];
          int refP = d.cross[p][iT], refPp = d.cross[pp][iT];
          bool o1 = between(posP.at(refP), posP.at(y), posP.at(x));
          bool o1p = between(posPp.at(refPp), posPp.at(yp), posPp.at(xp));
          if (o1 != o1p) return false;
          auto& posQ = d.Hpos[q];
          auto& posQp = d.Hpos[qp];
          int refQ = d.cross[iL][q], refQp = d.cross[iL][qp];
          bool o2 = between(posQ.at(refQ), posQ.at(xp), posQ.at(x));
          bool o2p = between(posQp.at(refQp), posQp.at(yp), posQp.at(y));
          if (o2 != o2p) return false;
        }
  return true;
}

// index of a border value within a family, -1 for empty, nullopt if the value
// is not a maximal path of the family
inline std::optional<int> border_index(const std::vector<Bitset>& fam,
                                       const Bitset& val) {
  if (val.none()) return fam.empty() ? std::optional<int>(-1) : std::nullopt;
  for (size_t i = 0; i < fam.size(); ++i)
    if (fam[i] == val) return (int)i;
  return std::nullopt;
}

inline bool grid_border(const Structure& A, const Bitset& L, const Bitset& R,
                        const Bitset& T, const Bitset& B, const Bitset& VV,
                        const Bitset& HH) {
  auto d = grid_core(A, VV, HH);
  if (!d) return false;
  auto iL = border_index(d->Vs, L), iR = border_index(d->Vs, R);
  auto iT = border_index(d->Hs, T), iB = border_index(d->Hs, B);
  if (!iL || !iR || !iT || !iB) return false;
  return border_ok(A, *d, *iL, *iR, *iT, *iB);
}

inline bool grid(const Structure& A, const Bitset& VV, const Bitset& HH) {
  const Bitset& E = A.unary_rel("E");
  if (!E.subset_of(VV | HH)) return false;
  auto d = grid_core(A, VV, HH);
  if (!d) return false;
  int nv = (int)d->Vs.size(), nh = (int)d->Hs.size();
  auto idxs = [&](int n) {
    std::vector<int> r;
    if (n == 0) r.push_back(-1);
    for (int i = 0; i < n; ++i) r.push_back(i);
    return r;
  };
  for (int iL : idxs(nv))
    for (int iR : idxs(nv))
      for (int iT : idxs(nh))
        for (int iB : idxs(nh))
          if (border_ok(A, *d, iL, iR, iT, iB)) return true;
  return false;
}

inline bool iso_to_grid(const SimpleGraph& g, int k, int l) {
  int n = k * l;
  if ((int)g.names.size() != n) return false;
  auto gdeg = [&](int i, int j) {
    return (i > 0) + (i < k - 1) + (j > 0) + (j < l - 1);
  };
  std::vector<int> map(n, -1);  // grid slot (row-major) -> graph vertex
  std::vector<char> used(n, 0);
  std::function<bool(int)> place = [&](int slot) -> bool {
    if (slot == n) return true;
    int i = slot / l, j = slot % l;
    for (int v = 0; v < n; ++v) {
      if (used[v] || (int)g.adj[v].size() != gdeg(i, j)) continue;
      bool ok = true;
      for (int s = 0; s < slot && ok; ++s) {
        bool gridAdj = (s == slot - 1 && j > 0) || (s == slot - l);
        if (g.has_edge(v, map[s]) != gridAdj) ok = false;
      }
      if (!ok) continue;
      map[slot] = v;
      used[v] = 1;
      if (place(slot + 1)) return true;
      used[v] = 0;
    }
    return false;
  };
  return place(0);
}

// the closed sentence: the graph is (isomorphic to) a k x l grid with
// k,l >= 2, or has no vertices and no edges
inline bool grid_sentence(const Structure& A) {
  int nV = A.unary_rel("V").count();
  int mE = A.unary_rel("E").count();
  if (nV == 0 && mE == 0) return true;
  if (nV > 64) throw Error("grid recognition capped at 64 vertices");
  SimpleGraph g = graph_of(A);
  if ((int)g.edges.size() != mE) return false;  // parallel edges
  for (int k = 2; k <= nV / 2; ++k) {
    if (nV % k) continue;
    int l = nV / k;
    if (l < 2) continue;
    if (mE != k * (l - 1) + l * (k - 1)) continue;
    if (iso_to_grid(g, k, l)) return true;
  }
  return false;
}

}  // namespace native

// ---------------------------------------------------------------------------
// Fused-mode macro registry: library formulas recognized structurally (up to
// renaming) and dispatched to the native checkers.

struct MacroDef {
  std::string name;
  FormulaPtr pattern;
  // pattern parameter names in call order; bool = set-valued
  std::vector<std::pair<std::string, bool>> params;
  std::function<bool(const Structure&, const std::vector<Value>&)> native;
  // optional: all values of params[0] satisfying the macro given the rest
  std::function<std::vector<Bitset>(const Structure&, const std::vector<Value>&,
                                    int)>
      enumerate;
};

inline const std::vector<MacroDef>& macro_registry() {
  static const std::vector<MacroDef> reg = [] {
    std::vector<MacroDef> r;
    auto add = [&](const std::string& name, FormulaPtr pat,
                   std::vector<std::pair<std::string, bool>> params,
                   std::function<bool(const Structure&,
                                      const std::vector<Value>&)>
                       nat,
                   std::function<std::vector<Bitset>(
                       const Structure&, const std::vector<Value>&, int)>
                       en = nullptr) {
      r.push_back({name, std::move(pat), std::move(params), std::move(nat),
                   std::move(en)});
    };
    using V = std::vector<Value>;
    add("conn", library("conn"), {{"P", true}},
        [](const Structure& A, const V& v) {
          return native::conn(A, v[0].set);
        });
    add("ac", library("ac"), {{"P", true}},
        [](const Structure& A, const V& v) {
          return native::acyclic(A, v[0].set);
        });
    add("path", library("path"), {{"P", true}},
        [](const Structure& A, const V& v) {
          return native::path(A, v[0].set);
        });
    add("set-o-dis-path", library("set-o-dis-path"), {{"P", true}},
        [](const Structure& A, const V& v) {
          return native::sodp(A, v[0].set);
        });
    add(
        "maxpath", library("maxpath"), {{"P", true}, {"PP", true}},
        [](const Structure& A, const V& v) {
          return native::maxpath(A, v[0].set, v[1].set);
        },
        [](const Structure& A, const V& rest, int cap) {
          return native::enumerate_maxpaths(A, rest[0].set, cap);
        });
    add("ep", library("ep"), {{"x", false}, {"P", true}},
        [](const Structure& A, const V& v) {
          return native::ep(A, v[0].elem, v[1].set);
        });
    add("grid-border", library("grid-border"),
        {{"L", true}, {"R", true}, {"T", true}, {"B", true}, {"VV", true},
         {"HH", true}},
        [](const Structure& A, const V& v) {
          return native::grid_border(A, v[0].set, v[1].set, v[2].set,
                                     v[3].set, v[4].set, v[5].set);
        });
    add("grid", library("grid"), {{"VV", true}, {"HH", true}},
        [](const Structure& A, const V& v) {
          return native::grid(A, v[0].set, v[1].set);
        });
    add("grid-sentence", library("grid-sentence"), {},
        [](const Structure& A, const V&) { return native::grid_sentence(A); });
    add(
        "F-path", library("F-path"),
        {{"P", true}, {"x", false}, {"y", false}, {"FF", true}, {"XX", true}},
        [](const Structure& A, const V& v) {
          return native::fpath(A, v[0].set, v[1].elem, v[2].elem, v[3].set,
                               v[4].set);
        },
        [](const Structure& A, const V& rest, int) {
          return native::enumerate_fpaths(A, rest[0].elem, rest[1].elem,
                                          rest[2].set, rest[3].set);
        });
    add(
        "mp", library("mp"), {{"P", true}, {"FF", true}, {"XX", true}},
        [](const Structure& A, const V& v) {
          return native::mp(A, v[0].set, v[1].set, v[2].set);
        },
        [](const Structure& A, const V& rest, int) {
          return native::enumerate_all_fpaths(A, rest[0].set, rest[1].set);
        });
    add("reach-avoid", library("reach-avoid"),
        {{"x", false}, {"y", false}, {"FF", true}, {"TT", true}},
        [](const Structure& A, const V& v) {
          return native::reach_avoid(A, v[0].elem, v[1].elem, v[2].set,
                                     v[3].set);
        });
    return r;
  }();
  return reg;
}

// ---------------------------------------------------------------------------
// Evaluator

namespace detail {

struct MemoKey {
  const Formula* node;
  bool armed;
  std::vector<Value> vals;
  bool operator==(const MemoKey& o) const {
    return node == o.node && armed == o.armed && vals == o.vals;
  }
};
struct MemoKeyHash {
  size_t operator()(const MemoKey& k) const {
    size_t h = std::hash<const void*>()(k.node) * 2 + k.armed;
    for (auto& v : k.vals) h = h * 1099511628211ull ^ v.hash();
    return h;
  }
};

inline void flatten_and(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
  if (f->kind == Kind::And) {
    flatten_and(f->kids[0], out);
    flatten_and(f->kids[1], out);
  } else {
    out.push_back(f);
  }
}

struct MacroHit {
  const MacroDef* def;
  std::vector<std::string> argVars;  // in def->params order
};
struct FusionHit {
  const MacroDef* def;
  std::vector<std::string> argVars;  // guard args; argVars[0] == bound var
  std::vector<FormulaPtr> residue;
  FormulaPtr consequent;  // forall only
};

struct Annotations {
  std::unordered_map<const Formula*, MacroHit> hits;
  std::unordered_map<const Formula*, FusionHit> fusions;
};

class Evaluator {
 public:
  Evaluator(const Structure& A, EvalOptions opt) : A_(A), opt_(opt) {}

  bool run(const FormulaPtr& root, const Assignment& asg,
           const Assignment* witness) {
    root_ = root;
    witness_ = witness;
    env_.clear();
    if (!ann_) ann_ = std::make_shared<Annotations>();
    if (opt_.mode == EvalMode::Fused && annotated_.insert(root.get()).second)
      annotate(root);
    if (witness) check_witness_vars(root);
    auto& fv = free_vars(root);
    for (auto& x : fv.elems) {
      auto it = asg.find(x);
      if (it == asg.end() || it->second.isSet)
        throw Error("unbound element variable: " + x);
      bind(x, it->second);
    }
    for (auto& X : fv.sets) {
      auto it = asg.find(X);
      if (it == asg.end() || !it->second.isSet)
        throw Error("unbound set variable: " + X);
      bind(X, it->second);
    }
    return eval(root, true);
  }

 private:
  const Structure& A_;
  EvalOptions opt_;
  FormulaPtr root_;
  const Assignment* witness_ = nullptr;
  std::shared_ptr<Annotations> ann_;
  std::set<const Formula*> annotated_;
  std::map<std::string, std::vector<Value>> env_;
  std::unordered_map<MemoKey, bool, MemoKeyHash> memo_;
  bool inParallel_ = false;

  Evaluator(const Evaluator& o, bool)
      : A_(o.A_), opt_(o.opt_), root_(o.root_), witness_(o.witness_),
        ann_(o.ann_), env_(o.env_), inParallel_(true) {
    opt_.jobs = 1;
  }

  void bind(const std::string& x, const Value& v) { env_[x].push_back(v); }
  void unbind(const std::string& x) { env_[x].pop_back(); }
  const Value& look(const std::string& x) const {
    auto it = env_.find(x);
    if (it == env_.end() || it->second.empty())
      throw Error("unbound variable: " + x);
    return it->second.back();
  }
  int elem_of(const std::string& x) const {
    const Value& v = look(x);
    if (v.isSet) throw Error("set variable used as element: " + x);
    return v.elem;
  }
  const Bitset& set_of(const std::string& x) const {
    const Value& v = look(x);
    if (!v.isSet) throw Error("element variable used as set: " + x);
    return v.set;
  }

  void annotate(const FormulaPtr& f) {
    for (auto& k : f->kids) annotate(k);
    for (auto& m : macro_registry()) {
      auto args = match_macro(m.pattern, f);
      if (!args) continue;
      MacroHit h{&m, {}};
      bool ok = true;
      for (auto& [p, isSet] : m.params) {
        auto it = args->find(p);
        if (it == args->end()) {
          ok = false;  // parameter vanished; should not happen
          break;
        }
        h.argVars.push_back(it->second);
      }
      if (ok) {
        ann_->hits.emplace(f.get(), std::move(h));
        break;
      }
    }
    if (f->kind == Kind::ExistsSet || f->kind == Kind::ForallSet) {
      std::vector<FormulaPtr> conjs;
      FormulaPtr consequent;
      if (f->kind == Kind::ExistsSet) {
        flatten_and(f->kids[0], conjs);
      } else if (f->kids[0]->kind == Kind::Implies) {
        flatten_and(f->kids[0]->kids[0], conjs);
        consequent = f->kids[0]->kids[1];
      } else {
        return;
      }
      auto hit = ann_->hits.find(conjs[0].get());
      if (hit == ann_->hits.end() || !hit->second.def->enumerate) return;
      auto& av = hit->second.argVars;
      if (av.empty() || av[0] != f->var) return;
      for (size_t i = 1; i < av.size(); ++i)
        if (av[i] == f->var) return;
      FusionHit fh{hit->second.def, av,
                   std::vector<FormulaPtr>(conjs.begin() + 1, conjs.end()),
                   consequent};
      ann_->fusions.emplace(f.get(), std::move(fh));
    }
  }

  void check_witness_vars(const FormulaPtr& root) {
    std::set<std::string> positive;
    std::function<void(const FormulaPtr&)> walk = [&](const FormulaPtr& f) {
      switch (f->kind) {
        case Kind::And:
          walk(f->kids[0]);
          walk(f->kids[1]);
          break;
        case Kind::Exists:
          walk(f->kids[0]);
          break;
        case Kind::ExistsSet:
          positive.insert(f->var);
          walk(f->kids[0]);
          break;
        default:
          break;
      }
    };
    walk(root);
    for (auto& [x, v] : *witness_) {
      if (!positive.count(x))
        throw Error("witness variable not bound by a positive set "
                    "existential: " + x);
      if (!v.isSet) throw Error("witness value for " + x + " is not a set");
    }
  }

  Bitset domain_of(const Formula* f) const {
    switch (f->sort) {
      case SetSort::Any: {
        Bitset b(A_.size());
        for (int i = 0; i < A_.size(); ++i) b.set(i);
        return b;
      }
      case SetSort::SubV: return A_.unary_rel("V");
      case SetSort::SubE: return A_.unary_rel("E");
      case SetSort::SubVar: return set_of(f->sortVar);
    }
    return Bitset(A_.size());
  }

  bool eval_conj(const std::vector<FormulaPtr>& fs, bool armed) {
    for (auto& f : fs)
      if (!eval(f, armed)) return false;
    return true;
  }

  bool eval(const FormulaPtr& f, bool armed) {
    auto hit = ann_->hits.find(f.get());
    if (hit != ann_->hits.end()) {
      std::vector<Value> vals;
      for (size_t i = 0; i < hit->second.argVars.size(); ++i) {
        auto& name = hit->second.argVars[i];
        if (hit->second.def->params[i].second)
          vals.push_back(Value::of_set(set_of(name)));
        else
          vals.push_back(Value::of_elem(elem_of(name)));
      }
      return hit->second.def->native(A_, vals);
    }

    bool memoizable = contains_set_quant(f);
    MemoKey key;
    if (memoizable) {
      key.node = f.get();
      key.armed = armed && witness_ != nullptr;
      auto& fv = free_vars(f);
      for (auto& x : fv.elems) key.vals.push_back(look(x));
      for (auto& X : fv.sets) key.vals.push_back(look(X));
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    bool r = eval_raw(f, armed);
    if (memoizable) memo_.emplace(std::move(key), r);
    return r;
  }

  bool eval_raw(const FormulaPtr& f, bool armed) {
    switch (f->kind) {
      case Kind::True: return true;
      case Kind::False: return false;
      case Kind::Eq: return elem_of(f->v1) == elem_of(f->v2);
      case Kind::Rel1: return A_.unary_rel(f->rel).test(elem_of(f->v1));
      case Kind::Rel2:
        return A_.holds2(f->rel, elem_of(f->v1), elem_of(f->v2));
      case Kind::Member: return set_of(f->v2).test(elem_of(f->v1));
      case Kind::Not: return !eval(f->kids[0], false);
      case Kind::And:
        return eval(f->kids[0], armed) && eval(f->kids[1], armed);
      case Kind::Or:
        return eval(f->kids[0], false) || eval(f->kids[1], false);
      case Kind::Implies:
        return !eval(f->kids[0], false) || eval(f->kids[1], false);
      case Kind::Iff:
        return eval(f->kids[0], false) == eval(f->kids[1], false);
      case Kind::Exists:
      case Kind::Forall: {
        bool isEx = f->kind == Kind::Exists;
        for (int i = 0; i < A_.size(); ++i) {
          bind(f->var, Value::of_elem(i));
          bool b = eval(f->kids[0], armed && isEx);
          unbind(f->var);
          if (b == isEx) return isEx;
        }
        return !isEx;
      }
      case Kind::ExistsSet:
      case Kind::ForallSet: return eval_setq(f, armed);
    }
    return false;
  }

  bool eval_setq(const FormulaPtr& f, bool armed) {
    bool isEx = f->kind == Kind::ExistsSet;
    Bitset dom = domain_of(f.get());

    if (isEx && armed && witness_) {
      auto it = witness_->find(f->var);
      if (it != witness_->end()) {
        if (!it->second.set.subset_of(dom)) return false;
        bind(f->var, it->second);
        bool b = eval(f->kids[0], armed);
        unbind(f->var);
        return b;
      }
    }

    auto fu = ann_->fusions.find(f.get());
    if (fu != ann_->fusions.end()) {
      auto& fh = fu->second;
      std::vector<Value> rest;
      for (size_t i = 1; i < fh.argVars.size(); ++i) {
        auto& name = fh.argVars[i];
        if (fh.def->params[i].second)
          rest.push_back(Value::of_set(set_of(name)));
        else
          rest.push_back(Value::of_elem(elem_of(name)));
      }
      auto vals = fh.def->enumerate(A_, rest, opt_.capBits);
      for (auto& v : vals) {
        if (!v.subset_of(dom)) continue;
        bind(f->var, Value::of_set(v));
        bool b;
        if (isEx) {
          b = eval_conj(fh.residue, armed);
        } else {
          b = !eval_conj(fh.residue, false) || eval(fh.consequent, false);
        }
        unbind(f->var);
        if (b == isEx) return isEx;
      }
      return !isEx;
    }

    auto members = dom.members();
    int bits = (int)members.size();
    if (bits > opt_.capBits)
      throw Error("set quantifier domain has " + std::to_string(bits) +
                  " elements, exceeding cap of " +
                  std::to_string(opt_.capBits));
    uint64_t total = uint64_t(1) << bits;

    if (opt_.jobs > 1 && !inParallel_ && total >= 64) {
      int jobs = std::min<int>(opt_.jobs, 64);
      std::atomic<bool> decided{false};
      std::vector<char> results(jobs, isEx ? 0 : 1);
      std::vector<std::thread> ts;
      for (int t = 0; t < jobs; ++t) {
        ts.emplace_back([&, t] {
          Evaluator sub(*this, true);
          for (uint64_t m = t; m < total; m += jobs) {
            if (decided.load(std::memory_order_relaxed)) return;
            Bitset val(A_.size());
            for (int i = 0; i < bits; ++i)
              if (m >> i & 1) val.set(members[i]);
            sub.bind(f->var, Value::of_set(val));
            bool b = sub.eval(f->kids[0], armed && isEx);
            sub.unbind(f->var);
            if (b == isEx) {
              results[t] = isEx;
              decided.store(true, std::memory_order_relaxed);
              return;
            }
          }
        });
      }
      for (auto& th : ts) th.join();
      for (char c : results)
        if ((bool)c == isEx) return isEx;
      return !isEx;
    }

    for (uint64_t m = 0; m < total; ++m) {
      Bitset val(A_.size());
      for (int i = 0; i < bits; ++i)
        if (m >> i & 1) val.set(members[i]);
      bind(f->var, Value::of_set(val));
      bool b = eval(f->kids[0], armed && isEx);
      unbind(f->var);
      if (b == isEx) return isEx;
    }
    return !isEx;
  }
};

}  // namespace detail

// Reusable evaluation context: memoization and macro annotations persist
// across calls, which matters when the same formulas are evaluated under
// many assignments (transduction application, witness checking).
class EvalSession {
 public:
  EvalSession(const Structure& A, EvalOptions opt = {}) : ev_(A, opt) {}
  bool eval(const FormulaPtr& f, const Assignment& asg = {}) {
    return ev_.run(f, asg, nullptr);
  }

 private:
  detail::Evaluator ev_;
};

inline bool evaluate(const Structure& A, const FormulaPtr& f,
                     const Assignment& asg = {}, EvalOptions opt = {}) {
  detail::Evaluator ev(A, opt);
  return ev.run(f, asg, nullptr);
}

inline bool evaluate_with_witness(const Structure& A, const FormulaPtr& f,
                                  const Assignment& asg,
                                  const Assignment& witness,
                                  EvalOptions opt = {}) {
  detail::Evaluator ev(A, opt);
  return ev.run(f, asg, &witness);
}

}  // namespace msow
