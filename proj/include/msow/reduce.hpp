#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "msow/library.hpp"
#include "msow/pseudowall.hpp"
#include "msow/transduce.hpp"

namespace msow {

// ---------------------------------------------------------------------------
// Nondeterministic Turing machines, time-bounded by |w|^timeDegree.
// Tape alphabet {0, 1, _} with '_' the blank; one-way infinite tape truncated
// to exactly |w|^timeDegree cells, head starting at cell 1.

struct TMRule {
  std::string from;
  char read = '_';
  std::string to;
  char write = '_';
  char move = 'S';  // L, R or S
};

struct TuringMachine {
  std::vector<std::string> states;
  std::string start, accept;
  int timeDegree = 1;
  std::vector<TMRule> delta;
};

struct TMConfig {
  std::string state;
  int head = 1;  // 1-based
  std::string tape;

  bool operator==(const TMConfig&) const = default;
  bool operator<(const TMConfig& o) const {
    return std::tie(state, head, tape) < std::tie(o.state, o.head, o.tape);
  }
};

using TMRun = std::vector<TMConfig>;

namespace tmdetail {

inline bool tm_symbol(char c) { return c == '0' || c == '1' || c == '_'; }

inline void check(const TuringMachine& m) {
  std::set<std::string> st(m.states.begin(), m.states.end());
  if (st.size() != m.states.size())
    throw Error("turing machine has duplicate states");
  if (!st.count(m.start)) throw Error("unknown start state: " + m.start);
  if (!st.count(m.accept)) throw Error("unknown accept state: " + m.accept);
  if (m.timeDegree < 1) throw Error("time degree must be >= 1");
  for (auto& r : m.delta) {
    if (!st.count(r.from)) throw Error("unknown state in delta: " + r.from);
    if (!st.count(r.to)) throw Error("unknown state in delta: " + r.to);
    if (!tm_symbol(r.read) || !tm_symbol(r.write))
      throw Error("tape alphabet is {0,1,_}");
    if (r.move != 'L' && r.move != 'R' && r.move != 'S')
      throw Error("move must be L, R or S");
  }
}

inline long long time_bound(const TuringMachine& m, size_t n) {
  long long t = 1;
  for (int i = 0; i < m.timeDegree; ++i) {
    t *= (long long)n;
    if (t > (1LL << 30)) throw Error("state-space cap exceeded");
  }
  return t;
}

inline TMConfig initial(const TuringMachine& m, const std::string& w,
                        long long cells) {
  TMConfig c;
  c.state = m.start;
  c.head = 1;
  c.tape = w;
  c.tape.resize((size_t)cells, '_');
  return c;
}

// successors under the plain transition relation; boundary moves die
inline std::vector<TMConfig> successors(const TuringMachine& m,
                                        const TMConfig& c) {
  std::vector<TMConfig> out;
  char a = c.tape[(size_t)c.head - 1];
  for (auto& r : m.delta) {
    if (r.from != c.state || r.read != a) continue;
    TMConfig n = c;
    n.state = r.to;
    n.tape[(size_t)c.head - 1] = r.write;
    if (r.move == 'L') {
      if (c.head == 1) continue;
      n.head = c.head - 1;
    } else if (r.move == 'R') {
      if (c.head == (int)c.tape.size()) continue;
      n.head = c.head + 1;
    }
    out.push_back(std::move(n));
  }
  return out;
}

}  // namespace tmdetail

// Acceptance within |w|^d - 1 transitions, by BFS over configurations.
inline bool simulate(const TuringMachine& m, const std::string& w,
                     uint64_t cap = 1 << 20) {
  tmdetail::check(m);
  for (char c : w)
    if (c != '0' && c != '1') throw Error("word alphabet is {0,1}");
  if (w.empty()) return m.start == m.accept;
  long long T = tmdetail::time_bound(m, w.size());
  TMConfig init = tmdetail::initial(m, w, T);
  std::set<TMConfig> seen{init};
  std::deque<std::pair<TMConfig, long long>> q{{init, 0}};
  while (!q.empty()) {
    auto [c, t] = q.front();
    q.pop_front();
    if (c.state == m.accept) return true;
    if (t == T - 1) continue;
    for (auto& n : tmdetail::successors(m, c)) {
      if (!seen.insert(n).second) continue;
      if (seen.size() > cap) throw Error("state-space cap exceeded");
      q.push_back({std::move(n), t + 1});
    }
  }
  return false;
}

// All maximal runs within the time bound: a run stops when it accepts, gets
// stuck, or has used up its |w|^d configurations.
inline std::vector<TMRun> enumerate_runs(const TuringMachine& m,
                                         const std::string& w,
                                         uint64_t cap = 100000) {
  tmdetail::check(m);
  if (w.empty()) {
    TMConfig c;
    c.state = m.start;
    return {{c}};
  }
  long long T = tmdetail::time_bound(m, w.size());
  std::vector<TMRun> out;
  TMRun cur{tmdetail::initial(m, w, T)};
  std::function<void()> dfs = [&] {
    const TMConfig& c = cur.back();
    std::vector<TMConfig> next;
    if (c.state != m.accept && (long long)cur.size() < T)
      next = tmdetail::successors(m, c);
    if (next.empty()) {
      if (out.size() >= cap) throw Error("run enumeration cap exceeded");
      out.push_back(cur);
      return;
    }
    for (auto& n : next) {
      cur.push_back(std::move(n));
      dfs();
      cur.pop_back();
    }
  };
  dfs();
  return out;
}

inline bool run_accepts(const TuringMachine& m, const TMRun& r) {
  return !r.empty() && r.back().state == m.accept;
}

// ---------------------------------------------------------------------------
// Text format.

inline std::string write_tm(const TuringMachine& m) {
  std::ostringstream o;
  o << "states:";
  for (auto& s : m.states) o << " " << s;
  o << "\n";
  o << "start: " << m.start << "\n";
  o << "accept: " << m.accept << "\n";
  o << "degree: " << m.timeDegree << "\n";
  for (auto& r : m.delta)
    o << "delta: (" << r.from << "," << r.read << ") -> (" << r.to << ","
      << r.write << "," << r.move << ")\n";
  return o.str();
}

inline TuringMachine read_tm(const std::string& text) {
  TuringMachine m;
  bool haveStates = false, haveStart = false, haveAccept = false;
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw Error("tm parse error line " + std::to_string(ln) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++ln;
    size_t h = line.find_first_not_of(" \t");
    if (h == std::string::npos || line[h] == '#') continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos) fail("expected 'name: ...'");
    std::string head = line.substr(h, colon - h);
    std::string rest = line.substr(colon + 1);
    std::istringstream rs(rest);
    if (head == "states") {
      std::string s;
      while (rs >> s) m.states.push_back(s);
      haveStates = true;
    } else if (head == "start") {
      if (!(rs >> m.start)) fail("expected a state name");
      haveStart = true;
    } else if (head == "accept") {
      if (!(rs >> m.accept)) fail("expected a state name");
      haveAccept = true;
    } else if (head == "degree") {
      if (!(rs >> m.timeDegree)) fail("expected an integer");
    } else if (head == "delta") {
      std::string tok;
      for (char c; rs.get(c);)
        if (!isspace((unsigned char)c)) tok += c;
      // (q,a)->(q',a',M)
      auto bad = [&] { fail("expected (q,a) -> (q',a',{L|R|S})"); };
      size_t arrow = tok.find("->");
      if (arrow == std::string::npos) bad();
      auto tuple = [&](const std::string& s,
                       size_t parts) -> std::vector<std::string> {
        if (s.size() < 2 || s.front() != '(' || s.back() != ')') bad();
        std::vector<std::string> fs{""};
        for (char c : s.substr(1, s.size() - 2)) {
          if (c == ',') fs.push_back("");
          else fs.back() += c;
        }
        if (fs.size() != parts) bad();
        for (auto& f : fs)
          if (f.empty()) bad();
        return fs;
      };
      auto lhs = tuple(tok.substr(0, arrow), 2);
      auto rhs = tuple(tok.substr(arrow + 2), 3);
      if (lhs[1].size() != 1 || rhs[1].size() != 1 || rhs[2].size() != 1)
        bad();
      m.delta.push_back(
          {lhs[0], lhs[1][0], rhs[0], rhs[1][0], rhs[2][0]});
    } else {
      fail("unknown block '" + head + "'");
    }
  }
  if (!haveStates) throw Error("tm parse error: missing states:");
  if (!haveStart) throw Error("tm parse error: missing start:");
  if (!haveAccept) throw Error("tm parse error: missing accept:");
  tmdetail::check(m);
  return m;
}

// ---------------------------------------------------------------------------
// The TM -> MSO compiler: a closed sentence over sigma_G that holds on a
// coloured l x l grid encoding w exactly when the machine accepts w within
// l transitions. Rows of the grid are time steps (bottom row = time 0),
// columns are tape cells.

namespace tmdetail {

inline std::string sym_set(char a) {
  return a == '_' ? "S_b" : std::string("S_") + a;
}

// delta plus a self-loop on the accept state, so accepting runs can pad the
// remaining rows of the diagram
inline std::vector<TMRule> padded_rules(const TuringMachine& m,
                                        const std::string& s, char a) {
  std::vector<TMRule> out;
  for (auto& r : m.delta)
    if (r.from == s && r.read == a) out.push_back(r);
  if (s == m.accept) out.push_back({s, a, s, a, 'S'});
  return out;
}

}  // namespace tmdetail

inline FormulaPtr compile_tm(const TuringMachine& M) {
  tmdetail::check(M);
  using namespace F;
  using namespace sugar;
  using namespace libdef;
  const char SYMS[3] = {'0', '1', '_'};
  auto Q = [](const std::string& s) { return "Q_" + s; };

  auto headOf = [&](const std::string& x) {
    std::vector<FormulaPtr> ds;
    for (auto& s : M.states) ds.push_back(member(x, Q(s)));
    return disj(ds);
  };
  auto coloured = [&](const std::string& x) {
    return disj(rel("C0", x), rel("C1", x));
  };
  auto symClause = [&](const std::string& x) {
    return conj({impl(rel("C1", x), member(x, "S_1")),
                 impl(rel("C0", x), member(x, "S_0")),
                 impl(neg(coloured(x)), member(x, "S_b"))});
  };

  // shared bookkeeping: S_0/S_1/S_b partition V, at most one state per cell
  std::vector<FormulaPtr> shared;
  {
    std::string x = gensym("x");
    std::vector<FormulaPtr> one{disj(
        {member(x, "S_0"), member(x, "S_1"), member(x, "S_b")})};
    const char* ss[3] = {"S_0", "S_1", "S_b"};
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        one.push_back(neg(conj(member(x, ss[i]), member(x, ss[j]))));
    shared.push_back(all(x, impl(vmem(x), conj(one))));
  }
  {
    std::string x = gensym("x");
    std::vector<FormulaPtr> ex1;
    for (size_t i = 0; i < M.states.size(); ++i)
      for (size_t j = i + 1; j < M.states.size(); ++j)
        ex1.push_back(neg(conj(member(x, Q(M.states[i])),
                               member(x, Q(M.states[j])))));
    if (!ex1.empty()) shared.push_back(all(x, conj(ex1)));
  }

  // degenerate branch: a single cell, a single time step; acceptance means
  // the start state already accepts
  FormulaPtr deg;
  {
    std::string x = gensym("x"), y = gensym("y"), e = gensym("e"),
                z = gensym("z");
    std::vector<FormulaPtr> cs{
        ex(x, conj(vmem(x), all(y, impl(vmem(y), eq(y, x))))),
        all(e, neg(emem(e)))};
    for (auto f : {"VV", "HH", "GL", "GR", "GT", "GB"})
      cs.push_back(all(z, neg(member(z, f))));
    cs.push_back(ex(x, conj({vmem(x), member(x, Q(M.start)),
                             member(x, Q(M.accept)), symClause(x)})));
    deg = conj(cs);
  }

  // main branch: a proper grid diagram
  FormulaPtr main_;
  {
    auto up = [&](const std::string& v, const std::string& u) {
      return conj(edge_in(v, u, "VV"),
                  exists_path("VV", [&](const std::string& P) {
                    return conj({vP(v, P), vP(u, P),
                                 phi_ord(v, u, P, "GB")});
                  }));
    };
    auto right = [&](const std::string& v, const std::string& u) {
      return conj(edge_in(v, u, "HH"),
                  exists_path("HH", [&](const std::string& Qp) {
                    return conj({vP(v, Qp), vP(u, Qp),
                                 phi_ord(v, u, Qp, "GL")});
                  }));
    };
    auto headAt = [&](const std::string& u, const TMRule& r) -> FormulaPtr {
      if (r.move == 'S') return member(u, Q(r.to));
      std::string u2 = gensym("u");
      if (r.move == 'R')
        return ex(u2, conj(right(u, u2), member(u2, Q(r.to))));
      return ex(u2, conj(right(u2, u), member(u2, Q(r.to))));
    };

    std::vector<FormulaPtr> cs;
    cs.push_back(instantiate(library("grid-border"),
                             {{"L", "GL"}, {"R", "GR"}, {"T", "GT"},
                              {"B", "GB"}, {"VV", "VV"}, {"HH", "HH"}}));
    {
      std::string e = gensym("e");
      cs.push_back(all(e, impl(emem(e), disj(member(e, "VV"),
                                             member(e, "HH")))));
    }
    {
      std::string z = gensym("z");
      cs.push_back(all(z, impl(coloured(z), vP(z, "GB"))));
    }
    {
      std::string u = gensym("u"), v = gensym("v");
      cs.push_back(all(u, all(v, impl(conj({vP(u, "GB"), coloured(v),
                                            phi_ord(u, v, "GB", "GL")}),
                                      coloured(u)))));
    }
    {
      std::string x = gensym("x");
      cs.push_back(all(x, impl(vP(x, "GB"), symClause(x))));
      cs.push_back(all(x, impl(conj(vP(x, "GB"), vP(x, "GL")),
                               member(x, Q(M.start)))));
    }
    cs.push_back(forall_path("HH", [&](const std::string& row) {
      return exactly_one_elem([&](const std::string& x) {
        return conj(vP(x, row), headOf(x));
      });
    }));
    {
      std::string v = gensym("v"), u = gensym("u");
      std::vector<FormulaPtr> local;
      for (auto& s : M.states)
        for (char a : SYMS) {
          std::vector<FormulaPtr> choices;
          for (auto& r : tmdetail::padded_rules(M, s, a))
            choices.push_back(conj(member(u, tmdetail::sym_set(r.write)),
                                   headAt(u, r)));
          local.push_back(impl(conj(member(v, Q(s)),
                                    member(v, tmdetail::sym_set(a))),
                               choices.empty() ? fls() : disj(choices)));
        }
      for (char a : SYMS)
        local.push_back(impl(conj(neg(headOf(v)),
                                  member(v, tmdetail::sym_set(a))),
                             member(u, tmdetail::sym_set(a))));
      cs.push_back(all(v, all(u, impl(up(v, u), conj(local)))));
    }
    {
      std::string x = gensym("x");
      cs.push_back(ex(x, member(x, Q(M.accept))));
    }
    main_ = conj(cs);
  }

  shared.push_back(disj(deg, main_));
  FormulaPtr f = conj(shared);
  f = exS("S_b", f, SetSort::SubV);
  f = exS("S_1", f, SetSort::SubV);
  f = exS("S_0", f, SetSort::SubV);
  for (auto it = M.states.rbegin(); it != M.states.rend(); ++it)
    f = exS(Q(*it), f, SetSort::SubV);
  for (auto n : {"GB", "GT", "GR", "GL", "HH", "VV"})
    f = exS(n, f, SetSort::SubE);
  return f;
}

// ---------------------------------------------------------------------------
// Grid layout recovery: coordinates of a coloured grid with the word as a
// coloured prefix of one border row. Used to aim run witnesses at grids that
// did not come out of encode_word_in_grid.

struct GridLayout {
  int side = 0;
  std::vector<std::vector<std::string>> at;  // at[row][col], row 0 coloured
  std::string word;
};

namespace tmdetail {

// deterministic square-grid coordinates from a corner and a row direction;
// empty result if the adjacency does not fit
inline std::vector<std::vector<int>> grid_coords(const SimpleGraph& g, int l,
                                                 int corner, int dir) {
  std::vector<std::vector<int>> at(l, std::vector<int>(l, -1));
  std::vector<char> used(g.n(), 0);
  auto common = [&](int a, int b, int skip) {
    int found = -1;
    for (int x : g.adj[a]) {
      if (x == skip || used[x]) continue;
      if (g.has_edge(x, b)) {
        if (found != -1) return -1;
        found = x;
      }
    }
    return found;
  };
  auto place = [&](int r, int c, int v) {
    if (v == -1 || used[v]) return false;
    at[r][c] = v;
    used[v] = 1;
    return true;
  };
  if (!place(0, 0, corner) || !place(0, 1, dir)) return {};
  for (int c = 2; c < l; ++c) {
    // next border vertex: the unused neighbour not adjacent to the previous
    int nxt = -1;
    for (int x : g.adj[at[0][c - 1]]) {
      if (used[x] || g.has_edge(x, at[0][c - 2])) continue;
      bool inward = l > 2 && (int)g.adj[x].size() == 4;
      if (inward) continue;
      if (nxt != -1) return {};
      nxt = x;
    }
    if (!place(0, c, nxt)) return {};
  }
  for (int r = 1; r < l; ++r) {
    int first = -1;
    for (int x : g.adj[at[r - 1][0]]) {
      if (used[x]) continue;
      if (l > 1 && x == at[r - 1][1]) continue;
      if (first != -1) return {};
      first = x;
    }
    if (!place(r, 0, first)) return {};
    for (int c = 1; c < l; ++c)
      if (!place(r, c, common(at[r - 1][c], at[r][c - 1], at[r - 1][c - 1])))
        return {};
  }
  // full adjacency check
  int edges = 0;
  for (int r = 0; r < l; ++r)
    for (int c = 0; c < l; ++c) {
      if (c + 1 < l && !g.has_edge(at[r][c], at[r][c + 1])) return {};
      if (r + 1 < l && !g.has_edge(at[r][c], at[r + 1][c])) return {};
      edges += (c + 1 < l) + (r + 1 < l);
    }
  int m = 0;
  for (int v = 0; v < g.n(); ++v) m += (int)g.adj[v].size();
  if (m != 2 * edges) return {};
  return at;
}

}  // namespace tmdetail

// all coordinatizations whose colours form a border-row prefix, sorted and
// deduplicated by the word they read
inline std::vector<GridLayout> grid_layouts(const Structure& A) {
  SimpleGraph g = graph_of(A);
  int n = g.n();
  int l = 0;
  while (l * l < n) ++l;
  if (l * l != n || n == 0) throw Error("structure is not a square grid");
  const Bitset& C0 = A.unary_rel("C0");
  const Bitset& C1 = A.unary_rel("C1");
  auto colour_of = [&](const std::string& name) -> char {
    int i = A.index_of(name);
    bool c0 = C0.test(i), c1 = C1.test(i);
    if (c0 && c1) throw Error("vertex has two colours: " + name);
    return c1 ? '1' : c0 ? '0' : ' ';
  };
  int colouredTotal = C0.count() + C1.count();

  std::vector<std::vector<std::vector<int>>> cands;
  if (l == 1) {
    cands.push_back({{0}});
  } else {
    for (int c = 0; c < n; ++c) {
      if ((int)g.adj[c].size() != 2) continue;
      for (int d : g.adj[c]) {
        auto at = tmdetail::grid_coords(g, l, c, d);
        if (!at.empty()) cands.push_back(std::move(at));
      }
    }
  }
  bool any = false;
  std::vector<GridLayout> out;
  for (auto& at : cands) {
    any = true;
    std::string w;
    bool ok = true;
    for (int c = 0; c < l && ok; ++c) {
      char col = colour_of(g.names[at[0][c]]);
      if (col == ' ') break;
      w += col;
    }
    if ((int)w.size() != colouredTotal) continue;  // colours not a prefix
    for (int r = 0; r < l && ok; ++r)
      for (int c = 0; c < l; ++c)
        if ((r > 0 || c >= (int)w.size()) &&
            colour_of(g.names[at[r][c]]) != ' ') {
          ok = false;
          break;
        }
    if (!ok) continue;
    GridLayout lay;
    lay.side = l;
    lay.word = w;
    lay.at.assign(l, std::vector<std::string>(l));
    for (int r = 0; r < l; ++r)
      for (int c = 0; c < l; ++c) lay.at[r][c] = g.names[at[r][c]];
    out.push_back(std::move(lay));
  }
  if (!any) throw Error("structure is not a square grid");
  if (out.empty())
    throw Error("grid colours do not form a border-row prefix");
  std::sort(out.begin(), out.end(),
            [](const GridLayout& a, const GridLayout& b) {
              return a.word < b.word;
            });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const GridLayout& a, const GridLayout& b) {
                          return a.word == b.word;
                        }),
            out.end());
  return out;
}

// the lexicographically least reading; a fully coloured border row can be
// read from either end, and automorphic structures are indistinguishable
inline GridLayout grid_layout(const Structure& A) {
  return grid_layouts(A).front();
}

inline std::string grid_encoded_word(const Structure& A) {
  return grid_layout(A).word;
}

// ---------------------------------------------------------------------------
// Run witnesses. Only the shape of the run is validated; an inconsistent run
// still produces a witness, under which the residual simply evaluates false.

inline Assignment run_to_witness(const TuringMachine& M, const std::string& w,
                                 const TMRun& run, const Structure& G,
                                 const GridLayout& lay) {
  tmdetail::check(M);
  int l = lay.side;
  if (l < 1 || (int)lay.at.size() != l) throw Error("invalid run: bad layout");
  if ((int)w.size() > l) throw Error("invalid run: word exceeds the grid");
  if (run.empty()) throw Error("invalid run: empty");
  if ((int)run.size() > l)
    throw Error("invalid run: longer than the grid has rows");
  std::set<std::string> st(M.states.begin(), M.states.end());
  for (auto& c : run) {
    if (!st.count(c.state)) throw Error("invalid run: unknown state " + c.state);
    if (c.head < 1 || c.head > l) throw Error("invalid run: head off the tape");
    if ((int)c.tape.size() != l)
      throw Error("invalid run: tape length mismatch");
    for (char a : c.tape)
      if (!tmdetail::tm_symbol(a)) throw Error("invalid run: bad tape symbol");
  }

  Assignment Y;
  auto bs = [&] { return Bitset(G.size()); };
  Bitset VV = bs(), HH = bs(), GL = bs(), GR = bs(), GT = bs(), GB = bs();
  auto eset = [&](Bitset& b, const std::string& u, const std::string& v) {
    int e = G.edge_between(G.index_of(u), G.index_of(v));
    if (e == -1) throw Error("invalid run: grid edge missing");
    b.set(e);
  };
  for (int r = 0; r < l; ++r)
    for (int c = 0; c < l; ++c) {
      if (r + 1 < l) {
        eset(VV, lay.at[r][c], lay.at[r + 1][c]);
        if (c == 0) eset(GL, lay.at[r][0], lay.at[r + 1][0]);
        if (c == l - 1) eset(GR, lay.at[r][c], lay.at[r + 1][c]);
      }
      if (c + 1 < l) {
        eset(HH, lay.at[r][c], lay.at[r][c + 1]);
        if (r == 0) eset(GB, lay.at[0][c], lay.at[0][c + 1]);
        if (r == l - 1) eset(GT, lay.at[r][c], lay.at[r][c + 1]);
      }
    }
  std::map<std::string, Bitset> sets;
  for (auto& s : M.states) sets["Q_" + s] = bs();
  sets["S_0"] = bs();
  sets["S_1"] = bs();
  sets["S_b"] = bs();
  for (int t = 0; t < l; ++t) {
    const TMConfig& c = run[std::min<size_t>(t, run.size() - 1)];
    sets["Q_" + c.state].set(G.index_of(lay.at[t][c.head - 1]));
    for (int j = 0; j < l; ++j)
      sets[tmdetail::sym_set(c.tape[(size_t)j])].set(
          G.index_of(lay.at[t][j]));
  }
  Y["VV"] = Value::of_set(VV);
  Y["HH"] = Value::of_set(HH);
  Y["GL"] = Value::of_set(GL);
  Y["GR"] = Value::of_set(GR);
  Y["GT"] = Value::of_set(GT);
  Y["GB"] = Value::of_set(GB);
  for (auto& [k, v] : sets) Y[k] = Value::of_set(v);
  return Y;
}

inline Assignment run_to_witness(const TuringMachine& M, const std::string& w,
                                 const TMRun& run, const Structure& G,
                                 const GridMeta& meta) {
  GridLayout lay;
  lay.side = meta.l;
  lay.word = w;
  lay.at.assign(meta.k, std::vector<std::string>(meta.l));
  for (int i = 1; i <= meta.k; ++i)
    for (int j = 1; j <= meta.l; ++j) lay.at[i - 1][j - 1] = meta.vertex(i, j);
  return run_to_witness(M, w, run, G, lay);
}

// ---------------------------------------------------------------------------
// Canonical coloured ordered cliques and their encoded word.

inline Structure ordered_clique(const std::string& w, int q) {
  if ((int)w.size() > q) throw Error("word longer than the clique order");
  Structure base = generate_clique(q);
  std::map<std::string, std::set<std::string>> assign;
  for (size_t i = 0; i < w.size(); ++i)
    assign[w[i] == '1' ? "C1" : "C0"].insert("v" + std::to_string(i + 1));
  Structure col = colour_expand(base, assign, sig_G());
  std::map<std::string, std::set<std::string>> un;
  std::map<std::string, std::set<std::pair<std::string, std::string>>> bin;
  for (auto& [r, b] : col.unary)
    for (int i : b.members()) un[r].insert(col.name_of(i));
  for (int a = 0; a < col.size(); ++a)
    for (int b = 0; b < col.size(); ++b)
      if (col.holds2("in", a, b))
        bin["in"].insert({col.name_of(a), col.name_of(b)});
  for (int i = 1; i <= q; ++i)
    for (int j = i; j <= q; ++j)
      bin["leq"].insert({"v" + std::to_string(i), "v" + std::to_string(j)});
  return Structure::make(sig_ord(), col.universe, un, bin);
}

// word of a sigma_ord coloured ordered clique; throws if the structure is
// not one
inline std::string clique_encoded_word(const Structure& A) {
  const Bitset& V = A.unary_rel("V");
  const Bitset& E = A.unary_rel("E");
  auto vs = V.members();
  int q = (int)vs.size();
  // completeness, with exactly one edge per pair
  std::set<int> seen;
  for (size_t i = 0; i < vs.size(); ++i)
    for (size_t j = i + 1; j < vs.size(); ++j) {
      int e = A.edge_between(vs[i], vs[j]);
      if (e == -1 || !seen.insert(e).second)
        throw Error("structure is not a clique");
    }
  if ((int)seen.size() != E.count())
    throw Error("structure is not a clique");
  // leq must be a linear order on V
  std::vector<int> order(vs);
  for (int a : vs)
    for (int b : vs) {
      bool ab = A.holds2("leq", a, b), ba = A.holds2("leq", b, a);
      if (!ab && !ba) throw Error("leq is not total");
      if (a != b && ab && ba) throw Error("leq is not antisymmetric");
    }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return a != b && A.holds2("leq", a, b) && !A.holds2("leq", b, a);
  });
  for (int i = 0; i + 1 < q; ++i)
    if (!A.holds2("leq", order[i], order[i + 1]))
      throw Error("leq is not a linear order");
  const Bitset& C0 = A.unary_rel("C0");
  const Bitset& C1 = A.unary_rel("C1");
  std::string w;
  for (int i = 0; i < q; ++i) {
    bool c0 = C0.test(order[i]), c1 = C1.test(order[i]);
    if (c0 && c1) throw Error("vertex has two colours");
    if (!c0 && !c1) {
      for (int j = i + 1; j < q; ++j)
        if (C0.test(order[j]) || C1.test(order[j]))
          throw Error("colours are not an initial segment");
      break;
    }
    w += c1 ? '1' : '0';
  }
  return w;
}

// ---------------------------------------------------------------------------
// Transduction 1: coloured ordered cliques to coloured grids. Parameters
// PP, QQ pick the vertical and horizontal path families of a grid drawn on
// the clique's vertices; the output keeps the vertices and only the family
// edges.

inline Transduction clique_to_grid() {
  using namespace F;
  using namespace sugar;
  using namespace libdef;
  Transduction t;
  t.params = {"PP", "QQ"};
  t.outputSig = sig_G();

  auto inFam = [&](const std::string& x) {
    return conj(emem(x), disj(member(x, "PP"), member(x, "QQ")));
  };
  t.phiUniv = disj(vmem("x"), inFam("x"));
  t.phiSim = eq("x", "y");
  t.relFormulas["V"] = vmem("x1");
  t.relFormulas["E"] = inFam("x1");
  t.relFormulas["in"] = rel("in", "x1", "x2");
  t.relFormulas["C0"] = rel("C0", "x1");
  t.relFormulas["C1"] = rel("C1", "x1");

  // degenerate case: the order-1 clique is already the 1x1 grid
  FormulaPtr deg;
  {
    std::string x = gensym("x"), y = gensym("y"), e = gensym("e"),
                z = gensym("z");
    deg = conj({ex(x, conj(vmem(x), all(y, impl(vmem(y), eq(y, x))))),
                all(e, neg(emem(e))), all(z, neg(member(z, "PP"))),
                all(z, neg(member(z, "QQ")))});
  }

  FormulaPtr main_;
  {
    auto coloured = [&](const std::string& z) {
      return disj(rel("C0", z), rel("C1", z));
    };
    main_ = exists_path("PP", [&](const std::string& GL) {
      return exists_path("PP", [&](const std::string& GR) {
        return exists_path("QQ", [&](const std::string& GT) {
          return exists_path("QQ", [&](const std::string& GB) {
            std::vector<FormulaPtr> cs;
            cs.push_back(instantiate(library("grid-border"),
                                     {{"L", GL}, {"R", GR}, {"T", GT},
                                      {"B", GB}, {"VV", "PP"},
                                      {"HH", "QQ"}}));
            std::string z = gensym("z"), u = gensym("u"), v = gensym("v");
            cs.push_back(all(z, impl(coloured(z), vP(z, GB))));
            cs.push_back(
                all(u, all(v, impl(conj({vP(u, GB), coloured(v),
                                         phi_ord(u, v, GB, GL)}),
                                   coloured(u)))));
            // the grid bottom-row order agrees with leq
            cs.push_back(all(
                u, all(v, impl(conj(vP(u, GB), vP(v, GB)),
                               iff(phi_ord(u, v, GB, GL),
                                   rel("leq", u, v))))));
            return conj(cs);
          });
        });
      });
    });
  }
  t.phiValid = disj(deg, main_);
  return t;
}

// ---------------------------------------------------------------------------
// Transduction 2: simple pseudo-walls to coloured ordered cliques.
// Parameters: LL the long path, PP its segments, QQ one linking path per
// segment pair. Clique vertices are segments (represented by their private
// edges), clique edges are links.

inline Transduction simple_pw_to_clique() {
  using namespace F;
  using namespace sugar;
  using namespace libdef;
  Transduction t;
  t.params = {"PP", "QQ", "LL"};
  t.outputSig = sig_ord();

  auto uniP = [&](const std::string& x, const std::string& P) {
    return builtins::uni_edge(x, P, "PP", "QQ");
  };
  auto uniQ = [&](const std::string& x, const std::string& Qv) {
    return builtins::uni_edge(x, Qv, "PP", "QQ");
  };
  auto phiV = [&](const std::string& x) {
    return exists_path("PP",
                       [&](const std::string& P) { return uniP(x, P); });
  };
  auto phiE = [&](const std::string& x) {
    return exists_path("QQ",
                       [&](const std::string& Qv) { return uniQ(x, Qv); });
  };
  auto blueEnd = [&](const std::string& p) {
    std::string e = gensym("e");
    return conj(instantiate(library("ep"), {{"x", p}, {"P", "LL"}}),
                ex(e, conj({member(e, "LL"), rel("B", e), inc(p, e)})));
  };
  // segment order along LL seen from the blue end: every subpath from the
  // blue end reaching into P' covers all of P
  auto segBefore = [&](const std::string& P, const std::string& Pp) {
    std::string p = gensym("p"), Sub = gensym("Ps"), f = gensym("f"),
                g = gensym("g");
    auto covers =
        allS(Sub,
             impl(conj({instantiate(library("path"), {{"P", Sub}}),
                        vP(p, Sub), ex(f, conj(member(f, Pp),
                                               member(f, Sub)))}),
                  all(g, impl(member(g, P), member(g, Sub)))),
             SetSort::SubVar, "LL");
    return ex(p, conj(blueEnd(p), covers));
  };

  t.phiUniv = disj(phiV("x"), phiE("x"));
  {
    auto simV = exists_path("PP", [&](const std::string& P) {
      return conj(uniP("x", P), uniP("y", P));
    });
    auto simE = exists_path("QQ", [&](const std::string& Qv) {
      return conj(uniQ("x", Qv), uniQ("y", Qv));
    });
    t.phiSim = disj(simV, simE);
  }
  t.relFormulas["V"] = phiV("x1");
  t.relFormulas["E"] = phiE("x1");
  {
    std::string u = gensym("u");
    t.relFormulas["in"] = exists_path("PP", [&](const std::string& P) {
      return conj(uniP("x1", P), exists_path("QQ", [&](const std::string& Qv) {
               return conj(uniQ("x2", Qv),
                           ex(u, conj(instantiate(library("ep"),
                                                  {{"x", u}, {"P", Qv}}),
                                      vP(u, P))));
             }));
    });
  }
  for (auto c : {"C0", "C1"}) {
    std::string u = gensym("u");
    t.relFormulas[c] = exists_path("PP", [&](const std::string& P) {
      return conj(uniP("x1", P), ex(u, conj(vP(u, P), rel(c, u))));
    });
  }
  t.relFormulas["leq"] = exists_path("PP", [&](const std::string& P) {
    return exists_path("PP", [&](const std::string& Pp) {
      return conj({uniP("x1", P), uniP("x2", Pp),
                   disj(set_eq(P, Pp), segBefore(P, Pp))});
    });
  });

  // validity
  std::vector<FormulaPtr> valid;
  {
    // phi1: LL is a path made of exactly the blue and red edges, blues are
    // non-adjacent and exactly one endpoint of LL touches a blue edge
    std::string e = gensym("e"), f = gensym("f"), u = gensym("u");
    valid.push_back(instantiate(library("path"), {{"P", "LL"}}));
    valid.push_back(all(e, iff(member(e, "LL"),
                               disj(rel("B", e), rel("R", e)))));
    valid.push_back(all(
        e, all(f, all(u, neg(conj({rel("B", e), rel("B", f), neg(eq(e, f)),
                                   inc(u, e), inc(u, f)}))))));
    valid.push_back(exactly_one_elem(
        [&](const std::string& p) { return blueEnd(p); }));
  }
  {
    // phi2: PP is exactly LL minus the blue edges
    std::string e = gensym("e");
    valid.push_back(instantiate(library("set-o-dis-path"), {{"P", "PP"}}));
    valid.push_back(all(e, iff(member(e, "PP"),
                               conj(member(e, "LL"), neg(rel("B", e))))));
  }
  {
    // phi3: QQ is a set of disjoint paths giving exactly one link per
    // segment pair, and every link joins two distinct segments
    auto distinct = [&](const std::string& P, const std::string& Pp) {
      std::string z = gensym("z");
      return ex(z, conj(vP(z, P), neg(vP(z, Pp))));
    };
    auto linkEnds = [&](const std::string& Qv, const std::string& P,
                        const std::string& Pp) {
      std::string u = gensym("u"), u2 = gensym("u");
      return ex(u, ex(u2, conj({instantiate(library("ep"),
                                            {{"x", u}, {"P", Qv}}),
                                instantiate(library("ep"),
                                            {{"x", u2}, {"P", Qv}}),
                                neg(eq(u, u2)), vP(u, P), vP(u2, Pp)})));
    };
    valid.push_back(instantiate(library("set-o-dis-path"), {{"P", "QQ"}}));
    valid.push_back(forall_path("QQ", [&](const std::string& Qv) {
      return exists_path("PP", [&](const std::string& P) {
        return exists_path("PP", [&](const std::string& Pp) {
          return conj(distinct(P, Pp), linkEnds(Qv, P, Pp));
        });
      });
    }));
    valid.push_back(forall_path("PP", [&](const std::string& P) {
      return forall_path("PP", [&](const std::string& Pp) {
        return impl(distinct(P, Pp),
                    exactly_one_path("QQ", [&](const std::string& Qv) {
                      return linkEnds(Qv, P, Pp);
                    }));
      });
    }));
  }
  {
    // phi4: segments are monochrome, colours sit on segments and form a
    // prefix of LL from the blue end
    auto coloured = [&](const std::string& z) {
      return disj(rel("C0", z), rel("C1", z));
    };
    valid.push_back(forall_path("PP", [&](const std::string& P) {
      std::string u = gensym("u"), v = gensym("v");
      std::vector<FormulaPtr> mono;
      for (auto c : {"C0", "C1"})
        mono.push_back(impl(conj(vP(u, P), vP(v, P)),
                            iff(rel(c, u), rel(c, v))));
      return all(u, all(v, conj(mono)));
    }));
    std::string z = gensym("z"), u = gensym("u"), v = gensym("v"),
                p = gensym("p"), Sub = gensym("Ps");
    valid.push_back(all(z, impl(coloured(z), vP(z, "PP"))));
    auto before =
        ex(p, conj(blueEnd(p),
                   allS(Sub,
                        impl(conj({instantiate(library("path"),
                                               {{"P", Sub}}),
                                   vP(p, Sub), vP(v, Sub)}),
                             vP(u, Sub)),
                        SetSort::SubVar, "LL")));
    valid.push_back(all(u, all(v, impl(conj({vP(u, "PP"), coloured(v),
                                             before}),
                                       coloured(u)))));
  }
  {
    // phi5: colour sorts
    std::string z = gensym("z");
    valid.push_back(all(
        z, conj({impl(disj(rel("C0", z), rel("C1", z)), vmem(z)),
                 neg(conj(rel("C0", z), rel("C1", z))),
                 impl(disj(rel("B", z), rel("R", z)), emem(z)),
                 neg(conj(rel("B", z), rel("R", z)))})));
  }
  t.phiValid = conj(valid);
  return t;
}

// ---------------------------------------------------------------------------
// Transduction 3a: complex pseudo-walls to their coloured ordered
// intersection graph. Parameters PP, QQ, LL; the incidence part is the
// intersection-graph builtin, the colour of a P-path is the colour of its
// unique endpoint on LL, and the order follows LL from the blue end.

inline Transduction complex_pw_to_ig() {
  using namespace F;
  using namespace sugar;
  using namespace libdef;
  Transduction t = builtins::intersection_graph();
  t.params = {"PP", "QQ", "LL"};
  t.outputSig = sig_ord();

  auto uniP = [&](const std::string& x, const std::string& P) {
    return builtins::uni_edge(x, P, "PP", "QQ");
  };
  auto phiV = [&](const std::string& x) {
    auto byFam = [&](const std::string& fam) {
      return exists_path(fam, [&](const std::string& P) {
        return builtins::uni_edge(x, P, "PP", "QQ");
      });
    };
    return disj(byFam("PP"), byFam("QQ"));
  };
  auto leqL = [&](const std::string& u, const std::string& u2) {
    std::string e = gensym("e"), p = gensym("p"), Sub = gensym("Ps");
    return ex(
        e, ex(p, conj({member(e, "LL"), rel("B", e),
                       instantiate(library("ep"), {{"x", p}, {"P", "LL"}}),
                       inc(p, e),
                       allS(Sub,
                            impl(conj({instantiate(library("path"),
                                                   {{"P", Sub}}),
                                       vP(p, Sub), vP(u2, Sub)}),
                                 vP(u, Sub)),
                            SetSort::SubVar, "LL")})));
  };

  for (auto c : {"C0", "C1"}) {
    std::string u = gensym("y");
    t.relFormulas[c] = exists_path("PP", [&](const std::string& P) {
      return conj(uniP("x1", P),
                  ex(u, conj({vP(u, P), vP(u, "LL"), rel(c, u)})));
    });
  }
  {
    std::string u = gensym("u"), u2 = gensym("u");
    t.relFormulas["leq"] =
        conj({phiV("x1"), phiV("x2"),
              exists_path("PP", [&](const std::string& P) {
                return exists_path("PP", [&](const std::string& Pp) {
                  return conj({uniP("x1", P), uniP("x2", Pp),
                               ex(u, ex(u2, conj({vP(u, P), vP(u, "LL"),
                                                  vP(u2, Pp), vP(u2, "LL"),
                                                  leqL(u, u2)})))});
                });
              })});
  }

  std::vector<FormulaPtr> valid;
  {
    // phi1: LL a path of exactly the coloured edges, with a single blue
    // edge sitting at an endpoint of LL
    std::string e = gensym("e"), p = gensym("p");
    valid.push_back(instantiate(library("path"), {{"P", "LL"}}));
    valid.push_back(all(e, iff(member(e, "LL"),
                               disj(rel("B", e), rel("R", e)))));
    valid.push_back(exactly_one_elem(
        [&](const std::string& b) { return rel("B", b); }));
    valid.push_back(
        ex(e, ex(p, conj({rel("B", e), member(e, "LL"),
                          instantiate(library("ep"),
                                      {{"x", p}, {"P", "LL"}}),
                          inc(p, e)}))));
  }
  {
    // phi2: vertex colours live on LL and are disjoint; edge colours typed
    std::string z = gensym("z");
    valid.push_back(all(
        z, conj({impl(disj(rel("C0", z), rel("C1", z)),
                      conj(vmem(z), vP(z, "LL"))),
                 neg(conj(rel("C0", z), rel("C1", z))),
                 impl(disj(rel("B", z), rel("R", z)), emem(z))})));
  }
  {
    // phi3: disjoint path families; each P-path meets LL in exactly one of
    // its endpoints
    valid.push_back(instantiate(library("set-o-dis-path"), {{"P", "PP"}}));
    valid.push_back(instantiate(library("set-o-dis-path"), {{"P", "QQ"}}));
    valid.push_back(forall_path("PP", [&](const std::string& P) {
      std::string x = gensym("x"), z = gensym("z");
      return ex(x, conj({instantiate(library("ep"), {{"x", x}, {"P", P}}),
                         vP(x, "LL"),
                         all(z, impl(conj(vP(z, P), vP(z, "LL")),
                                     eq(z, x)))}));
    }));
  }
  t.phiValid = conj(valid);
  return t;
}

// ---------------------------------------------------------------------------
// Transduction 3b: extracting a coloured ordered clique from a topological
// clique inside the intersection graph. Parameters: X the branch vertices,
// F the union of the linking paths, T one separator edge per linking path.
// Branch sets are the components of F minus T.

inline Transduction ig_to_clique() {
  using namespace F;
  using namespace sugar;
  using namespace libdef;
  Transduction t;
  t.params = {"X", "F", "T"};
  t.outputSig = sig_ord();

  auto fpath = [&](const std::string& P, const std::string& x,
                   const std::string& y) {
    return instantiate(library("F-path"), {{"P", P}, {"x", x}, {"y", y},
                                           {"FF", "F"}, {"XX", "X"}});
  };
  auto mp = [&](const std::string& P) {
    return instantiate(library("mp"),
                       {{"P", P}, {"FF", "F"}, {"XX", "X"}});
  };
  auto reach = [&](const std::string& x, const std::string& y) {
    return instantiate(library("reach-avoid"),
                       {{"x", x}, {"y", y}, {"FF", "F"}, {"TT", "T"}});
  };
  auto phiE = [&](const std::string& e) {
    std::string P = gensym("P");
    return conj(emem(e),
                exS(P, conj(mp(P), member(e, P)), SetSort::SubVar, "F"));
  };
  auto phiC = [&](const std::string& x, const char* c) {
    std::string y = gensym("y");
    return conj(member(x, "X"), ex(y, conj(reach(x, y), rel(c, y))));
  };

  t.phiUniv = disj(member("x", "X"), phiE("x"));
  {
    std::string P = gensym("P");
    t.phiSim = disj(eq("x", "y"),
                    exS(P, conj({mp(P), member("x", P), member("y", P)}),
                        SetSort::SubVar, "F"));
  }
  t.relFormulas["V"] = member("x1", "X");
  t.relFormulas["E"] = phiE("x1");
  {
    std::string y = gensym("y"), P = gensym("P");
    t.relFormulas["in"] =
        conj(member("x1", "X"),
             ex(y, exS(P, conj(fpath(P, "x1", y), member("x2", P)),
                       SetSort::SubVar, "F")));
  }
  t.relFormulas["C0"] = phiC("x1", "C0");
  t.relFormulas["C1"] = phiC("x1", "C1");
  t.relFormulas["leq"] = conj({member("x1", "X"), member("x2", "X"),
                               rel("leq", "x1", "x2")});

  std::vector<FormulaPtr> valid;
  std::string z = gensym("z");
  // phi0: parameter sorts
  valid.push_back(all(z, conj({impl(member(z, "X"), vmem(z)),
                               impl(member(z, "F"), emem(z)),
                               impl(member(z, "T"), member(z, "F")),
                               neg(conj(rel("C0", z), rel("C1", z)))})));
  auto forallX = [&](const std::string& x, const FormulaPtr& body) {
    return all(x, impl(member(x, "X"), body));
  };
  {
    // phi1: a unique F-path between any two branch vertices
    std::string x = gensym("x"), y = gensym("y"), P = gensym("P"),
                Qv = gensym("P");
    valid.push_back(forallX(
        x, forallX(y, impl(neg(eq(x, y)),
                           exS(P,
                               conj(fpath(P, x, y),
                                    allS(Qv,
                                         impl(fpath(Qv, x, y),
                                              set_eq(Qv, P)),
                                         SetSort::SubVar, "F")),
                               SetSort::SubVar, "F")))));
  }
  {
    // phi2: every F edge lies on a linking path
    std::string e = gensym("e"), x = gensym("x"), y = gensym("y"),
                P = gensym("P");
    valid.push_back(all(
        e, impl(member(e, "F"),
                ex(x, ex(y, exS(P, conj(fpath(P, x, y), member(e, P)),
                                SetSort::SubVar, "F"))))));
  }
  {
    // phi3: two linking paths share vertices only in common endpoints
    std::string x = gensym("x"), y = gensym("y"), x2 = gensym("x"),
                y2 = gensym("y"), P = gensym("P"), Pp = gensym("P"),
                u = gensym("u");
    auto samePair = disj(conj(eq(x, x2), eq(y, y2)),
                         conj(eq(x, y2), eq(y, x2)));
    auto shared = all(u, impl(conj(vP(u, P), vP(u, Pp)),
                              conj(disj(eq(u, x), eq(u, y)),
                                   disj(eq(u, x2), eq(u, y2)))));
    valid.push_back(all(
        x, all(y, all(x2, all(y2,
            allS(P,
                 impl(fpath(P, x, y),
                      allS(Pp,
                           impl(conj(fpath(Pp, x2, y2), neg(samePair)),
                                shared),
                           SetSort::SubVar, "F")),
                 SetSort::SubVar, "F"))))));
  }
  {
    // phi4: T holds exactly one edge of each linking path and nothing else
    std::string x = gensym("x"), y = gensym("y"), P = gensym("P"),
                e = gensym("e");
    valid.push_back(forallX(
        x, forallX(y, impl(neg(eq(x, y)),
                           exS(P,
                               conj(fpath(P, x, y),
                                    exactly_one_elem(
                                        [&](const std::string& f) {
                                          return conj(member(f, P),
                                                      member(f, "T"));
                                        })),
                               SetSort::SubVar, "F")))));
    valid.push_back(all(
        e, impl(member(e, "T"),
                ex(x, ex(y, exS(P, conj(fpath(P, x, y), member(e, P)),
                                SetSort::SubVar, "F"))))));
  }
  {
    // phi5: leq is a linear order on X
    std::string x = gensym("x"), y = gensym("y"), w = gensym("w");
    valid.push_back(forallX(x, rel("leq", x, x)));
    valid.push_back(forallX(
        x, forallX(y, conj(disj(rel("leq", x, y), rel("leq", y, x)),
                           impl(conj(rel("leq", x, y), rel("leq", y, x)),
                                eq(x, y))))));
    valid.push_back(forallX(
        x, forallX(y, forallX(w, impl(conj(rel("leq", x, y),
                                           rel("leq", y, w)),
                                      rel("leq", x, w))))));
  }
  {
    // phi6: at most one coloured vertex per branch set; every coloured
    // vertex is in one
    std::string x = gensym("x"), c = gensym("c");
    valid.push_back(forallX(
        x, at_most_elems(1, [&](const std::string& y) {
          return conj(reach(x, y), disj(rel("C0", y), rel("C1", y)));
        })));
    valid.push_back(all(
        c, impl(disj(rel("C0", c), rel("C1", c)),
                ex(x, conj(member(x, "X"), reach(x, c))))));
  }
  {
    // phi7: coloured branch vertices form an initial segment of leq
    std::string x = gensym("x"), y = gensym("y");
    auto colX = [&](const std::string& v) {
      return disj(phiC(v, "C0"), phiC(v, "C1"));
    };
    valid.push_back(forallX(
        x, forallX(y, impl(conj(colX(y), rel("leq", x, y)), colX(x)))));
  }
  t.phiValid = conj(valid);
  return t;
}

inline std::pair<Transduction, Transduction> complex_pw_to_clique() {
  return {complex_pw_to_ig(), ig_to_clique()};
}

// ---------------------------------------------------------------------------
// The dispatch formula over sigma_col: one blue edge means complex wall,
// two or more mean simple wall.

struct PseudoWallFormula {
  FormulaPtr full;            // the dispatch sentence
  FormulaPtr simpleBranch;    // body behind the >= 2 blue edges guard
  FormulaPtr complexBranch;   // body behind the exactly-1 blue edge guard
  FormulaPtr machine;         // compile_tm(M), over sigma_G
};

inline PseudoWallFormula pseudo_wall_formula(const TuringMachine& M) {
  using namespace F;
  using namespace sugar;
  PseudoWallFormula out;
  out.machine = compile_tm(M);

  auto close = [](const Transduction& th, const FormulaPtr& phi,
                  const std::map<std::string, SetSort>& sorts) {
    FormulaPtr f = translate(th, phi);
    for (auto it = th.params.rbegin(); it != th.params.rend(); ++it)
      f = exS(*it, f, sorts.at(*it));
    return f;
  };
  std::map<std::string, SetSort> edgeSorts{
      {"PP", SetSort::SubE}, {"QQ", SetSort::SubE}, {"LL", SetSort::SubE}};
  FormulaPtr onClique = close(clique_to_grid(), out.machine, edgeSorts);
  out.simpleBranch = close(simple_pw_to_clique(), onClique, edgeSorts);
  auto [th1, th2] = complex_pw_to_clique();
  FormulaPtr onIg =
      close(th2, onClique,
            {{"X", SetSort::SubV}, {"F", SetSort::SubE},
             {"T", SetSort::SubE}});
  out.complexBranch = close(th1, onIg, edgeSorts);

  auto oneBlue = exactly_one_elem(
      [&](const std::string& e) { return rel("B", e); });
  auto manyBlue = at_least_elems(
      2, [&](const std::string& e) { return rel("B", e); });
  out.full = disj(conj(oneBlue, out.complexBranch),
                  conj(manyBlue, out.simpleBranch));
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end reduction: build a pseudo-wall of order |w|^(2*power) encoding
// w inside a generated family member, and pair it with the dispatch formula.

struct ReduceReport {
  std::string word;
  int power = 2;
  int order = 0;
  std::string family;
  std::string shape;  // simple or complex
  int graphVertices = 0, graphEdges = 0;
  int expansionSize = 0;
  int brambleElements = 0;
  long long brambleOrderRequired = 0;  // k*m + 1, established by the builder
  unsigned long long requiredTreewidth = 0;
  bool requirementMet = false;  // bramble lower bound vs required treewidth
  double sizeBoundLog2 = 0;     // 84 * twLower^(1/14)
  bool sizeBoundHolds = false;

  std::string text() const {
    std::ostringstream o;
    o << "reduce-report\n";
    o << "word: " << word << "\n";
    o << "power: " << power << "\n";
    o << "order: " << order << "\n";
    o << "family: " << family << "\n";
    o << "shape: " << shape << "\n";
    o << "graph-vertices: " << graphVertices << "\n";
    o << "graph-edges: " << graphEdges << "\n";
    o << "expansion-elements: " << expansionSize << "\n";
    o << "bramble-elements: " << brambleElements << "\n";
    o << "bramble-order-required: " << brambleOrderRequired << "\n";
    o << "treewidth-lower-bound: " << brambleOrderRequired - 1 << "\n";
    o << "required-treewidth: " << requiredTreewidth << "\n";
    o << "requirement-met: " << (requirementMet ? "yes" : "no") << "\n";
    o << "size-bound-constants: 84 14\n";
    o << "size-bound-log2-rhs: " << sizeBoundLog2 << "\n";
    o << "size-bound-holds: " << (sizeBoundHolds ? "yes" : "no") << "\n";
    return o.str();
  }
};

struct ReduceResult {
  PWBuildResult build;
  PseudoWallFormula formula;
  ReduceReport report;
};

inline ReduceResult reduce(const std::string& w, const TuringMachine& M,
                           const std::string& family, int power = 2,
                           PWBuildOptions opt = {}) {
  tmdetail::check(M);
  if (w.empty()) throw Error("word must be nonempty");
  for (char c : w)
    if (c != '0' && c != '1') throw Error("word alphabet is {0,1}");
  if (power < 1) throw Error("power must be >= 1");
  long long order = 1;
  for (int i = 0; i < 2 * power; ++i) {
    order *= (long long)w.size();
    if (order > 1000) throw Error("family too small: order " +
                                  std::to_string(order) + " out of reach");
  }

  Structure G;
  Bramble br;
  {
    size_t colon = family.find(':');
    std::string kind = family.substr(0, colon);
    if (kind != "grid" || colon == std::string::npos)
      throw Error("unknown family: " + family);
    int n = 0;
    try {
      n = std::stoi(family.substr(colon + 1));
    } catch (...) {
      throw Error("unknown family: " + family);
    }
    if (n < 2) throw Error("unknown family: " + family);
    G = generate_grid(n, n);
    br = grid_crosses_bramble(n, graph_of(G));
  }

  opt.order = (int)order;
  ReduceResult res;
  try {
    res.build = build_pseudo_wall(G, w, br, opt);
  } catch (const Error& e) {
    std::string msg = e.what();
    if (msg.rfind("bramble order insufficient", 0) == 0 ||
        msg.rfind("link system", 0) == 0 ||
        msg.rfind("hitting path", 0) == 0)
      throw Error("family too small: " + msg);
    throw;
  }
  res.formula = pseudo_wall_formula(M);

  SimpleGraph g = graph_of(G);
  int m = (int)order;
  int h = m * (m - 1) / 2;
  long long k = (long long)llround(h * (h - 1) * opt.d * m * m) + 1;
  ReduceReport& r = res.report;
  r.word = w;
  r.power = power;
  r.order = m;
  r.family = family;
  r.shape = res.build.simple ? "simple" : "complex";
  r.graphVertices = g.n();
  r.graphEdges = (int)g.edges.size();
  r.expansionSize = res.build.expansion.size();
  r.brambleElements = (int)br.elements.size();
  r.brambleOrderRequired = k * m + 1;
  r.requiredTreewidth = required_treewidth(m);
  r.requirementMet =
      (unsigned long long)(r.brambleOrderRequired - 1) >= r.requiredTreewidth;
  long double twLower = (long double)(r.brambleOrderRequired - 1);
  r.sizeBoundLog2 = (double)(84.0L * powl(twLower, 1.0L / 14.0L));
  r.sizeBoundHolds = log2l((long double)r.expansionSize) < r.sizeBoundLog2;
  return res;
}

}  // namespace msow
