#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "msow/bitset.hpp"

namespace msow {

struct Error : std::runtime_error {
  explicit Error(const std::string& m) : std::runtime_error(m) {}
};

// ---------------------------------------------------------------------------
// Signature

struct Signature {
  // name -> arity (1 or 2)
  std::vector<std::pair<std::string, int>> relations;
  std::vector<std::string> constants;

  bool has_relation(const std::string& n) const {
    for (auto& r : relations)
      if (r.first == n) return true;
    return false;
  }
  int arity(const std::string& n) const {
    for (auto& r : relations)
      if (r.first == n) return r.second;
    throw Error("unknown relation symbol: " + n);
  }
  bool operator==(const Signature& o) const = default;
};

inline Signature sig_inc() {
  return Signature{{{"V", 1}, {"E", 1}, {"in", 2}}, {}};
}
inline Signature sig_G() {
  return Signature{{{"V", 1}, {"E", 1}, {"in", 2}, {"C0", 1}, {"C1", 1}}, {}};
}
inline Signature sig_col() {
  return Signature{
      {{"V", 1}, {"E", 1}, {"in", 2}, {"B", 1}, {"R", 1}, {"C0", 1}, {"C1", 1}},
      {}};
}
inline Signature sig_ord() {
  return Signature{
      {{"V", 1}, {"E", 1}, {"in", 2}, {"C0", 1}, {"C1", 1}, {"leq", 2}}, {}};
}

// ---------------------------------------------------------------------------
// Structure

struct Structure {
  Signature sig;
  std::vector<std::string> universe;  // sorted, unique
  std::map<std::string, Bitset> unary;
  std::map<std::string, std::vector<std::pair<int, int>>> binary;  // sorted
  std::map<std::string, int> constants;

  int size() const { return (int)universe.size(); }

  int index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown element: " + name);
    return it->second;
  }
  bool has_element(const std::string& name) const {
    return index_.count(name) != 0;
  }
  const std::string& name_of(int i) const { return universe[i]; }

  const Bitset& unary_rel(const std::string& r) const {
    auto it = unary.find(r);
    if (it == unary.end()) throw Error("unknown unary relation: " + r);
    return it->second;
  }
  const std::vector<std::pair<int, int>>& binary_rel(
      const std::string& r) const {
    auto it = binary.find(r);
    if (it == binary.end()) throw Error("unknown binary relation: " + r);
    return it->second;
  }
  bool holds2(const std::string& r, int a, int b) const {
    const auto& v = binary_rel(r);
    return std::binary_search(v.begin(), v.end(), std::make_pair(a, b));
  }

  static Structure make(
      Signature sig, std::vector<std::string> elems,
      const std::map<std::string, std::set<std::string>>& un = {},
      const std::map<std::string, std::set<std::pair<std::string, std::string>>>&
          bin = {},
      const std::map<std::string, std::string>& cons = {}) {
    Structure s;
    s.sig = std::move(sig);
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    s.universe = std::move(elems);
    for (int i = 0; i < (int)s.universe.size(); ++i)
      s.index_[s.universe[i]] = i;
    for (auto& [r, a] : s.sig.relations) {
      if (a == 1) s.unary.emplace(r, Bitset(s.size()));
      else s.binary.emplace(r, std::vector<std::pair<int, int>>{});
    }
    for (auto& [r, es] : un) {
      if (!s.sig.has_relation(r) || s.sig.arity(r) != 1)
        throw Error("relation not unary in signature: " + r);
      for (auto& e : es) s.unary.at(r).set(s.index_of(e));
    }
    for (auto& [r, ps] : bin) {
      if (!s.sig.has_relation(r) || s.sig.arity(r) != 2)
        throw Error("relation not binary in signature: " + r);
      auto& v = s.binary.at(r);
      for (auto& p : ps)
        v.emplace_back(s.index_of(p.first), s.index_of(p.second));
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    for (auto& c : cons) s.constants[c.first] = s.index_of(c.second);
    return s;
  }

  bool operator==(const Structure& o) const {
    return sig == o.sig && universe == o.universe && unary == o.unary &&
           binary == o.binary && constants == o.constants;
  }

  // --- incidence view helpers (valid only for IncidenceCert structures) ---
  bool is_vertex(int i) const { return unary_rel("V").test(i); }
  bool is_edge(int i) const { return unary_rel("E").test(i); }

  std::pair<int, int> endpoints(int e) const {
    build_incidence_cache();
    return ends_[e];
  }
  const std::vector<int>& incident_edges(int v) const {
    build_incidence_cache();
    return inc_[v];
  }
  // edge element joining vertices u,v, or -1
  int edge_between(int u, int v) const {
    build_incidence_cache();
    for (int e : inc_[u]) {
      auto [a, b] = ends_[e];
      if (a == v || b == v) return e;
    }
    return -1;
  }

private:
  std::unordered_map<std::string, int> index_;
  mutable bool cached_ = false;
  mutable std::vector<std::pair<int, int>> ends_;
  mutable std::vector<std::vector<int>> inc_;

  void build_incidence_cache() const {
    if (cached_) return;
    ends_.assign(size(), {-1, -1});
    inc_.assign(size(), {});
    for (auto& [v, e] : binary_rel("in")) {
      inc_[v].push_back(e);
      if (ends_[e].first == -1) ends_[e].first = v;
      else if (ends_[e].second == -1) ends_[e].second = v;
    }
    cached_ = true;
  }
};

// ---------------------------------------------------------------------------
// Validation

inline std::vector<std::string> validate(const Structure& s,
                                         bool requireIncidence = false) {
  std::vector<std::string> bad;
  for (auto& [r, a] : s.sig.relations) {
    if (a == 1 && !s.unary.count(r)) bad.push_back("missing unary " + r);
    if (a == 2 && !s.binary.count(r)) bad.push_back("missing binary " + r);
  }
  for (auto& [r, bs] : s.unary)
    if (!s.sig.has_relation(r)) bad.push_back("unary " + r + " not in signature");
  for (auto& [r, v] : s.binary) {
    if (!s.sig.has_relation(r)) bad.push_back("binary " + r + " not in signature");
    for (auto& [a, b] : v)
      if (a < 0 || a >= s.size() || b < 0 || b >= s.size())
        bad.push_back("tuple references non-universe element");
  }
  for (auto& [c, e] : s.constants)
    if (e < 0 || e >= s.size())
      bad.push_back("constant " + c + " references non-universe element");
  if (!requireIncidence) return bad;

  if (!s.sig.has_relation("V") || !s.sig.has_relation("E") ||
      !s.sig.has_relation("in")) {
    bad.push_back("incidence signature requires V, E, in");
    return bad;
  }
  const Bitset &V = s.unary_rel("V"), &E = s.unary_rel("E");
  for (int i = 0; i < s.size(); ++i) {
    if (V.test(i) && E.test(i))
      bad.push_back("element " + s.name_of(i) + " both vertex and edge");
    if (!V.test(i) && !E.test(i))
      bad.push_back("element " + s.name_of(i) + " neither vertex nor edge");
  }
  std::map<int, std::set<int>> ends;
  for (auto& [a, b] : s.binary_rel("in")) {
    if (!V.test(a) || !E.test(b))
      bad.push_back("incidence pair not vertex-edge: (" + s.name_of(a) + "," +
                    s.name_of(b) + ")");
    ends[b].insert(a);
  }
  std::set<std::pair<int, int>> seen;
  for (int e = 0; e < s.size(); ++e) {
    if (!E.test(e)) continue;
    size_t deg = ends.count(e) ? ends[e].size() : 0;
    if (deg != 2) {
      bad.push_back("edge " + s.name_of(e) + " has " + std::to_string(deg) +
                    " endpoints");
      continue;
    }
    auto it = ends[e].begin();
    int u = *it++, v = *it;
    if (!seen.insert({u, v}).second)
      bad.push_back("parallel edge " + s.name_of(e));
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Constructions

// Build the incidence structure of a simple graph given as an edge list plus
// optional isolated vertices. Edge element names are derived from endpoints.
inline Structure incidence_of(
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::vector<std::string>& isolated = {},
    Signature sig = sig_inc()) {
  std::set<std::string> verts(isolated.begin(), isolated.end());
  std::set<std::pair<std::string, std::string>> canon;
  for (auto [u, v] : edges) {
    if (u == v) throw Error("self-loop on " + u);
    if (u > v) std::swap(u, v);
    if (!canon.insert({u, v}).second) throw Error("duplicate edge " + u + "-" + v);
    verts.insert(u);
    verts.insert(v);
  }
  std::vector<std::string> elems(verts.begin(), verts.end());
  std::map<std::string, std::set<std::string>> un;
  std::map<std::string, std::set<std::pair<std::string, std::string>>> bin;
  un["V"] = verts;
  for (auto& [u, v] : canon) {
    std::string e = "e_" + u + "_" + v;
    if (verts.count(e)) throw Error("edge name collides with vertex: " + e);
    elems.push_back(e);
    un["E"].insert(e);
    bin["in"].insert({u, e});
    bin["in"].insert({v, e});
  }
  return Structure::make(std::move(sig), std::move(elems), un, bin);
}

inline Structure gaifman_graph(const Structure& s) {
  for (auto& [r, a] : s.sig.relations)
    if (a > 2) throw Error("arity above 2 in signature");
  std::set<std::pair<std::string, std::string>> edges;
  for (auto& [r, v] : s.binary)
    for (auto& [a, b] : v)
      if (a != b)
        edges.insert({std::min(s.name_of(a), s.name_of(b)),
                      std::max(s.name_of(a), s.name_of(b))});
  std::vector<std::string> iso(s.universe.begin(), s.universe.end());
  return incidence_of({edges.begin(), edges.end()}, iso);
}

// ---------------------------------------------------------------------------
// Generators

// Coordinates of generated grids, kept out of the structure itself.
struct GridMeta {
  int k = 0, l = 0;  // k rows, l columns; row 1 is the bottom row
  std::string vertex(int i, int j) const {
    return "v_" + std::to_string(i) + "_" + std::to_string(j);
  }
  std::string edge(int i, int j, int i2, int j2) const {
    std::string a = vertex(i, j), b = vertex(i2, j2);
    if (a > b) std::swap(a, b);
    return "e_" + a + "_" + b;
  }
};

inline Structure generate_grid(int k, int l, GridMeta* meta = nullptr) {
  if (k < 1 || l < 1) throw Error("grid dimensions must be >= 1");
  GridMeta m{k, l};
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> iso;
  for (int i = 1; i <= k; ++i)
    for (int j = 1; j <= l; ++j) {
      if (j < l) edges.push_back({m.vertex(i, j), m.vertex(i, j + 1)});
      if (i < k) edges.push_back({m.vertex(i, j), m.vertex(i + 1, j)});
      if (k == 1 && l == 1) iso.push_back(m.vertex(i, j));
    }
  if (meta) *meta = m;
  return incidence_of(edges, iso);
}

inline Structure generate_clique(int n) {
  if (n < 1) throw Error("clique size must be >= 1");
  auto nm = [](int i) { return "v" + std::to_string(i); };
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> iso;
  for (int i = 1; i <= n; ++i) {
    if (n == 1) iso.push_back(nm(i));
    for (int j = i + 1; j <= n; ++j) edges.push_back({nm(i), nm(j)});
  }
  return incidence_of(edges, iso);
}

inline Structure generate_path(int n) {
  if (n < 1) throw Error("path size must be >= 1");
  auto nm = [](int i) { return "v" + std::to_string(i); };
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> iso;
  if (n == 1) iso.push_back(nm(1));
  for (int i = 1; i < n; ++i) edges.push_back({nm(i), nm(i + 1)});
  return incidence_of(edges, iso);
}

inline Structure generate_cycle(int n) {
  if (n < 3) throw Error("cycle size must be >= 3");
  auto nm = [](int i) { return "v" + std::to_string(i); };
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 1; i < n; ++i) edges.push_back({nm(i), nm(i + 1)});
  edges.push_back({nm(n), nm(1)});
  return incidence_of(edges);
}

// Elementary wall: k x 2l vertex field with alternating vertical rungs,
// degree-1 corners removed.
inline Structure generate_wall(int k, int l) {
  if (k < 2 || l < 1) throw Error("wall requires k >= 2, l >= 1");
  auto nm = [](int i, int j) {
    return "v_" + std::to_string(i) + "_" + std::to_string(j);
  };
  int cols = 2 * l;
  std::set<std::pair<int, int>> verts;
  for (int i = 1; i <= k; ++i)
    for (int j = 1; j <= cols; ++j) verts.insert({i, j});
  auto degree = [&](int i, int j) {
    int d = 0;
    if (verts.count({i, j - 1})) d++;
    if (verts.count({i, j + 1})) d++;
    if ((i + j) % 2 == 0 && verts.count({i + 1, j})) d++;
    if ((i - 1 + j) % 2 == 0 && verts.count({i - 1, j})) d++;
    return d;
  };
  // remove the two degree-1 corner vertices of the pre-wall
  std::vector<std::pair<int, int>> drop;
  for (auto& [i, j] : verts)
    if (degree(i, j) <= 1) drop.push_back({i, j});
  for (auto& v : drop) verts.erase(v);
  std::vector<std::pair<std::string, std::string>> edges;
  for (auto& [i, j] : verts) {
    if (verts.count({i, j + 1})) edges.push_back({nm(i, j), nm(i, j + 1)});
    if ((i + j) % 2 == 0 && verts.count({i + 1, j}))
      edges.push_back({nm(i, j), nm(i + 1, j)});
  }
  return incidence_of(edges);
}

inline Structure generate_random(int n, double p, uint64_t seed) {
  if (n < 1) throw Error("random graph size must be >= 1");
  if (p < 0 || p > 1) throw Error("edge probability out of range");
  auto nm = [](int i) { return "v" + std::to_string(i); };
  // explicit LCG + threshold: bit-reproducible across platforms
  uint64_t state = seed * 6364136223846793005ull + 1442695040888963407ull;
  auto next01 = [&]() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return double(state >> 11) / double(uint64_t(1) << 53);
  };
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> iso;
  for (int i = 1; i <= n; ++i) iso.push_back(nm(i));
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      if (next01() < p) edges.push_back({nm(i), nm(j)});
  return incidence_of(edges, iso);
}

inline Structure colour_expand(
    const Structure& s,
    const std::map<std::string, std::set<std::string>>& assign,
    Signature sig = sig_col()) {
  auto bad = validate(s, true);
  if (!bad.empty()) throw Error("colour_expand input: " + bad.front());
  std::map<std::string, std::set<std::string>> un;
  for (int i = 0; i < s.size(); ++i) {
    if (s.is_vertex(i)) un["V"].insert(s.name_of(i));
    else un["E"].insert(s.name_of(i));
  }
  std::map<std::string, std::set<std::pair<std::string, std::string>>> bin;
  for (auto& [v, e] : s.binary_rel("in"))
    bin["in"].insert({s.name_of(v), s.name_of(e)});
  for (auto& [c, elems] : assign) {
    if (!sig.has_relation(c)) throw Error("colour not in signature: " + c);
    bool vertexColour = (c == "C0" || c == "C1");
    for (auto& e : elems) {
      int i = s.index_of(e);
      if (vertexColour && !s.is_vertex(i))
        throw Error("colour " + c + " applied to non-vertex " + e);
      if ((c == "B" || c == "R") && !s.is_edge(i))
        throw Error("colour " + c + " applied to non-edge " + e);
      un[c].insert(e);
    }
  }
  return Structure::make(std::move(sig), s.universe, un, bin);
}

// l x l grid, l = |w|^d, bottom row colours the first |w| vertices.
inline Structure encode_word_in_grid(const std::string& w, int d,
                                     GridMeta* meta = nullptr) {
  if (w.empty()) throw Error("word must be nonempty");
  if (d < 1) throw Error("power must be >= 1");
  for (char c : w)
    if (c != '0' && c != '1') throw Error("word alphabet is {0,1}");
  long long l = 1;
  for (int i = 0; i < d; ++i) l *= (long long)w.size();
  if (l > 64) throw Error("grid side too large: " + std::to_string(l));
  GridMeta m;
  Structure g = generate_grid((int)l, (int)l, &m);
  std::map<std::string, std::set<std::string>> assign;
  for (int j = 1; j <= (int)w.size(); ++j)
    assign[w[j - 1] == '0' ? "C0" : "C1"].insert(m.vertex(1, j));
  if (meta) *meta = m;
  return colour_expand(g, assign, sig_G());
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string write(const Structure& s) {
  std::ostringstream o;
  o << "signature";
  for (auto& [r, a] : s.sig.relations) o << " " << r << "/" << a;
  for (auto& c : s.sig.constants) o << " " << c << "/c";
  o << "\n";
  o << "universe";
  for (auto& e : s.universe) o << " " << e;
  o << "\n";
  for (auto& [r, bs] : s.unary) {
    o << "unary " << r << ":";
    for (int i = bs.next(0); i != -1; i = bs.next(i + 1))
      o << " " << s.name_of(i);
    o << "\n";
  }
  for (auto& [r, v] : s.binary) {
    std::vector<std::pair<std::string, std::string>> named;
    for (auto& [a, b] : v) named.push_back({s.name_of(a), s.name_of(b)});
    std::sort(named.begin(), named.end());
    o << "binary " << r << ":";
    for (auto& [a, b] : named) o << " (" << a << "," << b << ")";
    o << "\n";
  }
  for (auto& [c, e] : s.constants)
    o << "constant " << c << ": " << s.name_of(e) << "\n";
  return o.str();
}

namespace detail {
inline bool valid_name(const std::string& t) {
  if (t.empty()) return false;
  for (char c : t)
    if (!isalnum((unsigned char)c) && c != '_') return false;
  return true;
}
}  // namespace detail

inline Structure read(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool haveSig = false, haveUniv = false;
  Signature sig;
  std::vector<std::string> elems;
  std::map<std::string, std::set<std::string>> un;
  std::map<std::string, std::set<std::pair<std::string, std::string>>> bin;
  std::map<std::string, std::string> cons;
  auto fail = [&](const std::string& m) {
    throw Error("parse error at line " + std::to_string(lineno) + ": " + m);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "signature") {
      std::string tok;
      while (ls >> tok) {
        auto slash = tok.rfind('/');
        if (slash == std::string::npos) fail("signature entry needs /arity");
        std::string name = tok.substr(0, slash), ar = tok.substr(slash + 1);
        if (!detail::valid_name(name)) fail("bad symbol name " + name);
        if (ar == "c") sig.constants.push_back(name);
        else if (ar == "1" || ar == "2")
          sig.relations.push_back({name, ar == "1" ? 1 : 2});
        else fail("bad arity " + ar);
      }
      haveSig = true;
    } else if (head == "universe") {
      std::string tok;
      while (ls >> tok) {
        if (!detail::valid_name(tok)) fail("bad element name " + tok);
        elems.push_back(tok);
      }
      haveUniv = true;
    } else if (head == "unary" || head == "binary" || head == "constant") {
      std::string r;
      if (!(ls >> r)) fail("missing relation name");
      if (r.empty() || r.back() != ':') fail("expected ':' after name");
      r.pop_back();
      std::string tok;
      if (head == "unary") {
        while (ls >> tok) un[r].insert(tok);
      } else if (head == "constant") {
        if (!(ls >> tok)) fail("constant needs a value");
        cons[r] = tok;
      } else {
        while (ls >> tok) {
          if (tok.size() < 5 || tok.front() != '(' || tok.back() != ')')
            fail("bad pair " + tok);
          auto comma = tok.find(',');
          if (comma == std::string::npos) fail("bad pair " + tok);
          bin[r].insert({tok.substr(1, comma - 1),
                         tok.substr(comma + 1, tok.size() - comma - 2)});
        }
      }
    } else {
      fail("unknown directive " + head);
    }
  }
  if (!haveSig) throw Error("parse error: missing signature line");
  if (!haveUniv) throw Error("parse error: missing universe line");
  try {
    return Structure::make(sig, elems, un, bin, cons);
  } catch (const Error& e) {
    throw Error(std::string("parse error: ") + e.what());
  }
}

}  // namespace msow
