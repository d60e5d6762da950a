#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "msow/obstruct.hpp"
#include "msow/structure.hpp"

// Simple and complex pseudo-wall certificates over coloured incidence
// structures, their verifiers, encoded-word extraction, and the builder
// that colours a graph of large tree-width into a pseudo-wall.

namespace msow {

// ---------------------------------------------------------------------------
// Certificates.  Element references are names in the host structure.
// Alternating sequences run v, e, v, e, ..., v.

struct SimplePWCert {
  std::vector<std::string> L;  // the long path, alternating
  std::vector<int> blueIdx;    // 1-based blue edge positions on L, i_1 = 1
  int order = 0;               // k = number of blue edges
  std::map<std::pair<int, int>, std::vector<std::string>> links;  // {j,j'} -> path
};

struct ComplexPWCert {
  struct NamedEmbedding {
    std::map<int, std::string> branchVertices;  // clique vertex -> ig vertex name
    std::map<std::pair<int, int>, std::vector<std::string>> pathMap;
  };
  std::vector<std::string> L;
  std::vector<std::vector<std::string>> P, Q;  // alternating path families
  NamedEmbedding cliqueEmbedding;              // topological clique in I(P,Q)
  int cliqueOrder = 0;                         // q
  std::vector<std::string> colouredVertices;   // in L order from the blue end
  int order = 0;                               // k
};

// ---------------------------------------------------------------------------
// Shared helpers.

namespace pwdetail {

inline bool known(const Structure& s, const std::string& n) {
  try {
    s.index_of(n);
    return true;
  } catch (const Error&) {
    return false;
  }
}

inline bool in_rel(const Structure& s, const std::string& rel,
                   const std::string& n) {
  return s.unary_rel(rel).test(s.index_of(n));
}

// Checks an alternating v,e,v,...,v sequence against the incidence relation.
inline bool alt_path_ok(const Structure& s, const std::vector<std::string>& seq,
                        std::string& err) {
  if (seq.empty() || seq.size() % 2 == 0) {
    err = "alternating sequence has even length";
    return false;
  }
  std::set<std::string> vs, es;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (!known(s, seq[i])) {
      err = "unknown element " + seq[i];
      return false;
    }
    int idx = s.index_of(seq[i]);
    if (i % 2 == 0) {
      if (!s.is_vertex(idx) || !vs.insert(seq[i]).second) {
        err = "bad or repeated vertex " + seq[i];
        return false;
      }
    } else {
      if (!s.is_edge(idx) || !es.insert(seq[i]).second) {
        err = "bad or repeated edge " + seq[i];
        return false;
      }
      if (!s.holds2("in", s.index_of(seq[i - 1]), idx) ||
          !s.holds2("in", s.index_of(seq[i + 1]), idx)) {
        err = "edge " + seq[i] + " not incident to its neighbours";
        return false;
      }
    }
  }
  return true;
}

inline std::vector<std::string> seq_vertices(
    const std::vector<std::string>& seq) {
  std::vector<std::string> out;
  for (size_t i = 0; i < seq.size(); i += 2) out.push_back(seq[i]);
  return out;
}

inline std::vector<std::string> seq_edges(const std::vector<std::string>& seq) {
  std::vector<std::string> out;
  for (size_t i = 1; i < seq.size(); i += 2) out.push_back(seq[i]);
  return out;
}

}  // namespace pwdetail

// Derived intervals of a simple certificate: interval j holds the L-vertices
// strictly after blue edge j up to and including the vertex before blue edge
// j+1 (the end of L for the last interval).
inline std::vector<std::vector<std::string>> simple_intervals(
    const SimplePWCert& cert) {
  auto verts = pwdetail::seq_vertices(cert.L);
  int s = (int)verts.size() - 1;
  std::vector<std::vector<std::string>> out;
  for (size_t j = 0; j < cert.blueIdx.size(); ++j) {
    int from = cert.blueIdx[j] + 1;  // 1-based vertex index
    int to = (j + 1 < cert.blueIdx.size()) ? cert.blueIdx[j + 1] : s + 1;
    std::vector<std::string> iv;
    for (int t = from; t <= to && t <= s + 1; ++t) iv.push_back(verts[t - 1]);
    out.push_back(iv);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simple pseudo-wall verifier.  Empty result means the certificate holds.

inline std::vector<std::string> verify_simple(const Structure& A,
                                              const SimplePWCert& cert,
                                              bool strictSpacing = false) {
  std::vector<std::string> out;
  auto flag = [&](const std::string& m) { out.push_back(m); };
  std::string err;
  if (!pwdetail::alt_path_ok(A, cert.L, err)) {
    flag("L is not a path: " + err);
    return out;
  }
  auto edges = pwdetail::seq_edges(cert.L);
  int s = (int)edges.size();
  int k = cert.order;
  if (k < 1 || (int)cert.blueIdx.size() != k) {
    flag("order does not match the number of blue indices");
    return out;
  }
  int h = k * (k - 1) / 2;
  if (cert.blueIdx.front() != 1) flag("first edge of L is not blue");
  for (int j = 0; j + 1 < k; ++j) {
    if (cert.blueIdx[j + 1] <= cert.blueIdx[j] + 1)
      flag("blue edges " + std::to_string(j + 1) + " and " +
           std::to_string(j + 2) + " are adjacent or out of order");
    if (strictSpacing && cert.blueIdx[j + 1] >= cert.blueIdx[j] + h)
      flag("blue spacing bound violated at index " + std::to_string(j + 1));
  }
  if (cert.blueIdx.back() >= s) flag("last edge of L is not red");
  for (int i : cert.blueIdx)
    if (i < 1 || i > s) {
      flag("blue index out of range");
      return out;
    }
  std::set<int> blue(cert.blueIdx.begin(), cert.blueIdx.end());
  for (int p = 1; p <= s; ++p) {
    bool b = pwdetail::in_rel(A, "B", edges[p - 1]);
    bool r = pwdetail::in_rel(A, "R", edges[p - 1]);
    if (blue.count(p) && (!b || r))
      flag("edge at position " + std::to_string(p) + " should be blue");
    if (!blue.count(p) && (b || !r))
      flag("edge at position " + std::to_string(p) + " should be red");
  }
  // B must not colour anything beyond the blue edges of L.
  std::set<std::string> blueNames;
  for (int p : cert.blueIdx) blueNames.insert(edges[p - 1]);
  auto bRel = A.unary_rel("B");
  for (int i = bRel.next(0); i != -1; i = bRel.next(i + 1))
    if (!blueNames.count(A.name_of(i)))
      flag("stray blue edge " + A.name_of(i));
  // Interval colours: monochromatic, a coloured prefix, C0/C1 disjoint.
  auto ivs = simple_intervals(cert);
  std::set<std::string> coloured;
  int lastColoured = 0;
  for (int j = 0; j < (int)ivs.size(); ++j) {
    int c0 = 0, c1 = 0;
    for (auto& v : ivs[j]) {
      if (pwdetail::in_rel(A, "C0", v)) ++c0;
      if (pwdetail::in_rel(A, "C1", v)) ++c1;
    }
    int n = (int)ivs[j].size();
    bool full0 = (c0 == n && c1 == 0), full1 = (c1 == n && c0 == 0);
    bool none = (c0 == 0 && c1 == 0);
    if (!full0 && !full1 && !none)
      flag("interval " + std::to_string(j + 1) + " is not monochromatic");
    if (full0 || full1) {
      if (lastColoured != j)
        flag("coloured intervals do not form a prefix");
      lastColoured = j + 1;
      for (auto& v : ivs[j]) coloured.insert(v);
    }
  }
  for (auto rel : {"C0", "C1"}) {
    auto bs = A.unary_rel(rel);
    for (int i = bs.next(0); i != -1; i = bs.next(i + 1))
      if (!coloured.count(A.name_of(i)))
        flag(std::string("stray coloured vertex ") + A.name_of(i));
  }
  // Links: one per interval pair, disjoint, endpoints in the right intervals.
  if ((int)cert.links.size() != h)
    flag("expected " + std::to_string(h) + " links, found " +
         std::to_string(cert.links.size()));
  std::set<std::string> usedVerts;
  for (auto& [pr, path] : cert.links) {
    auto [a, b] = pr;
    std::string tag =
        "link {" + std::to_string(a) + "," + std::to_string(b) + "}";
    if (a < 1 || b <= a || b > k) {
      flag(tag + " has a bad interval pair");
      continue;
    }
    if (!pwdetail::alt_path_ok(A, path, err)) {
      flag(tag + " is not a path: " + err);
      continue;
    }
    auto inIv = [&](int j, const std::string& v) {
      auto& iv = ivs[j - 1];
      return std::find(iv.begin(), iv.end(), v) != iv.end();
    };
    bool fwd = inIv(a, path.front()) && inIv(b, path.back());
    bool rev = inIv(b, path.front()) && inIv(a, path.back());
    if (!fwd && !rev) flag(tag + " endpoints miss their intervals");
    for (auto& v : pwdetail::seq_vertices(path))
      if (!usedVerts.insert(v).second) flag(tag + " reuses vertex " + v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Complex pseudo-wall verifier.

// Branch sets induced by a topological embedding: each branch vertex plus
// the nearer half of the interior of every incident subdivision path.
inline std::map<int, std::set<std::string>> embedding_branch_sets(
    const ComplexPWCert::NamedEmbedding& emb) {
  std::map<int, std::set<std::string>> out;
  for (auto& [t, v] : emb.branchVertices) out[t].insert(v);
  for (auto& [pr, path] : emb.pathMap) {
    auto [u, v] = pr;
    int interior = (int)path.size() - 2;
    int toU = (interior + 1) / 2;
    for (int i = 1; i + 1 < (int)path.size(); ++i)
      out[i <= toU ? u : v].insert(path[i]);
  }
  return out;
}

inline std::vector<std::string> verify_complex(const Structure& A,
                                               const ComplexPWCert& cert) {
  std::vector<std::string> out;
  auto flag = [&](const std::string& m) { out.push_back(m); };
  std::string err;
  if (!pwdetail::alt_path_ok(A, cert.L, err)) {
    flag("L is not a path: " + err);
    return out;
  }
  auto edges = pwdetail::seq_edges(cert.L);
  auto verts = pwdetail::seq_vertices(cert.L);
  if (edges.empty()) {
    flag("L has no edges");
    return out;
  }
  auto bRel = A.unary_rel("B");
  if (bRel.count() != 1 || !pwdetail::in_rel(A, "B", edges.front()))
    flag("B must colour exactly the first edge of L");
  for (size_t p = 1; p < edges.size(); ++p)
    if (!pwdetail::in_rel(A, "R", edges[p]) ||
        pwdetail::in_rel(A, "B", edges[p]))
      flag("edge at position " + std::to_string(p + 1) + " should be red");
  // Path families: alternating paths, disjoint within each family.
  std::set<std::string> lverts(verts.begin(), verts.end());
  auto checkFamily = [&](const std::vector<std::vector<std::string>>& fam,
                         const std::string& name) {
    std::set<std::string> seen;
    for (size_t i = 0; i < fam.size(); ++i) {
      if (!pwdetail::alt_path_ok(A, fam[i], err)) {
        flag(name + std::to_string(i + 1) + " is not a path: " + err);
        continue;
      }
      for (auto& v : pwdetail::seq_vertices(fam[i]))
        if (!seen.insert(v).second)
          flag("paths within family " + name + " share vertex " + v);
    }
  };
  checkFamily(cert.P, "P");
  checkFamily(cert.Q, "Q");
  // Every P-path meets L in exactly one endpoint of itself.
  std::map<std::string, int> endpointOf;  // L vertex -> P index
  for (size_t i = 0; i < cert.P.size(); ++i) {
    auto vs = pwdetail::seq_vertices(cert.P[i]);
    std::vector<std::string> common;
    for (auto& v : vs)
      if (lverts.count(v)) common.push_back(v);
    if (common.size() != 1 ||
        (common[0] != vs.front() && common[0] != vs.back()))
      flag("P" + std::to_string(i + 1) +
           " does not meet L in exactly one of its endpoints");
    else
      endpointOf[common[0]] = (int)i;
  }
  // Colours: C0/C1 disjoint, exactly the listed vertices, all on L,
  // listed in L order from the blue end.
  std::set<std::string> listed(cert.colouredVertices.begin(),
                               cert.colouredVertices.end());
  std::set<std::string> actual;
  for (auto rel : {"C0", "C1"}) {
    auto bs = A.unary_rel(rel);
    for (int i = bs.next(0); i != -1; i = bs.next(i + 1)) {
      if (!actual.insert(A.name_of(i)).second)
        flag("vertex " + A.name_of(i) + " is in both C0 and C1");
    }
  }
  if (actual != listed) flag("coloured vertices do not match C0 and C1");
  std::map<std::string, int> lpos;
  for (size_t i = 0; i < verts.size(); ++i) lpos[verts[i]] = (int)i;
  int prev = -1;
  for (auto& v : cert.colouredVertices) {
    if (!lpos.count(v)) {
      flag("coloured vertex " + v + " is not on L");
      continue;
    }
    if (lpos[v] <= prev) flag("coloured vertices out of L order");
    prev = lpos[v];
  }
  // The clique embedding lives in the intersection graph of (P, Q).
  SimpleGraph host = graph_of(A);
  PathSystem ps, qs;
  for (auto& p : cert.P) {
    std::vector<int> ids;
    for (auto& v : pwdetail::seq_vertices(p)) ids.push_back(host.index_of(v));
    ps.paths.push_back(ids);
  }
  for (auto& q : cert.Q) {
    std::vector<int> ids;
    for (auto& v : pwdetail::seq_vertices(q)) ids.push_back(host.index_of(v));
    qs.paths.push_back(ids);
  }
  SimpleGraph ig;
  try {
    ig = graph_of(intersection_graph_of_paths(host, ps, qs));
  } catch (const Error& e) {
    flag(std::string("intersection graph: ") + e.what());
    return out;
  }
  int q = cert.cliqueOrder;
  if (q < 1) {
    flag("clique order must be positive");
    return out;
  }
  TopologicalEmbedding emb;
  bool embOk = true;
  for (int t = 0; t < q; ++t) {
    auto it = cert.cliqueEmbedding.branchVertices.find(t);
    if (it == cert.cliqueEmbedding.branchVertices.end()) {
      flag("missing branch vertex " + std::to_string(t));
      embOk = false;
      continue;
    }
    try {
      emb.branchVertices[t] = ig.index_of(it->second);
    } catch (const Error&) {
      flag("unknown intersection-graph vertex " + it->second);
      embOk = false;
    }
  }
  if (!embOk) return out;
  for (auto& [pr, path] : cert.cliqueEmbedding.pathMap) {
    std::vector<int> ids;
    for (auto& n : path) {
      try {
        ids.push_back(ig.index_of(n));
      } catch (const Error&) {
        flag("unknown intersection-graph vertex " + n);
        return out;
      }
    }
    emb.pathMap[pr] = ids;
  }
  SimpleGraph kq = graph_of(generate_clique(std::max(q, 1)));
  if (!verify_topological_embedding(ig, kq, emb))
    flag("clique embedding is not a topological K_" + std::to_string(q));
  // Each coloured vertex's incident P-path lies in a distinct branch set.
  auto sets = embedding_branch_sets(cert.cliqueEmbedding);
  std::set<int> usedSets;
  for (auto& u : cert.colouredVertices) {
    auto it = endpointOf.find(u);
    if (it == endpointOf.end()) {
      flag("coloured vertex " + u + " has no incident P-path");
      continue;
    }
    std::string pname = "P" + std::to_string(it->second + 1);
    int home = -1;
    for (auto& [t, set] : sets)
      if (set.count(pname)) home = t;
    if (home == -1)
      flag("path " + pname + " of coloured vertex " + u +
           " lies in no branch set");
    else if (!usedSets.insert(home).second)
      flag("two coloured vertices share branch set " + std::to_string(home));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoded words.

inline std::string encoded_word(const Structure& A, const SimplePWCert& cert) {
  auto bad = verify_simple(A, cert);
  if (!bad.empty()) throw Error("certificate does not verify: " + bad.front());
  std::string w;
  for (auto& iv : simple_intervals(cert)) {
    if (pwdetail::in_rel(A, "C1", iv.front())) w += '1';
    else if (pwdetail::in_rel(A, "C0", iv.front())) w += '0';
    else break;
  }
  return w;
}

inline std::string encoded_word(const Structure& A, const ComplexPWCert& cert) {
  auto bad = verify_complex(A, cert);
  if (!bad.empty()) throw Error("certificate does not verify: " + bad.front());
  std::string w;
  for (auto& v : cert.colouredVertices)
    w += pwdetail::in_rel(A, "C1", v) ? '1' : '0';
  return w;
}

// ---------------------------------------------------------------------------
// Tree-width threshold: smallest tw with (tw / sqrt(log2 tw))^(1/3) >= c*m^7+1.

inline long double required_treewidth_ld(int m, double c = 1.0) {
  if (m < 1) throw Error("m must be >= 1");
  long double target = c;
  for (int i = 0; i < 7; ++i) target *= m;
  target += 1;
  long double goal = target * target * target;  // tw / sqrt(log2 tw) >= goal
  auto f = [](long double t) { return t / sqrtl(log2l(t)); };
  long double lo = 2, hi = 4;
  while (f(hi) < goal) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    long double mid = (lo + hi) / 2;
    if (f(mid) >= goal) hi = mid;
    else lo = mid;
  }
  return ceill(hi);
}

inline unsigned long long required_treewidth(int m, double c = 1.0) {
  long double t = required_treewidth_ld(m, c);
  if (t >= 1.8e19L) throw Error("required tree-width exceeds 64 bits");
  unsigned long long r = (unsigned long long)t;
  // The bisection may land one off; settle exactly on integers.
  auto ok = [&](unsigned long long x) {
    long double target = c;
    for (int i = 0; i < 7; ++i) target *= m;
    target += 1;
    long double v = (long double)x / sqrtl(log2l((long double)x));
    return v >= target * target * target;
  };
  while (r > 2 && ok(r - 1)) --r;
  while (!ok(r)) ++r;
  return r;
}

// ---------------------------------------------------------------------------
// The builder.

struct PWBuildOptions {
  double d = 1.0;   // average-degree constant of the branch test
  int cliqueCap = 5;  // search cap for topological cliques
  int order = 0;      // wall order; 0 means the word length
};

struct PWBuildResult {
  Structure expansion;  // sigma_col expansion of the input graph
  bool simple = true;
  SimplePWCert simpleCert;
  ComplexPWCert complexCert;
  std::string word;
};

namespace pwdetail {

inline std::string edge_name(const Structure& G, const std::string& u,
                             const std::string& v) {
  int e = G.edge_between(G.index_of(u), G.index_of(v));
  if (e == -1) throw Error("no edge between " + u + " and " + v);
  return G.name_of(e);
}

inline std::vector<std::string> alternating(const Structure& G,
                                            const SimpleGraph& g,
                                            const std::vector<int>& vids) {
  std::vector<std::string> seq;
  for (size_t i = 0; i < vids.size(); ++i) {
    if (i > 0)
      seq.push_back(edge_name(G, g.names[vids[i - 1]], g.names[vids[i]]));
    seq.push_back(g.names[vids[i]]);
  }
  return seq;
}

// Segmentation of the hitting-path tail: each segment is the minimal prefix
// whose freshly hit sub-bramble has order >= k, padded to two vertices so
// that consecutive blue edges never touch.
inline std::vector<std::vector<int>> segment_tail(const SimpleGraph& g,
                                                  const Bramble& br,
                                                  const std::vector<int>& tail,
                                                  int reserved, int k, int m) {
  std::vector<char> gone(br.elements.size(), 0);
  for (size_t e = 0; e < br.elements.size(); ++e)
    if (std::find(br.elements[e].begin(), br.elements[e].end(), reserved) !=
        br.elements[e].end())
      gone[e] = 1;
  std::vector<std::vector<int>> segs;
  size_t at = 0;
  for (int s = 0; s < m; ++s) {
    std::vector<int> cur;
    Bramble hit;
    bool done = false;
    while (at < tail.size() && !done) {
      cur.push_back(tail[at]);
      for (size_t e = 0; e < br.elements.size(); ++e) {
        if (gone[e]) continue;
        if (std::find(br.elements[e].begin(), br.elements[e].end(),
                      tail[at]) != br.elements[e].end()) {
          gone[e] = 1;
          hit.elements.push_back(br.elements[e]);
        }
      }
      ++at;
      if (cur.size() >= 2 && !hit.elements.empty() &&
          bramble_order_at_least(g, hit, k))
        done = true;
    }
    if (!done) throw Error("bramble order insufficient for segmentation");
    segs.push_back(cur);
  }
  return segs;
}

}  // namespace pwdetail

// Assembles a complex pseudo-wall from prepared parts: a path L (vertex ids
// in g), two path families over g, and a clique order q.  Searches the
// topological clique in the intersection graph, orders the branch sets along
// L and colours one vertex per branch set according to w.
inline PWBuildResult build_complex_pseudo_wall(
    const Structure& G, const std::string& w, const std::vector<int>& L,
    const PathSystem& P, const PathSystem& Q, int q,
    const PWBuildOptions& opt = {}) {
  SimpleGraph g = graph_of(G);
  SimpleGraph ig = graph_of(intersection_graph_of_paths(g, P, Q));
  auto found = find_topological_clique(ig, q, opt.cliqueCap);
  if (!found)
    throw Error("no topological clique of order " + std::to_string(q) +
                " in the intersection graph");
  // Positions along L, from the blue end.
  std::map<int, int> lpos;
  for (size_t i = 0; i < L.size(); ++i) lpos[L[i]] = (int)i;
  // Endpoint of each P-path on L.
  std::vector<int> pEnd(P.paths.size(), -1);
  for (size_t t = 0; t < P.paths.size(); ++t) {
    int cnt = 0;
    for (int v : P.paths[t])
      if (lpos.count(v)) {
        pEnd[t] = v;
        ++cnt;
      }
    if (cnt != 1 ||
        (pEnd[t] != P.paths[t].front() && pEnd[t] != P.paths[t].back()))
      throw Error("P" + std::to_string(t + 1) +
                  " does not meet L in exactly one of its endpoints");
  }
  // Name-based embedding and its branch sets.
  ComplexPWCert cert;
  for (auto& [t, v] : found->branchVertices)
    cert.cliqueEmbedding.branchVertices[t] = ig.names[v];
  for (auto& [pr, path] : found->pathMap) {
    std::vector<std::string> named;
    for (int v : path) named.push_back(ig.names[v]);
    cert.cliqueEmbedding.pathMap[pr] = named;
  }
  auto sets = embedding_branch_sets(cert.cliqueEmbedding);
  // Smallest L-endpoint of a P-path inside each branch set.
  std::vector<std::pair<int, int>> ordered;  // (L position, set id)
  for (auto& [t, set] : sets) {
    int best = -1;
    for (size_t pi = 0; pi < P.paths.size(); ++pi)
      if (set.count("P" + std::to_string(pi + 1)))
        if (best == -1 || lpos[pEnd[pi]] < best) best = lpos[pEnd[pi]];
    if (best == -1)
      throw Error("branch set " + std::to_string(t) + " contains no P-path");
    ordered.push_back({best, t});
  }
  std::sort(ordered.begin(), ordered.end());
  if ((int)w.size() > q)
    throw Error("word longer than the clique order");
  std::map<std::string, std::set<std::string>> assign;
  for (size_t i = 0; i < w.size(); ++i) {
    std::string v = g.names[L[(size_t)ordered[i].first]];
    assign[w[i] == '1' ? "C1" : "C0"].insert(v);
    cert.colouredVertices.push_back(v);
  }
  assign["B"].insert(pwdetail::edge_name(G, g.names[L[0]], g.names[L[1]]));
  for (size_t i = 1; i + 1 < L.size(); ++i)
    assign["R"].insert(
        pwdetail::edge_name(G, g.names[L[i]], g.names[L[i + 1]]));
  PWBuildResult res;
  res.expansion = colour_expand(G, assign);
  res.simple = false;
  cert.L = pwdetail::alternating(G, g, L);
  for (auto& p : P.paths) cert.P.push_back(pwdetail::alternating(G, g, p));
  for (auto& p : Q.paths) cert.Q.push_back(pwdetail::alternating(G, g, p));
  cert.cliqueOrder = q;
  cert.order = q;
  res.complexCert = cert;
  res.word = w;
  return res;
}

// Theorem-style builder: hitting path, reserved endpoint edge, segments with
// link systems, then the degeneracy branch test deciding between the simple
// and the complex construction.
inline PWBuildResult build_pseudo_wall(const Structure& G, const std::string& w,
                                       const Bramble& br,
                                       const PWBuildOptions& opt = {}) {
  if (w.empty()) throw Error("word must be nonempty");
  for (char ch : w)
    if (ch != '0' && ch != '1') throw Error("word alphabet is {0,1}");
  int m = opt.order > 0 ? opt.order : (int)w.size();
  if (m < (int)w.size()) throw Error("order smaller than the word");
  SimpleGraph g = graph_of(G);
  int h = m * (m - 1) / 2;
  int k = (int)std::llround(h * (h - 1) * opt.d * m * m) + 1;
  if (!bramble_order_at_least(g, br, k * m + 1))
    throw Error("bramble order insufficient: need at least " +
                std::to_string(k * m + 1));
  auto A = hitting_path(g, br);
  if (A.size() < 2) throw Error("hitting path too short");
  int reserved = A[0];
  std::vector<int> tail(A.begin() + 1, A.end());
  auto segs = pwdetail::segment_tail(g, br, tail, reserved, k, m);
  // Pairwise link systems.
  std::map<std::pair<int, int>, PathSystem> links;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      auto sys = max_disjoint_paths(g, segs[i], segs[j]);
      if ((int)sys.paths.size() < k) throw Error("link system smaller than k");
      sys.paths.resize(k);
      links[{i, j}] = sys;
    }
  // Branch test over distinct pairs of link systems.
  std::vector<std::pair<int, int>> prs;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) prs.push_back({i, j});
  double threshold = opt.d * m * m;
  for (size_t x = 0; x < prs.size(); ++x)
    for (size_t y = 0; y < prs.size(); ++y) {
      if (x == y) continue;
      auto H =
          graph_of(intersection_graph_of_paths(g, links[prs[x]], links[prs[y]]));
      if (degeneracy(H) >= threshold) {
        // Complex branch: L is the first segment of the witnessing pair.
        return build_complex_pseudo_wall(G, w, segs[prs[x].first],
                                         links[prs[x]], links[prs[y]], m, opt);
      }
    }
  // Simple branch.  One disjoint link per interval pair via the greedy
  // transversal over the intersection graph of all link systems.
  std::map<std::pair<int, int>, std::vector<int>> chosen;
  if (m >= 2) {
    SimpleGraph big;
    std::vector<std::vector<int>> classes;
    std::vector<std::pair<std::pair<int, int>, int>> owner;
    for (auto& pr : prs) {
      std::vector<int> cls;
      for (size_t t = 0; t < links[pr].paths.size(); ++t) {
        int vid = big.add_vertex("q_" + std::to_string(pr.first) + "_" +
                                 std::to_string(pr.second) + "_" +
                                 std::to_string(t));
        cls.push_back(vid);
        owner.push_back({pr, (int)t});
      }
      classes.push_back(cls);
    }
    for (int a = 0; a < big.n(); ++a)
      for (int b = a + 1; b < big.n(); ++b) {
        auto& pa = links[owner[a].first].paths[owner[a].second];
        auto& pb = links[owner[b].first].paths[owner[b].second];
        std::set<int> va(pa.begin(), pa.end());
        bool meets = false;
        for (int v : pb)
          if (va.count(v)) meets = true;
        if (meets) big.add_edge(a, b);
      }
    big.finish();
    auto picks = greedy_independent_transversal(
        big, classes, (int)std::llround(threshold));
    for (int v : picks)
      chosen[owner[v].first] = links[owner[v].first].paths[owner[v].second];
  }
  // The long path: reserved vertex + all segments, blue edges between them.
  std::vector<int> L{reserved};
  std::vector<int> blueIdx{1};
  for (int i = 0; i < m; ++i) {
    if (i > 0) blueIdx.push_back((int)L.size());
    for (int v : segs[i]) L.push_back(v);
  }
  std::map<std::string, std::set<std::string>> assign;
  std::set<int> bluePos(blueIdx.begin(), blueIdx.end());
  for (size_t i = 0; i + 1 < L.size(); ++i) {
    std::string e =
        pwdetail::edge_name(G, g.names[L[i]], g.names[L[i + 1]]);
    assign[bluePos.count((int)i + 1) ? "B" : "R"].insert(e);
  }
  for (int i = 0; i < (int)w.size(); ++i)
    for (int v : segs[i])
      assign[w[i] == '1' ? "C1" : "C0"].insert(g.names[v]);
  PWBuildResult res;
  res.expansion = colour_expand(G, assign);
  res.simple = true;
  res.word = w;
  SimplePWCert cert;
  cert.L = pwdetail::alternating(G, g, L);
  cert.blueIdx = blueIdx;
  cert.order = m;
  for (auto& [pr, path] : chosen)
    cert.links[{pr.first + 1, pr.second + 1}] =
        pwdetail::alternating(G, g, path);
  res.simpleCert = cert;
  return res;
}

// ---------------------------------------------------------------------------
// Certificate serialization, in the structure format's line-oriented style.

inline std::string write_simple_cert(const SimplePWCert& cert) {
  std::ostringstream o;
  o << "simple-pseudo-wall\n";
  o << "order: " << cert.order << "\n";
  o << "L:";
  for (auto& t : cert.L) o << " " << t;
  o << "\nblue:";
  for (int i : cert.blueIdx) o << " " << i;
  o << "\n";
  for (auto& [pr, path] : cert.links) {
    o << "link " << pr.first << " " << pr.second << ":";
    for (auto& t : path) o << " " << t;
    o << "\n";
  }
  return o.str();
}

inline std::string write_complex_cert(const ComplexPWCert& cert) {
  std::ostringstream o;
  o << "complex-pseudo-wall\n";
  o << "order: " << cert.order << "\n";
  o << "clique-order: " << cert.cliqueOrder << "\n";
  o << "L:";
  for (auto& t : cert.L) o << " " << t;
  o << "\n";
  for (auto& p : cert.P) {
    o << "P:";
    for (auto& t : p) o << " " << t;
    o << "\n";
  }
  for (auto& q : cert.Q) {
    o << "Q:";
    for (auto& t : q) o << " " << t;
    o << "\n";
  }
  o << "coloured:";
  for (auto& v : cert.colouredVertices) o << " " << v;
  o << "\n";
  for (auto& [t, v] : cert.cliqueEmbedding.branchVertices)
    o << "branch " << t << ": " << v << "\n";
  for (auto& [pr, path] : cert.cliqueEmbedding.pathMap) {
    o << "clique-path " << pr.first << " " << pr.second << ":";
    for (auto& t : path) o << " " << t;
    o << "\n";
  }
  return o.str();
}

namespace pwdetail {

struct CertLines {
  std::vector<std::pair<int, std::vector<std::string>>> rows;  // line no + tokens
};

inline CertLines tokenize_cert(const std::string& text) {
  CertLines out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string t;
    while (ls >> t) toks.push_back(t);
    if (!toks.empty()) out.rows.push_back({lineno, toks});
  }
  return out;
}

[[noreturn]] inline void cert_fail(int line, const std::string& m) {
  throw Error("certificate parse error at line " + std::to_string(line) +
              ": " + m);
}

}  // namespace pwdetail

inline SimplePWCert read_simple_cert(const std::string& text) {
  auto rows = pwdetail::tokenize_cert(text).rows;
  if (rows.empty() || rows[0].second != std::vector<std::string>{
                                            "simple-pseudo-wall"})
    throw Error("certificate parse error: missing simple-pseudo-wall header");
  SimplePWCert cert;
  for (size_t i = 1; i < rows.size(); ++i) {
    auto& [ln, toks] = rows[i];
    if (toks[0] == "order:" && toks.size() == 2) {
      cert.order = std::stoi(toks[1]);
    } else if (toks[0] == "L:") {
      cert.L.assign(toks.begin() + 1, toks.end());
    } else if (toks[0] == "blue:") {
      for (size_t t = 1; t < toks.size(); ++t)
        cert.blueIdx.push_back(std::stoi(toks[t]));
    } else if (toks[0] == "link" && toks.size() >= 3 && toks[2].back() == ':') {
      int a = std::stoi(toks[1]);
      int b = std::stoi(toks[2].substr(0, toks[2].size() - 1));
      cert.links[{a, b}] =
          std::vector<std::string>(toks.begin() + 3, toks.end());
    } else {
      pwdetail::cert_fail(ln, "unexpected '" + toks[0] + "'");
    }
  }
  return cert;
}

inline ComplexPWCert read_complex_cert(const std::string& text) {
  auto rows = pwdetail::tokenize_cert(text).rows;
  if (rows.empty() || rows[0].second != std::vector<std::string>{
                                            "complex-pseudo-wall"})
    throw Error("certificate parse error: missing complex-pseudo-wall header");
  ComplexPWCert cert;
  for (size_t i = 1; i < rows.size(); ++i) {
    auto& [ln, toks] = rows[i];
    if (toks[0] == "order:" && toks.size() == 2) {
      cert.order = std::stoi(toks[1]);
    } else if (toks[0] == "clique-order:" && toks.size() == 2) {
      cert.cliqueOrder = std::stoi(toks[1]);
    } else if (toks[0] == "L:") {
      cert.L.assign(toks.begin() + 1, toks.end());
    } else if (toks[0] == "P:") {
      cert.P.push_back({toks.begin() + 1, toks.end()});
    } else if (toks[0] == "Q:") {
      cert.Q.push_back({toks.begin() + 1, toks.end()});
    } else if (toks[0] == "coloured:") {
      cert.colouredVertices.assign(toks.begin() + 1, toks.end());
    } else if (toks[0] == "branch" && toks.size() == 3 &&
               toks[1].back() == ':') {
      cert.cliqueEmbedding
          .branchVertices[std::stoi(toks[1].substr(0, toks[1].size() - 1))] =
          toks[2];
    } else if (toks[0] == "clique-path" && toks.size() >= 3 &&
               toks[2].back() == ':') {
      int a = std::stoi(toks[1]);
      int b = std::stoi(toks[2].substr(0, toks[2].size() - 1));
      cert.cliqueEmbedding.pathMap[{a, b}] =
          std::vector<std::string>(toks.begin() + 3, toks.end());
    } else {
      pwdetail::cert_fail(ln, "unexpected '" + toks[0] + "'");
    }
  }
  return cert;
}

}  // namespace msow
