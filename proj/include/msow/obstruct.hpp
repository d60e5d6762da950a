#pragma once

#include <algorithm>
#include <climits>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "msow/graph.hpp"
#include "msow/structure.hpp"

// Tree-width machinery and the combinatorial subroutines feeding the
// pseudo-wall builder: decompositions, brambles, hitting paths, disjoint
// path systems, intersection graphs, degeneracy, independent transversals,
// topological cliques and minor images.  All vertex arguments are indices
// into a SimpleGraph.

namespace msow {

// ---------------------------------------------------------------------------
// Certificate types.

struct TreeDecomposition {
  std::vector<std::pair<int, int>> tree;  // edges between bag ids
  std::vector<std::vector<int>> bags;     // bag id -> sorted vertex ids

  int width() const {
    int w = -1;
    for (auto& b : bags) w = std::max(w, (int)b.size() - 1);
    return w;
  }
};

struct Bramble {
  std::vector<std::vector<int>> elements;  // each sorted
};

struct PathSystem {
  std::vector<std::vector<int>> paths;  // vertex sequences
};

struct MinorImage {
  std::map<int, std::vector<int>> branchSets;           // pattern vertex -> host set
  std::map<std::pair<int, int>, std::pair<int, int>> edgeMap;  // pattern edge -> host edge
};

struct TopologicalEmbedding {
  std::map<int, int> branchVertices;                      // pattern vertex -> host vertex
  std::map<std::pair<int, int>, std::vector<int>> pathMap;  // pattern edge -> host path
};

// ---------------------------------------------------------------------------
// Small helpers.

namespace gdetail {

inline bool is_path_in(const SimpleGraph& g, const std::vector<int>& p) {
  if (p.empty()) return false;
  std::set<int> seen;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0 || p[i] >= g.n()) return false;
    if (!seen.insert(p[i]).second) return false;
    if (i > 0 && !g.has_edge(p[i - 1], p[i])) return false;
  }
  return true;
}

inline bool connected_in(const SimpleGraph& g, const std::vector<int>& vs) {
  if (vs.empty()) return false;
  std::set<int> in(vs.begin(), vs.end());
  std::set<int> seen{vs[0]};
  std::queue<int> q;
  q.push(vs[0]);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : g.adj[u])
      if (in.count(v) && !seen.count(v)) {
        seen.insert(v);
        q.push(v);
      }
  }
  return seen.size() == in.size();
}

inline bool touch(const SimpleGraph& g, const std::vector<int>& a,
                  const std::vector<int>& b) {
  std::set<int> inA(a.begin(), a.end());
  for (int v : b)
    if (inA.count(v)) return true;
  for (int u : a)
    for (int v : b)
      if (g.has_edge(u, v)) return true;
  return false;
}

// Shortest path from `from` to any vertex of `goal`, internal vertices
// avoiding `blocked`; among equally short paths the lexicographically
// smallest vertex-name sequence.  Empty result if unreachable.
inline std::vector<int> lex_shortest_to(const SimpleGraph& g, int from,
                                        const std::set<int>& goal,
                                        const std::set<int>& blocked) {
  if (goal.count(from)) return {from};
  std::vector<int> dist(g.n(), -1), par(g.n(), -1);
  dist[from] = 0;
  std::queue<int> q;
  q.push(from);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : g.adj[u]) {
      if (blocked.count(v) && !goal.count(v)) continue;
      if (dist[v] == -1) {
        dist[v] = dist[u] + 1;
        par[v] = u;
        q.push(v);
      } else if (dist[v] == dist[u] + 1 &&
                 g.names[u] < g.names[par[v]]) {
        par[v] = u;  // keep the lexicographically smallest parent
      }
    }
  }
  int best = -1;
  for (int t : goal)
    if (dist[t] != -1 &&
        (best == -1 || dist[t] < dist[best] ||
         (dist[t] == dist[best] && g.names[t] < g.names[best])))
      best = t;
  if (best == -1) return {};
  std::vector<int> path;
  for (int v = best; v != -1; v = par[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace gdetail

// ---------------------------------------------------------------------------
// Tree decompositions.

inline bool verify_tree_decomposition(const SimpleGraph& g,
                                      const TreeDecomposition& td) {
  int b = (int)td.bags.size();
  if (b == 0) return g.n() == 0;
  // The tree must be a tree over the bag ids.
  std::vector<std::vector<int>> tadj(b);
  for (auto& [x, y] : td.tree) {
    if (x < 0 || x >= b || y < 0 || y >= b || x == y) return false;
    tadj[x].push_back(y);
    tadj[y].push_back(x);
  }
  if ((int)td.tree.size() != b - 1) return false;
  std::vector<int> seen(b, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int cnt = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : tadj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++cnt;
        q.push(v);
      }
  }
  if (cnt != b) return false;
  // Every vertex: nonempty, connected trace.
  for (int v = 0; v < g.n(); ++v) {
    std::vector<int> host;
    for (int t = 0; t < b; ++t)
      if (std::binary_search(td.bags[t].begin(), td.bags[t].end(), v))
        host.push_back(t);
    if (host.empty()) return false;
    std::set<int> in(host.begin(), host.end()), got{host[0]};
    std::queue<int> bq;
    bq.push(host[0]);
    while (!bq.empty()) {
      int u = bq.front();
      bq.pop();
      for (int w : tadj[u])
        if (in.count(w) && !got.count(w)) {
          got.insert(w);
          bq.push(w);
        }
    }
    if (got.size() != in.size()) return false;
  }
  // Every edge covered.
  for (auto& [u, v] : g.edges) {
    bool cov = false;
    for (auto& bag : td.bags)
      if (std::binary_search(bag.begin(), bag.end(), u) &&
          std::binary_search(bag.begin(), bag.end(), v)) {
        cov = true;
        break;
      }
    if (!cov) return false;
  }
  return true;
}

struct TreewidthResult {
  int width = -1;
  TreeDecomposition decomposition;
};

// Exact tree-width by dynamic programming over elimination orderings
// (subset DP on the set of already-eliminated vertices).
inline TreewidthResult treewidth_exact(const SimpleGraph& g, int cap = 12) {
  int n = g.n();
  if (n > cap)
    throw Error("treewidth cap exceeded: " + std::to_string(n) +
                " vertices, cap " + std::to_string(cap));
  TreewidthResult res;
  if (n == 0) {
    res.width = -1;
    res.decomposition.bags.push_back({});
    return res;
  }
  // q(S, v) = vertices outside S+{v} reachable from v through S.
  auto qdeg = [&](unsigned S, int v) {
    unsigned seen = 1u << v;
    std::vector<int> stk{v};
    int out = 0;
    while (!stk.empty()) {
      int u = stk.back();
      stk.pop_back();
      for (int w : g.adj[u]) {
        if (seen & (1u << w)) continue;
        seen |= 1u << w;
        if (S & (1u << w)) stk.push_back(w);
        else ++out;
      }
    }
    return out;
  };
  unsigned full = (n == 32) ? 0xffffffffu : ((1u << n) - 1);
  std::vector<int> dp(full + 1, INT_MAX), pick(full + 1, -1);
  dp[0] = 0;
  for (unsigned S = 1; S <= full; ++S) {
    for (int v = 0; v < n; ++v) {
      if (!(S & (1u << v))) continue;
      unsigned P = S & ~(1u << v);
      if (dp[P] == INT_MAX) continue;
      int cost = std::max(dp[P], qdeg(P, v));
      if (cost < dp[S] || (cost == dp[S] && pick[S] != -1 && v < pick[S])) {
        dp[S] = cost;
        pick[S] = v;
      }
    }
  }
  res.width = dp[full];
  // Recover the elimination order, then build bags along the fill-in graph.
  std::vector<int> order;
  unsigned S = full;
  while (S) {
    order.push_back(pick[S]);
    S &= ~(1u << pick[S]);
  }
  std::reverse(order.begin(), order.end());  // order[i] eliminated i-th
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[order[i]] = i;
  std::vector<std::set<int>> fill(n);
  for (auto& [u, v] : g.edges) {
    fill[u].insert(v);
    fill[v].insert(u);
  }
  std::vector<std::vector<int>> later(n);  // higher neighbours at elimination
  for (int i = 0; i < n; ++i) {
    int v = order[i];
    std::vector<int> hi;
    for (int u : fill[v])
      if (pos[u] > i) hi.push_back(u);
    later[v] = hi;
    for (int a : hi)
      for (int b : hi)
        if (a != b) fill[a].insert(b);
  }
  TreeDecomposition& td = res.decomposition;
  td.bags.resize(n);
  for (int v = 0; v < n; ++v) {
    td.bags[v] = later[v];
    td.bags[v].push_back(v);
    std::sort(td.bags[v].begin(), td.bags[v].end());
  }
  for (int i = 0; i < n; ++i) {
    int v = order[i];
    if (later[v].empty()) {
      // Attach roots of later components to the final bag for a single tree.
      if (v != order[n - 1]) td.tree.push_back({v, order[n - 1]});
      continue;
    }
    int parent = *std::min_element(
        later[v].begin(), later[v].end(),
        [&](int a, int b) { return pos[a] < pos[b]; });
    td.tree.push_back({v, parent});
  }
  return res;
}

// ---------------------------------------------------------------------------
// Brambles.

inline bool verify_bramble(const SimpleGraph& g, const Bramble& br) {
  for (auto& el : br.elements)
    if (!gdetail::connected_in(g, el)) return false;
  for (size_t i = 0; i < br.elements.size(); ++i)
    for (size_t j = i + 1; j < br.elements.size(); ++j)
      if (!gdetail::touch(g, br.elements[i], br.elements[j])) return false;
  return true;
}

namespace gdetail {

inline void hitting_bb(const std::vector<std::vector<int>>& elems,
                       std::set<int>& chosen, size_t next, int& best) {
  if ((int)chosen.size() >= best) return;
  while (next < elems.size()) {
    bool hit = false;
    for (int v : elems[next])
      if (chosen.count(v)) {
        hit = true;
        break;
      }
    if (!hit) break;
    ++next;
  }
  if (next == elems.size()) {
    best = (int)chosen.size();
    return;
  }
  for (int v : elems[next]) {
    chosen.insert(v);
    hitting_bb(elems, chosen, next + 1, best);
    chosen.erase(v);
  }
}

}  // namespace gdetail

// Exact minimum size of a vertex set meeting every element.
inline int bramble_order(const SimpleGraph& g, const Bramble& br) {
  (void)g;
  for (auto& el : br.elements)
    if (el.empty()) throw Error("bramble element is empty");
  // Greedy upper bound, then branch and bound on the first uncovered element.
  std::set<int> greedy;
  for (auto& el : br.elements) {
    bool hit = false;
    for (int v : el)
      if (greedy.count(v)) hit = true;
    if (!hit) greedy.insert(el[0]);
  }
  int best = (int)greedy.size();
  std::set<int> chosen;
  gdetail::hitting_bb(br.elements, chosen, 0, best);
  return best;
}

// Threshold test: true when no vertex set of size < t meets every element.
// Unlike the exact order this only searches to depth t-1, so it stays cheap
// on large brambles.
inline bool bramble_order_at_least(const SimpleGraph& g, const Bramble& br,
                                   int t) {
  (void)g;
  for (auto& el : br.elements)
    if (el.empty()) throw Error("bramble element is empty");
  if (t <= 0) return true;
  int best = t;
  std::set<int> chosen;
  gdetail::hitting_bb(br.elements, chosen, 0, best);
  return best == t;
}

// The standard order-(k+1) bramble on the k x k grid: crosses inside the
// (k-1) x (k-1) subgrid, plus the last row and the last column minus its
// corner.  Vertex ids refer to graph_of(generate_grid(k, k)).
inline Bramble grid_crosses_bramble(int k, const SimpleGraph& g) {
  if (k < 2) throw Error("crosses bramble needs k >= 2");
  GridMeta m{k, k};
  auto id = [&](int i, int j) { return g.index_of(m.vertex(i, j)); };
  Bramble br;
  for (int i = 1; i <= k - 1; ++i)
    for (int j = 1; j <= k - 1; ++j) {
      std::vector<int> el;
      for (int y = 1; y <= k - 1; ++y) el.push_back(id(i, y));
      for (int x = 1; x <= k - 1; ++x)
        if (x != i) el.push_back(id(x, j));
      std::sort(el.begin(), el.end());
      br.elements.push_back(el);
    }
  std::vector<int> row, col;
  for (int j = 1; j <= k; ++j) row.push_back(id(k, j));
  for (int x = 1; x <= k - 1; ++x) col.push_back(id(x, k));
  std::sort(row.begin(), row.end());
  std::sort(col.begin(), col.end());
  br.elements.push_back(row);
  br.elements.push_back(col);
  return br;
}

// Greedy hitting path: cover the elements in lexicographic order, always
// extending the current endpoint by a shortest connector (lexicographic
// tie-break) that avoids the vertices already used.
inline std::vector<int> hitting_path(const SimpleGraph& g, const Bramble& br) {
  if (br.elements.empty()) throw Error("bramble is empty");
  auto key = [&](const std::vector<int>& el) {
    std::vector<std::string> names;
    for (int v : el) names.push_back(g.names[v]);
    std::sort(names.begin(), names.end());
    return names;
  };
  std::vector<size_t> order(br.elements.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return key(br.elements[a]) < key(br.elements[b]);
  });
  std::vector<int> path;
  std::set<int> used;
  auto covered = [&](size_t e) {
    for (int v : br.elements[e])
      if (used.count(v)) return true;
    return false;
  };
  for (size_t e : order) {
    if (covered(e)) continue;
    std::set<int> goal(br.elements[e].begin(), br.elements[e].end());
    if (path.empty()) {
      int start = *std::min_element(
          goal.begin(), goal.end(),
          [&](int a, int b) { return g.names[a] < g.names[b]; });
      path.push_back(start);
      used.insert(start);
      continue;
    }
    std::set<int> blocked(used.begin(), used.end());
    blocked.erase(path.back());
    auto ext = gdetail::lex_shortest_to(g, path.back(), goal, blocked);
    if (ext.empty() ||
        (ext.size() > 1 && used.count(ext.back())))
      throw Error("hitting path construction failed");
    for (size_t i = 1; i < ext.size(); ++i) {
      if (used.count(ext[i])) throw Error("hitting path construction failed");
      path.push_back(ext[i]);
      used.insert(ext[i]);
    }
  }
  return path;
}

// ---------------------------------------------------------------------------
// Disjoint paths and separators (unit vertex capacities).

namespace gdetail {

struct FlowNet {
  // Node 2v = v_in, 2v+1 = v_out; source = 2n, sink = 2n+1.
  int n = 0;
  std::vector<std::map<int, int>> cap;  // residual capacities

  explicit FlowNet(const SimpleGraph& g, const std::vector<int>& A,
                   const std::vector<int>& B) {
    n = g.n();
    cap.resize(2 * n + 2);
    int inf = n + 2;
    for (int v = 0; v < n; ++v) cap[2 * v][2 * v + 1] += 1;
    for (auto& [u, v] : g.edges) {
      cap[2 * u + 1][2 * v] += inf;
      cap[2 * v + 1][2 * u] += inf;
    }
    for (int a : A) cap[2 * n][2 * a] += inf;
    for (int b : B) cap[2 * b + 1][2 * n + 1] += inf;
  }

  bool augment() {
    int N = 2 * n + 2, s = 2 * n, t = 2 * n + 1;
    std::vector<int> par(N, -1);
    par[s] = s;
    std::queue<int> q;
    q.push(s);
    while (!q.empty() && par[t] == -1) {
      int u = q.front();
      q.pop();
      for (auto& [v, c] : cap[u])
        if (c > 0 && par[v] == -1) {
          par[v] = u;
          q.push(v);
        }
    }
    if (par[t] == -1) return false;
    for (int v = t; v != s; v = par[v]) {
      cap[par[v]][v] -= 1;
      cap[v][par[v]] += 1;
    }
    return true;
  }
};

}  // namespace gdetail

inline PathSystem max_disjoint_paths(const SimpleGraph& g,
                                     const std::vector<int>& A,
                                     const std::vector<int>& B) {
  for (int v : A)
    if (v < 0 || v >= g.n()) throw Error("A contains an unknown vertex");
  for (int v : B)
    if (v < 0 || v >= g.n()) throw Error("B contains an unknown vertex");
  gdetail::FlowNet net(g, A, B);
  int flow = 0;
  while (net.augment()) ++flow;
  // Decompose: follow saturated vertex arcs from each A entry.
  std::set<int> inA(A.begin(), A.end()), inB(B.begin(), B.end());
  gdetail::FlowNet fresh(g, A, B);
  // used[u][v] = units of flow on arc u->v (original direction).
  std::vector<std::map<int, int>> used(2 * g.n() + 2);
  for (int u = 0; u < (int)fresh.cap.size(); ++u)
    for (auto& [v, c] : fresh.cap[u]) {
      int r = net.cap[u].count(v) ? net.cap[u][v] : 0;
      if (r < c) used[u][v] = c - r;
    }
  PathSystem out;
  int s = 2 * g.n();
  for (int round = 0; round < flow; ++round) {
    // Walk from the source along positive flow.
    std::vector<int> nodes;
    int cur = s;
    while (cur != 2 * g.n() + 1) {
      int nxt = -1;
      for (auto& [v, f] : used[cur])
        if (f > 0 && (nxt == -1 || v < nxt)) nxt = v;
      if (nxt == -1) throw Error("flow decomposition failed");
      used[cur][nxt] -= 1;
      cur = nxt;
      if (cur < 2 * g.n() && cur % 2 == 0) nodes.push_back(cur / 2);
    }
    // Trim to run from the last A-vertex to the first B-vertex after it.
    int from = 0;
    for (int i = 0; i < (int)nodes.size(); ++i)
      if (inA.count(nodes[i])) from = i;
    int to = from;
    while (!inB.count(nodes[to])) ++to;
    out.paths.push_back(
        std::vector<int>(nodes.begin() + from, nodes.begin() + to + 1));
  }
  return out;
}

inline std::vector<int> min_separator(const SimpleGraph& g,
                                      const std::vector<int>& A,
                                      const std::vector<int>& B) {
  gdetail::FlowNet net(g, A, B);
  while (net.augment()) {
  }
  // Min cut: vertices whose internal arc crosses the residual source side.
  int N = 2 * g.n() + 2, s = 2 * g.n();
  std::vector<int> reach(N, 0);
  reach[s] = 1;
  std::queue<int> q;
  q.push(s);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto& [v, c] : net.cap[u])
      if (c > 0 && !reach[v]) {
        reach[v] = 1;
        q.push(v);
      }
  }
  std::vector<int> sep;
  for (int v = 0; v < g.n(); ++v)
    if (reach[2 * v] && !reach[2 * v + 1]) sep.push_back(v);
  return sep;
}

// ---------------------------------------------------------------------------
// Segments of a hitting path with pairwise link systems.

struct SegmentLink {
  PathSystem segments;
  std::map<std::pair<int, int>, PathSystem> links;
};

inline SegmentLink segment_and_link(const SimpleGraph& g, const Bramble& br,
                                    int k, int l) {
  if (k < 1 || l < 1) throw Error("k and l must be positive");
  if (bramble_order(g, br) < k * l)
    throw Error("bramble order insufficient: need at least " +
                std::to_string(k * l));
  std::vector<int> path = hitting_path(g, br);
  // Cut the path greedily: each segment is the shortest prefix of what
  // remains whose hit sub-bramble has order >= k.
  SegmentLink out;
  std::vector<char> gone(br.elements.size(), 0);
  size_t at = 0;
  for (int seg = 0; seg < l; ++seg) {
    std::vector<int> cur;
    Bramble hit;
    bool done = false;
    while (at < path.size() && !done) {
      cur.push_back(path[at]);
      for (size_t e = 0; e < br.elements.size(); ++e) {
        if (gone[e]) continue;
        if (std::find(br.elements[e].begin(), br.elements[e].end(),
                      path[at]) != br.elements[e].end()) {
          gone[e] = 1;
          hit.elements.push_back(br.elements[e]);
        }
      }
      ++at;
      if (!hit.elements.empty() && bramble_order(g, hit) >= k) done = true;
    }
    if (!done) throw Error("bramble order insufficient for segmentation");
    out.segments.paths.push_back(cur);
  }
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j) {
      PathSystem sys = max_disjoint_paths(g, out.segments.paths[i],
                                          out.segments.paths[j]);
      if ((int)sys.paths.size() < k)
        throw Error("link system smaller than k");
      sys.paths.resize(k);
      out.links[{i, j}] = sys;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Intersection graph of two disjoint path families.

inline Structure intersection_graph_of_paths(const SimpleGraph& g,
                                             const PathSystem& P,
                                             const PathSystem& Q) {
  auto check = [&](const PathSystem& sys, const std::string& fam) {
    std::set<int> seen;
    for (auto& p : sys.paths) {
      if (!gdetail::is_path_in(g, p))
        throw Error("family " + fam + " contains a non-path");
      for (int v : p)
        if (!seen.insert(v).second)
          throw Error("paths within family " + fam + " share a vertex");
    }
  };
  check(P, "P");
  check(Q, "Q");
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> iso;
  std::vector<std::set<int>> pv, qv;
  for (auto& p : P.paths) pv.push_back({p.begin(), p.end()});
  for (auto& q : Q.paths) qv.push_back({q.begin(), q.end()});
  std::vector<std::vector<char>> meet(pv.size(), std::vector<char>(qv.size(), 0));
  for (size_t i = 0; i < pv.size(); ++i)
    for (size_t j = 0; j < qv.size(); ++j)
      for (int v : qv[j])
        if (pv[i].count(v)) {
          meet[i][j] = 1;
          break;
        }
  auto pname = [](size_t i) { return "P" + std::to_string(i + 1); };
  auto qname = [](size_t j) { return "Q" + std::to_string(j + 1); };
  for (size_t i = 0; i < pv.size(); ++i) {
    bool any = false;
    for (size_t j = 0; j < qv.size(); ++j)
      if (meet[i][j]) {
        edges.push_back({pname(i), qname(j)});
        any = true;
      }
    if (!any) iso.push_back(pname(i));
  }
  for (size_t j = 0; j < qv.size(); ++j) {
    bool any = false;
    for (size_t i = 0; i < pv.size(); ++i) any = any || meet[i][j];
    if (!any) iso.push_back(qname(j));
  }
  return incidence_of(edges, iso);
}

// ---------------------------------------------------------------------------
// Degeneracy and greedy independent transversals.

inline int degeneracy(const SimpleGraph& g) {
  std::vector<int> deg(g.n());
  std::vector<char> gone(g.n(), 0);
  for (int v = 0; v < g.n(); ++v) deg[v] = (int)g.adj[v].size();
  int d = 0;
  for (int round = 0; round < g.n(); ++round) {
    int best = -1;
    for (int v = 0; v < g.n(); ++v)
      if (!gone[v] && (best == -1 || deg[v] < deg[best])) best = v;
    d = std::max(d, deg[best]);
    gone[best] = 1;
    for (int u : g.adj[best])
      if (!gone[u]) --deg[u];
  }
  return d;
}

// Minimum-degree greedy independent transversal: one vertex per class.
// Requires |class| >= r(r-1)c + 1 and every class-pair subgraph
// c-degenerated.
inline std::vector<int> greedy_independent_transversal(
    const SimpleGraph& g, const std::vector<std::vector<int>>& classes,
    int c) {
  int r = (int)classes.size();
  int need = r * (r - 1) * c + 1;
  std::vector<int> cls(g.n(), -1);
  for (int i = 0; i < r; ++i) {
    if ((int)classes[i].size() < need)
      throw Error("class " + std::to_string(i) + " smaller than r(r-1)c+1 = " +
                  std::to_string(need));
    for (int v : classes[i]) {
      if (v < 0 || v >= g.n() || cls[v] != -1)
        throw Error("classes must be disjoint vertex sets");
      cls[v] = i;
    }
  }
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      SimpleGraph sub;
      for (int v : classes[i]) sub.add_vertex(g.names[v]);
      for (int v : classes[j]) sub.add_vertex(g.names[v]);
      for (int v : classes[i])
        for (int u : g.adj[v])
          if (cls[u] == i || cls[u] == j)
            sub.add_edge(sub.index_of(g.names[v]), sub.index_of(g.names[u]));
      for (int v : classes[j])
        for (int u : g.adj[v])
          if (cls[u] == j)
            sub.add_edge(sub.index_of(g.names[v]), sub.index_of(g.names[u]));
      sub.finish();
      if (degeneracy(sub) > c)
        throw Error("class pair (" + std::to_string(i) + "," +
                    std::to_string(j) + ") is not " + std::to_string(c) +
                    "-degenerated");
    }
  std::vector<char> alive(g.n(), 0);
  std::vector<std::pair<int, int>> rank(g.n());  // (class, position)
  for (int i = 0; i < r; ++i)
    for (size_t p = 0; p < classes[i].size(); ++p) {
      alive[classes[i][p]] = 1;
      rank[classes[i][p]] = {i, (int)p};
    }
  std::vector<int> result(r, -1);
  for (int round = 0; round < r; ++round) {
    int best = -1, bestDeg = 0;
    for (int v = 0; v < g.n(); ++v) {
      if (!alive[v]) continue;
      int d = 0;
      for (int u : g.adj[v])
        if (alive[u]) ++d;
      if (best == -1 || d < bestDeg ||
          (d == bestDeg && rank[v] < rank[best])) {
        best = v;
        bestDeg = d;
      }
    }
    if (best == -1) throw Error("greedy transversal ran out of vertices");
    int i = cls[best];
    result[i] = best;
    for (int v = 0; v < g.n(); ++v)
      if (alive[v] && cls[v] == i) alive[v] = 0;
    for (int u : g.adj[best]) alive[u] = 0;
  }
  for (int i = 0; i < r; ++i)
    if (result[i] == -1) throw Error("greedy transversal ran out of vertices");
  return result;
}

// ---------------------------------------------------------------------------
// Topological cliques, minor images and subdivisions.

inline bool verify_topological_embedding(const SimpleGraph& g,
                                         const SimpleGraph& pattern,
                                         const TopologicalEmbedding& emb) {
  std::set<int> branch;
  for (int v = 0; v < pattern.n(); ++v) {
    auto it = emb.branchVertices.find(v);
    if (it == emb.branchVertices.end()) return false;
    if (it->second < 0 || it->second >= g.n()) return false;
    if (!branch.insert(it->second).second) return false;
  }
  std::set<int> interior;
  for (auto [u, v] : pattern.edges) {
    auto it = emb.pathMap.find({u, v});
    if (it == emb.pathMap.end()) return false;
    const auto& p = it->second;
    if (!gdetail::is_path_in(g, p)) return false;
    if (p.front() != emb.branchVertices.at(u) ||
        p.back() != emb.branchVertices.at(v))
      return false;
    for (size_t i = 1; i + 1 < p.size(); ++i) {
      if (branch.count(p[i])) return false;
      if (!interior.insert(p[i]).second) return false;
    }
  }
  return true;
}

namespace gdetail {

inline bool extend_clique(const SimpleGraph& g, int p,
                          const std::vector<std::pair<int, int>>& pairs,
                          size_t idx, std::vector<char>& used,
                          TopologicalEmbedding& emb) {
  if (idx == pairs.size()) return true;
  auto [a, b] = pairs[idx];
  int s = emb.branchVertices.at(a), t = emb.branchVertices.at(b);
  // DFS over simple paths from s to t whose interior avoids `used`.
  std::vector<int> path{s};
  std::vector<char> onPath(g.n(), 0);
  onPath[s] = 1;
  std::vector<std::vector<int>> frontier;  // untried neighbours per level
  frontier.push_back(g.adj[s]);
  while (!frontier.empty()) {
    if (frontier.back().empty()) {
      frontier.pop_back();
      onPath[path.back()] = 0;
      path.pop_back();
      continue;
    }
    int v = frontier.back().front();
    frontier.back().erase(frontier.back().begin());
    if (v == t) {
      auto full = path;
      full.push_back(t);
      for (size_t i = 1; i + 1 < full.size(); ++i) used[full[i]] = 1;
      emb.pathMap[{a, b}] = full;
      if (extend_clique(g, p, pairs, idx + 1, used, emb)) return true;
      emb.pathMap.erase({a, b});
      for (size_t i = 1; i + 1 < full.size(); ++i) used[full[i]] = 0;
      continue;
    }
    if (onPath[v] || used[v]) continue;
    path.push_back(v);
    onPath[v] = 1;
    frontier.push_back(g.adj[v]);
  }
  return false;
}

}  // namespace gdetail

// Backtracking search for a topological K_p: p branch vertices joined by
// pairwise internally disjoint paths.
inline std::optional<TopologicalEmbedding> find_topological_clique(
    const SimpleGraph& g, int p, int cap = 5) {
  if (p > cap)
    throw Error("topological clique cap exceeded: p = " + std::to_string(p) +
                ", cap " + std::to_string(cap));
  if (p < 1) throw Error("p must be positive");
  std::vector<int> cand;
  for (int v = 0; v < g.n(); ++v)
    if ((int)g.adj[v].size() >= p - 1) cand.push_back(v);
  if ((int)cand.size() < p) return std::nullopt;
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) pairs.push_back({a, b});
  std::vector<char> used(g.n(), 0);
  // Choose branch vertices in increasing candidate order, then route paths.
  std::function<bool(int, TopologicalEmbedding&)> place =
      [&](int i, TopologicalEmbedding& emb) -> bool {
    if (i == p) {
      std::fill(used.begin(), used.end(), 0);
      for (int v = 0; v < p; ++v) used[emb.branchVertices[v]] = 1;
      emb.pathMap.clear();
      return gdetail::extend_clique(g, p, pairs, 0, used, emb);
    }
    for (size_t ci = 0; ci < cand.size(); ++ci) {
      int v = cand[ci];
      if (i > 0 && v <= emb.branchVertices[i - 1]) continue;
      emb.branchVertices[i] = v;
      if (place(i + 1, emb)) return true;
      emb.branchVertices.erase(i);
    }
    return false;
  };
  TopologicalEmbedding emb;
  if (place(0, emb)) return emb;
  return std::nullopt;
}

inline bool verify_minor_image(const SimpleGraph& g,
                               const SimpleGraph& pattern,
                               const MinorImage& mu) {
  std::set<int> seen;
  for (int v = 0; v < pattern.n(); ++v) {
    auto it = mu.branchSets.find(v);
    if (it == mu.branchSets.end()) return false;
    if (!gdetail::connected_in(g, it->second)) return false;
    for (int u : it->second)
      if (!seen.insert(u).second) return false;
  }
  for (auto [u, v] : pattern.edges) {
    auto it = mu.edgeMap.find({u, v});
    if (it == mu.edgeMap.end()) return false;
    auto [x, y] = it->second;
    if (x < 0 || x >= g.n() || y < 0 || y >= g.n()) return false;
    if (!g.has_edge(x, y)) return false;
    auto inSet = [&](int pv, int hv) {
      const auto& s = mu.branchSets.at(pv);
      return std::find(s.begin(), s.end(), hv) != s.end();
    };
    bool ok = (inSet(u, x) && inSet(v, y)) || (inSet(u, y) && inSet(v, x));
    if (!ok) return false;
  }
  return true;
}

namespace gdetail {

// Spanning tree of g restricted to `set`, as parent pointers from `root`.
inline std::map<int, int> tree_parents(const SimpleGraph& g,
                                       const std::vector<int>& set, int root) {
  std::set<int> in(set.begin(), set.end());
  std::map<int, int> par;
  par[root] = root;
  std::queue<int> q;
  q.push(root);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : g.adj[u])
      if (in.count(v) && !par.count(v)) {
        par[v] = u;
        q.push(v);
      }
  }
  return par;
}

inline std::vector<int> tree_path(const std::map<int, int>& par, int a,
                                  int b) {
  std::vector<int> up;
  std::set<int> onUp;
  for (int v = a;; v = par.at(v)) {
    up.push_back(v);
    onUp.insert(v);
    if (par.at(v) == v) break;
  }
  std::vector<int> down;
  int meet = -1;
  for (int v = b;; v = par.at(v)) {
    if (onUp.count(v)) {
      meet = v;
      break;
    }
    down.push_back(v);
    if (par.at(v) == v) break;
  }
  std::vector<int> path;
  for (int v : up) {
    path.push_back(v);
    if (v == meet) break;
  }
  for (auto it = down.rbegin(); it != down.rend(); ++it) path.push_back(*it);
  return path;
}

}  // namespace gdetail

// Turn a minor image of a pattern with maximum degree <= 3 into a
// subdivision: prune each branch set to a tree spanning its attachment
// points and route the pattern edges through the median vertices.
inline TopologicalEmbedding image_to_subdivision(const SimpleGraph& g,
                                                 const SimpleGraph& pattern,
                                                 const MinorImage& mu) {
  for (int v = 0; v < pattern.n(); ++v)
    if ((int)pattern.adj[v].size() > 3)
      throw Error("pattern maximum degree exceeds 3");
  if (!verify_minor_image(g, pattern, mu))
    throw Error("invalid minor image");
  // Attachment point of each (pattern vertex, incident pattern edge).
  std::map<int, std::vector<std::pair<std::pair<int, int>, int>>> attach;
  for (auto [u, v] : pattern.edges) {
    auto [x, y] = mu.edgeMap.at({u, v});
    const auto& su = mu.branchSets.at(u);
    bool xInU = std::find(su.begin(), su.end(), x) != su.end();
    int au = xInU ? x : y, av = xInU ? y : x;
    attach[u].push_back({{u, v}, au});
    attach[v].push_back({{u, v}, av});
  }
  TopologicalEmbedding emb;
  std::map<int, std::map<int, int>> parents;  // pattern vertex -> tree
  for (int v = 0; v < pattern.n(); ++v) {
    const auto& set = mu.branchSets.at(v);
    int root = *std::min_element(
        set.begin(), set.end(),
        [&](int a, int b) { return g.names[a] < g.names[b]; });
    auto par = gdetail::tree_parents(g, set, root);
    std::vector<int> pts;
    for (auto& [e, a] : attach[v]) pts.push_back(a);
    int b;
    if (pts.empty()) {
      b = root;
    } else if (pts.size() <= 2) {
      b = *std::min_element(pts.begin(), pts.end(), [&](int a1, int a2) {
        return g.names[a1] < g.names[a2];
      });
    } else {
      // Median of the three attachments in the tree.
      auto p01 = gdetail::tree_path(par, pts[0], pts[1]);
      auto p02 = gdetail::tree_path(par, pts[0], pts[2]);
      auto p12 = gdetail::tree_path(par, pts[1], pts[2]);
      std::set<int> s01(p01.begin(), p01.end());
      std::set<int> s02(p02.begin(), p02.end());
      b = -1;
      for (int x : p12)
        if (s01.count(x) && s02.count(x)) {
          b = x;
          break;
        }
      if (b == -1) throw Error("branch set has no median vertex");
    }
    emb.branchVertices[v] = b;
    parents[v] = par;
  }
  for (auto [u, v] : pattern.edges) {
    int au = -1, av = -1;
    for (auto& [e, a] : attach[u])
      if (e == std::make_pair(u, v)) au = a;
    for (auto& [e, a] : attach[v])
      if (e == std::make_pair(u, v)) av = a;
    auto legU = gdetail::tree_path(parents[u], emb.branchVertices[u], au);
    auto legV = gdetail::tree_path(parents[v], av, emb.branchVertices[v]);
    std::vector<int> path = legU;
    path.insert(path.end(), legV.begin(), legV.end());
    emb.pathMap[{u, v}] = path;
  }
  return emb;
}

// ---------------------------------------------------------------------------
// Text serialization, in the structure format's line-oriented style.
// Names resolve against a host graph on read.

inline std::string write_bramble(const SimpleGraph& g, const Bramble& br) {
  std::ostringstream o;
  o << "bramble\n";
  for (auto& el : br.elements) {
    std::vector<std::string> names;
    for (int v : el) names.push_back(g.names[v]);
    std::sort(names.begin(), names.end());
    o << "element:";
    for (auto& n : names) o << " " << n;
    o << "\n";
  }
  return o.str();
}

inline Bramble read_bramble(const SimpleGraph& g, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  Bramble br;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "bramble" && !header) {
      header = true;
    } else if (head == "element:") {
      std::vector<int> el;
      std::string tok;
      while (ls >> tok) el.push_back(g.index_of(tok));
      std::sort(el.begin(), el.end());
      br.elements.push_back(el);
    } else {
      throw Error("bramble parse error at line " + std::to_string(lineno) +
                  ": unexpected '" + head + "'");
    }
  }
  if (!header) throw Error("bramble parse error: missing 'bramble' header");
  return br;
}

inline std::string write_path_system(const SimpleGraph& g,
                                     const PathSystem& sys) {
  std::ostringstream o;
  o << "paths\n";
  for (auto& p : sys.paths) {
    o << "path:";
    for (int v : p) o << " " << g.names[v];
    o << "\n";
  }
  return o.str();
}

inline PathSystem read_path_system(const SimpleGraph& g,
                                   const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  PathSystem sys;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "paths" && !header) {
      header = true;
    } else if (head == "path:") {
      std::vector<int> p;
      std::string tok;
      while (ls >> tok) p.push_back(g.index_of(tok));
      sys.paths.push_back(p);
    } else {
      throw Error("path system parse error at line " + std::to_string(lineno) +
                  ": unexpected '" + head + "'");
    }
  }
  if (!header) throw Error("path system parse error: missing 'paths' header");
  return sys;
}

}  // namespace msow
