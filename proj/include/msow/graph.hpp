#pragma once

#include <algorithm>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "msow/structure.hpp"

namespace msow {

// Plain adjacency-list graph extracted from an incidence structure; vertex
// ids index `names`.
struct SimpleGraph {
  std::vector<std::string> names;
  std::unordered_map<std::string, int> idx;
  std::vector<std::vector<int>> adj;            // sorted neighbour lists
  std::vector<std::pair<int, int>> edges;       // u < v, sorted

  int n() const { return (int)names.size(); }
  int m() const { return (int)edges.size(); }

  int add_vertex(const std::string& name) {
    auto it = idx.find(name);
    if (it != idx.end()) return it->second;
    idx[name] = n();
    names.push_back(name);
    adj.emplace_back();
    return n() - 1;
  }
  void add_edge(int u, int v) {
    if (u == v) throw Error("self-loop");
    if (u > v) std::swap(u, v);
    edges.push_back({u, v});
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  void finish() {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (auto& a : adj) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
  }
  bool has_edge(int u, int v) const {
    return std::binary_search(adj[u].begin(), adj[u].end(), v);
  }
  int index_of(const std::string& name) const {
    auto it = idx.find(name);
    if (it == idx.end()) throw Error("unknown vertex: " + name);
    return it->second;
  }
};

// Graph on the vertex elements of an incidence structure.
inline SimpleGraph graph_of(const Structure& s) {
  SimpleGraph g;
  for (int i = 0; i < s.size(); ++i)
    if (s.is_vertex(i)) g.add_vertex(s.name_of(i));
  for (int i = 0; i < s.size(); ++i) {
    if (!s.is_edge(i)) continue;
    auto [u, v] = s.endpoints(i);
    if (u == -1 || v == -1) throw Error("edge with missing endpoint");
    g.add_edge(g.index_of(s.name_of(u)), g.index_of(s.name_of(v)));
  }
  g.finish();
  return g;
}

inline std::vector<int> components(const SimpleGraph& g) {
  std::vector<int> comp(g.n(), -1);
  int c = 0;
  for (int s = 0; s < g.n(); ++s) {
    if (comp[s] != -1) continue;
    std::queue<int> q;
    q.push(s);
    comp[s] = c;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : g.adj[u])
        if (comp[v] == -1) {
          comp[v] = c;
          q.push(v);
        }
    }
    ++c;
  }
  return comp;
}

}  // namespace msow
