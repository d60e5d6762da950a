#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "msow/pseudowall.hpp"

// Hand-built pseudo-wall hosts used across the test suite.

namespace msow::fixtures {

struct SimpleFixture {
  Structure base;       // uncoloured incidence structure
  Structure expansion;  // coloured per the word
  SimplePWCert cert;
};

// A simple pseudo-wall of order k encoding w: a reserved vertex, k intervals
// of max(2, k-1) vertices joined by blue edges, and one fresh two-edge link
// per interval pair.  Requires 1 <= |w| <= k.
inline SimpleFixture make_simple_pw(const std::string& w, int k) {
  int sz = std::max(2, k - 1);
  auto iv = [&](int j, int t) {  // 1-based interval and slot
    return "i" + std::to_string(j) + "v" + std::to_string(t);
  };
  std::vector<std::pair<std::string, std::string>> edges;
  edges.push_back({"p", iv(1, 1)});
  for (int j = 1; j <= k; ++j) {
    for (int t = 1; t < sz; ++t) edges.push_back({iv(j, t), iv(j, t + 1)});
    if (j < k) edges.push_back({iv(j, sz), iv(j + 1, 1)});
  }
  // Slot of interval j used by the link towards interval x.
  auto slot = [&](int j, int x) {
    int r = 0;
    for (int o = 1; o <= k; ++o) {
      if (o == j) continue;
      ++r;
      if (o == x) return r;
    }
    return r;
  };
  auto mid = [&](int a, int b) {
    return "c" + std::to_string(a) + "_" + std::to_string(b);
  };
  for (int a = 1; a <= k; ++a)
    for (int b = a + 1; b <= k; ++b) {
      edges.push_back({iv(a, slot(a, b)), mid(a, b)});
      edges.push_back({mid(a, b), iv(b, slot(b, a))});
    }
  SimpleFixture fx;
  fx.base = incidence_of(edges);
  auto ename = [&](const std::string& u, const std::string& v) {
    return fx.base.name_of(
        fx.base.edge_between(fx.base.index_of(u), fx.base.index_of(v)));
  };
  std::map<std::string, std::set<std::string>> assign;
  SimplePWCert& cert = fx.cert;
  cert.order = k;
  cert.L.push_back("p");
  std::string prev = "p";
  for (int j = 1; j <= k; ++j) {
    cert.blueIdx.push_back(1 + (j - 1) * sz);
    for (int t = 1; t <= sz; ++t) {
      std::string cur = iv(j, t);
      std::string e = ename(prev, cur);
      assign[t == 1 ? "B" : "R"].insert(e);
      cert.L.push_back(e);
      cert.L.push_back(cur);
      prev = cur;
      if (j <= (int)w.size()) assign[w[j - 1] == '1' ? "C1" : "C0"].insert(cur);
    }
  }
  for (int a = 1; a <= k; ++a)
    for (int b = a + 1; b <= k; ++b) {
      std::string u = iv(a, slot(a, b)), v = iv(b, slot(b, a));
      cert.links[{a, b}] = {u, ename(u, mid(a, b)), mid(a, b),
                            ename(mid(a, b), v), v};
    }
  fx.expansion = colour_expand(fx.base, assign);
  return fx;
}

struct ComplexFixture {
  Structure base;
  std::vector<int> L;  // vertex ids in graph_of(base)
  PathSystem P, Q;     // P_i hangs off L at l_i; Q_{ij} crosses P_i and P_j
};

// Host for a complex pseudo-wall whose intersection graph I(P,Q) contains a
// topological K_q: q P-paths hanging off the long path, one Q-path per pair.
inline ComplexFixture make_complex_pw_host(int q) {
  auto lv = [](int i) { return "l" + std::to_string(i); };
  auto xv = [](int i, int j) {
    return "x" + std::to_string(i) + "_" + std::to_string(j);
  };
  auto cv = [](int i, int j) {
    return "c" + std::to_string(i) + "_" + std::to_string(j);
  };
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i < q; ++i) edges.push_back({lv(i), lv(i + 1)});
  for (int i = 1; i <= q; ++i) {
    std::string prev = lv(i);
    for (int j = 1; j <= q; ++j) {
      if (j == i) continue;
      edges.push_back({prev, xv(i, j)});
      prev = xv(i, j);
    }
  }
  for (int i = 1; i <= q; ++i)
    for (int j = i + 1; j <= q; ++j) {
      edges.push_back({xv(i, j), cv(i, j)});
      edges.push_back({cv(i, j), xv(j, i)});
    }
  ComplexFixture fx;
  fx.base = incidence_of(edges);
  SimpleGraph g = graph_of(fx.base);
  for (int i = 0; i <= q; ++i) fx.L.push_back(g.index_of(lv(i)));
  for (int i = 1; i <= q; ++i) {
    std::vector<int> p{g.index_of(lv(i))};
    for (int j = 1; j <= q; ++j)
      if (j != i) p.push_back(g.index_of(xv(i, j)));
    fx.P.paths.push_back(p);
  }
  for (int i = 1; i <= q; ++i)
    for (int j = i + 1; j <= q; ++j)
      fx.Q.paths.push_back({g.index_of(xv(i, j)), g.index_of(cv(i, j)),
                            g.index_of(xv(j, i))});
  return fx;
}

}  // namespace msow::fixtures
