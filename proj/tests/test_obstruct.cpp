#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "msow/obstruct.hpp"
#include "msow/structure.hpp"

using namespace msow;

namespace {

SimpleGraph grid_graph(int k, int l) { return graph_of(generate_grid(k, l)); }

// Oracle: tree-width by brute force over all elimination orderings.
int brute_treewidth(const SimpleGraph& g) {
  int n = g.n();
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  int best = n;
  do {
    std::vector<std::set<int>> adj(n);
    for (auto& [u, v] : g.edges) {
      adj[u].insert(v);
      adj[v].insert(u);
    }
    std::vector<char> gone(n, 0);
    int width = 0;
    for (int v : perm) {
      std::vector<int> nb;
      for (int u : adj[v])
        if (!gone[u]) nb.push_back(u);
      width = std::max(width, (int)nb.size());
      for (int a : nb)
        for (int b : nb)
          if (a != b) adj[a].insert(b);
      gone[v] = 1;
    }
    best = std::min(best, width);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Oracle: minimum hitting set by subset enumeration.
int brute_hitting(const SimpleGraph& g, const Bramble& br) {
  int n = g.n();
  for (int size = 0; size <= n; ++size) {
    for (unsigned S = 0; S < (1u << n); ++S) {
      if (__builtin_popcount(S) != size) continue;
      bool all = true;
      for (auto& el : br.elements) {
        bool hit = false;
        for (int v : el)
          if (S & (1u << v)) hit = true;
        if (!hit) {
          all = false;
          break;
        }
      }
      if (all) return size;
    }
  }
  return n;
}

// Oracle: minimum A-B separator by subset enumeration.
int brute_separator(const SimpleGraph& g, const std::vector<int>& A,
                    const std::vector<int>& B) {
  int n = g.n();
  int best = n + 1;
  for (unsigned S = 0; S < (1u << n); ++S) {
    int size = __builtin_popcount(S);
    if (size >= best) continue;
    // BFS from A \ S avoiding S; separated iff no B \ S vertex reached.
    std::vector<char> seen(n, 0);
    std::vector<int> stk;
    for (int a : A)
      if (!(S & (1u << a)) && !seen[a]) {
        seen[a] = 1;
        stk.push_back(a);
      }
    while (!stk.empty()) {
      int u = stk.back();
      stk.pop_back();
      for (int v : g.adj[u])
        if (!(S & (1u << v)) && !seen[v]) {
          seen[v] = 1;
          stk.push_back(v);
        }
    }
    bool sep = true;
    for (int b : B)
      if (!(S & (1u << b)) && seen[b]) sep = false;
    if (sep) best = size;
  }
  return best;
}

bool covers(const Bramble& br, const std::vector<int>& path) {
  std::set<int> on(path.begin(), path.end());
  for (auto& el : br.elements) {
    bool hit = false;
    for (int v : el)
      if (on.count(v)) hit = true;
    if (!hit) return false;
  }
  return true;
}

MinorImage identity_image(const SimpleGraph& g) {
  MinorImage mu;
  for (int v = 0; v < g.n(); ++v) mu.branchSets[v] = {v};
  for (auto& e : g.edges) mu.edgeMap[e] = e;
  return mu;
}

}  // namespace

TEST_CASE("tree decomposition verifier") {
  auto k4 = graph_of(generate_clique(4));
  TreeDecomposition one;
  one.bags.push_back({0, 1, 2, 3});
  REQUIRE(verify_tree_decomposition(k4, one));
  REQUIRE(one.width() == 3);

  auto p4 = graph_of(generate_path(4));
  TreeDecomposition pd;
  // v1..v4 sort to indices 0..3 in graph_of order.
  int a = p4.index_of("v1"), b = p4.index_of("v2"), c = p4.index_of("v3"),
      d = p4.index_of("v4");
  pd.bags = {{std::min(a, b), std::max(a, b)},
             {std::min(b, c), std::max(b, c)},
             {std::min(c, d), std::max(c, d)}};
  pd.tree = {{0, 1}, {1, 2}};
  REQUIRE(verify_tree_decomposition(p4, pd));
  REQUIRE(pd.width() == 1);

  TreeDecomposition missing = pd;
  missing.bags[1] = {b};  // edge v2-v3 no longer covered
  REQUIRE_FALSE(verify_tree_decomposition(p4, missing));

  TreeDecomposition torn = pd;
  torn.tree = {{0, 1}};  // not a tree over 3 bags
  REQUIRE_FALSE(verify_tree_decomposition(p4, torn));
}

TEST_CASE("exact treewidth on landmarks") {
  auto tree5 = graph_of(generate_path(5));
  auto r5 = treewidth_exact(tree5);
  REQUIRE(r5.width == 1);
  REQUIRE(verify_tree_decomposition(tree5, r5.decomposition));
  REQUIRE(r5.decomposition.width() == 1);

  auto k5 = graph_of(generate_clique(5));
  REQUIRE(treewidth_exact(k5).width == 4);

  auto g33 = grid_graph(3, 3);
  auto r33 = treewidth_exact(g33);
  REQUIRE(r33.width == 3);
  REQUIRE(verify_tree_decomposition(g33, r33.decomposition));
  REQUIRE(r33.decomposition.width() == 3);

  auto k13 = graph_of(generate_clique(13));
  REQUIRE_THROWS_WITH(treewidth_exact(k13),
                      Catch::Matchers::ContainsSubstring("cap exceeded"));
}

TEST_CASE("exact treewidth matches permutation brute force") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = graph_of(generate_random(6, 0.5, seed));
    auto r = treewidth_exact(g);
    INFO("seed " << seed);
    REQUIRE(r.width == brute_treewidth(g));
    REQUIRE(verify_tree_decomposition(g, r.decomposition));
    REQUIRE(r.decomposition.width() == r.width);
  }
}

TEST_CASE("bramble verification and order") {
  auto k3 = graph_of(generate_clique(3));
  Bramble singles;
  singles.elements = {{0}, {1}, {2}};
  REQUIRE(verify_bramble(k3, singles));
  REQUIRE(bramble_order(k3, singles) == 3);

  auto p4 = graph_of(generate_path(4));
  Bramble far;
  far.elements = {{p4.index_of("v1")}, {p4.index_of("v4")}};
  REQUIRE_FALSE(verify_bramble(p4, far));

  Bramble torn;
  torn.elements = {{p4.index_of("v1"), p4.index_of("v3")}};
  REQUIRE_FALSE(verify_bramble(p4, torn));  // not connected
}

TEST_CASE("crosses bramble of the k x k grid") {
  for (int k = 2; k <= 3; ++k) {
    auto g = grid_graph(k, k);
    auto br = grid_crosses_bramble(k, g);
    INFO("k = " << k);
    REQUIRE(verify_bramble(g, br));
    REQUIRE(bramble_order(g, br) == k + 1);
    REQUIRE(brute_hitting(g, br) == k + 1);
    // Weak duality: order = treewidth + 1 on these grids.
    REQUIRE(bramble_order(g, br) == treewidth_exact(g).width + 1);
  }
}

TEST_CASE("bramble order matches brute force on random inputs") {
  for (uint64_t seed = 1; seed <= 6; ++seed) {
    auto g = graph_of(generate_random(6, 0.6, seed));
    // Elements: closed neighbourhoods of the vertices, when connected.
    Bramble br;
    for (int v = 0; v < g.n(); ++v) {
      std::vector<int> el{v};
      for (int u : g.adj[v]) el.push_back(u);
      std::sort(el.begin(), el.end());
      br.elements.push_back(el);
    }
    REQUIRE(bramble_order(g, br) == brute_hitting(g, br));
  }
}

TEST_CASE("hitting path") {
  auto k3 = graph_of(generate_clique(3));
  Bramble one;
  one.elements = {{0, 1, 2}};
  auto p = hitting_path(k3, one);
  REQUIRE(p.size() == 1);

  Bramble singles;
  singles.elements = {{0}, {1}, {2}};
  auto p3 = hitting_path(k3, singles);
  REQUIRE(p3.size() == 3);
  REQUIRE(covers(singles, p3));
  REQUIRE(gdetail::is_path_in(k3, p3));

  auto g = grid_graph(3, 3);
  auto br = grid_crosses_bramble(3, g);
  auto hp = hitting_path(g, br);
  REQUIRE(gdetail::is_path_in(g, hp));
  REQUIRE(covers(br, hp));
  REQUIRE((int)hp.size() >= bramble_order(g, br));

  // Deterministic: same input, same path.
  REQUIRE(hitting_path(g, br) == hp);
}

TEST_CASE("disjoint paths and separators on landmarks") {
  auto g = grid_graph(3, 3);
  std::vector<int> left, right;
  GridMeta m{3, 3};
  for (int i = 1; i <= 3; ++i) {
    left.push_back(g.index_of(m.vertex(i, 1)));
    right.push_back(g.index_of(m.vertex(i, 3)));
  }
  auto sys = max_disjoint_paths(g, left, right);
  REQUIRE(sys.paths.size() == 3);
  std::set<int> seen;
  for (auto& p : sys.paths) {
    REQUIRE(gdetail::is_path_in(g, p));
    REQUIRE(std::count(left.begin(), left.end(), p.front()) == 1);
    REQUIRE(std::count(right.begin(), right.end(), p.back()) == 1);
    for (int v : p) REQUIRE(seen.insert(v).second);
  }
  REQUIRE(min_separator(g, left, right).size() == 3);

  auto k1 = graph_of(generate_clique(1));
  auto triv = max_disjoint_paths(k1, {0}, {0});
  REQUIRE(triv.paths.size() == 1);
  REQUIRE(triv.paths[0] == std::vector<int>{0});

  SimpleGraph two;
  two.add_vertex("a");
  two.add_vertex("b");
  two.finish();
  REQUIRE(max_disjoint_paths(two, {0}, {1}).paths.empty());
  REQUIRE(min_separator(two, {0}, {1}).empty());
}

TEST_CASE("Menger duality against brute force") {
  uint64_t state = 42;
  auto next = [&]() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return (unsigned)(state >> 33);
  };
  int checked = 0;
  for (uint64_t seed = 1; checked < 100; ++seed) {
    int n = 4 + (int)(seed % 4);  // 4..7 vertices
    auto g = graph_of(generate_random(n, 0.45, seed));
    std::vector<int> A, B;
    for (int v = 0; v < n; ++v) {
      if (next() % 3 == 0) A.push_back(v);
      if (next() % 3 == 0) B.push_back(v);
    }
    if (A.empty() || B.empty()) continue;
    int flow = (int)max_disjoint_paths(g, A, B).paths.size();
    int cut = (int)min_separator(g, A, B).size();
    int truth = brute_separator(g, A, B);
    INFO("seed " << seed << " n " << n);
    REQUIRE(flow == truth);
    REQUIRE(cut == truth);
    ++checked;
  }
}

TEST_CASE("segments and link systems") {
  auto g = grid_graph(5, 5);
  auto br = grid_crosses_bramble(5, g);
  auto sl = segment_and_link(g, br, 2, 2);
  REQUIRE(sl.segments.paths.size() == 2);
  std::set<int> s0(sl.segments.paths[0].begin(), sl.segments.paths[0].end());
  std::set<int> s1(sl.segments.paths[1].begin(), sl.segments.paths[1].end());
  for (int v : s1) REQUIRE_FALSE(s0.count(v));
  REQUIRE(sl.links.size() == 1);
  auto& link = sl.links.at({0, 1});
  REQUIRE(link.paths.size() == 2);
  std::set<int> used;
  for (auto& p : link.paths) {
    REQUIRE(gdetail::is_path_in(g, p));
    REQUIRE(s0.count(p.front()));
    REQUIRE(s1.count(p.back()));
    for (int v : p) REQUIRE(used.insert(v).second);
  }

  auto g3 = grid_graph(3, 3);
  auto br3 = grid_crosses_bramble(3, g3);
  auto sl1 = segment_and_link(g3, br3, 1, 1);
  REQUIRE(sl1.segments.paths.size() == 1);
  REQUIRE(sl1.links.empty());

  REQUIRE_THROWS_WITH(segment_and_link(g3, br3, 3, 2),
                      Catch::Matchers::ContainsSubstring("order insufficient"));
}

TEST_CASE("intersection graph of path families") {
  auto g = grid_graph(3, 3);
  GridMeta m{3, 3};
  auto row = [&](int i) {
    std::vector<int> p;
    for (int j = 1; j <= 3; ++j) p.push_back(g.index_of(m.vertex(i, j)));
    return p;
  };
  auto col = [&](int j) {
    std::vector<int> p;
    for (int i = 1; i <= 3; ++i) p.push_back(g.index_of(m.vertex(i, j)));
    return p;
  };
  PathSystem rows{{row(1), row(2), row(3)}};
  PathSystem cols{{col(1), col(2), col(3)}};
  auto ig = intersection_graph_of_paths(g, rows, cols);
  REQUIRE(ig.unary_rel("V").count() == 6);
  REQUIRE(ig.unary_rel("E").count() == 9);  // K_{3,3}

  PathSystem one{{row(1)}}, other{{col(2)}};
  auto k2 = intersection_graph_of_paths(g, one, other);
  REQUIRE(k2.unary_rel("V").count() == 2);
  REQUIRE(k2.unary_rel("E").count() == 1);

  PathSystem top{{row(3)}}, bottom{{row(1)}};
  auto none = intersection_graph_of_paths(g, top, bottom);
  REQUIRE(none.unary_rel("V").count() == 2);
  REQUIRE(none.unary_rel("E").count() == 0);

  PathSystem overlap{{row(1), col(1)}};
  REQUIRE_THROWS_WITH(intersection_graph_of_paths(g, overlap, other),
                      Catch::Matchers::ContainsSubstring("share a vertex"));
}

TEST_CASE("degeneracy") {
  REQUIRE(degeneracy(graph_of(generate_path(6))) == 1);
  REQUIRE(degeneracy(graph_of(generate_clique(5))) == 4);
  REQUIRE(degeneracy(grid_graph(4, 4)) == 2);
}

TEST_CASE("greedy independent transversal") {
  // Edgeless host: picks the first vertex of every class.
  SimpleGraph h;
  for (int i = 0; i < 6; ++i) h.add_vertex("u" + std::to_string(i));
  h.finish();
  auto pick = greedy_independent_transversal(h, {{0, 1, 2}, {3, 4, 5}}, 0);
  REQUIRE(pick == std::vector<int>{0, 3});

  // Perfect matching between two classes of size 3, c = 1.
  SimpleGraph mg;
  for (int i = 0; i < 6; ++i) mg.add_vertex("u" + std::to_string(i));
  mg.add_edge(0, 3);
  mg.add_edge(1, 4);
  mg.add_edge(2, 5);
  mg.finish();
  auto tr = greedy_independent_transversal(mg, {{0, 1, 2}, {3, 4, 5}}, 1);
  REQUIRE(tr.size() == 2);
  REQUIRE((tr[0] >= 0 && tr[0] <= 2));
  REQUIRE((tr[1] >= 3 && tr[1] <= 5));
  REQUIRE_FALSE(mg.has_edge(tr[0], tr[1]));

  // Class below the r(r-1)c+1 floor.
  REQUIRE_THROWS_WITH(greedy_independent_transversal(mg, {{0, 1}, {3, 4}}, 1),
                      Catch::Matchers::ContainsSubstring("smaller than"));
  // A matching is 1-degenerated but not 0-degenerated.
  REQUIRE_THROWS_WITH(
      greedy_independent_transversal(mg, {{0, 1, 2}, {3, 4, 5}}, 0),
      Catch::Matchers::ContainsSubstring("degenerated"));
}

TEST_CASE("topological cliques") {
  auto k4 = graph_of(generate_clique(4));
  auto emb = find_topological_clique(k4, 4);
  REQUIRE(emb.has_value());
  REQUIRE(verify_topological_embedding(k4, k4, *emb));

  auto g33 = grid_graph(3, 3);
  auto gemb = find_topological_clique(g33, 4);
  REQUIRE(gemb.has_value());
  REQUIRE(verify_topological_embedding(g33, k4, *gemb));

  auto p4 = graph_of(generate_path(4));
  REQUIRE_FALSE(find_topological_clique(p4, 3).has_value());

  REQUIRE_THROWS_WITH(find_topological_clique(k4, 6),
                      Catch::Matchers::ContainsSubstring("cap exceeded"));
}

TEST_CASE("minor images") {
  auto g33 = grid_graph(3, 3);
  REQUIRE(verify_minor_image(g33, g33, identity_image(g33)));

  auto c6 = graph_of(generate_cycle(6));
  auto k3 = graph_of(generate_clique(3));
  // Branch sets: consecutive vertex pairs around the cycle.
  int v1 = c6.index_of("v1"), v2 = c6.index_of("v2"), v3 = c6.index_of("v3"),
      v4 = c6.index_of("v4"), v5 = c6.index_of("v5"), v6 = c6.index_of("v6");
  MinorImage mu;
  mu.branchSets[0] = {v1, v2};
  mu.branchSets[1] = {v3, v4};
  mu.branchSets[2] = {v5, v6};
  mu.edgeMap[{0, 1}] = {v2, v3};
  mu.edgeMap[{0, 2}] = {v6, v1};
  mu.edgeMap[{1, 2}] = {v4, v5};
  REQUIRE(verify_minor_image(c6, k3, mu));

  MinorImage bad = mu;
  bad.branchSets[1] = {v2, v3};  // overlaps branch set 0
  REQUIRE_FALSE(verify_minor_image(c6, k3, bad));

  auto emb = image_to_subdivision(c6, k3, mu);
  REQUIRE(verify_topological_embedding(c6, k3, emb));
  for (auto& [e, p] : emb.pathMap) REQUIRE(p.size() == 3);  // length 2 each
}

TEST_CASE("image to subdivision") {
  // Single pattern edge: endpoints only.
  auto k2 = graph_of(generate_clique(2));
  auto p2 = graph_of(generate_path(2));
  auto emb2 = image_to_subdivision(p2, k2, identity_image(p2));
  REQUIRE(verify_topological_embedding(p2, k2, emb2));
  for (auto& [e, p] : emb2.pathMap) REQUIRE(p.size() == 2);

  // K4 image in a 1-subdivision of K4: recovered subdivision.
  std::vector<std::pair<std::string, std::string>> edges;
  auto bn = [](int i) { return "b" + std::to_string(i); };
  auto sn = [](int i, int j) {
    return "s" + std::to_string(i) + std::to_string(j);
  };
  for (int i = 1; i <= 4; ++i)
    for (int j = i + 1; j <= 4; ++j) {
      edges.push_back({bn(i), sn(i, j)});
      edges.push_back({sn(i, j), bn(j)});
    }
  auto host = graph_of(incidence_of(edges));
  auto k4 = graph_of(generate_clique(4));
  MinorImage mu;
  for (int i = 1; i <= 4; ++i) {
    std::vector<int> set{host.index_of(bn(i))};
    for (int j = i + 1; j <= 4; ++j) set.push_back(host.index_of(sn(i, j)));
    std::sort(set.begin(), set.end());
    mu.branchSets[i - 1] = set;
  }
  for (int i = 1; i <= 4; ++i)
    for (int j = i + 1; j <= 4; ++j)
      mu.edgeMap[{i - 1, j - 1}] = {host.index_of(sn(i, j)),
                                    host.index_of(bn(j))};
  REQUIRE(verify_minor_image(host, k4, mu));
  auto emb = image_to_subdivision(host, k4, mu);
  REQUIRE(verify_topological_embedding(host, k4, emb));
  // Every subdivision vertex is recovered on some path.
  std::set<int> interior;
  for (auto& [e, p] : emb.pathMap)
    for (size_t i = 1; i + 1 < p.size(); ++i) interior.insert(p[i]);
  REQUIRE(interior.size() == 6);

  // Degree cap.
  auto k5 = graph_of(generate_clique(5));
  REQUIRE_THROWS_WITH(image_to_subdivision(k5, k5, identity_image(k5)),
                      Catch::Matchers::ContainsSubstring("degree exceeds 3"));
}

TEST_CASE("certificate serialization round trips") {
  auto g = grid_graph(3, 3);
  auto br = grid_crosses_bramble(3, g);
  auto text = write_bramble(g, br);
  auto back = read_bramble(g, text);
  REQUIRE(back.elements == br.elements);

  PathSystem sys;
  sys.paths = {hitting_path(g, br)};
  auto ptext = write_path_system(g, sys);
  auto psys = read_path_system(g, ptext);
  REQUIRE(psys.paths == sys.paths);

  REQUIRE_THROWS_WITH(read_bramble(g, "bramble\nwhat: v_1_1\n"),
                      Catch::Matchers::ContainsSubstring("line 2"));
  REQUIRE_THROWS_WITH(read_path_system(g, "path: v_1_1\n"),
                      Catch::Matchers::ContainsSubstring("missing"));
}
