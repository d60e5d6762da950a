#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "msow/eval.hpp"
#include "msow/parse.hpp"

using namespace msow;

namespace {

EvalOptions pure() {
  EvalOptions o;
  o.mode = EvalMode::Pure;
  return o;
}
EvalOptions fused() {
  EvalOptions o;
  o.mode = EvalMode::Fused;
  return o;
}

// independent oracle: try all 3^n colourings
bool brute_3col(const SimpleGraph& g) {
  int n = g.n();
  std::vector<int> c(n, 0);
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (long m = 0; m < total; ++m) {
    long x = m;
    for (int i = 0; i < n; ++i) {
      c[i] = x % 3;
      x /= 3;
    }
    bool ok = true;
    for (auto& [u, v] : g.edges)
      if (c[u] == c[v]) ok = false;
    if (ok) return true;
  }
  return n == 0;
}

// independent oracle: try all vertex permutations
bool brute_ham(const SimpleGraph& g) {
  int n = g.n();
  if (n <= 1) return true;
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  do {
    bool ok = true;
    for (int i = 0; i + 1 < n && ok; ++i)
      if (!g.has_edge(p[i], p[i + 1])) ok = false;
    if (ok) return true;
  } while (std::next_permutation(p.begin(), p.end()));
  return false;
}

Bitset edge_set(const Structure& A, const std::vector<std::string>& names) {
  Bitset b(A.size());
  for (auto& n : names) b.set(A.index_of(n));
  return b;
}

Bitset all_edges(const Structure& A) { return A.unary_rel("E"); }

}  // namespace

TEST_CASE("3col agrees with the brute-force oracle") {
  std::vector<Structure> corpus = {
      generate_clique(3), generate_clique(4), generate_cycle(5),
      generate_cycle(6), generate_path(4),   generate_grid(2, 3)};
  for (uint64_t seed = 1; seed <= 8; ++seed)
    corpus.push_back(generate_random(5, 0.5, seed));
  auto f = library("3col");
  for (auto& A : corpus) {
    bool expect = brute_3col(graph_of(A));
    REQUIRE(evaluate(A, f, {}, pure()) == expect);
    REQUIRE(evaluate(A, f, {}, fused()) == expect);
  }
  REQUIRE(evaluate(generate_clique(4), f) == false);
  REQUIRE(evaluate(generate_cycle(5), f) == true);
}

TEST_CASE("ham agrees with the permutation oracle on all 4-vertex graphs") {
  auto f = library("ham");
  std::vector<std::pair<std::string, std::string>> all = {
      {"a", "b"}, {"a", "c"}, {"a", "d"}, {"b", "c"}, {"b", "d"}, {"c", "d"}};
  for (int m = 0; m < 64; ++m) {
    std::vector<std::pair<std::string, std::string>> es;
    for (int i = 0; i < 6; ++i)
      if (m >> i & 1) es.push_back(all[i]);
    Structure A = incidence_of(es, {"a", "b", "c", "d"});
    bool expect = brute_ham(graph_of(A));
    INFO("edge mask " << m);
    REQUIRE(evaluate(A, f, {}, fused()) == expect);
    REQUIRE(evaluate(A, f, {}, pure()) == expect);
  }
}

TEST_CASE("path predicates: fused natives equal pure evaluation") {
  std::vector<Structure> corpus = {
      generate_path(4), generate_cycle(3),
      incidence_of({{"a", "b"}, {"c", "d"}}),            // two components
      incidence_of({{"a", "b"}, {"a", "c"}, {"a", "d"}}) // star
  };
  for (auto& A : corpus) {
    auto E = all_edges(A).members();
    for (int m = 0; m < (1 << E.size()); ++m) {
      Bitset P(A.size());
      for (size_t i = 0; i < E.size(); ++i)
        if (m >> i & 1) P.set(E[i]);
      Assignment asg{{"P", Value::of_set(P)}};
      for (auto n : {"conn", "ac", "path", "set-o-dis-path"}) {
        INFO(n << " mask " << m);
        REQUIRE(evaluate(A, library(n), asg, fused()) ==
                evaluate(A, library(n), asg, pure()));
      }
      Assignment asg2 = asg;
      asg2["PP"] = Value::of_set(all_edges(A));
      REQUIRE(evaluate(A, library("maxpath"), asg2, fused()) ==
              evaluate(A, library("maxpath"), asg2, pure()));
    }
  }
}

TEST_CASE("path predicate edge cases") {
  Structure A = generate_path(4);  // v1-v2-v3-v4
  Bitset empty(A.size());
  Assignment e{{"P", Value::of_set(empty)}};
  // the empty set is connected, acyclic and a path
  REQUIRE(evaluate(A, library("conn"), e));
  REQUIRE(evaluate(A, library("path"), e));
  REQUIRE(evaluate(A, library("set-o-dis-path"), e));
  // but not maximal once an edge is available
  Assignment e2 = e;
  e2["PP"] = Value::of_set(all_edges(A));
  REQUIRE(!evaluate(A, library("maxpath"), e2));
  e2["PP"] = Value::of_set(empty);
  REQUIRE(evaluate(A, library("maxpath"), e2));

  // a set containing a vertex element is no set of disjoint paths
  Bitset junk(A.size());
  junk.set(A.index_of("v1"));
  REQUIRE(!evaluate(A, library("set-o-dis-path"),
                    {{"P", Value::of_set(junk)}}));
  REQUIRE(!evaluate(A, library("set-o-dis-path"),
                    {{"P", Value::of_set(junk)}}, pure()));

  // endpoints of the full path
  Assignment ep{{"P", Value::of_set(all_edges(A))},
                {"x", elem_value(A, "v1")}};
  REQUIRE(evaluate(A, library("ep"), ep));
  ep["x"] = elem_value(A, "v2");
  REQUIRE(!evaluate(A, library("ep"), ep));
  ep["x"] = elem_value(A, "v2");
  REQUIRE(evaluate(A, library("ep"), ep, pure()) == false);
}

TEST_CASE("grid sentence recognizes exactly the grids") {
  auto f = library("grid-sentence");
  REQUIRE(evaluate(generate_grid(2, 2), f));
  REQUIRE(evaluate(generate_grid(2, 3), f));
  REQUIRE(evaluate(generate_grid(3, 3), f));
  REQUIRE(evaluate(generate_cycle(4), f));  // isomorphic to the 2x2 grid
  REQUIRE(!evaluate(generate_path(4), f));
  REQUIRE(!evaluate(generate_cycle(5), f));
  REQUIRE(!evaluate(generate_clique(4), f));
  REQUIRE(!evaluate(generate_clique(6), f));
}

TEST_CASE("grid formula: fused equals pure on the 2x2 grid") {
  GridMeta m;
  Structure A = generate_grid(2, 2, &m);
  Bitset VV = edge_set(A, {m.edge(1, 1, 2, 1), m.edge(1, 2, 2, 2)});
  Bitset HH = edge_set(A, {m.edge(1, 1, 1, 2), m.edge(2, 1, 2, 2)});
  Assignment good{{"VV", Value::of_set(VV)}, {"HH", Value::of_set(HH)}};
  REQUIRE(evaluate(A, library("grid"), good, fused()));
  REQUIRE(evaluate(A, library("grid"), good, pure()));
  // a family split that is not vertical/horizontal fails
  Bitset Vbad = edge_set(A, {m.edge(1, 1, 2, 1), m.edge(1, 1, 1, 2)});
  Bitset Hbad = edge_set(A, {m.edge(1, 2, 2, 2), m.edge(2, 1, 2, 2)});
  Assignment bad{{"VV", Value::of_set(Vbad)}, {"HH", Value::of_set(Hbad)}};
  REQUIRE(!evaluate(A, library("grid"), bad, fused()));
  REQUIRE(!evaluate(A, library("grid"), bad, pure()));
}

TEST_CASE("quantifier fusion over maximal paths equals pure evaluation") {
  using namespace msow::libdef;
  // "every maximal path of PP has some endpoint in the set S"
  auto f = forall_path("PP", [](const std::string& P) {
    auto x = F::gensym("x");
    return F::ex(x, F::conj(instantiate(library("ep"), {{"x", x}, {"P", P}}),
                            F::member(x, "S")));
  });
  Structure A = incidence_of({{"a", "b"}, {"b", "c"}, {"d", "e"}});
  Bitset S(A.size());
  S.set(A.index_of("a"));
  S.set(A.index_of("d"));
  Assignment asg{{"PP", Value::of_set(all_edges(A))},
                 {"S", Value::of_set(S)}};
  REQUIRE(evaluate(A, f, asg, fused()) == true);
  REQUIRE(evaluate(A, f, asg, pure()) == true);
  Bitset S2(A.size());
  S2.set(A.index_of("a"));
  Assignment asg2{{"PP", Value::of_set(all_edges(A))},
                  {"S", Value::of_set(S2)}};
  REQUIRE(evaluate(A, f, asg2, fused()) == false);
  REQUIRE(evaluate(A, f, asg2, pure()) == false);
}

TEST_CASE("witness evaluation") {
  Structure A = generate_cycle(5);
  auto f = library("3col");
  // proper colouring of C5: v1 v3 / v2 v4 / v5
  auto wit = [&](std::vector<std::string> a, std::vector<std::string> b,
                 std::vector<std::string> c) {
    return Assignment{{"C1", set_value(A, a)},
                      {"C2", set_value(A, b)},
                      {"C3", set_value(A, c)}};
  };
  REQUIRE(evaluate_with_witness(A, f, {},
                                wit({"v1", "v3"}, {"v2", "v4"}, {"v5"})));
  REQUIRE(!evaluate_with_witness(A, f, {},
                                 wit({"v1", "v2"}, {"v3", "v4"}, {"v5"})));
  // pinning only part of the existentials leaves the rest searched
  REQUIRE(evaluate_with_witness(
      A, f, {}, Assignment{{"C1", set_value(A, {"v1", "v3"})}}));
  // a witness variable must name a positive set existential
  REQUIRE_THROWS_AS(
      evaluate_with_witness(A, f, {},
                            Assignment{{"Z", set_value(A, {"v1"})}}),
      Error);
}

TEST_CASE("evaluation caps and parallel mode") {
  Structure A = generate_clique(5);
  EvalOptions tight = pure();
  tight.capBits = 3;
  REQUIRE_THROWS_WITH(evaluate(A, library("3col"), {}, tight),
                      Catch::Matchers::ContainsSubstring("cap"));

  Structure B = generate_random(6, 0.5, 7);
  EvalOptions par = pure();
  par.jobs = 2;
  REQUIRE(evaluate(B, library("3col"), {}, par) ==
          evaluate(B, library("3col"), {}, pure()));
  par.mode = EvalMode::Fused;
  REQUIRE(evaluate(B, library("ham"), {}, par) ==
          evaluate(B, library("ham"), {}, fused()));
}

TEST_CASE("counting sugar") {
  using namespace msow::sugar;
  Structure A = generate_path(3);  // 3 vertices, 2 edges
  auto isV = [](const std::string& x) { return F::rel("V", x); };
  REQUIRE(evaluate(A, at_least_elems(3, isV)));
  REQUIRE(!evaluate(A, at_least_elems(4, isV)));
  REQUIRE(evaluate(A, at_most_elems(3, isV)));
  REQUIRE(!evaluate(A, at_most_elems(2, isV)));
  REQUIRE(!evaluate(A, exactly_one_elem(isV)));
  auto isE = [](const std::string& x) { return F::rel("E", x); };
  REQUIRE(evaluate(A, at_most_elems(2, isE)));
  Structure B = incidence_of({{"a", "b"}});
  REQUIRE(evaluate(B, exactly_one_elem(isE)));
}
