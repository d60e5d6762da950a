#include <catch2/catch_amalgamated.hpp>

#include "msow/library.hpp"
#include "msow/parse.hpp"

using namespace msow;
using namespace msow::F;

TEST_CASE("parse basic syntax") {
  auto f = parse_formula("exists X subset V. forall x:V. member(x,X)");
  REQUIRE(f->kind == Kind::ExistsSet);
  REQUIRE(f->sort == SetSort::SubV);
  REQUIRE(f->var == "X");
  auto g = f->kids[0];
  REQUIRE(g->kind == Kind::Forall);
  // relativized element quantifier desugars to a guard
  REQUIRE(g->kids[0]->kind == Kind::Implies);
  REQUIRE(g->kids[0]->kids[0]->rel == "V");

  auto h = parse_formula("exists Y:subset(X). member(a,Y)");
  REQUIRE(h->sort == SetSort::SubVar);
  REQUIRE(h->sortVar == "X");
}

TEST_CASE("parse rejects malformed input") {
  REQUIRE_THROWS_AS(parse_formula("and("), Error);
  REQUIRE_THROWS_AS(parse_formula("rel(V,x) &"), Error);
  REQUIRE_THROWS_AS(parse_formula("exists . true"), Error);
  REQUIRE_THROWS_WITH(parse_formula("member(x,X) extra"),
                      Catch::Matchers::ContainsSubstring("syntax error"));
}

TEST_CASE("operator precedence and associativity") {
  auto f = parse_formula("rel(V,x) & rel(V,y) | rel(V,z)");
  REQUIRE(f->kind == Kind::Or);
  REQUIRE(f->kids[0]->kind == Kind::And);

  auto g = parse_formula("rel(V,x) -> rel(V,y) -> rel(V,z)");
  REQUIRE(g->kind == Kind::Implies);
  REQUIRE(g->kids[1]->kind == Kind::Implies);

  auto h = parse_formula("!rel(V,x) & rel(V,y)");
  REQUIRE(h->kind == Kind::And);
  REQUIRE(h->kids[0]->kind == Kind::Not);
}

TEST_CASE("render/parse round trip") {
  std::vector<std::string> srcs = {
      "true",
      "!member(x,X) & (rel(V,y) | eq(x,y))",
      "(rel(V,x) & rel(V,y)) & rel(V,z)",
      "rel(V,x) <-> rel(in,x,e) -> false",
      "exists X:set. forall y. member(y,X)",
      "forall P:subsetE. exists Q:subset(P). !member(e,Q)",
  };
  for (auto& s : srcs) {
    auto f = parse_formula(s);
    auto g = parse_formula(render(f));
    INFO(s << "  =>  " << render(f));
    REQUIRE(equal(f, g));
  }
  for (auto n : {"conn", "ac", "path", "set-o-dis-path", "maxpath", "ep",
                 "3col", "ham", "grid-border", "grid"}) {
    auto f = library(n);
    auto g = parse_formula(render(f));
    INFO(n);
    REQUIRE(equal(f, g));
  }
}

TEST_CASE("free variables") {
  auto f = library("maxpath");
  REQUIRE(free_vars(f).sets == std::set<std::string>{"P", "PP"});
  REQUIRE(free_vars(f).elems.empty());

  auto g = library("ep");
  REQUIRE(free_vars(g).sets == std::set<std::string>{"P"});
  REQUIRE(free_vars(g).elems == std::set<std::string>{"x"});

  REQUIRE(free_vars(library("3col")).sets.empty());
  REQUIRE(free_vars(library("3col")).elems.empty());

  // a subset(Y) sort contributes Y as a free set variable
  auto h = parse_formula("exists Q:subset(P). member(e,Q)");
  REQUIRE(free_vars(h).sets == std::set<std::string>{"P"});
}

TEST_CASE("macro matching is alpha-invariant") {
  auto pat = library("conn");
  auto inst = instantiate(pat, {{"P", "Walk"}});
  auto m = match_macro(pat, inst);
  REQUIRE(m.has_value());
  REQUIRE(m->at("P") == "Walk");

  // matching survives a parse/render cycle
  auto reparsed = parse_formula(render(inst));
  auto m2 = match_macro(pat, reparsed);
  REQUIRE(m2.has_value());
  REQUIRE(m2->at("P") == "Walk");

  // a structurally different formula does not match
  auto other = F::neg(inst);
  REQUIRE(!match_macro(pat, other).has_value());
}

TEST_CASE("instantiated library formulas keep their shape") {
  for (auto n : {"conn", "ac", "path", "set-o-dis-path", "ep"}) {
    auto pat = library(n);
    std::map<std::string, std::string> ren;
    for (auto& v : free_vars(pat).sets) ren[v] = v + "zz";
    for (auto& v : free_vars(pat).elems) ren[v] = v + "zz";
    auto inst = instantiate(pat, ren);
    INFO(n);
    REQUIRE(match_macro(pat, inst).has_value());
    REQUIRE(shape_hash(pat) == shape_hash(inst));
  }
  // distinct library formulas have distinct shapes
  REQUIRE(shape_hash(library("conn")) != shape_hash(library("ac")));
  REQUIRE(shape_hash(library("path")) != shape_hash(library("set-o-dis-path")));
}

TEST_CASE("rename_free respects binders") {
  auto f = exS("P", member("x", "P"));
  auto g = rename_free(f, {{"P", "Q"}, {"x", "y"}});
  REQUIRE(g->var == "P");
  REQUIRE(g->kids[0]->v2 == "P");  // bound occurrence untouched
  REQUIRE(g->kids[0]->v1 == "y");

  auto h = freshen(f);
  REQUIRE(h->var != "P");
  REQUIRE(h->kids[0]->v2 == h->var);
  REQUIRE(equal(f, f));
  REQUIRE(!equal(f, h));          // equality is structural, names included
  REQUIRE(match_macro(f, h).has_value());
}
