#include <doctest.h>

#include <cmath>

#include "causalgeo/catalog.hpp"
#include "causalgeo/errors.hpp"
#include "causalgeo/expr.hpp"
#include "helpers.hpp"

using namespace causalgeo;

TEST_CASE("tokenizer splits the catalog expression") {
  auto toks = tokenize("y1*y2 + (1/3)*y1^3");
  REQUIRE(toks.size() == 14);  // 13 tokens plus the end marker
  CHECK(toks[12].kind == TokenKind::Number);
  CHECK(toks[11].text == "^");
  CHECK(toks[10].text == "y1");
  CHECK(toks.back().kind == TokenKind::End);
}

TEST_CASE("scientific notation becomes a single number token") {
  auto toks = tokenize("2e-3*x0");
  REQUIRE(toks.size() == 4);
  CHECK(toks[0].kind == TokenKind::Number);
  CHECK(toks[0].number == doctest::Approx(0.002));
  CHECK(toks[1].text == "*");
  CHECK(toks[2].text == "x0");
}

TEST_CASE("invalid byte reports its offset") {
  try {
    tokenize("y1 $ y2");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.pos() == 3);
  }
}

TEST_CASE("power is right associative") {
  AstPtr a = parse("2^3^2");
  CHECK(eval_real(*a, {}) == doctest::Approx(512.0));
}

TEST_CASE("unary minus binds below power") {
  AstPtr a = parse("-y1^2");
  CHECK(eval_real(*a, {{"y1", 3.0}}) == doctest::Approx(-9.0));
}

TEST_CASE("unbalanced parenthesis is rejected with position") {
  CHECK_THROWS_AS(parse("sin(x0"), ParseError);
  CHECK_THROWS_AS(parse("(x0+1"), ParseError);
}

TEST_CASE("implicit multiplication is an error") {
  CHECK_THROWS_AS(parse("2x0"), ParseError);
}

TEST_CASE("unknown function is rejected at parse time") {
  CHECK_THROWS_AS(parse("tan(x0)"), ParseError);
}

TEST_CASE("real evaluation of the cubic") {
  AstPtr a = parse("y1*y2 + (1/3)*y1^3");
  CHECK(eval_real(*a, {{"y1", 1.0}, {"y2", 2.0}}) ==
        doctest::Approx(2.0 + 1.0 / 3.0));
  CHECK_THROWS_AS(eval_real(*a, {{"y1", 1.0}}), Error);
}

TEST_CASE("jet evaluation produces the cross derivative") {
  AstPtr a = parse("y1*y2 + (1/3)*y1^3");
  std::map<std::string, Jet> env = {{"y1", Jet::variable(0, 1.0, 2, 2)},
                                    {"y2", Jet::variable(1, 2.0, 2, 2)}};
  Jet j = eval_jet(*a, env);
  CHECK(j.partial(MultiIndex({1, 1})) == doctest::Approx(1.0));
  CHECK(j.value() == doctest::Approx(2.0 + 1.0 / 3.0));
}

TEST_CASE("pretty print round trips structurally") {
  const char* exprs[] = {
      "y1*y2 + (1/3)*y1^3", "y1^2 - y2^2", "y1*y2 + x1^2",
      "exp(2*x0)",          "-y1^2 + 2^3^2", "1 + 0.2*x0 + 0.1*x1^2",
      "sqrt(4 + y1)",       "log(3 + x0) / (2 + y1)"};
  for (const char* e : exprs) {
    AstPtr a = parse(e);
    AstPtr b = parse(to_string(*a));
    CHECK(ast_equal(*a, *b));
  }
  // random expressions round trip as well
  Rng rng(5);
  std::vector<std::string> vars = {"x0", "y1", "y2"};
  for (int i = 0; i < 40; ++i) {
    AstPtr a = causalgeo::testing::random_expression(rng, vars, 3);
    AstPtr b = parse(to_string(*a));
    CHECK(ast_equal(*a, *b));
  }
}

TEST_CASE("catalog defining functions round trip through the printer") {
  for (const auto& e : causalgeo::catalog_entries()) {
    if (!e.structure) continue;
    CausalStructure s = e.structure();
    const auto* ad = dynamic_cast<const AstDefining*>(s.defining.get());
    if (!ad) continue;
    AstPtr reparsed = parse(to_string(ad->ast()));
    CHECK(ast_equal(ad->ast(), *reparsed));
  }
}

TEST_CASE("jet constant term equals real evaluation") {
  Rng rng(11);
  std::vector<std::string> vars = {"x0", "x1", "y1"};
  int done = 0;
  for (int i = 0; i < 100; ++i) {
    AstPtr a = causalgeo::testing::random_expression(rng, vars, 3);
    std::map<std::string, double> renv;
    std::map<std::string, Jet> jenv;
    for (int v = 0; v < 3; ++v) {
      double val = rng.uniform(-0.9, 0.9);
      renv[vars[static_cast<std::size_t>(v)]] = val;
      jenv[vars[static_cast<std::size_t>(v)]] = Jet::variable(v, val, 3, 2);
    }
    double rv;
    Jet jv;
    try {
      rv = eval_real(*a, renv);
      jv = eval_jet(*a, jenv);
    } catch (const Error&) {
      continue;
    }
    CHECK(std::abs(rv - jv.value()) <= 1e-14 * std::max(1.0, std::abs(rv)));
    ++done;
  }
  CHECK(done > 60);
}

TEST_CASE("variable collection and the uses_only filter") {
  AstPtr a = parse("y1*y2 + x0*exp(k)");
  std::set<std::string> vars;
  collect_vars(*a, vars);
  CHECK(vars == std::set<std::string>{"y1", "y2", "x0", "k"});
  CHECK(uses_only(*a, {"y1", "y2", "x0", "k"}));
  CHECK_FALSE(uses_only(*a, {"y1", "y2", "x0"}));
}
