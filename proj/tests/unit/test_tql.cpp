#include "doctest.h"

#include "handover/errors.hpp"
#include "handover/tql.hpp"
#include "oracles.hpp"

using namespace handover;

namespace {

const Alphabet& abc() { return oracle::Generator::alphabet(); }

std::vector<PropositionSet> trace_of(std::initializer_list<std::initializer_list<const char*>> steps) {
  std::vector<PropositionSet> out;
  for (auto step : steps) {
    PropositionSet s;
    for (const char* name : step) s.insert(*abc().index_of(name));
    out.push_back(s);
  }
  return out;
}

Formula q(std::string_view text) { return bind(parse_query(text), abc()); }

}  // namespace

TEST_CASE("parser honours precedence") {
  CHECK(parse_query("a | b & c") ==
        Formula::disjunction(Formula::atom("a"),
                             Formula::conjunction(Formula::atom("b"), Formula::atom("c"))));
  CHECK(parse_query("!a U[<=3] b & c") ==
        Formula::conjunction(
            Formula::until(3, Formula::negation(Formula::atom("a")), Formula::atom("b")),
            Formula::atom("c")));
  CHECK(parse_query("F[<=2] X a") == Formula::finally(2, Formula::next(Formula::atom("a"))));
  CHECK(parse_query("  ( true )") == Formula::constant(true));
}

TEST_CASE("until does not chain") {
  CHECK_THROWS_AS(parse_query("a U[<=1] b U[<=1] c"), NonChainingUntil);
  CHECK_NOTHROW(parse_query("(a U[<=1] b) U[<=1] c"));
}

TEST_CASE("syntax errors carry the offset") {
  try {
    parse_query("a & F[<=x] b");
    FAIL("expected a syntax error");
  } catch (const QuerySyntaxError& e) {
    CHECK(e.offset() == 8);
  }
  CHECK_THROWS_AS(parse_query(""), QuerySyntaxError);
  CHECK_THROWS_AS(parse_query("a b"), QuerySyntaxError);
  CHECK_THROWS_AS(parse_query("(a"), QuerySyntaxError);
  CHECK_THROWS_AS(parse_query("G[<=-1] a"), QuerySyntaxError);
}

TEST_CASE("binding rejects unknown atoms") {
  CHECK_THROWS_AS(bind(parse_query("a & zebra"), abc()), UnknownAtom);
  CHECK(atom_names(parse_query("b & a | b")) == std::vector<std::string>{"b", "a"});
}

TEST_CASE("finite trace semantics") {
  const auto t = trace_of({{"a"}, {"a"}, {"b"}});
  CHECK_FALSE(eval(q("X a"), t, 2));  // strong next
  CHECK(eval(q("X b"), t, 1));
  CHECK(eval(q("G[<=5] a"), t, 0) == false);
  CHECK(eval(q("G[<=5] b"), t, 2));  // window clipped at the end
  CHECK(eval(q("F[<=1] b"), t, 0) == false);
  CHECK(eval(q("F[<=2] b"), t, 0));
  CHECK(eval(q("a U[<=2] b"), t, 0));
  CHECK_FALSE(eval(q("a U[<=1] b"), t, 0));
  CHECK_THROWS_AS(eval(q("a"), t, 3), std::out_of_range);
  CHECK(earliest_match(q("F[<=5] b"), t) == std::optional<std::size_t>(2));
  CHECK(earliest_match(q("a & F[<=5] b"), t) == std::optional<std::size_t>(0));
  CHECK_FALSE(earliest_match(q("F[<=5] c"), t).has_value());
}

TEST_CASE("print then parse is the identity") {
  oracle::Generator gen(11);
  for (int i = 0; i < 2000; ++i) {
    const Formula f = gen.formula(5, 6);
    const std::string text = to_string(f);
    CAPTURE(text);
    CHECK(parse_query(text) == f);
  }
}

TEST_CASE("structural hash agrees with equality") {
  oracle::Generator gen(5);
  for (int i = 0; i < 1000; ++i) {
    const Formula f = gen.formula(4, 5);
    const Formula g = bind(parse_query(to_string(f)), abc());
    REQUIRE(f == g);
    CHECK(hash_value(f) == hash_value(g));
  }
  CHECK(hash_value(q("F[<=2] a")) != hash_value(q("F[<=3] a")));
}

TEST_CASE("dynamic program agrees with the direct semantics at every index") {
  oracle::Generator gen(23);
  for (int i = 0; i < 3000; ++i) {
    const Formula f = gen.formula(4, 5);
    const auto t = gen.trace(1, 8);
    const auto all = eval_all(f, t);
    REQUIRE(all.size() == t.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
      CAPTURE(to_string(f));
      CHECK(all[j] == oracle::holds(f, t, j));
    }
    CHECK(earliest_match(f, t) == oracle::earliest(f, t));
  }
}

TEST_CASE("progression through a whole trace yields the verdict at 0") {
  oracle::Generator gen(31);
  for (int i = 0; i < 3000; ++i) {
    const Formula f = gen.formula(4, 5);
    const auto t = gen.trace(1, 8);
    Formula residual = f;
    for (std::size_t j = 0; j < t.size(); ++j) {
      residual = progress(residual, t[j], j + 1 == t.size());
    }
    CAPTURE(to_string(f));
    REQUIRE(residual.is_constant());
    CHECK((residual.op() == Op::True) == oracle::holds(f, t, 0));
  }
}

TEST_CASE("a constant residual is final") {
  oracle::Generator gen(47);
  for (int i = 0; i < 2000; ++i) {
    const Formula f = gen.formula(4, 5);
    const auto t = gen.trace(2, 8);
    Formula residual = f;
    for (std::size_t j = 0; j + 1 < t.size(); ++j) {
      residual = progress(residual, t[j], false);
      if (residual.is_constant()) {
        CHECK((residual.op() == Op::True) == oracle::holds(f, t, 0));
        break;
      }
    }
  }
}

TEST_CASE("alphabet and proposition sets") {
  Alphabet a;
  CHECK(a.add("x") == 0);
  CHECK(a.add("y") == 1);
  CHECK(a.add("x") == 0);
  CHECK(a.index_of("z") == std::nullopt);
  PropositionSet s;
  s.insert(1);
  CHECK(s.names(a) == std::vector<std::string>{"y"});
  s.erase(1);
  CHECK(s.empty());
}
