#include <cmath>
#include <random>

#include "cauda/dsl.hpp"
#include "cauda/error.hpp"
#include "cauda/formula.hpp"
#include "cauda/fuzzy.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cauda;
using namespace cauda::logic;

namespace {

TruthAssignment probs_37(double pv3, double pn7) {
  TruthAssignment t{std::vector<double>(5, (1.0 - pv3) / 4.0), std::vector<double>(8, (1.0 - pn7) / 7.0)};
  t.verb_probs[3] = pv3;
  t.noun_probs[7] = pn7;
  return t;
}

const TNorm kAll[] = {TNorm::Product, TNorm::Goedel, TNorm::Lukasiewicz};

}  // namespace

TEST_SUITE("formula") {
  TEST_CASE("structural queries") {
    auto f = Formula::implication(Formula::verb(0),
                                  Formula::disjunction(Formula::noun(1), Formula::negation(Formula::noun(2))));
    CHECK(f.kind() == Formula::Kind::Implies);
    CHECK(f.size() == 6);
    CHECK(f.depth() == 4);
    auto atoms = f.atoms();
    REQUIRE(atoms.size() == 3);
    CHECK(atoms[0] == Atom{Branch::Verb, 0});
    CHECK(atoms[2] == Atom{Branch::Noun, 2});
    CHECK(f.within({1, 3}));
    CHECK_FALSE(f.within({1, 2}));
  }

  TEST_CASE("accessors reject the wrong node kind") {
    auto a = Formula::verb(1);
    CHECK_THROWS_AS(a.lhs(), InvalidConstraintSet);
    CHECK_THROWS_AS(a.operand(), InvalidConstraintSet);
    CHECK_THROWS_AS(Formula::negation(a).as_atom(), InvalidConstraintSet);
  }

  TEST_CASE("constraint sets are non-empty and bounded") {
    CHECK_THROWS_AS(ConstraintSet({}, ConstraintMode::InvalidNegations), InvalidConstraintSet);
    CHECK_THROWS_AS(ConstraintSet({Formula::noun(4)}, ConstraintMode::InvalidNegations, VocabDims{2, 4}),
                    BoundsError);
    CHECK_NOTHROW(ConstraintSet({Formula::noun(3)}, ConstraintMode::InvalidNegations, VocabDims{2, 4}));
  }

  TEST_CASE("very long chains can be built, compared and destroyed") {
    Formula f = Formula::verb(0);
    for (int k = 0; k < 200000; ++k) f = Formula::disjunction(f, Formula::noun(k % 7));
    Formula g = Formula::verb(0);
    for (int k = 0; k < 200000; ++k) g = Formula::disjunction(g, Formula::noun(k % 7));
    CHECK(f == g);
  }
}

TEST_SUITE("dsl") {
  TEST_CASE("parses the documented examples") {
    auto set = parse_constraints("!(verb:3 & noun:7)\nverb:0 -> (noun:1 | noun:2)\n");
    REQUIRE(set.size() == 2);
    CHECK(set.formulas()[0] ==
          Formula::negation(Formula::conjunction(Formula::verb(3), Formula::noun(7))));
    CHECK(set.formulas()[1] ==
          Formula::implication(Formula::verb(0), Formula::disjunction(Formula::noun(1), Formula::noun(2))));
    CHECK(set.mode() == ConstraintMode::InvalidNegations);
  }

  TEST_CASE("syntax errors point at the offending token") {
    try {
      parse_constraints("verb:& noun:2");
      FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
      CHECK(e.line() == 1);
      CHECK(e.column() == 6);
    }
    CHECK_THROWS_AS(parse_constraints("verb:1 &"), SyntaxError);
    CHECK_THROWS_AS(parse_constraints("(verb:1"), SyntaxError);
    CHECK_THROWS_AS(parse_constraints("verb:1 noun:2"), SyntaxError);
    CHECK_THROWS_AS(parse_constraints("verb:99999999999"), SyntaxError);
    CHECK_THROWS_AS(parse_constraints("# only a comment\n"), InvalidConstraintSet);
    try {
      parse_constraints("verb:1\n\n  noun:2 | ?");
      FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
      CHECK(e.line() == 3);
      CHECK(e.column() == 12);
    }
  }

  TEST_CASE("precedence and associativity") {
    auto f = parse_formula("!verb:0 & noun:1 | verb:2 -> noun:3 -> noun:4");
    auto expect = Formula::implication(
        Formula::disjunction(Formula::conjunction(Formula::negation(Formula::verb(0)), Formula::noun(1)),
                             Formula::verb(2)),
        Formula::implication(Formula::noun(3), Formula::noun(4)));
    CHECK(f == expect);
    auto g = parse_formula("verb:0 | verb:1 | verb:2");
    CHECK(g == Formula::disjunction(Formula::disjunction(Formula::verb(0), Formula::verb(1)), Formula::verb(2)));
  }

  TEST_CASE("header directives") {
    auto set = parse_constraints("#! vocab verbs=4 nouns=5\n#! mode valid-disjunction\n(verb:0 & noun:4)\n");
    REQUIRE(set.dims());
    CHECK(*set.dims() == VocabDims{4, 5});
    CHECK(set.mode() == ConstraintMode::ValidDisjunction);
    CHECK_THROWS_AS(parse_constraints("#! vocab verbs=4 nouns=5\nnoun:5\n"), BoundsError);
    CHECK_THROWS_AS(parse_constraints("verb:0\n#! vocab verbs=4 nouns=5\n"), SyntaxError);
  }

  TEST_CASE("rendering is canonical") {
    CHECK(render_formula(Formula::negation(Formula::conjunction(Formula::verb(3), Formula::noun(7)))) ==
          "!(verb:3 & noun:7)");
    auto set = parse_constraints("  verb:0->( noun:1|noun:2 )  # comment\n");
    CHECK(render_constraints(set) == "verb:0 -> (noun:1 | noun:2)\n");
    auto nested = Formula::implication(Formula::implication(Formula::verb(0), Formula::verb(1)), Formula::verb(2));
    CHECK(render_formula(nested) == "(verb:0 -> verb:1) -> verb:2");
    CHECK(parse_formula(render_formula(nested)) == nested);
  }

  TEST_CASE("parse . render is the identity on 1000 random ASTs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
      auto f = oracle_ref::random_formula(rng, 9, 11, 7);
      const std::string text = render_formula(f);
      auto back = parse_formula(text);
      REQUIRE_MESSAGE(back == f, text);
      CHECK(render_formula(back) == text);
    }
  }

  TEST_CASE("constraint files round-trip with their headers") {
    std::mt19937_64 rng(8);
    std::vector<Formula> fs;
    for (int k = 0; k < 20; ++k) fs.push_back(oracle_ref::random_formula(rng, 6, 6, 5));
    ConstraintSet set(fs, ConstraintMode::ValidDisjunction, VocabDims{6, 6});
    CHECK(parse_constraints(render_constraints(set)) == set);
  }
}

TEST_SUITE("fuzzy") {
  TEST_CASE("definitional values") {
    auto t = probs_37(0.5, 0.4);
    auto neg = parse_formula("!(verb:3 & noun:7)");
    CHECK(evaluate(neg, t, {TNorm::Product}) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(evaluate(parse_formula("verb:3 & noun:7"), t, {TNorm::Goedel}) == 0.4);
    CHECK(evaluate(parse_formula("verb:3 & noun:7"), t, {TNorm::Lukasiewicz}) == 0.0);
    CHECK(evaluate(parse_formula("verb:3 | noun:7"), t, {TNorm::Lukasiewicz}) == doctest::Approx(0.9));
    CHECK(evaluate(parse_formula("verb:3 | noun:7"), t, {TNorm::Product}) == doctest::Approx(0.7));
  }

  TEST_CASE("atoms on one-hot assignments are exactly 0 or 1") {
    TruthAssignment t{{0, 1, 0}, {1, 0}};
    for (auto n : kAll) {
      CHECK(evaluate(Formula::verb(1), t, {n}) == 1.0);
      CHECK(evaluate(Formula::verb(0), t, {n}) == 0.0);
      CHECK(evaluate(Formula::noun(0), t, {n}) == 1.0);
    }
  }

  TEST_CASE("dimension mismatches are reported") {
    TruthAssignment t{{0.5, 0.5}, {1.0}};
    CHECK_THROWS_AS(evaluate(Formula::noun(1), t), DimensionMismatch);
    CHECK_THROWS_AS(evaluate_gradient(Formula::verb(2), t), DimensionMismatch);
  }

  TEST_CASE("agrees with the recursive reference relaxation and stays in [0,1]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 600; ++trial) {
      auto f = oracle_ref::random_formula(rng, 5, 6, 6);
      TruthAssignment t{oracle_ref::random_unit(rng, 5, 0.0, 1.0), oracle_ref::random_unit(rng, 6, 0.0, 1.0)};
      for (auto n : kAll) {
        const double got = evaluate(f, t, {n});
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
        CHECK(got == doctest::Approx(oracle_ref::fuzzy(f, t, n)).epsilon(1e-12).scale(1.0));
      }
    }
  }

  TEST_CASE("double negation is exact and implication is definitional") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 300; ++trial) {
      auto a = oracle_ref::random_formula(rng, 4, 4, 5);
      auto b = oracle_ref::random_formula(rng, 4, 4, 5);
      TruthAssignment t{oracle_ref::random_unit(rng, 4, 0.0, 1.0), oracle_ref::random_unit(rng, 4, 0.0, 1.0)};
      for (auto n : kAll) {
        Semantics s{n};
        CHECK(evaluate(Formula::negation(Formula::negation(a)), t, s) == evaluate(a, t, s));
        CHECK(evaluate(Formula::implication(a, b), t, s) ==
              evaluate(Formula::disjunction(Formula::negation(a), b), t, s));
      }
    }
  }

  TEST_CASE("boolean soundness on one-hot assignments") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 500; ++trial) {
      const std::uint32_t V = 1 + rng() % 8, N = 1 + rng() % 8;
      auto f = oracle_ref::random_formula(rng, V, N, 6);
      TruthAssignment t{std::vector<double>(V, 0.0), std::vector<double>(N, 0.0)};
      std::vector<bool> bv(V), bn(N);
      const auto i = rng() % V, j = rng() % N;
      t.verb_probs[i] = 1.0;
      t.noun_probs[j] = 1.0;
      bv[i] = true;
      bn[j] = true;
      const double expect = oracle_ref::classic(f, bv, bn) ? 1.0 : 0.0;
      for (auto n : kAll) CHECK(evaluate(f, t, {n}) == expect);
    }
  }

  TEST_CASE("formula gradients match central differences") {
    std::mt19937_64 rng(14);
    int checked = 0;
    for (int trial = 0; trial < 150; ++trial) {
      auto f = oracle_ref::random_formula(rng, 4, 5, 5);
      TruthAssignment t{oracle_ref::random_unit(rng, 4), oracle_ref::random_unit(rng, 5)};
      for (auto n : {TNorm::Product, TNorm::Lukasiewicz}) {
        Semantics s{n};
        auto g = evaluate_gradient(f, t, s);
        std::vector<double> x = t.verb_probs;
        x.insert(x.end(), t.noun_probs.begin(), t.noun_probs.end());
        auto fn = [&](const std::vector<double>& y) {
          TruthAssignment u{{y.begin(), y.begin() + 4}, {y.begin() + 4, y.end()}};
          return evaluate(f, u, s);
        };
        // Lukasiewicz is piecewise linear; skip points within h of a kink.
        bool near_kink = false;
        if (n == TNorm::Lukasiewicz) {
          auto probe = oracle_ref::numeric_gradient(fn, x, 1e-6);
          auto probe2 = oracle_ref::numeric_gradient(fn, x, 1e-5);
          near_kink = oracle_ref::relative_error(probe, probe2) > 1e-6;
        }
        if (near_kink) continue;
        std::vector<double> analytic = g.verb;
        analytic.insert(analytic.end(), g.noun.begin(), g.noun.end());
        CHECK(oracle_ref::relative_error(analytic, oracle_ref::numeric_gradient(fn, x)) <= 1e-4);
        ++checked;
      }
    }
    CHECK(checked >= 200);
  }

  TEST_CASE("Goedel ties send the gradient to the left operand") {
    TruthAssignment t{{0.3, 0.7}, {0.3, 0.7}};
    auto g = evaluate_gradient(parse_formula("verb:0 & noun:0"), t, {TNorm::Goedel});
    CHECK(g.verb[0] == 1.0);
    CHECK(g.noun[0] == 0.0);
    auto h = evaluate_gradient(parse_formula("noun:0 | verb:0"), t, {TNorm::Goedel});
    CHECK(h.noun[0] == 1.0);
    CHECK(h.verb[0] == 0.0);
  }

  TEST_CASE("constant formula has zero gradient") {
    TruthAssignment t{{0.2, 0.8}, {0.6, 0.4}};
    auto f = parse_formula("verb:0 | !verb:0");
    CHECK(evaluate(f, t, {TNorm::Lukasiewicz}) == 1.0);
    CHECK(evaluate_gradient(f, t, {TNorm::Lukasiewicz}).verb == std::vector<double>{0.0, 0.0});
    auto taut = parse_formula("verb:0 -> verb:0");
    CHECK(evaluate(taut, t, {TNorm::Lukasiewicz}) == 1.0);
    CHECK(logic_loss_grad(ConstraintSet({taut}, ConstraintMode::InvalidNegations), t, {TNorm::Lukasiewicz}).verb ==
          std::vector<double>{0.0, 0.0});
  }
}

TEST_SUITE("semantic loss") {
  TEST_CASE("boundary values") {
    cooccur::ValidityMask m(2, 2, {1, 0, 0, 1});
    CHECK(semantic_loss(m, {{1, 0}, {1, 0}}) == 0.0);
    CHECK(semantic_loss(m, {{1, 0}, {0, 1}}) == doctest::Approx(-std::log(1e-12)));
    CHECK(semantic_loss(m, {{1, 0}, {0, 1}}) == doctest::Approx(27.631021115928547));
  }

  TEST_CASE("uniform assignment over a 4x5 grid with six valid pairs") {
    std::vector<std::uint8_t> cells(20, 0);
    for (int k : {0, 3, 7, 11, 12, 19}) cells[k] = 1;
    cooccur::ValidityMask m(4, 5, cells);
    TruthAssignment t{std::vector<double>(4, 0.25), std::vector<double>(5, 0.2)};
    CHECK(semantic_loss(m, t) == doctest::Approx(-std::log(6.0 / 20.0)).epsilon(1e-14));
    CHECK(semantic_loss(m, t) == doctest::Approx(oracle_ref::semantic_loss(m, t)).epsilon(1e-14));
  }

  TEST_CASE("single valid pair has the closed-form gradient") {
    cooccur::ValidityMask m(3, 2, {0, 0, 0, 1, 0, 0});
    TruthAssignment t{{0.2, 0.5, 0.3}, {0.4, 0.6}};
    auto g = semantic_loss_gradient(m, t);
    CHECK(g.verb[1] == doctest::Approx(-1.0 / 0.5));
    CHECK(g.noun[1] == doctest::Approx(-1.0 / 0.6));
    CHECK(g.verb[0] == 0.0);
    CHECK(g.noun[0] == 0.0);
  }

  TEST_CASE("matches brute-force enumeration") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t V = 1 + rng() % 10, N = 1 + rng() % 10;
      auto m = oracle_ref::random_mask(rng, V, N);
      TruthAssignment t{oracle_ref::random_simplex(rng, V, 0.0), oracle_ref::random_simplex(rng, N, 0.0)};
      CHECK(std::abs(semantic_loss(m, t) - oracle_ref::semantic_loss(m, t)) <= 1e-9);
    }
  }

  TEST_CASE("gradient matches central differences") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t V = 2 + rng() % 5, N = 2 + rng() % 5;
      auto m = oracle_ref::random_mask(rng, V, N, 0.4);
      TruthAssignment t{oracle_ref::random_simplex(rng, V), oracle_ref::random_simplex(rng, N)};
      auto g = semantic_loss_gradient(m, t);
      std::vector<double> x = t.verb_probs, analytic = g.verb;
      x.insert(x.end(), t.noun_probs.begin(), t.noun_probs.end());
      analytic.insert(analytic.end(), g.noun.begin(), g.noun.end());
      auto fn = [&](const std::vector<double>& y) {
        return oracle_ref::semantic_loss(m, {{y.begin(), y.begin() + static_cast<long>(V)},
                                             {y.begin() + static_cast<long>(V), y.end()}});
      };
      CHECK(oracle_ref::relative_error(analytic, oracle_ref::numeric_gradient(fn, x)) <= 1e-4);
    }
  }
}

TEST_SUITE("logic loss") {
  TEST_CASE("InvalidNegations averages -log of each formula") {
    TruthAssignment t{{1.0, 0.0}, {0.0, 1.0}};
    ConstraintSet sat({parse_formula("!(verb:0 & noun:0)")}, ConstraintMode::InvalidNegations);
    CHECK(logic_loss(sat, t) == 0.0);

    // verb:0 evaluates to e^-1 and noun:0 to e^-3.
    TruthAssignment u{{std::exp(-1.0), 1.0 - std::exp(-1.0)}, {std::exp(-3.0), 1.0 - std::exp(-3.0)}};
    ConstraintSet two({Formula::verb(0), Formula::noun(0)}, ConstraintMode::InvalidNegations);
    CHECK(logic_loss(two, u) == doctest::Approx(2.0).epsilon(1e-14));
  }

  TEST_CASE("ValidDisjunction under Product equals the semantic loss") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t V = 2 + rng() % 6, N = 2 + rng() % 6;
      auto m = oracle_ref::random_mask(rng, V, N);
      auto set = parse_constraints(render_constraints(
          ConstraintSet({[&] {
                          std::optional<Formula> f;
                          for (std::size_t i = 0; i < V; ++i)
                            for (std::size_t j = 0; j < N; ++j)
                              if (m.valid(i, j)) {
                                auto c = Formula::conjunction(Formula::verb(static_cast<std::uint32_t>(i)),
                                                              Formula::noun(static_cast<std::uint32_t>(j)));
                                f = f ? Formula::disjunction(*f, c) : c;
                              }
                          return *f;
                        }()},
                        ConstraintMode::ValidDisjunction)));
      LogicLoss loss(set);
      CHECK(loss.exact_form());
      TruthAssignment t{oracle_ref::random_simplex(rng, V), oracle_ref::random_simplex(rng, N)};
      CHECK(std::abs(loss.value(t) - semantic_loss(m, t)) <= 1e-9);
      auto g = loss.gradient(t), h = semantic_loss_gradient(m, t);
      for (std::size_t i = 0; i < V; ++i) CHECK(g.verb[i] == doctest::Approx(h.verb[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("non-negative, zero exactly when every formula is satisfied") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<Formula> fs;
      for (int k = 0; k < 3; ++k) fs.push_back(oracle_ref::random_formula(rng, 3, 3, 4));
      ConstraintSet set(fs, ConstraintMode::InvalidNegations);
      TruthAssignment t{oracle_ref::random_simplex(rng, 3, 0.0), oracle_ref::random_simplex(rng, 3, 0.0)};
      for (auto n : kAll) {
        const double l = logic_loss(set, t, {n});
        CHECK(l >= 0.0);
        bool all_true = true;
        for (const auto& f : fs) all_true = all_true && evaluate(f, t, {n}) == 1.0;
        CHECK((l == 0.0) == all_true);
      }
    }
  }

  TEST_CASE("gradients match central differences for every semantics path") {
    std::mt19937_64 rng(33);
    int checked = 0;
    for (int trial = 0; trial < 120; ++trial) {
      std::vector<Formula> fs;
      for (int k = 0; k < 2; ++k) fs.push_back(oracle_ref::random_formula(rng, 4, 5, 4));
      ConstraintSet set(fs, ConstraintMode::InvalidNegations);
      TruthAssignment t{oracle_ref::random_unit(rng, 4), oracle_ref::random_unit(rng, 5)};
      auto g = logic_loss_grad(set, t);
      std::vector<double> x = t.verb_probs, analytic = g.verb;
      x.insert(x.end(), t.noun_probs.begin(), t.noun_probs.end());
      analytic.insert(analytic.end(), g.noun.begin(), g.noun.end());
      auto fn = [&](const std::vector<double>& y) {
        return logic_loss(set, {{y.begin(), y.begin() + 4}, {y.begin() + 4, y.end()}});
      };
      CHECK(oracle_ref::relative_error(analytic, oracle_ref::numeric_gradient(fn, x)) <= 1e-4);
      ++checked;
    }
    CHECK(checked == 120);
  }

  TEST_CASE("semantics validation") {
    CHECK_THROWS_AS(Semantics({TNorm::Product, 0.0}).validate(), ConfigError);
    CHECK_THROWS_AS(Semantics({TNorm::Product, 1e-2}).validate(), ConfigError);
    CHECK(parse_tnorm("godel") == TNorm::Goedel);
    CHECK(parse_tnorm(to_string(TNorm::Lukasiewicz)) == TNorm::Lukasiewicz);
    CHECK_THROWS(parse_tnorm("minimum"));
  }
}
