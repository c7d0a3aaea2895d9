#include <memory>

#include "doctest.h"
#include "heapguard/support/rng.hpp"
#include "heapguard/sym/predicate.hpp"

using namespace heapguard::sym;
using heapguard::support::Rng;

namespace {

struct Fixture {
  std::shared_ptr<VarSpace> space = std::make_shared<VarSpace>();
  std::vector<Var> vars;
  std::unique_ptr<PredicateManager> mgr;

  explicit Fixture(int nvars) {
    for (int i = 0; i < nvars; ++i) vars.push_back(space->add_bool("v" + std::to_string(i)));
    mgr = std::make_unique<PredicateManager>(space);
  }
  Predicate v(int i) { return mgr->var(vars[i]); }
};

// Random formula generator for the canonicality property.
Predicate random_formula(Fixture& fx, Rng& rng, int depth) {
  if (depth == 0 || rng.chance(25)) {
    switch (rng.below(4)) {
      case 0:
        return fx.mgr->top();
      case 1:
        return fx.mgr->bottom();
      default:
        return fx.v(static_cast<int>(rng.below(fx.vars.size())));
    }
  }
  switch (rng.below(5)) {
    case 0:
      return !random_formula(fx, rng, depth - 1);
    case 1:
      return random_formula(fx, rng, depth - 1) && random_formula(fx, rng, depth - 1);
    case 2:
      return random_formula(fx, rng, depth - 1) || random_formula(fx, rng, depth - 1);
    case 3:
      return fx.mgr->implies(random_formula(fx, rng, depth - 1),
                             random_formula(fx, rng, depth - 1));
    default:
      return fx.mgr->ite(random_formula(fx, rng, depth - 1), random_formula(fx, rng, depth - 1),
                         random_formula(fx, rng, depth - 1));
  }
}

bool truth_table_equal(Fixture& fx, Predicate a, Predicate b) {
  size_t n = fx.vars.size();
  for (uint64_t m = 0; m < (1ull << n); ++m) {
    Valuation val;
    for (size_t i = 0; i < n; ++i) val.set_bool(fx.vars[i], (m >> i) & 1);
    if (fx.mgr->eval(a, val) != fx.mgr->eval(b, val)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("boolean algebra identities") {
  Fixture fx(3);
  auto a = fx.v(0), b = fx.v(1);
  CHECK(fx.mgr->ite(fx.mgr->top(), a, b) == a);
  CHECK((a || fx.mgr->bottom()) == a);
  CHECK((a && fx.mgr->top()) == a);
  CHECK(!(!a) == a);
  CHECK((a && !a).is_false());
  CHECK((a || !a).is_true());
  CHECK(fx.mgr->implies(a && b, a).is_true());
  CHECK(fx.mgr->equiv(a, a).is_true());
}

TEST_CASE("level conditional folds to expected formula") {
  // (if c then i else low) = low  is  !(c & i)  over the Boolean encoding.
  Fixture fx(2);
  auto c = fx.v(0), i = fx.v(1);
  auto cond = fx.mgr->ite(c, i, fx.mgr->bottom());
  CHECK(!cond == !(c && i));
}

TEST_CASE("canonicality: semantic equivalence iff structural equality") {
  Fixture fx(6);
  Rng rng(0xC0FFEE);
  int equal_pairs = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Predicate f = random_formula(fx, rng, 4);
    Predicate g = random_formula(fx, rng, 4);
    bool sem = truth_table_equal(fx, f, g);
    bool str = f == g;
    CHECK(sem == str);
    equal_pairs += str;
  }
  CHECK(equal_pairs > 0);  // the generator does produce coincident pairs
}

TEST_CASE("assignment merge combines doubly-assigned variables") {
  Fixture fx(4);
  AssignmentSet a, b;
  a.set(fx.vars[0], fx.mgr->top());
  a.set(fx.vars[1], fx.mgr->bottom());
  b.set(fx.vars[1], fx.mgr->top());
  AssignmentSet m = fx.mgr->merge(a, b);
  CHECK(m.rhs(fx.vars[0]).pred == fx.mgr->top());
  CHECK(m.rhs(fx.vars[1]).pred == (fx.mgr->bottom() || fx.mgr->top()));
  // Merging with the empty set is the identity.
  AssignmentSet e;
  AssignmentSet m2 = fx.mgr->merge(a, e);
  CHECK(m2.entries().size() == a.entries().size());
}

TEST_CASE("substitution is simultaneous") {
  Fixture fx(2);
  auto h = fx.vars[0], h2 = fx.vars[1];
  AssignmentSet swap;
  swap.set(h, fx.mgr->var(h2));
  swap.set(h2, fx.mgr->var(h));
  Predicate f = fx.v(0) && !fx.v(1);  // h & !h'
  Predicate g = fx.mgr->substitute(f, swap);
  CHECK(g == (fx.v(1) && !fx.v(0)));
}

TEST_CASE("substitute distributes over connectives and preserves identity") {
  Fixture fx(4);
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    Predicate f = random_formula(fx, rng, 3);
    Predicate g = random_formula(fx, rng, 3);
    AssignmentSet a;
    a.set(fx.vars[0], random_formula(fx, rng, 2));
    a.set(fx.vars[2], random_formula(fx, rng, 2));
    CHECK(fx.mgr->substitute(f && g, a) ==
          (fx.mgr->substitute(f, a) && fx.mgr->substitute(g, a)));
    CHECK(fx.mgr->substitute(f || g, a) ==
          (fx.mgr->substitute(f, a) || fx.mgr->substitute(g, a)));
    CHECK(fx.mgr->substitute(!f, a) == !fx.mgr->substitute(f, a));
    CHECK(fx.mgr->substitute(f, AssignmentSet{}) == f);
  }
}

TEST_CASE("exists computes the strongest variable-free consequence") {
  Fixture fx(3);
  auto w = fx.vars[0];
  auto a = fx.v(1), b = fx.v(2);
  CHECK(fx.mgr->exists(fx.v(0) && a, {w}) == a);
  CHECK(fx.mgr->exists((fx.v(0) && a) || (!fx.v(0) && b), {w}) == (a || b));
  CHECK(fx.mgr->exists(fx.mgr->bottom(), {w}).is_false());

  // Strongest w-free consequence on random formulas: exists(f) is implied
  // by f, and any w-free g implied by f is implied by exists(f).
  Rng rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    Predicate f = random_formula(fx, rng, 4);
    Predicate ex = fx.mgr->exists(f, {w});
    CHECK(fx.mgr->entails(f, ex));
    Valuation v0, v1;
    v0.set_bool(w, false);
    v1.set_bool(w, true);
    CHECK(ex == (fx.mgr->cofactor(f, v0) || fx.mgr->cofactor(f, v1)));
  }
}

TEST_CASE("cofactor agrees with the formula wherever the cube holds") {
  Fixture fx(4);
  auto a = fx.v(0), b = fx.v(1);
  Valuation bind_b;
  bind_b.set_bool(fx.vars[1], true);
  CHECK(fx.mgr->cofactor(a && b, bind_b) == a);
  CHECK(fx.mgr->cofactor(a, Valuation{}) == a);

  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    Predicate f = random_formula(fx, rng, 4);
    Valuation bind;
    bind.set_bool(fx.vars[1], rng.coin());
    bind.set_bool(fx.vars[3], rng.coin());
    Predicate cf = fx.mgr->cofactor(f, bind);
    for (Var v : fx.mgr->support(cf)) {
      CHECK(!bind.has(v));
    }
    for (uint64_t m = 0; m < 16; ++m) {
      Valuation val;
      for (size_t i = 0; i < 4; ++i) val.set_bool(fx.vars[i], (m >> i) & 1);
      bool in_cube = val.get_bool(fx.vars[1]) == bind.get_bool(fx.vars[1]) &&
                     val.get_bool(fx.vars[3]) == bind.get_bool(fx.vars[3]);
      if (in_cube) CHECK(fx.mgr->eval(f, val) == fx.mgr->eval(cf, val));
    }
  }
}

TEST_CASE("classification is exact") {
  Fixture fx(2);
  CHECK(fx.mgr->classify(fx.mgr->top()) == Classification::Tautology);
  CHECK(fx.mgr->classify(fx.mgr->bottom()) == Classification::Unsatisfiable);
  CHECK(fx.mgr->classify(fx.v(0)) == Classification::Contingent);
}

TEST_CASE("enum variables bit-blast with binary encoding") {
  auto space = std::make_shared<VarSpace>();
  Var e = space->add_enum("region", 3);
  Var x = space->add_bool("x");
  PredicateManager mgr(space);
  Predicate p0 = mgr.enum_eq(e, 0), p1 = mgr.enum_eq(e, 1), p2 = mgr.enum_eq(e, 2);
  CHECK((p0 && p1).is_false());
  CHECK((p0 && p2).is_false());
  // The unused fourth code is never equal to a declared value.
  Valuation v;
  v.set_enum(e, 3);
  v.set_bool(x, false);
  CHECK(!mgr.eval(p0 || p1 || p2, v));
  AssignmentSet set1;
  set1.set_enum(e, 1);
  CHECK(mgr.substitute(p1, set1).is_true());
  CHECK(mgr.substitute(p2, set1).is_false());
}

TEST_CASE("stable dump lists products in registry order") {
  Fixture fx(3);
  Predicate f = (fx.v(0) && !fx.v(2)) || (!fx.v(0) && fx.v(1));
  CHECK(fx.mgr->dump(f) == "!v0 & v1 | v0 & !v2");
  CHECK(fx.mgr->dump(fx.mgr->top()) == "true");
  CHECK(fx.mgr->dump(fx.mgr->bottom()) == "false");
}
