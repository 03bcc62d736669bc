#include "doctest.h"
#include "fpsel/egraph.hpp"
#include "fpsel/target.hpp"
#include "support.hpp"

using namespace fpsel;

TEST_CASE("the small avx fragment loads with its costs") {
  TargetDesc t = load_target(data_path("fragment.tgt"));
  CHECK(t.name == "avx");
  CHECK(t.at("rcp.f32").cost == 4.0);
  CHECK(t.at("rcp.f32").approx == parse_real_expr("(/ 1 x)"));
  CHECK(t.at("rcp.f32").impl == OperatorImpl::rounded_at(12));
  CHECK(t.at("/f32").cost == 10.0);
  CHECK(t.at("/f32").impl == OperatorImpl::correctly_rounded());
  CHECK(t.literal_cost(TypeTag::B32) == 1.0);
  CHECK(t.if_cost() == IfCost{IfMode::Scalar, 5.0});
}

TEST_CASE("defaults") {
  TargetDesc t = parse_target(
      "(define-operator (f [x binary64]) binary64 #:approx (exp x))"
      "(define-target d #:operators (f))");
  CHECK(t.at("f").cost == 1.0);
  CHECK(t.at("f").impl.kind == OperatorImpl::Kind::CorrectlyRounded);
  CHECK(t.var_cost() == 0.0);
  CHECK(t.literal_cost(TypeTag::B64) == 0.0);
  CHECK(t.if_cost() == IfCost{IfMode::Scalar, 0.0});
}

TEST_CASE("load errors") {
  CHECK_THROWS_AS(load_target(data_path("cycle-a.tgt")), TargetError);
  CHECK_THROWS_AS(parse_target("(define-target d #:operators (nope))"), TargetError);
  CHECK_THROWS_AS(parse_target("(define-operator (f [x binary64]) binary64 #:approx (exp y))"
                               "(define-target d #:operators (f))"),
                  TargetError);
  CHECK_THROWS_AS(parse_target("(define-operator (f [x binary64]) binary64 #:approx x)"
                               "(define-operator (f [x binary64]) binary64 #:approx x)"
                               "(define-target d #:operators (f))"),
                  TargetError);
  CHECK_THROWS_AS(parse_target("(define-operator (f [x binary32]) binary32 #:approx x #:impl (rounded-at 25))"
                               "(define-target d #:operators (f))"),
                  TargetError);
  CHECK_THROWS_AS(parse_target("(define-operator (f [x binary64]) binary64 #:approx x #:link (lib \"m\" f))"
                               "(define-target d #:operators (f))"),
                  ParseError);
  CHECK_THROWS_AS(parse_target("(define-operator (f [x binary64]) binary64 #:approx x #:surface g)"
                               "(define-operator (h [x binary64]) binary64 #:approx x #:surface g)"
                               "(define-target d #:operators (f h))"),
                  TargetError);
  TargetDesc e = load_target(data_path("empty.tgt"));
  CHECK(e.operators.empty());
}

TEST_CASE("composition") {
  TargetDesc arith = load_target(target_path("arith.tgt"));
  TargetDesc c = load_target(target_path("c.tgt"));
  for (const auto& [name, _] : arith.operators) CHECK(c.find(name) != nullptr);
  CHECK(c.find("exp.f64") != nullptr);
  CHECK(c.at("/.f64").cost == 4.0);

  TargetDesc empty;
  CHECK(compose(c, empty) == c);

  TargetDesc fd = load_target(target_path("fdlibm.tgt"));
  CHECK(fd.at("log.f64").cost == 18.0);
  CHECK(c.at("log.f64").cost == 20.0);
  CHECK(fd.at("log.f64").arg_types == c.at("log.f64").arg_types);
  CHECK(fd.at("log.f64").approx == c.at("log.f64").approx);

  TargetDesc vdt = load_target(target_path("vdt.tgt"));
  TargetDesc avx = load_target(target_path("avx.tgt"));
  CHECK(compose(compose(arith, fd), vdt).operators == compose(arith, compose(fd, vdt)).operators);
  TargetDesc afma = load_target(target_path("arith-fma.tgt"));
  CHECK(compose(compose(afma, c), vdt).operators == compose(afma, compose(c, vdt)).operators);
  CHECK_THROWS_AS(compose(avx, c), TargetError);

  CHECK(load_target(target_path("fdlibm.tgt")) == fd);
  double sum = fd.at("log1p.f64").cost + fd.at("-.f64").cost + fd.at("neg.f64").cost;
  CHECK(fd.at("log1pmd.f64").cost < sum);
}

TEST_CASE("derived rules") {
  TargetDesc t = load_target(target_path("avx.tgt"));
  auto rules = derive_rules(t);
  CHECK(rules.size() == 2 * t.operators.size());
  auto find = [&](const std::string& name) -> const RewriteRule& {
    for (const auto& r : rules)
      if (r.name == name) return r;
    FAIL("missing rule " << name);
    return rules.front();
  };
  const auto& lift = find("lift:rcp.f32");
  CHECK(lift.kind == RewriteRule::Kind::Lifting);
  CHECK(lift.lhs == Expr::op("rcp.f32", {Expr::pat("x")}));
  CHECK(lift.rhs == parse_real_expr("(/ 1 ?x)"));
  const auto& lower = find("lower:rcp.f32");
  CHECK(lower.lhs == lift.rhs);
  CHECK(lower.rhs == lift.lhs);
  CHECK(find("lower:/f32").lhs == parse_real_expr("(/ ?x ?y)"));
  CHECK(find("lift:f64->f32").rhs == Expr::pat("x"));

  // Applying lift then lower to a fresh term returns the term.
  for (const auto& [name, op] : t.operators) {
    EGraph g;
    std::vector<Expr> vars;
    for (std::size_t i = 0; i < op.formals.size(); ++i) vars.push_back(Expr::var("v" + std::to_string(i)));
    ClassId c = g.add(Expr::op(name, vars));
    g.saturate({find("lift:" + name), find("lower:" + name)}, {1000, 3});
    auto back = g.lookup(Expr::op(name, vars));
    REQUIRE(back);
    CHECK(g.find(*back) == g.find(c));
  }
}

TEST_CASE("target code") {
  TargetDesc t = load_target(target_path("arith-fma.tgt"));
  Program add{{{"x", TypeTag::B64}, {"y", TypeTag::B64}}, Expr::op("+.f64", {Expr::var("x"), Expr::var("y")}),
              TypeTag::B64};
  CHECK(format_target_code(add, t) == "x + y");
  auto v = [](const char* n) { return Expr::var(n); };
  Program nested{{{"a", TypeTag::B64}, {"b", TypeTag::B64}, {"c", TypeTag::B64}, {"d", TypeTag::B64}, {"e", TypeTag::B64}},
                 Expr::op("fma.f64", {Expr::op("fma.f64", {v("a"), v("b"), v("c")}), v("d"), v("e")}), TypeTag::B64};
  CHECK(format_target_code(nested, t) == "fma(fma(a, b, c), d, e)");

  TargetDesc fd = load_target(target_path("fdlibm.tgt"));
  Program lp{{{"x", TypeTag::B64}},
             Expr::op("*.f64", {Expr::op("log1pmd.f64", {v("x")}), Expr::lit(Rational(1, 2), TypeTag::B64)}),
             TypeTag::B64};
  CHECK(format_target_code(lp, fd) == "log1pmd(x) * 0.5");

  TargetDesc frag = load_target(data_path("fragment.tgt"));
  Program r{{{"x", TypeTag::B32}}, Expr::op("rcp.f32", {v("x")}), TypeTag::B32};
  CHECK(format_target_code(r, frag) == "rcp.f32(x)");
  CHECK_THROWS_AS(format_target_code(r, frag, true), TargetError);
}
