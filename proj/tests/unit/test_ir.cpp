#include <cmath>

#include "doctest.h"
#include "fpsel/ir.hpp"
#include "fpsel/target.hpp"
#include "oracles/round_oracle.hpp"
#include "support.hpp"

using namespace fpsel;

TEST_CASE("precision of types") {
  CHECK(precision(TypeTag::B64) == 53);
  CHECK(precision(TypeTag::B32) == 24);
  CHECK_THROWS_AS(precision(TypeTag::Real), TypeError);
  CHECK_THROWS_AS(precision(TypeTag::Bool), TypeError);
}

TEST_CASE("parse simple programs") {
  Program p = parse_program("(FPCore (x) :precision binary64 (/ 1 x))");
  REQUIRE(p.params.size() == 1);
  CHECK(p.params[0] == Param{"x", TypeTag::B64});
  CHECK(p.output == TypeTag::B64);
  CHECK(p.body.is(ExprKind::RealOp));
  CHECK(p.body.fn() == RealFn::Div);
  CHECK(p.body.arg(0).is(ExprKind::Lit));
  CHECK(p.body.arg(0).value() == 1);
  CHECK(p.body.arg(1) == Expr::var("x"));

  Program id = parse_program("(FPCore (x) :precision binary64 x)");
  CHECK(id.body == Expr::var("x"));
}

TEST_CASE("literals are rounded at the program precision") {
  Program p = parse_program("(FPCore (x) :precision binary32 0.1)");
  REQUIRE(p.body.is(ExprKind::Lit));
  CHECK(p.body.type() == TypeTag::B32);
  mpq_class expect = *oracle::round_ieee(mpq_class(1, 10), 24);
  CHECK(expect == mpq_class(13421773, 134217728));
  CHECK(p.body.value() == expect);

  Program q = parse_program("(FPCore () :precision binary64 1/3)");
  CHECK(q.body.value() == *oracle::round_ieee(mpq_class(1, 3), 53));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_program("(FPCore (x) :precision binary64 (/ 1 x)"), ParseError);
  CHECK_THROWS_AS(parse_program("(FPCore (x) :precision binary64 (frob x))"), ParseError);
  CHECK_THROWS_AS(parse_program("(FPCore (x) :precision binary64 (sqrt x x))"), ParseError);
  CHECK_THROWS_AS(parse_program("(FPCore (x) :precision binary64 y)"), ParseError);
  CHECK_THROWS_AS(parse_program("(FPCore (x) :precision binary16 x)"), ParseError);
  try {
    parse_program("(FPCore (x)\n :precision binary64 (+ x zz))");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.col() == 27);
  }
}

TEST_CASE("resolve against the small avx fragment") {
  TargetDesc t = load_target(data_path("fragment.tgt"));
  Program p = parse_program("(FPCore (x y) :precision binary32 (/ x y))");
  Program r = resolve(p, t);
  CHECK(r.body == Expr::op("/f32", {Expr::var("x"), Expr::var("y")}));
  Program id = resolve(parse_program("(FPCore (x) :precision binary32 x)"), t);
  CHECK(id.body == Expr::var("x"));
  CHECK_THROWS_AS(resolve(parse_program("(FPCore (x) :precision binary32 (fma x x x))"), t), NoSuchOperator);
  CHECK_THROWS_AS(resolve(parse_program("(FPCore (x y) :precision binary64 (/ x y))"), t), NoSuchOperator);
}

TEST_CASE("desugar") {
  TargetDesc t = load_target(data_path("fragment.tgt"));
  Expr e = Expr::op("rcp.f32", {Expr::var("x")});
  CHECK(desugar(e, t) == parse_real_expr("(/ 1 x)"));
  CHECK(desugar(Expr::var("x"), t) == Expr::var("x"));
  TargetDesc fd = load_target(target_path("fdlibm.tgt"));
  CHECK(desugar(Expr::op("log1pmd.f64", {Expr::var("x")}), fd) ==
        parse_real_expr("(- (log (+ 1 x)) (log (- 1 x)))"));
  Expr lit = Expr::lit(Rational(3, 4), TypeTag::B32);
  CHECK(desugar(lit, t) == Expr::lit(Rational(3, 4), TypeTag::Real));
  Expr real = parse_real_expr("(+ x (* 2 y))");
  CHECK(desugar(desugar(real, t), t) == desugar(real, t));
}

TEST_CASE("typecheck") {
  TargetDesc t = load_target(target_path("avx.tgt"));
  VarEnv env{{"x", TypeTag::B32}};
  CHECK(typecheck(Expr::op("rcp.f32", {Expr::var("x")}), env, t) == TypeTag::B32);
  CHECK_THROWS_AS(typecheck(Expr::op("/f64", {Expr::var("x"), Expr::var("x")}), env, t), TypeError);
  CHECK(typecheck(Expr::lit(1, TypeTag::Real), env, t) == TypeTag::Real);
  for (const char* name : {"arith.tgt", "arith-fma.tgt", "avx.tgt", "c.tgt", "fdlibm.tgt", "vdt.tgt"}) {
    TargetDesc tt = load_target(target_path(name));
    for (const auto& [_, op] : tt.operators) {
      VarEnv real_env;
      for (const auto& f : op.formals) real_env[f] = TypeTag::Real;
      CHECK(typecheck(op.approx, real_env, tt) == TypeTag::Real);
    }
  }
}

TEST_CASE("format_fpcore round trips") {
  TargetDesc avx = load_target(target_path("avx.tgt"));
  Program id = parse_program("(FPCore (x) :precision binary64 x)");
  CHECK(format_fpcore(id) == "(FPCore (x) :precision binary64 x)");

  Program div = resolve(parse_program("(FPCore (x) :precision binary32 (/ 1 x))"), avx);
  std::string text = format_fpcore(div, &avx);
  CHECK(text == "(FPCore (x) :precision binary32 (/ 1 x))");
  CHECK(resolve(parse_program(text), avx) == div);

  TargetDesc fd = load_target(target_path("fdlibm.tgt"));
  Program lp{{{"x", TypeTag::B64}},
             Expr::op("*.f64", {Expr::op("log1pmd.f64", {Expr::var("x")}), Expr::lit(Rational(1, 2), TypeTag::B64)}),
             TypeTag::B64};
  std::string lt = format_fpcore(lp, &fd);
  CHECK(lt.find("(! :op log1pmd.f64 x)") != std::string::npos);
  CHECK(resolve(parse_program(lt), fd) == lp);

  Program mixed{{{"x", TypeTag::B32}},
                Expr::op("f64->f32", {Expr::op("*.f64", {Expr::op("f32->f64", {Expr::var("x")}),
                                                         Expr::lit(Rational(1, 10), TypeTag::B64)})}),
                TypeTag::B32};
  // 1/10 is not a binary64 value; use its rounding.
  mixed.body = Expr::op("f64->f32", {Expr::op("*.f64", {Expr::op("f32->f64", {Expr::var("x")}),
                                                       Expr::lit(to_rational(0.1), TypeTag::B64)})});
  std::string mt = format_fpcore(mixed, &avx);
  CHECK(resolve(parse_program(mt), avx) == mixed);

  Program surface = parse_program("(FPCore (a b) :precision binary64 (if (< a b) (- a) (sqrt (+ a 2.5))))");
  CHECK(parse_program(format_fpcore(surface)) == surface);
}

TEST_CASE("round_to_type agrees with the integer rounding oracle") {
  Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    mpz_class num = rng.below(1ULL << 62);
    mpz_class den = rng.below(1ULL << 62) + 1;
    int shift = static_cast<int>(rng.below(2400)) - 1200;
    mpq_class q(num, den);
    q.canonicalize();
    q = oracle::scale2(q, shift);
    if (rng.below(2)) q = -q;
    for (auto [t, bits] : {std::pair{TypeTag::B64, 53}, std::pair{TypeTag::B32, 24}}) {
      auto want = oracle::round_ieee(q, bits);
      double got = round_to_type(q, t);
      if (!want) {
        CHECK(std::isinf(got));
      } else {
        REQUIRE(std::isfinite(got));
        CHECK(to_rational(got) == *want);
      }
    }
  }
}
