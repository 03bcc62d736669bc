#include <cmath>

#include "doctest.h"
#include "fpsel/oracle.hpp"
#include "fpsel/rng.hpp"
#include "oracles/mpfr_ref.hpp"
#include "support.hpp"

using namespace fpsel;

namespace {

Expr rx(const char* s) { return parse_real_expr(s); }

double random_arg(Rng& rng, TypeTag t) {
  switch (rng.below(3)) {
    case 0: {
      auto m = static_cast<std::uint64_t>(max_ordinal(t));
      return ordinal_to_float(static_cast<std::int64_t>(rng.below(2 * m + 1) - m), t);
    }
    case 1: {
      double v = (rng.unit() * 20.0) - 10.0;
      return t == TypeTag::B32 ? static_cast<float>(v) : v;
    }
    default: {
      double v = std::ldexp(rng.unit() + 0.5, static_cast<int>(rng.below(120)) - 60);
      if (rng.below(2)) v = -v;
      return t == TypeTag::B32 ? static_cast<float>(v) : v;
    }
  }
}

}  // namespace

TEST_CASE("eval_real basics") {
  CHECK(eval_real(rx("x"), {{"x", 1.5}}, TypeTag::B64) == 1.5);
  CHECK_FALSE(eval_real(rx("(/ 1 x)"), {{"x", 0.0}}, TypeTag::B64).has_value());
  CHECK_FALSE(eval_real(rx("(log x)"), {{"x", -1.0}}, TypeTag::B64).has_value());
  CHECK_FALSE(eval_real(rx("(sqrt (- 0 1))"), {}, TypeTag::B64).has_value());
  CHECK(eval_real(rx("(- (+ x 1) x)"), {{"x", 1e300}}, TypeTag::B64) == 1.0);
  CHECK(eval_real(rx("(sqrt (- x x))"), {{"x", 0.1}}, TypeTag::B64) == 0.0);
  CHECK_FALSE(eval_real(rx("(exp x)"), {{"x", 1000.0}}, TypeTag::B64).has_value());
  CHECK(eval_real(rx("(if (< x 0) (neg x) x)"), {{"x", -2.0}}, TypeTag::B64) == 2.0);
}

TEST_CASE("log1pmd at a tiny argument matches the fixed-precision reference") {
  double x = std::ldexp(1.0, -40);
  auto got = eval_real(rx("(- (log (+ 1 x)) (log (- 1 x)))"), {{"x", x}}, TypeTag::B64);
  oracle::RefNum a, b, one, t;
  mpfr_set_d(t.v, x, MPFR_RNDN);
  mpfr_set_ui(one.v, 1, MPFR_RNDN);
  mpfr_add(a.v, one.v, t.v, MPFR_RNDN);
  mpfr_log(a.v, a.v, MPFR_RNDN);
  mpfr_sub(b.v, one.v, t.v, MPFR_RNDN);
  mpfr_log(b.v, b.v, MPFR_RNDN);
  mpfr_sub(a.v, a.v, b.v, MPFR_RNDN);
  mpq_class q;
  mpfr_get_q(q.get_mpq_t(), a.v);
  REQUIRE(got);
  CHECK(to_rational(*got) == *oracle::round_ieee(q, 53));
  CHECK(*got == 2 * x);
}

TEST_CASE("eval_real agrees with the 4096-bit reference for every function") {
  Rng rng(2024);
  for (int f = 0; f < kRealFnCount; ++f) {
    auto fn = static_cast<RealFn>(f);
    std::vector<Expr> vars;
    const char* names[] = {"a", "b", "c"};
    for (int i = 0; i < arity(fn); ++i) vars.push_back(Expr::var(names[i]));
    Expr e = Expr::real(fn, vars);
    int mismatches = 0;
    for (TypeTag t : {TypeTag::B64, TypeTag::B32}) {
      for (int k = 0; k < 500; ++k) {
        SamplePoint pt;
        std::vector<double> args;
        for (int i = 0; i < arity(fn); ++i) {
          double v = random_arg(rng, t);
          args.push_back(v);
          pt[names[i]] = v;
        }
        auto want = oracle::reference(fn, args, precision(t));
        auto got = eval_real(e, pt, t);
        bool same = want ? (got && to_rational(*got) == *want) : !got;
        if (!same) ++mismatches;
      }
    }
    INFO("function " << fn_name(fn));
    CHECK(mismatches == 0);
  }
}

TEST_CASE("apply_operator") {
  TargetDesc arith = load_target(target_path("arith.tgt"));
  CHECK(apply_operator(arith.at("+.f64"), {1.0, 2.0}) == 3.0);
  CHECK(std::isnan(apply_operator(arith.at("sqrt.f64"), {-1.0})));
  CHECK(std::isnan(apply_operator(arith.at("/.f64"), {1.0, 0.0})));
  CHECK(std::isnan(apply_operator(arith.at("*.f64"), {1e300, 1e300})));

  TargetDesc frag = load_target(data_path("fragment.tgt"));
  double got = apply_operator(frag.at("rcp.f32"), {3.0});
  mpq_class stage1 = oracle::round_bits(mpq_class(1, 3), 12);
  CHECK(to_rational(got) == *oracle::round_ieee(stage1, 24));

  TargetDesc fma = load_target(target_path("arith-fma.tgt"));
  double a = 1.0 + std::ldexp(1.0, -30), b = 1.0 - std::ldexp(1.0, -30);
  CHECK(apply_operator(fma.at("fms.f64"), {a, b, 1.0}) == -std::ldexp(1.0, -60));
  CHECK(apply_operator(fma.at("fma.f64"), {a, b, -1.0}) == -std::ldexp(1.0, -60));
}

TEST_CASE("two-stage rounding matches the integer oracle") {
  TargetDesc frag = load_target(data_path("fragment.tgt"));
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    double x = random_arg(rng, TypeTag::B32);
    if (x == 0.0) continue;
    double got = apply_operator(frag.at("rcp.f32"), {x});
    mpq_class inv = 1 / to_rational(x);
    auto want = oracle::round_ieee(oracle::round_bits(inv, 12), 24);
    if (!want) {
      CHECK(std::isnan(got));
    } else {
      CHECK(to_rational(got) == *want);
    }
  }
}

TEST_CASE("eval_float") {
  TargetDesc arith = load_target(target_path("arith.tgt"));
  Program p = resolve(parse_program("(FPCore (x) :precision binary64 (- 1 (- 1 x)))"), arith);
  CHECK(eval_float(p.body, {{"x", 1e-20}}, arith) == 0.0);
  Program q = resolve(parse_program("(FPCore (x) :precision binary64 (if (< x 0) (- x) (sqrt x)))"), arith);
  CHECK(eval_float(q.body, {{"x", -4.0}}, arith) == 4.0);
  CHECK(eval_float(q.body, {{"x", 4.0}}, arith) == 2.0);
}

TEST_CASE("metric") {
  CHECK(bits_of_error(1.5, 1.5, TypeTag::B64) == 0.0);
  CHECK(bits_of_error(std::nan(""), 1.0, TypeTag::B64) == 53.0);
  CHECK(bits_of_error(1.0, std::nan(""), TypeTag::B32) == 24.0);
  CHECK(bits_of_error(std::nan(""), std::nan(""), TypeTag::B32) == 0.0);
  CHECK(bits_of_error(0.0, -0.0, TypeTag::B64) == 0.0);
  CHECK(bits_of_error(1.0, std::nextafter(1.0, 2.0), TypeTag::B64) == 1.0);
  CHECK(bits_of_error(-1.0, 1.0, TypeTag::B64) == 53.0);
  // Brute force over a binary32 neighbourhood: ordinals step by one.
  float f = -3.0e-45f;
  for (int i = 0; i < 400; ++i) {
    float g = std::nextafter(f, 1.0f);
    CHECK(bits_of_error(f, g, TypeTag::B32) == 1.0);
    CHECK(bits_of_error(g, f, TypeTag::B32) == 1.0);
    if (g == 0.0f) g = std::nextafter(0.0f, 1.0f);
    f = g;
  }
  CHECK(float_ordinal(std::numeric_limits<double>::max(), TypeTag::B64) == max_ordinal(TypeTag::B64));
}

TEST_CASE("sampling") {
  TargetDesc arith = load_target(target_path("arith.tgt"));
  Program id = resolve(parse_program("(FPCore (x) :precision binary64 x)"), arith);
  auto s = sample_with_truth(id, arith, 200, 1);
  CHECK(s.points.size() == 200);
  CHECK(s.draws == 200);
  CHECK(sample(id, arith, 50, 9) == sample(id, arith, 50, 9));
  CHECK(sample(id, arith, 50, 9) != sample(id, arith, 50, 10));

  Program sq = resolve(parse_program("(FPCore (x) :precision binary64 (sqrt x))"), arith);
  auto t = sample_with_truth(sq, arith, 5000, 3);
  for (const auto& pt : t.points) CHECK(pt.at("x") >= 0.0);
  double rate = 5000.0 / static_cast<double>(t.draws);
  CHECK(rate == doctest::Approx(0.5).epsilon(0.05));

  Program thin = resolve(parse_program("(FPCore (x) :precision binary64 (sqrt (- (* x x))))"), arith);
  CHECK_THROWS_AS(sample(thin, arith, 10, 0), SamplingExhausted);
}

TEST_CASE("accuracy") {
  TargetDesc arith = load_target(target_path("arith.tgt"));
  Program id = resolve(parse_program("(FPCore (x) :precision binary64 x)"), arith);
  auto pts = sample(id, arith, 100, 0);
  CHECK(accuracy(id, pts, arith).accuracy == 53.0);
  Program add0 = resolve(parse_program("(FPCore (x) :precision binary64 (+ x 0))"), arith);
  CHECK(accuracy(add0, pts, arith).mean_bits == 0.0);

  Program cancel = resolve(parse_program("(FPCore (x) :precision binary64 (- 1 (- 1 x)))"), arith);
  auto cp = sample(cancel, arith, 256, 0);
  CHECK(accuracy(cancel, cp, arith).accuracy < 40.0);
}

TEST_CASE("local error") {
  TargetDesc arith = load_target(target_path("arith.tgt"));
  Program id = resolve(parse_program("(FPCore (x) :precision binary64 x)"), arith);
  auto le = local_error(id, sample(id, arith, 20, 0), arith);
  for (const auto& [_, v] : le) CHECK(v == 0.0);

  Program p = resolve(parse_program("(FPCore (x) :precision binary64 (- (sqrt (+ x 1)) (sqrt x)))"), arith);
  auto pts = sample(p, arith, 128, 0);
  auto errs = local_error(p, pts, arith);
  NodePath best;
  double best_v = -1;
  for (const auto& [path, v] : errs)
    if (v > best_v) {
      best_v = v;
      best = path;
    }
  CHECK(best == NodePath{});
  CHECK(best_v > 0.5);

  // Inaccurate arguments do not charge an exact node.
  Program iso = resolve(parse_program("(FPCore (x) :precision binary64 (* (- 1 (- 1 x)) 1))"), arith);
  auto ip = sample(iso, arith, 128, 0);
  auto ie = local_error(iso, ip, arith);
  CHECK(ie.at({}) == 0.0);
  CHECK(accuracy(iso, ip, arith).mean_bits > 1.0);
}
